//! Slot geometry: the rectangular coarse-graining of phase space and the
//! probability vectors defined over it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::HBAR;

/// Index pair `(i, j)`: `i` counts position slots, `j` momentum slots.
pub type Slot = (i64, i64);

/// Tolerance for clamping slightly negative or super-unit probabilities.
pub const PROBABILITY_TOL: f64 = 1e-9;

/// Rectangular tiling of phase space.
///
/// Slot `(i, j)` covers `[x0 + i*dx, x0 + (i+1)*dx) x [p0 + j*dp, p0 + (j+1)*dp)`.
/// Points on a boundary belong to the upper slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotPartition {
    pub delta_x: f64,
    pub delta_p: f64,
    #[serde(default)]
    pub x_origin: f64,
    #[serde(default)]
    pub p_origin: f64,
}

impl SlotPartition {
    pub fn new(delta_x: f64, delta_p: f64, x_origin: f64, p_origin: f64) -> Result<Self> {
        let p = Self { delta_x, delta_p, x_origin, p_origin };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_x.is_finite()
            && self.delta_p.is_finite()
            && self.x_origin.is_finite()
            && self.p_origin.is_finite())
        {
            return Err(Error::NonFinite("slot partition"));
        }
        if self.delta_x <= 0.0 {
            return Err(Error::param("delta_x", "must be positive"));
        }
        if self.delta_p <= 0.0 {
            return Err(Error::param("delta_p", "must be positive"));
        }
        Ok(())
    }

    /// `delta_x * delta_p / hbar`.
    pub fn coarseness(&self) -> f64 {
        self.delta_x * self.delta_p / HBAR
    }

    pub fn area(&self) -> f64 {
        self.delta_x * self.delta_p
    }

    pub fn slot_index(&self, x: f64, p: f64) -> Result<Slot> {
        if !(x.is_finite() && p.is_finite()) {
            return Err(Error::NonFinite("phase-space point"));
        }
        Ok((
            half_open_index(x, self.x_origin, self.delta_x),
            half_open_index(p, self.p_origin, self.delta_p),
        ))
    }

    pub fn x_index(&self, x: f64) -> i64 {
        half_open_index(x, self.x_origin, self.delta_x)
    }

    pub fn p_index(&self, p: f64) -> i64 {
        half_open_index(p, self.p_origin, self.delta_p)
    }

    pub fn slot_center(&self, i: i64, j: i64) -> (f64, f64) {
        (self.x_center(i), self.p_center(j))
    }

    pub fn x_center(&self, i: i64) -> f64 {
        self.x_origin + (i as f64 + 0.5) * self.delta_x
    }

    pub fn p_center(&self, j: i64) -> f64 {
        self.p_origin + (j as f64 + 0.5) * self.delta_p
    }

    /// `[lower, upper)` position bounds of column `i`.
    pub fn x_bounds(&self, i: i64) -> (f64, f64) {
        (self.x_origin + i as f64 * self.delta_x, self.x_origin + (i + 1) as f64 * self.delta_x)
    }

    pub fn p_bounds(&self, j: i64) -> (f64, f64) {
        (self.p_origin + j as f64 * self.delta_p, self.p_origin + (j + 1) as f64 * self.delta_p)
    }

    /// Same tiling with the origin moved by `(dx0, dp0)`.
    pub fn shifted(&self, dx0: f64, dp0: f64) -> Self {
        Self { x_origin: self.x_origin + dx0, p_origin: self.p_origin + dp0, ..*self }
    }

    /// Smallest window of slots covering the box `[x_lo, x_hi] x [p_lo, p_hi]`.
    pub fn covering_window(&self, x_lo: f64, x_hi: f64, p_lo: f64, p_hi: f64) -> SlotWindow {
        SlotWindow {
            i_min: self.x_index(x_lo),
            i_max: self.x_index(x_hi),
            j_min: self.p_index(p_lo),
            j_max: self.p_index(p_hi),
        }
    }

    /// Largest window of slots lying entirely inside the box.
    pub fn inner_window(&self, x_lo: f64, x_hi: f64, p_lo: f64, p_hi: f64) -> Option<SlotWindow> {
        let i_min = ((x_lo - self.x_origin) / self.delta_x).ceil() as i64;
        let i_max = ((x_hi - self.x_origin) / self.delta_x).floor() as i64 - 1;
        let j_min = ((p_lo - self.p_origin) / self.delta_p).ceil() as i64;
        let j_max = ((p_hi - self.p_origin) / self.delta_p).floor() as i64 - 1;
        SlotWindow::new(i_min, i_max, j_min, j_max).ok()
    }
}

/// `floor((v - origin)/width)` corrected so the result agrees exactly with the
/// boundary values `origin + i*width` computed in floating point.
fn half_open_index(v: f64, origin: f64, width: f64) -> i64 {
    let mut i = ((v - origin) / width).floor() as i64;
    if v < origin + i as f64 * width {
        i -= 1;
    } else if v >= origin + (i + 1) as f64 * width {
        i += 1;
    }
    i
}

/// Inclusive rectangle of slot indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SlotWindow {
    pub i_min: i64,
    pub i_max: i64,
    pub j_min: i64,
    pub j_max: i64,
}

impl SlotWindow {
    pub fn new(i_min: i64, i_max: i64, j_min: i64, j_max: i64) -> Result<Self> {
        if i_max < i_min || j_max < j_min {
            return Err(Error::param("window", "empty slot window"));
        }
        Ok(Self { i_min, i_max, j_min, j_max })
    }

    pub fn nx(&self) -> usize {
        (self.i_max - self.i_min + 1) as usize
    }

    pub fn np(&self) -> usize {
        (self.j_max - self.j_min + 1) as usize
    }

    pub fn len(&self) -> usize {
        self.nx() * self.np()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, (i, j): Slot) -> bool {
        (self.i_min..=self.i_max).contains(&i) && (self.j_min..=self.j_max).contains(&j)
    }

    /// Row-major offset (`i` outer).
    pub fn offset(&self, (i, j): Slot) -> Option<usize> {
        self.contains((i, j))
            .then(|| (i - self.i_min) as usize * self.np() + (j - self.j_min) as usize)
    }

    pub fn slots(&self) -> impl Iterator<Item = Slot> + '_ {
        (self.i_min..=self.i_max).flat_map(move |i| (self.j_min..=self.j_max).map(move |j| (i, j)))
    }
}

/// Sparse probability vector over slots.
///
/// Entries are clamped to `[0, 1]` after checking they lie within
/// [`PROBABILITY_TOL`] of that range. `deficit` is the mass not captured by
/// any stored slot (outside the simulated region or below the pruning
/// threshold).
#[derive(Debug, Clone, PartialEq)]
pub struct SlotDistribution {
    partition: SlotPartition,
    entries: BTreeMap<Slot, f64>,
}

impl SlotDistribution {
    pub fn new(partition: SlotPartition) -> Self {
        Self { partition, entries: BTreeMap::new() }
    }

    pub fn from_entries(
        partition: SlotPartition,
        entries: impl IntoIterator<Item = (Slot, f64)>,
    ) -> Result<Self> {
        let mut d = Self::new(partition);
        for (slot, p) in entries {
            d.insert(slot, p)?;
        }
        Ok(d)
    }

    pub fn insert(&mut self, slot: Slot, p: f64) -> Result<()> {
        if !p.is_finite() {
            return Err(Error::NonFinite("slot probability"));
        }
        if !(-PROBABILITY_TOL..=1.0 + PROBABILITY_TOL).contains(&p) {
            return Err(Error::param("probability", format!("{p} outside [0, 1] for {slot:?}")));
        }
        self.entries.insert(slot, p.clamp(0.0, 1.0));
        Ok(())
    }

    pub fn partition(&self) -> &SlotPartition {
        &self.partition
    }

    pub fn get(&self, slot: Slot) -> f64 {
        self.entries.get(&slot).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Slot, f64)> + '_ {
        self.entries.iter().map(|(s, p)| (*s, *p))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    pub fn deficit(&self) -> f64 {
        (1.0 - self.total()).max(0.0)
    }

    /// Probability of a set of slots.
    pub fn probability_of<'a>(&self, slots: impl IntoIterator<Item = &'a Slot>) -> f64 {
        slots.into_iter().map(|s| self.get(*s)).sum()
    }

    /// Marginal over momentum columns: `i -> sum_j p_ij`.
    pub fn x_marginal(&self) -> BTreeMap<i64, f64> {
        let mut m = BTreeMap::new();
        for ((i, _), p) in self.iter() {
            *m.entry(i).or_insert(0.0) += p;
        }
        m
    }

    pub fn p_marginal(&self) -> BTreeMap<i64, f64> {
        let mut m = BTreeMap::new();
        for ((_, j), p) in self.iter() {
            *m.entry(j).or_insert(0.0) += p;
        }
        m
    }

    /// Slot with the largest probability (lowest index on ties).
    pub fn mode(&self) -> Option<Slot> {
        self.iter()
            .fold(None, |best: Option<(Slot, f64)>, (s, p)| match best {
                Some((_, bp)) if bp >= p => best,
                _ => Some((s, p)),
            })
            .map(|(s, _)| s)
    }

    /// `sum A(x_i, p_j) p_ij`, the expectation of a coarse observable.
    pub fn expectation(&self, observable: impl Fn(f64, f64) -> f64) -> f64 {
        self.iter()
            .map(|((i, j), p)| {
                let (x, q) = self.partition.slot_center(i, j);
                observable(x, q) * p
            })
            .sum()
    }
}
