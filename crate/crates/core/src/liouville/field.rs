//! Real-valued fields on a rectangular block of slots.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianSpec;
use crate::slots::{Slot, SlotDistribution, SlotPartition, SlotWindow, PROBABILITY_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn new(x: f64, p: f64) -> Self {
        Self { x, p }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.p.is_finite()
    }
}

/// Values `f_ij` over a slot window, stored row-major (`i` outer).
///
/// `deficit` records probability that a producing solver could not place
/// inside the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalField {
    pub partition: SlotPartition,
    pub window: SlotWindow,
    pub values: Vec<f64>,
    #[serde(default)]
    pub deficit: f64,
}

impl ClassicalField {
    pub fn zeros(partition: SlotPartition, window: SlotWindow) -> Self {
        Self { partition, window, values: vec![0.0; window.len()], deficit: 0.0 }
    }

    pub fn from_fn(partition: SlotPartition, window: SlotWindow, f: impl Fn(i64, i64) -> f64) -> Result<Self> {
        let values: Vec<f64> = window.slots().map(|(i, j)| f(i, j)).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field value"));
        }
        Ok(Self { partition, window, values, deficit: 0.0 })
    }

    /// Restriction of a distribution to `window`; mass outside goes to `deficit`.
    pub fn from_distribution(dist: &SlotDistribution, window: SlotWindow) -> Self {
        let mut f = Self::zeros(*dist.partition(), window);
        let mut outside = 0.0;
        for (s, p) in dist.iter() {
            match window.offset(s) {
                Some(k) => f.values[k] = p,
                None => outside += p,
            }
        }
        f.deficit = dist.deficit() + outside;
        f
    }

    /// Nonzero entries as a distribution, after checking the probability invariants.
    pub fn to_distribution(&self) -> Result<SlotDistribution> {
        self.check_probability()?;
        SlotDistribution::from_entries(
            self.partition,
            self.window.slots().zip(&self.values).filter(|(_, &v)| v > 0.0).map(|(s, &v)| (s, v)),
        )
    }

    pub fn check_probability(&self) -> Result<()> {
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field value"));
        }
        if let Some(v) = self.values.iter().find(|&&v| v < -PROBABILITY_TOL) {
            return Err(Error::param("probability", format!("negative entry {v}")));
        }
        let total = self.total();
        if total > 1.0 + PROBABILITY_TOL {
            return Err(Error::param("probability", format!("total {total} exceeds 1")));
        }
        Ok(())
    }

    pub fn get(&self, slot: Slot) -> Option<f64> {
        self.window.offset(slot).map(|k| self.values[k])
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `h_ij = H(x_i, p_j)` at slot centers.
pub fn classical_hamiltonian_values(
    spec: &HamiltonianSpec,
    part: &SlotPartition,
    window: SlotWindow,
) -> Result<ClassicalField> {
    spec.validate()?;
    ClassicalField::from_fn(*part, window, |i, j| {
        let (x, p) = part.slot_center(i, j);
        spec.energy(x, p)
    })
}

/// Anything that assigns a value to slots of one partition.
pub trait SlotValues {
    fn slot_partition(&self) -> &SlotPartition;
    fn slot_values(&self) -> Vec<(Slot, f64)>;
}

impl SlotValues for SlotDistribution {
    fn slot_partition(&self) -> &SlotPartition {
        self.partition()
    }

    fn slot_values(&self) -> Vec<(Slot, f64)> {
        self.iter().collect()
    }
}

impl SlotValues for ClassicalField {
    fn slot_partition(&self) -> &SlotPartition {
        &self.partition
    }

    fn slot_values(&self) -> Vec<(Slot, f64)> {
        self.window.slots().zip(self.values.iter().copied()).collect()
    }
}

/// `1/2 sum |a_ij - b_ij|` over the union of both supports.
pub fn total_variation(a: &impl SlotValues, b: &impl SlotValues) -> Result<f64> {
    if a.slot_partition() != b.slot_partition() {
        return Err(Error::PartitionMismatch);
    }
    let mut diff: BTreeMap<Slot, f64> = BTreeMap::new();
    for (s, v) in a.slot_values() {
        *diff.entry(s).or_insert(0.0) += v;
    }
    for (s, v) in b.slot_values() {
        *diff.entry(s).or_insert(0.0) -= v;
    }
    Ok(0.5 * diff.values().map(|d| d.abs()).sum::<f64>())
}
