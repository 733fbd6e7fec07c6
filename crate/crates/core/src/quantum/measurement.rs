//! Slot probabilities of lattice states and the measurement update.

use std::f64::consts::SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::SlotKernel;
use crate::coherent::{coherent_state, sigma_p, CoherentStateParams};
use crate::error::{Error, Result};
use crate::grid::{Spectral, WaveFunction};
use crate::slots::{Slot, SlotDistribution, SlotPartition};

/// Stripes carrying less probability than this are skipped.
const PRUNE_MASS: f64 = 1e-14;

/// Below this total the state is treated as having left the slot window.
const MIN_CAPTURED: f64 = 0.99;

/// How the state is replaced after a slot is observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CollapseRule {
    /// `P psi / |P psi|`.
    #[default]
    Luders,
    /// Coherent state at the observed slot center.
    Reprepare,
}

fn band_mass(probs: &[f64], momenta: &[f64], a: f64, b: f64, s: f64) -> f64 {
    probs
        .iter()
        .zip(momenta)
        .map(|(w, &p)| w * 0.5 * (libm::erf((b - p) / (SQRT_2 * s)) - libm::erf((a - p) / (SQRT_2 * s))))
        .sum()
}

/// Rows and columns that can carry probability: momentum rows clipped to the
/// lattice band, position columns to the grid plus eight widths.
fn candidate_slots(psi: &WaveFunction, part: &SlotPartition, sigma_x: f64, kernel: &SlotKernel) -> (Vec<i64>, Vec<i64>) {
    let g = psi.grid();
    let pn = g.p_nyquist();
    let i_lo = part.x_index(g.x_min - 8.0 * sigma_x);
    let i_hi = part.x_index(g.x_max + 8.0 * sigma_x);
    let cols = (i_lo..=i_hi)
        .filter(|&i| {
            let (a, b) = part.x_bounds(i);
            kernel.column_mass(psi, a, b) > PRUNE_MASS
        })
        .collect();
    let spectral = Spectral::new(g.n);
    let probs = psi.momentum_probabilities(&spectral);
    let momenta = g.momenta();
    let sp = sigma_p(sigma_x);
    let j_lo = part.p_index(-pn);
    let j_hi = part.p_index(pn * (1.0 - 1e-12));
    let rows = (j_lo..=j_hi)
        .filter(|&j| {
            let (a, b) = part.p_bounds(j);
            band_mass(&probs, &momenta, a.max(-pn), b.min(pn), sp) > PRUNE_MASS
        })
        .collect();
    (cols, rows)
}

/// `p_ij = <psi| P_ij |psi>` for every slot that can carry probability.
///
/// The momentum range of each slot is clipped to the lattice band, so a
/// state well inside the grid has `total() = 1` to quadrature precision.
pub fn slot_probabilities(psi: &WaveFunction, part: &SlotPartition, sigma_x: f64) -> Result<SlotDistribution> {
    part.validate()?;
    let kernel = SlotKernel::new(*psi.grid(), sigma_x)?;
    let (cols, rows) = candidate_slots(psi, part, sigma_x, &kernel);
    let phases: Vec<_> = rows
        .iter()
        .map(|&j| {
            let (a, b) = part.p_bounds(j);
            kernel.phase(a, b)
        })
        .collect();
    let amps = psi.amplitudes();
    let entries: Vec<(Slot, f64)> = cols
        .par_iter()
        .flat_map_iter(|&i| {
            let (a, b) = part.x_bounds(i);
            let env = kernel.envelope(a, b);
            let corr = kernel.correlations(amps, &env);
            rows.iter()
                .zip(&phases)
                .map(|(&j, ph)| ((i, j), kernel.expectation(&corr, ph).max(0.0)))
                .collect::<Vec<_>>()
        })
        .collect();
    SlotDistribution::from_entries(*part, entries)
}

/// `sum_ij A(x_i, p_j) p_ij`, the expectation of `sum_ij A(x_i, p_j) P_ij`.
pub fn coarse_observable_expectation(
    psi: &WaveFunction,
    part: &SlotPartition,
    sigma_x: f64,
    observable: impl Fn(f64, f64) -> f64,
) -> Result<f64> {
    Ok(slot_probabilities(psi, part, sigma_x)?.expectation(observable))
}

/// Draws a slot with probability proportional to `p_ij`.
pub fn sample_slot<R: Rng + ?Sized>(dist: &SlotDistribution, rng: &mut R) -> Result<Slot> {
    let total = dist.total();
    if !(total > 0.0) {
        return Err(Error::EmptyDistribution);
    }
    let target = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (slot, p) in dist.iter() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = Some(slot);
        if target < acc {
            return Ok(slot);
        }
    }
    last.ok_or(Error::EmptyDistribution)
}

/// `P_ij psi / |P_ij psi|`.
pub fn project(psi: &WaveFunction, part: &SlotPartition, sigma_x: f64, slot: Slot) -> Result<WaveFunction> {
    let kernel = SlotKernel::new(*psi.grid(), sigma_x)?;
    let (xa, xb) = part.x_bounds(slot.0);
    let (pa, pb) = part.p_bounds(slot.1);
    let out = kernel.apply(psi, &kernel.envelope(xa, xb), &kernel.phase(pa, pb));
    let norm = (out.iter().map(|z| z.norm_sqr()).sum::<f64>() * psi.grid().dx()).sqrt();
    if !(norm > 0.0) {
        return Err(Error::EmptyDistribution);
    }
    WaveFunction::new(*psi.grid(), out.into_iter().map(|z| z / norm).collect())
}

/// Post-measurement state for an observed slot.
pub fn update_state(
    psi: &WaveFunction,
    part: &SlotPartition,
    sigma_x: f64,
    slot: Slot,
    rule: CollapseRule,
) -> Result<WaveFunction> {
    match rule {
        CollapseRule::Luders => project(psi, part, sigma_x, slot),
        CollapseRule::Reprepare => {
            let (x, p) = part.slot_center(slot.0, slot.1);
            coherent_state(CoherentStateParams::new(x, p, sigma_x)?, *psi.grid())
        }
    }
}

/// One measurement with a caller-owned random stream.
pub fn measure_with<R: Rng + ?Sized>(
    psi: &WaveFunction,
    part: &SlotPartition,
    sigma_x: f64,
    rule: CollapseRule,
    rng: &mut R,
) -> Result<(Slot, WaveFunction)> {
    let dist = slot_probabilities(psi, part, sigma_x)?;
    let total = dist.total();
    if total < MIN_CAPTURED {
        log::warn!("slot window captures only {total:.4} of the state");
    }
    let slot = sample_slot(&dist, rng)?;
    let next = update_state(psi, part, sigma_x, slot, rule)?;
    Ok((slot, next))
}

/// Samples a slot from `p_ij` and applies the Luders update.
pub fn measure_collapse(
    psi: &WaveFunction,
    part: &SlotPartition,
    sigma_x: f64,
    rng_seed: u64,
) -> Result<(Slot, WaveFunction)> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    measure_with(psi, part, sigma_x, CollapseRule::Luders, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::operator_lab::{PovmBuilder, QuadratureRule};
    use crate::quantum::husimi::husimi_slot_probability;

    fn grid() -> Grid {
        Grid::new(-32.0, 32.0, 256).unwrap()
    }

    fn state(g: Grid, x0: f64, p0: f64) -> WaveFunction {
        coherent_state(CoherentStateParams::new(x0, p0, 1.0).unwrap(), g).unwrap()
    }

    #[test]
    fn agrees_with_dense_operator() {
        let g = grid();
        let part = SlotPartition::new(8.0, 2.0, 0.0, 0.0).unwrap();
        let psi = state(g, 3.0, 0.6);
        let dist = slot_probabilities(&psi, &part, 1.0).unwrap();
        let b = PovmBuilder::new(g, 1.0, QuadratureRule::exact()).unwrap();
        for slot in [(0, 0), (0, -1), (-1, 0), (1, 1), (0, 1)] {
            let dense = b.element(&part, slot.0, slot.1).unwrap().expectation(&psi).unwrap().re;
            let fast = dist.get(slot);
            assert!((dense - fast).abs() < 1e-10, "{slot:?}: {dense} vs {fast}");
        }
    }

    #[test]
    fn agrees_with_husimi_integration() {
        let g = Grid::new(-40.0, 40.0, 512).unwrap();
        let part = SlotPartition::new(16.0, 8.0, 0.0, 0.0).unwrap();
        let psi = state(g, 5.0, 1.0);
        let dist = slot_probabilities(&psi, &part, 1.0).unwrap();
        for slot in [(0, 0), (-1, 0), (0, -1)] {
            let q = husimi_slot_probability(&psi, 1.0, &part, slot, 8).unwrap();
            assert!((q - dist.get(slot)).abs() < 1e-4, "{slot:?}: {q} vs {}", dist.get(slot));
        }
    }

    #[test]
    fn normalized_and_concentrated() {
        let g = Grid::new(-64.0, 64.0, 1024).unwrap();
        let part = SlotPartition::new(16.0, 8.0, 0.0, 0.0).unwrap();
        let (x, p) = part.slot_center(1, 0);
        let dist = slot_probabilities(&state(g, x, p), &part, 1.0).unwrap();
        assert!((dist.total() - 1.0).abs() < 1e-3);
        assert!(dist.get((1, 0)) >= 0.99, "{}", dist.get((1, 0)));
        assert!(dist.iter().all(|(_, p)| p >= 0.0));
    }

    #[test]
    fn boundary_state_splits_evenly() {
        let g = Grid::new(-64.0, 64.0, 1024).unwrap();
        let part = SlotPartition::new(16.0, 8.0, 0.0, 0.0).unwrap();
        let dist = slot_probabilities(&state(g, 16.0, 4.0), &part, 1.0).unwrap();
        let (a, b) = (dist.get((0, 0)), dist.get((1, 0)));
        assert!(((a - b) / (a + b)).abs() < 0.01, "{a} vs {b}");
    }

    #[test]
    fn observable_expectation() {
        let g = Grid::new(-64.0, 64.0, 1024).unwrap();
        let part = SlotPartition::new(16.0, 8.0, 0.0, 0.0).unwrap();
        let (x, p) = part.slot_center(-1, 0);
        let psi = state(g, x, p);
        let one = coarse_observable_expectation(&psi, &part, 1.0, |_, _| 1.0).unwrap();
        let total = slot_probabilities(&psi, &part, 1.0).unwrap().total();
        assert!((one - total).abs() < 1e-14);
        let xbar = coarse_observable_expectation(&psi, &part, 1.0, |x, _| x).unwrap();
        assert!((xbar - x).abs() < 8.0);
    }

    #[test]
    fn collapse_is_reproducible_and_normalized() {
        let g = Grid::new(-64.0, 64.0, 1024).unwrap();
        let part = SlotPartition::new(16.0, 8.0, 0.0, 0.0).unwrap();
        let psi = state(g, 16.0, 4.0);
        let (s1, a) = measure_collapse(&psi, &part, 1.0, 11).unwrap();
        let (s2, b) = measure_collapse(&psi, &part, 1.0, 11).unwrap();
        assert_eq!(s1, s2);
        assert!(a.distance(&b).unwrap() < 1e-14);
        assert!((a.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projector_application_matches_dense() {
        let g = grid();
        let part = SlotPartition::new(8.0, 2.0, 0.0, 0.0).unwrap();
        let psi = state(g, 3.0, 0.6);
        let fast = project(&psi, &part, 1.0, (0, 0)).unwrap();
        let b = PovmBuilder::new(g, 1.0, QuadratureRule::exact()).unwrap();
        let dense = b.element(&part, 0, 0).unwrap().apply(&psi).unwrap();
        let n = (dense.iter().map(|z| z.norm_sqr()).sum::<f64>() * g.dx()).sqrt();
        let dense = WaveFunction::new(g, dense.iter().map(|z| z / n).collect()).unwrap();
        assert!(fast.distance(&dense).unwrap() < 1e-10);
    }

    #[test]
    fn empty_distribution_is_an_error() {
        let dist = SlotDistribution::new(SlotPartition::new(1.0, 1.0, 0.0, 0.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(sample_slot(&dist, &mut rng), Err(Error::EmptyDistribution)));
    }

    #[test]
    fn collapse_frequencies_follow_probabilities() {
        let g = Grid::new(-64.0, 64.0, 1024).unwrap();
        let part = SlotPartition::new(16.0, 8.0, 0.0, 0.0).unwrap();
        let psi = state(g, 14.0, 6.5);
        let dist = slot_probabilities(&psi, &part, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let draws = 10_000;
        let mut counts = std::collections::BTreeMap::new();
        for _ in 0..draws {
            *counts.entry(sample_slot(&dist, &mut rng).unwrap()).or_insert(0usize) += 1;
        }
        let total = dist.total();
        for (slot, p) in dist.iter().filter(|(_, p)| *p > 1e-3) {
            let q = p / total;
            let f = *counts.get(&slot).unwrap_or(&0) as f64 / draws as f64;
            let sd = (q * (1.0 - q) / draws as f64).sqrt();
            assert!((f - q).abs() < 3.0 * sd, "{slot:?}: {f} vs {q}");
        }
    }

    #[test]
    fn remeasurement_repeats_for_states_inside_the_slot() {
        let g = Grid::new(-64.0, 64.0, 1024).unwrap();
        let part = SlotPartition::new(16.0, 8.0, 0.0, 0.0).unwrap();
        // centres at least four widths from every slot edge
        for &(x, p) in &[(12.0, 6.0), (4.0, 2.0), (8.0, 4.0), (-20.0, 10.0)] {
            let psi = state(g, x, p);
            let slot = part.slot_index(x, p).unwrap();
            for seed in 0..4 {
                let (s, next) = measure_collapse(&psi, &part, 1.0, seed).unwrap();
                let again = slot_probabilities(&next, &part, 1.0).unwrap().get(s);
                let mass = husimi_slot_probability(&next, 1.0, &part, s, 8).unwrap();
                assert!(s != slot || again >= 0.98, "({x},{p}) rate {again}");
                assert!(s != slot || mass >= 0.95, "({x},{p}) mass {mass}");
            }
        }
    }

    #[test]
    fn collapse_is_nearly_idempotent() {
        let g = grid();
        let part = SlotPartition::new(16.0, 4.0, 0.0, 0.0).unwrap();
        let psi = state(g, 5.0, 1.0);
        let once = project(&psi, &part, 1.0, (0, 0)).unwrap();
        let twice = project(&once, &part, 1.0, (0, 0)).unwrap();
        let eps = crate::operator_lab::projectivity_error_closed_form(&part, 1.0).unwrap();
        let d = once.distance_up_to_phase(&twice).unwrap();
        assert!(d < eps, "{d} vs {eps}");
    }

    #[test]
    fn reprepare_rule_centres_the_state() {
        let g = Grid::new(-64.0, 64.0, 1024).unwrap();
        let part = SlotPartition::new(16.0, 8.0, 0.0, 0.0).unwrap();
        let psi = state(g, 3.0, 1.0);
        let next = update_state(&psi, &part, 1.0, (0, 0), CollapseRule::Reprepare).unwrap();
        assert!((next.expectation_x() - 8.0).abs() < 1e-9);
        assert!((next.expectation_p() - 4.0).abs() < 1e-9);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]
            #[test]
            fn kinematics(
                x0 in -20.0..20.0f64,
                p0 in -6.0..6.0f64,
                dx_ in 4.0..24.0f64,
                dp_ in 2.0..12.0f64,
                ox in 0.0..1.0f64,
                op in 0.0..1.0f64,
                pick in proptest::collection::vec(0usize..4, 64),
            ) {
                let g = Grid::new(-48.0, 48.0, 768).unwrap();
                let part = SlotPartition::new(dx_, dp_, ox * dx_, op * dp_).unwrap();
                let dist = slot_probabilities(&state(g, x0, p0), &part, 1.0).unwrap();
                prop_assert!(dist.iter().all(|(_, p)| p >= 0.0));
                let total = dist.total();
                prop_assert!((0.999..=1.0 + 1e-9).contains(&total), "{}", total);
                // random disjoint families: label each slot with one of four sets
                let mut sets: [Vec<Slot>; 4] = Default::default();
                for (k, (s, _)) in dist.iter().enumerate() {
                    sets[pick[k % pick.len()]].push(s);
                }
                let parts: f64 = sets.iter().map(|s| dist.probability_of(s.iter())).sum();
                let union: Vec<Slot> = sets.iter().flatten().copied().collect();
                prop_assert!((dist.probability_of(union.iter()) - parts).abs() <= 1e-15 * 4.0);
            }
        }
    }
}
