//! Repeated slot measurements interleaved with unitary evolution, and
//! statistical mixtures of unitary evolutions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::WaveFunction;
use crate::hamiltonian::HamiltonianSpec;
use crate::liouville::{discrete_characteristics, DiscreteCharacteristicsConfig, SlotSequence};
use crate::quantum::{measure_with, slot_probabilities, sample_slot, update_state, CollapseRule, Propagator, PropagatorConfig};
use crate::slots::{Slot, SlotDistribution, SlotPartition, SlotWindow};

/// Attempts allowed when conditioning the first outcome on a fixed slot.
const MAX_CONDITIONING_DRAWS: usize = 10_000;

/// Independent random stream number `index` of a master seed.
///
/// ChaCha streams are addressed by `(seed, stream)`, so the stream of one
/// trajectory does not depend on how many others run or in which order.
pub fn stream_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub stream: u64,
    pub tau: f64,
    /// `(k, slot)` for `k = 0..=n`; shorter when `truncated`.
    pub outcomes: Vec<(usize, Slot)>,
    pub final_state_norm: f64,
    pub truncated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_reason: Option<String>,
}

impl TrajectoryRecord {
    pub fn slots(&self) -> Vec<Slot> {
        self.outcomes.iter().map(|(_, s)| *s).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub sigma_x: f64,
    pub tau: f64,
    pub n: usize,
    pub propagator: PropagatorConfig,
    #[serde(default)]
    pub rule: CollapseRule,
    /// Outcomes outside this window end the run.
    #[serde(default)]
    pub window: Option<SlotWindow>,
    /// Redraw the preparation outcome until it equals this slot.
    #[serde(default)]
    pub condition_on: Option<Slot>,
}

/// Preparation measurement followed by `n` rounds of (evolve `tau`, measure).
pub fn repeated_measurement_run(
    psi0: &WaveFunction,
    spec: &HamiltonianSpec,
    part: &SlotPartition,
    cfg: &TrajectoryConfig,
    seed: u64,
    stream: u64,
) -> Result<TrajectoryRecord> {
    if !(cfg.tau.is_finite() && cfg.tau > 0.0) {
        return Err(Error::param("tau", "must be positive and finite"));
    }
    let prop = Propagator::new(*psi0.grid(), spec, cfg.propagator)?;
    let mut rng = stream_rng(seed, stream);
    let mut record = TrajectoryRecord {
        seed,
        stream,
        tau: cfg.tau,
        outcomes: Vec::with_capacity(cfg.n + 1),
        final_state_norm: psi0.norm(),
        truncated: false,
        stop_reason: None,
    };

    let (first, mut psi) = match cfg.condition_on {
        None => measure_with(psi0, part, cfg.sigma_x, cfg.rule, &mut rng)?,
        Some(target) => {
            let dist = slot_probabilities(psi0, part, cfg.sigma_x)?;
            let mut drawn = None;
            for _ in 0..MAX_CONDITIONING_DRAWS {
                if sample_slot(&dist, &mut rng)? == target {
                    drawn = Some(target);
                    break;
                }
            }
            let slot = drawn.ok_or_else(|| {
                Error::param("condition_on", format!("slot {target:?} not drawn in {MAX_CONDITIONING_DRAWS} attempts"))
            })?;
            (slot, update_state(psi0, part, cfg.sigma_x, slot, cfg.rule)?)
        }
    };
    record.outcomes.push((0, first));

    for k in 1..=cfg.n {
        if cfg.window.is_some_and(|w| !w.contains(record.outcomes.last().unwrap().1)) {
            record.truncated = true;
            record.stop_reason = Some("outcome left the slot window".into());
            break;
        }
        psi = match prop.evolve(&psi, cfg.tau) {
            Ok(next) => next,
            Err(e @ Error::BoundaryReached { .. }) => {
                record.truncated = true;
                record.stop_reason = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        let (slot, next) = measure_with(&psi, part, cfg.sigma_x, cfg.rule, &mut rng)?;
        psi = next;
        record.outcomes.push((k, slot));
    }
    record.final_state_norm = psi.norm();
    Ok(record)
}

/// Runs `count` trajectories on streams `0..count` of `master_seed`.
/// The result does not depend on the number of worker threads.
pub fn run_ensemble(
    psi0: &WaveFunction,
    spec: &HamiltonianSpec,
    part: &SlotPartition,
    cfg: &TrajectoryConfig,
    master_seed: u64,
    count: usize,
) -> Result<Vec<TrajectoryRecord>> {
    (0..count as u64)
        .into_par_iter()
        .map(|s| repeated_measurement_run(psi0, spec, part, cfg, master_seed, s))
        .collect()
}

/// Deterministic slot sequence from the slot-index Hamilton flow.
pub fn classical_prediction(
    start: Slot,
    spec: &HamiltonianSpec,
    part: &SlotPartition,
    tau: f64,
    n: usize,
    cfg: &DiscreteCharacteristicsConfig,
) -> Result<SlotSequence> {
    discrete_characteristics(start, spec, part, tau, n, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    /// Fraction of steps with identical slots.
    pub fraction: f64,
    /// Mean Chebyshev distance `max(|d mu|, |d nu|)` between the sequences.
    pub mean_distance: f64,
    pub steps: usize,
}

pub fn trajectory_agreement(observed: &[Slot], predicted: &[Slot]) -> Result<Agreement> {
    if observed.len() != predicted.len() {
        return Err(Error::LengthMismatch(observed.len(), predicted.len()));
    }
    if observed.is_empty() {
        return Err(Error::param("sequence", "must not be empty"));
    }
    let n = observed.len();
    let hits = observed.iter().zip(predicted).filter(|(a, b)| a == b).count();
    let dist: i64 = observed
        .iter()
        .zip(predicted)
        .map(|(a, b)| (a.0 - b.0).abs().max((a.1 - b.1).abs()))
        .sum();
    Ok(Agreement { fraction: hits as f64 / n as f64, mean_distance: dist as f64 / n as f64, steps: n })
}

/// Scores a record against the classical sequence started from its
/// preparation outcome, over the record's length.
pub fn record_agreement(
    record: &TrajectoryRecord,
    spec: &HamiltonianSpec,
    part: &SlotPartition,
    cfg: &DiscreteCharacteristicsConfig,
) -> Result<Agreement> {
    let observed = record.slots();
    let start = *observed.first().ok_or(Error::EmptyDistribution)?;
    let unbounded = DiscreteCharacteristicsConfig { window: None, ..*cfg };
    let predicted = classical_prediction(start, spec, part, record.tau, observed.len() - 1, &unbounded)?;
    trajectory_agreement(&observed, &predicted.slots)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedChannelSpec {
    pub components: Vec<(f64, HamiltonianSpec)>,
}

impl MixedChannelSpec {
    pub fn new(components: Vec<(f64, HamiltonianSpec)>) -> Result<Self> {
        let c = Self { components };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::param("components", "at least one component required"));
        }
        for (w, spec) in &self.components {
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::param("weight", format!("{w} is not a probability")));
            }
            spec.validate()?;
        }
        let total: f64 = self.components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::param("weights", format!("sum to {total}, not 1")));
        }
        Ok(())
    }
}

/// `p_ij(t) = sum_n w_n p_ij^(n)(t)`, each component evolved exactly.
pub fn mixed_unitary_distribution(
    psi0: &WaveFunction,
    chan: &MixedChannelSpec,
    part: &SlotPartition,
    sigma_x: f64,
    t: f64,
    propagator: PropagatorConfig,
) -> Result<SlotDistribution> {
    let parts = mixed_components(psi0, chan, part, sigma_x, t, propagator)?;
    convex_combination(part, chan, &parts)
}

/// Per-component slot distributions at time `t`.
pub fn mixed_components(
    psi0: &WaveFunction,
    chan: &MixedChannelSpec,
    part: &SlotPartition,
    sigma_x: f64,
    t: f64,
    propagator: PropagatorConfig,
) -> Result<Vec<SlotDistribution>> {
    chan.validate()?;
    chan.components
        .par_iter()
        .map(|(_, spec)| {
            let psi = Propagator::new(*psi0.grid(), spec, propagator)?.evolve(psi0, t)?;
            slot_probabilities(&psi, part, sigma_x)
        })
        .collect()
}

pub fn convex_combination(part: &SlotPartition, chan: &MixedChannelSpec, parts: &[SlotDistribution]) -> Result<SlotDistribution> {
    if parts.len() != chan.components.len() {
        return Err(Error::LengthMismatch(parts.len(), chan.components.len()));
    }
    let mut acc = std::collections::BTreeMap::<Slot, f64>::new();
    for ((w, _), d) in chan.components.iter().zip(parts) {
        if d.partition() != part {
            return Err(Error::PartitionMismatch);
        }
        for (s, p) in d.iter() {
            *acc.entry(s).or_insert(0.0) += w * p;
        }
    }
    SlotDistribution::from_entries(*part, acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherent::{coherent_state, CoherentStateParams};
    use crate::grid::Grid;
    use rand::RngCore;

    fn setup() -> (WaveFunction, SlotPartition) {
        let g = Grid::new(-64.0, 64.0, 1024).unwrap();
        let psi = coherent_state(CoherentStateParams::new(40.0, 4.0, 1.0).unwrap(), g).unwrap();
        (psi, SlotPartition::new(16.0, 8.0, 0.0, 0.0).unwrap())
    }

    fn config(n: usize) -> TrajectoryConfig {
        TrajectoryConfig {
            sigma_x: 1.0,
            tau: 4.0 * std::f64::consts::PI / 64.0,
            n,
            propagator: PropagatorConfig::new(5e-4).with_edge_width(1.0),
            rule: CollapseRule::Luders,
            window: None,
            condition_on: None,
        }
    }

    #[test]
    fn streams_are_independent_of_order() {
        let a: Vec<u64> = (0..4).map(|i| stream_rng(7, i).next_u64()).collect();
        let b: Vec<u64> = (0..4).rev().map(|i| stream_rng(7, i).next_u64()).collect();
        assert_eq!(a, b.into_iter().rev().collect::<Vec<_>>());
        assert_ne!(a[0], a[1]);
    }

    #[test]
    fn zero_rounds_is_one_preparation() {
        let (psi, part) = setup();
        let spec = HamiltonianSpec::harmonic(1.0, 0.5).unwrap();
        let r = repeated_measurement_run(&psi, &spec, &part, &config(0), 3, 0).unwrap();
        assert_eq!(r.outcomes.len(), 1);
        assert_eq!(r.outcomes[0], (0, (2, 0)));
    }

    #[test]
    fn runs_are_reproducible_and_follow_the_orbit() {
        let (psi, part) = setup();
        let spec = HamiltonianSpec::harmonic(1.0, 0.5).unwrap();
        let cfg = config(8);
        let a = repeated_measurement_run(&psi, &spec, &part, &cfg, 11, 2).unwrap();
        let b = repeated_measurement_run(&psi, &spec, &part, &cfg, 11, 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.outcomes.len(), 9);
        assert!((a.final_state_norm - 1.0).abs() < 1e-10);
        let dc = DiscreteCharacteristicsConfig::new(cfg.tau / 50.0);
        let score = record_agreement(&a, &spec, &part, &dc).unwrap();
        assert!(score.fraction >= 0.75, "{score:?}");
    }

    #[test]
    fn conditioning_fixes_the_first_outcome() {
        let (_, part) = setup();
        let g = Grid::new(-64.0, 64.0, 1024).unwrap();
        let psi = coherent_state(CoherentStateParams::new(16.0, 4.0, 1.0).unwrap(), g).unwrap();
        let spec = HamiltonianSpec::harmonic(1.0, 0.5).unwrap();
        let mut cfg = config(0);
        cfg.condition_on = Some((0, 0));
        for s in 0..5 {
            let r = repeated_measurement_run(&psi, &spec, &part, &cfg, 5, s).unwrap();
            assert_eq!(r.outcomes[0].1, (0, 0));
        }
    }

    #[test]
    fn agreement_scores() {
        let a = vec![(0, 0), (1, 0), (2, 1)];
        let b = vec![(1, 0), (2, 0), (3, 1)];
        let same = trajectory_agreement(&a, &a).unwrap();
        assert_eq!((same.fraction, same.mean_distance), (1.0, 0.0));
        let off = trajectory_agreement(&a, &b).unwrap();
        assert_eq!((off.fraction, off.mean_distance), (0.0, 1.0));
        assert_eq!(off, trajectory_agreement(&b, &a).unwrap());
        assert!(matches!(trajectory_agreement(&a, &b[..2]), Err(Error::LengthMismatch(3, 2))));
    }

    #[test]
    fn free_prediction_moves_right() {
        let part = SlotPartition::new(2.0, 1.0, 0.0, 0.0).unwrap();
        let spec = HamiltonianSpec::free(1.0).unwrap();
        let seq = classical_prediction((0, 2), &spec, &part, 1.0, 10, &DiscreteCharacteristicsConfig::new(0.1)).unwrap();
        assert!(seq.slots.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 == 2));
    }

    #[test]
    fn mixture_is_the_weighted_sum() {
        let g = Grid::new(-48.0, 48.0, 512).unwrap();
        let psi = coherent_state(CoherentStateParams::new(-30.0, 12.0, 1.0).unwrap(), g).unwrap();
        let part = SlotPartition::new(24.0, 4.0, -18.0, 0.0).unwrap();
        let chan = MixedChannelSpec::new(vec![
            (0.3, HamiltonianSpec::free(1.0).unwrap()),
            (0.7, HamiltonianSpec::free(2.0).unwrap()),
        ])
        .unwrap();
        let pc = PropagatorConfig::new(1e-3);
        let mixed = mixed_unitary_distribution(&psi, &chan, &part, 1.0, 4.0, pc).unwrap();
        let comps = mixed_components(&psi, &chan, &part, 1.0, 4.0, pc).unwrap();
        let slots: std::collections::BTreeSet<Slot> =
            comps.iter().flat_map(|d| d.iter().map(|(s, _)| s)).collect();
        for s in slots {
            let want = 0.3 * comps[0].get(s) + 0.7 * comps[1].get(s);
            assert!((mixed.get(s) - want).abs() < 1e-12);
        }
        // the two masses carry the packet to the centres x = 18 and x = -6 of two slot columns
        let xm = mixed.x_marginal();
        assert!((xm[&1] - 0.3).abs() < 1e-6 && (xm[&0] - 0.7).abs() < 1e-6, "{xm:?}");
        let single = MixedChannelSpec::new(vec![(1.0, HamiltonianSpec::free(1.0).unwrap())]).unwrap();
        let one = mixed_unitary_distribution(&psi, &single, &part, 1.0, 4.0, pc).unwrap();
        assert_eq!(one, comps[0]);
        assert!(MixedChannelSpec::new(vec![(0.5, HamiltonianSpec::free(1.0).unwrap())]).is_err());
    }
}
