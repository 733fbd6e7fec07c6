//! The subcommands. Each returns the files it would write; the caller
//! decides where they go.

use log::info;
use serde::Serialize;
use slotlab::ehrenfest::{
    collision_time, ehrenfest_lower_bound_at_slot, order_of_magnitude, scenario_table, textbook_free_ehrenfest,
    EhrenfestReport, ScenarioTable,
};
use slotlab::liouville::{
    coherent_husimi, pushforward_series, total_variation, ClassicalField, DiscreteCharacteristicsConfig,
    PushforwardConfig,
};
use slotlab::operator_lab::{
    projectivity_error_closed_form, projectivity_error_numeric, OperatorLab, PovmBuilder, QuadratureRule, EDGE_MARGIN,
};
use slotlab::quantum::{slot_probabilities, Propagator};
use slotlab::trajectory::{convex_combination, record_agreement, run_ensemble, TrajectoryConfig, TrajectoryRecord};
use slotlab::{
    coherent_state, Error, Grid, HamiltonianSpec, Result, Slot, SlotDistribution, SlotPartition, SlotWindow,
};

use crate::output::{distribution_csv, document, field_csv, fmt_f64, series_csv, table_csv, RunOutput};
use crate::scenario::{Estimate, Scenario};

/// Largest grid used for dense operator work.
pub const DENSE_LIMIT: usize = 512;
/// Husimi widths covered by the classical initial density on each side.
const HUSIMI_HALF_WIDTHS: f64 = 7.0;
const HUSIMI_CELLS_PER_WIDTH: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    PovmCheck,
    Evolve,
    Compare,
    Ehrenfest,
    Trajectory,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::PovmCheck => "povm-check",
            Command::Evolve => "evolve",
            Command::Compare => "compare",
            Command::Ehrenfest => "ehrenfest",
            Command::Trajectory => "trajectory",
            Command::Sweep => "sweep",
        }
    }
}

pub fn run(cmd: Command, s: &Scenario) -> Result<RunOutput> {
    s.validate()?;
    match cmd {
        Command::PovmCheck => povm_check(s),
        Command::Evolve => evolve(s),
        Command::Compare => compare(s),
        Command::Ehrenfest => ehrenfest(s),
        Command::Trajectory => trajectory(s),
        Command::Sweep => sweep(s),
    }
}

fn config_err(field: &str, reason: impl Into<String>) -> Error {
    Error::Config { field: field.into(), reason: reason.into() }
}

/// Slot holding the initial state.
pub fn preparation_slot(s: &Scenario) -> Result<Slot> {
    s.partition()?.slot_index(s.state.x0, s.state.p0)
}

/// Slot lower bound at the preparation slot, under the first Hamiltonian.
pub fn preparation_bound(s: &Scenario) -> Result<EhrenfestReport> {
    ehrenfest_lower_bound_at_slot(&s.spec()?, &s.partition()?, preparation_slot(s)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PovmCheck {
    pub grid_points: usize,
    pub grid_length: f64,
    pub sigma_x: f64,
    pub ratio_x: f64,
    pub ratio_p: f64,
    pub epsilon_numeric: f64,
    pub epsilon_closed_form: f64,
    pub epsilon_ratio: f64,
    /// Band-tiling momentum side used for the completeness sum.
    pub completeness_delta_p: f64,
    pub completeness_interior_points: usize,
    pub completeness_max_deviation: f64,
    pub commutator_trace_p: f64,
    pub commutator_trace_x: f64,
    pub commutator_spectral_p: f64,
    pub commutator_spectral_x: f64,
    pub epsilon_d: f64,
    pub epsilon_d_predicted: f64,
    pub epsilon_d_shift: f64,
}

/// Dense grid for the operator checks on slots of the scenario's shape:
/// slots `(0, 0)`, `(1, 0)` and `(0, 1)` meet at the origin.
pub fn dense_geometry(delta_x: f64, delta_p: f64, sigma_x: f64) -> Result<(Grid, SlotPartition)> {
    let half = (2.0 * delta_x).max(delta_x + (EDGE_MARGIN + 8.0) * sigma_x);
    let wanted = (2.0 * half / (0.25 * sigma_x)).ceil() as usize;
    let n = wanted.next_power_of_two().clamp(64, DENSE_LIMIT);
    let grid = Grid::new(-half, half, n)?;
    if grid.p_nyquist() < delta_p {
        return Err(config_err(
            "partition.delta_p",
            format!("slot side {delta_p} exceeds the momentum band {} of a {n}-point dense grid", grid.p_nyquist()),
        ));
    }
    Ok((grid, SlotPartition::new(delta_x, delta_p, -delta_x, -delta_p)?))
}

/// Worst deviation of the diagonal of the summed slot operators from 1 at
/// points at least `EDGE_MARGIN` widths inside the window, with momentum
/// slots tiling the lattice band.
pub fn completeness_deviation(grid: Grid, sigma_x: f64, delta_x: f64, delta_p: f64) -> Result<(f64, usize, f64)> {
    let pn = grid.p_nyquist();
    let rows = (2.0 * pn / delta_p).ceil() as i64;
    let dp = 2.0 * pn / rows as f64;
    let part = SlotPartition::new(delta_x, dp, -delta_x, -pn)?;
    let inner = OperatorLab::admissible_window(&grid, sigma_x, &part)
        .ok_or_else(|| config_err("partition.delta_x", "no slot fits the dense grid"))?;
    let w = SlotWindow::new(inner.i_min, inner.i_max, 0, rows - 1)?;
    let sum = PovmBuilder::new(grid, sigma_x, QuadratureRule::default())?.window_sum(&part, &w)?;
    let lo = part.x_bounds(w.i_min).0 + EDGE_MARGIN * sigma_x;
    let hi = part.x_bounds(w.i_max).1 - EDGE_MARGIN * sigma_x;
    let mut worst = 0.0f64;
    let mut count = 0;
    for k in 0..grid.n {
        let x = grid.x(k);
        if x >= lo && x <= hi {
            worst = worst.max((sum.entries()[(k, k)].re - 1.0).abs());
            count += 1;
        }
    }
    if count == 0 {
        return Err(config_err("grid", "completeness window has no interior points"));
    }
    Ok((worst, count, dp))
}

fn povm_check(s: &Scenario) -> Result<RunOutput> {
    let sigma = s.state.sigma_x;
    let (dx, dp) = (s.partition.delta_x, s.partition.delta_p);
    let (grid, part) = dense_geometry(dx, dp, sigma)?;
    info!("dense grid of {} points on [{}, {})", grid.n, grid.x_min, grid.x_max);
    let builder = PovmBuilder::new(grid, sigma, QuadratureRule::default())?;
    let eps_num = projectivity_error_numeric(&builder.element(&part, 0, 0)?)?;
    let eps_closed = projectivity_error_closed_form(&part, sigma)?;
    let (dev, points, band_dp) = completeness_deviation(grid, sigma, dx, dp)?;
    let window = OperatorLab::admissible_window(&grid, sigma, &part)
        .ok_or_else(|| config_err("partition", "no slot fits the dense grid"))?;
    let lab = OperatorLab::new(grid, sigma, part, window, QuadratureRule::default())?;
    let c = lab.commutator_check(0, 0)?;
    let d = lab.discrete_derivative_error(0, 0, dx / 16.0)?;
    let sp = slotlab::coherent::sigma_p(sigma);
    let report = PovmCheck {
        grid_points: grid.n,
        grid_length: grid.length(),
        sigma_x: sigma,
        ratio_x: dx / sigma,
        ratio_p: dp / sp,
        epsilon_numeric: eps_num,
        epsilon_closed_form: eps_closed,
        epsilon_ratio: eps_num / eps_closed,
        completeness_delta_p: band_dp,
        completeness_interior_points: points,
        completeness_max_deviation: dev,
        commutator_trace_p: c.trace_p,
        commutator_trace_x: c.trace_x,
        commutator_spectral_p: c.spectral_p,
        commutator_spectral_x: c.spectral_x,
        epsilon_d: d.epsilon_d,
        epsilon_d_predicted: d.predicted,
        epsilon_d_shift: d.shift,
    };
    let mut out = RunOutput::default();
    out.say(format!(
        "projectivity error: numeric {} closed form {} ratio {:.4}",
        fmt_f64(eps_num),
        fmt_f64(eps_closed),
        report.epsilon_ratio
    ));
    out.say(format!("completeness: max interior deviation {dev:.3e} over {points} points"));
    out.say(format!(
        "commutator residuals (trace norm): momentum {:.4} position {:.4}",
        c.trace_p, c.trace_x
    ));
    out.say(format!("discrete derivative error {:.4e} (leading-order estimate {:.4e})", d.epsilon_d, d.predicted));
    out.add("povm_check.json", document("povm-check", &report)?);
    Ok(out)
}

/// Quantum slot distributions and classical fields at the scheduled times.
pub struct Snapshots {
    pub times: Vec<f64>,
    pub quantum: Vec<SlotDistribution>,
    pub classical: Vec<ClassicalField>,
}

impl Snapshots {
    pub fn tv(&self) -> Result<Vec<f64>> {
        self.quantum.iter().zip(&self.classical).map(|(q, c)| total_variation(q, c)).collect()
    }
}

fn components(s: &Scenario) -> Result<Vec<(f64, HamiltonianSpec)>> {
    Ok(match s.channel()? {
        Some(c) => c.components,
        None => vec![(1.0, s.spec()?)],
    })
}

pub fn snapshots(s: &Scenario) -> Result<Snapshots> {
    let times = s.schedule.times.clone();
    if times.is_empty() {
        return Err(config_err("schedule.times", "at least one output time is required"));
    }
    let grid = s.grid()?;
    let part = s.partition()?;
    let window = s.window()?;
    let state = s.coherent()?;
    let psi0 = coherent_state(state, grid)?;
    let pcfg = s.propagator_config()?;
    let comps = components(s)?;

    let sx = state.sigma_x;
    let width = std::f64::consts::SQRT_2;
    let pf = PushforwardConfig::gaussian(
        s.propagator.classical_dt,
        (state.x0, state.p0),
        (width * sx, width * state.sigma_p()),
        HUSIMI_HALF_WIDTHS,
        HUSIMI_CELLS_PER_WIDTH,
    );
    let husimi = coherent_husimi(state.x0, state.p0, sx);

    let mut per_component_q = Vec::with_capacity(comps.len());
    let mut classical: Vec<ClassicalField> = vec![ClassicalField::zeros(part, window); times.len()];
    for (w, h) in &comps {
        info!("evolving component with weight {w}");
        let states = Propagator::new(grid, h, pcfg)?.evolve_series(&psi0, &times)?;
        per_component_q.push(states.iter().map(|psi| slot_probabilities(psi, &part, sx)).collect::<Result<Vec<_>>>()?);
        let fields = pushforward_series(husimi, h, &part, window, &times, &pf)?;
        for (acc, f) in classical.iter_mut().zip(fields) {
            acc.values.iter_mut().zip(&f.values).for_each(|(a, v)| *a += w * v);
            acc.deficit += w * f.deficit;
        }
    }
    let quantum = match s.channel()? {
        None => per_component_q.pop().expect("one component"),
        Some(chan) => (0..times.len())
            .map(|k| {
                let parts: Vec<_> = per_component_q.iter().map(|c| c[k].clone()).collect();
                convex_combination(&part, &chan, &parts)
            })
            .collect::<Result<_>>()?,
    };
    Ok(Snapshots { times, quantum, classical })
}

fn evolve(s: &Scenario) -> Result<RunOutput> {
    let snap = snapshots(s)?;
    let tv = snap.tv()?;
    let mut out = RunOutput::default();
    for (k, (q, c)) in snap.quantum.iter().zip(&snap.classical).enumerate() {
        out.add(format!("quantum_{k:03}.csv"), distribution_csv(q)?);
        out.add(format!("classical_{k:03}.csv"), field_csv(c)?);
    }
    let rows: Vec<_> = (0..snap.times.len())
        .map(|k| (snap.times[k], vec![snap.quantum[k].total(), snap.classical[k].total(), tv[k]]))
        .collect();
    out.add("evolve.csv", series_csv(&["quantum_total", "classical_total", "tv"], &rows)?);
    out.say(format!("{} snapshots written; final TV {:.4}", snap.times.len(), tv.last().copied().unwrap_or(0.0)));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareSummary {
    pub threshold: f64,
    pub first_crossing: Option<f64>,
    pub max_tv: f64,
    pub t_bound: f64,
    pub preparation_slot: Slot,
    /// `first_crossing >= t_bound`; absent without a crossing.
    pub crossing_after_bound: Option<bool>,
}

fn compare(s: &Scenario) -> Result<RunOutput> {
    let snap = snapshots(s)?;
    let tv = snap.tv()?;
    let bound = preparation_bound(s)?;
    let threshold = s.schedule.tv_threshold;
    let first = snap.times.iter().zip(&tv).find(|(_, &v)| v > threshold).map(|(&t, _)| t);
    let summary = CompareSummary {
        threshold,
        first_crossing: first,
        max_tv: tv.iter().copied().fold(0.0, f64::max),
        t_bound: bound.t_lower_bound,
        preparation_slot: preparation_slot(s)?,
        crossing_after_bound: first.map(|t| t >= bound.t_lower_bound),
    };
    let rows: Vec<_> = snap.times.iter().zip(&tv).map(|(&t, &v)| (t, vec![v])).collect();
    let mut out = RunOutput::default();
    out.add("tv.csv", series_csv(&["tv"], &rows)?);
    out.add("compare.json", document("compare", &summary)?);
    match first {
        Some(t) => out.say(format!(
            "TV first exceeds {threshold} at t = {t} (slot bound {:.4e})",
            bound.t_lower_bound
        )),
        None => out.say(format!("TV stays below {threshold}; max {:.4}", summary.max_tv)),
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EhrenfestSummary {
    pub estimate: String,
    /// In simulation units.
    pub t_ehrenfest: f64,
    pub t_ehrenfest_si: Option<f64>,
    pub order_si: Option<i32>,
    pub slot_bound: EhrenfestReport,
    pub collision_time_si: Option<f64>,
    pub collision_order: Option<i32>,
    /// `collision time < t_E`.
    pub measured_faster_than_drift: Option<bool>,
    pub reference_table: ScenarioTable,
}

fn ehrenfest(s: &Scenario) -> Result<RunOutput> {
    let cfg = s.ehrenfest.unwrap_or_default();
    let scale = s.unit_scale()?;
    let spec = s.spec()?;
    let bound = preparation_bound(s)?;
    let t_sim = match cfg.estimate {
        Estimate::SlotBound => bound.t_lower_bound,
        Estimate::FreePacket => {
            let sp = match (cfg.sigma_p_si, scale) {
                (Some(si), Some(u)) => u.momentum_to_sim(si),
                _ => s.coherent()?.sigma_p(),
            };
            textbook_free_ehrenfest(spec.mass, sp)?
        }
    };
    let t_si = scale.map(|u| u.time_to_si(t_sim));
    let collision = cfg.collision.map(|c| collision_time(c.density, c.cross_section, c.speed));
    let summary = EhrenfestSummary {
        estimate: match cfg.estimate {
            Estimate::SlotBound => "slot-bound".into(),
            Estimate::FreePacket => "free-packet".into(),
        },
        t_ehrenfest: t_sim,
        t_ehrenfest_si: t_si,
        order_si: t_si.map(order_of_magnitude),
        slot_bound: bound,
        collision_time_si: collision,
        collision_order: collision.map(order_of_magnitude),
        measured_faster_than_drift: collision.zip(t_si).map(|(c, t)| c < t),
        reference_table: scenario_table()?,
    };
    let mut out = RunOutput::default();
    match t_si {
        Some(t) => out.say(format!("t_E = {t:.4e} s (order {})", order_of_magnitude(t))),
        None => out.say(format!("t_E = {t_sim:.6e} (simulation units)")),
    }
    if let (Some(c), Some(v)) = (collision, summary.measured_faster_than_drift) {
        out.say(format!(
            "collision time = {c:.4e} s (order {}); collisions {} than drift",
            order_of_magnitude(c),
            if v { "faster" } else { "slower" }
        ));
    }
    out.add("ehrenfest.json", document("ehrenfest", &summary)?);
    Ok(out)
}

fn single_spec(s: &Scenario) -> Result<HamiltonianSpec> {
    if !s.mixture.is_empty() {
        return Err(config_err("mixture", "measurement trajectories need a single [hamiltonian]"));
    }
    s.spec()
}

/// `count` measurement trajectories on streams `0..count` of the scenario seed.
pub fn ensemble(s: &Scenario, count: usize) -> Result<Vec<TrajectoryRecord>> {
    let spec = single_spec(s)?;
    let grid = s.grid()?;
    let cfg = TrajectoryConfig {
        sigma_x: s.state.sigma_x,
        tau: s.tau()?,
        n: s.schedule.steps,
        propagator: s.propagator_config()?,
        rule: s.schedule.rule,
        window: Some(s.window()?),
        condition_on: None,
    };
    let psi0 = coherent_state(s.coherent()?, grid)?;
    run_ensemble(&psi0, &spec, &s.partition()?, &cfg, s.seed, count)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySummary {
    pub trajectories: usize,
    pub tau: f64,
    pub steps: usize,
    pub t_bound: f64,
    pub tau_over_bound: f64,
    pub mean_agreement: f64,
    pub min_agreement: f64,
    pub mean_distance: f64,
    pub truncated: usize,
}

/// Agreement of each record with the classical slot sequence from its
/// preparation outcome.
pub fn agreements(s: &Scenario, records: &[TrajectoryRecord]) -> Result<Vec<slotlab::trajectory::Agreement>> {
    let spec = single_spec(s)?;
    let part = s.partition()?;
    let dc = DiscreteCharacteristicsConfig::new(s.schedule.characteristics_fraction * s.tau()?);
    records.iter().map(|r| record_agreement(r, &spec, &part, &dc)).collect()
}

pub fn summarize(s: &Scenario, records: &[TrajectoryRecord]) -> Result<TrajectorySummary> {
    let agr = agreements(s, records)?;
    let n = agr.len().max(1) as f64;
    let bound = preparation_bound(s)?.t_lower_bound;
    let tau = s.tau()?;
    Ok(TrajectorySummary {
        trajectories: records.len(),
        tau,
        steps: s.schedule.steps,
        t_bound: bound,
        tau_over_bound: tau / bound,
        mean_agreement: agr.iter().map(|a| a.fraction).sum::<f64>() / n,
        min_agreement: agr.iter().map(|a| a.fraction).fold(1.0, f64::min),
        mean_distance: agr.iter().map(|a| a.mean_distance).sum::<f64>() / n,
        truncated: records.iter().filter(|r| r.truncated).count(),
    })
}

fn trajectory(s: &Scenario) -> Result<RunOutput> {
    let records = ensemble(s, s.schedule.trajectories)?;
    let agr = agreements(s, &records)?;
    let summary = summarize(s, &records)?;
    let outcomes = records
        .iter()
        .enumerate()
        .flat_map(|(r, rec)| rec.outcomes.iter().map(move |(k, (i, j))| vec![r.to_string(), k.to_string(), i.to_string(), j.to_string()]))
        .collect();
    let per_run = records
        .iter()
        .zip(&agr)
        .enumerate()
        .map(|(r, (rec, a))| {
            vec![r.to_string(), rec.stream.to_string(), fmt_f64(a.fraction), fmt_f64(a.mean_distance), a.steps.to_string(), rec.truncated.to_string()]
        })
        .collect();
    let mut out = RunOutput::default();
    out.add("outcomes.csv", table_csv(&["trajectory", "k", "i", "j"], outcomes)?);
    out.add(
        "agreement.csv",
        table_csv(&["trajectory", "stream", "agreement", "mean_distance", "steps", "truncated"], per_run)?,
    );
    out.add("trajectory.json", document("trajectory", &summary)?);
    out.say(format!(
        "{} trajectories, tau/t_bound = {:.3}: mean agreement {:.4} (min {:.4}), {} truncated",
        summary.trajectories, summary.tau_over_bound, summary.mean_agreement, summary.min_agreement, summary.truncated
    ));
    Ok(out)
}

fn sweep(s: &Scenario) -> Result<RunOutput> {
    let sw = s.sweep.clone().ok_or_else(|| Error::MissingField("sweep".into()))?;
    let or = |v: &Vec<f64>, d: f64| if v.is_empty() { vec![d] } else { v.clone() };
    let mut rows = Vec::new();
    for dx in or(&sw.delta_x, s.partition.delta_x) {
        for dp in or(&sw.delta_p, s.partition.delta_p) {
            for tau in or(&sw.tau, s.tau()?) {
                let mut point = s.clone();
                point.partition.delta_x = dx;
                point.partition.delta_p = dp;
                point.schedule.tau = Some(tau);
                point.validate()?;
                info!("sweep point dx={dx} dp={dp} tau={tau}");
                let records = ensemble(&point, sw.trajectories)?;
                let sum = summarize(&point, &records)?;
                rows.push(vec![
                    fmt_f64(dx),
                    fmt_f64(dp),
                    fmt_f64(tau),
                    fmt_f64(sum.t_bound),
                    fmt_f64(sum.mean_agreement),
                    fmt_f64(sum.mean_distance),
                    sum.truncated.to_string(),
                ]);
            }
        }
    }
    let mut out = RunOutput::default();
    out.say(format!("{} sweep points, {} trajectories each", rows.len(), sw.trajectories));
    out.add(
        "sweep.csv",
        table_csv(&["delta_x", "delta_p", "tau", "t_bound", "agreement", "mean_distance", "truncated"], rows)?,
    );
    Ok(out)
}
