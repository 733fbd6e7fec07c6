//! Built-in scenarios.

use slotlab::{Error, Result};

use crate::scenario::Scenario;

pub const NAMES: [&str; 5] = ["micro", "macro", "harmonic", "quartic", "cloud-chamber"];

/// Light particle on atomic slots: 1e-27 kg, 1e-10 m, 1e-24 kg m/s.
/// One length unit is 1e-10 m, so the slot momentum 1e-24 kg m/s is
/// 0.948... units of hbar / 1e-10 m.
const MICRO: &str = r#"
name = "micro"
seed = 1

[units]
length = 1e-10
mass = 1e-27

[grid]
x_min = -32.0
x_max = 32.0
n = 256

[partition]
delta_x = 1.0
delta_p = 0.9482521568277412

[hamiltonian]
mass = 1.0

[state]
x0 = 0.5
p0 = 0.0
sigma_x = 0.5

[ehrenfest]
estimate = "slot-bound"
"#;

/// Dust grain: 1e-3 kg, micrometre length unit, packet width 1e-28 kg m/s.
const MACRO: &str = r#"
name = "macro"
seed = 1

[units]
length = 1e-6
mass = 1e-3

[grid]
x_min = -32.0
x_max = 32.0
n = 256

[partition]
delta_x = 1.0
delta_p = 1.0

[hamiltonian]
mass = 1.0

[state]
x0 = 0.5
p0 = 0.5
sigma_x = 0.5

[ehrenfest]
estimate = "free-packet"
sigma_p_si = 1e-28
"#;

/// Vapour molecule on atomic slots hit by gas collisions.
const CLOUD_CHAMBER: &str = r#"
name = "cloud-chamber"
seed = 1

[units]
length = 1e-10
mass = 1e-27

[grid]
x_min = -32.0
x_max = 32.0
n = 256

[partition]
delta_x = 1.0
delta_p = 0.9482521568277412

[hamiltonian]
mass = 1.0

[state]
x0 = 0.5
p0 = 0.0
sigma_x = 0.5

[ehrenfest]
estimate = "slot-bound"

[ehrenfest.collision]
density = 1e25
cross_section = 1e-18
speed = 1e7
"#;

/// Oscillator with omega = 1/2 whose ground-state width is the coherent
/// width, slots of 16 widths. Output times span one period 4 pi; tau is a
/// 64th of it.
const HARMONIC: &str = r#"
name = "harmonic"
seed = 20240611

[grid]
x_min = -80.0
x_max = 80.0
n = 1024

[partition]
delta_x = 16.0
delta_p = 8.0

[hamiltonian]
mass = 1.0
potential = [[2, 0.125]]

[state]
x0 = 24.0
p0 = 4.0
sigma_x = 1.0

[schedule]
times = [1.5707963267948966, 3.141592653589793, 4.71238898038469, 6.283185307179586, 7.853981633974483, 9.42477796076938, 10.995574287564276, 12.566370614359172]
tau = 0.19634954084936207
steps = 64
trajectories = 100

[sweep]
delta_x = [16.0, 32.0]
delta_p = [8.0, 16.0]
tau = [0.39269908169872414, 0.19634954084936207]
trajectories = 10
"#;

/// Pure quartic well on fine slots (two widths per side), where the
/// quantum and classical slot distributions separate within a few time
/// units. tau is a tenth of the slot lower bound at the initial slot.
const QUARTIC: &str = r#"
name = "quartic"
seed = 20240611

[grid]
x_min = -48.0
x_max = 48.0
n = 1024

[partition]
delta_x = 2.0
delta_p = 1.0
x_origin = -1.0
p_origin = -0.5

[hamiltonian]
mass = 1.0
potential = [[4, 1e-4]]

[state]
x0 = 32.0
p0 = 0.0
sigma_x = 1.0

[schedule]
times = [0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 10.0, 12.0]
tau = 0.009227816329543777
steps = 100
trajectories = 20
"#;

pub fn source(name: &str) -> Option<&'static str> {
    match name {
        "micro" => Some(MICRO),
        "macro" => Some(MACRO),
        "harmonic" => Some(HARMONIC),
        "quartic" => Some(QUARTIC),
        "cloud-chamber" => Some(CLOUD_CHAMBER),
        _ => None,
    }
}

pub fn builtin(name: &str) -> Result<Scenario> {
    let text = source(name).ok_or_else(|| Error::Config {
        field: "builtin".into(),
        reason: format!("unknown preset `{name}`; available: {}", NAMES.join(", ")),
    })?;
    Scenario::from_toml_str(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use slotlab::ehrenfest::ehrenfest_lower_bound_at_slot;

    #[test]
    fn quartic_tau_is_a_tenth_of_the_bound() {
        let s = builtin("quartic").unwrap();
        let part = s.partition().unwrap();
        let slot = part.slot_index(s.state.x0, s.state.p0).unwrap();
        let b = ehrenfest_lower_bound_at_slot(&s.spec().unwrap(), &part, slot).unwrap();
        assert!((s.schedule.tau.unwrap() / (b.t_lower_bound / 10.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn harmonic_tau_is_a_64th_period() {
        let s = builtin("harmonic").unwrap();
        let omega = (2.0 * 0.125f64).sqrt();
        let period = 2.0 * std::f64::consts::PI / omega;
        assert!((s.schedule.tau.unwrap() - period / 64.0).abs() < 1e-15);
        assert!((s.schedule.times.last().unwrap() - period).abs() < 1e-14);
    }

    #[test]
    fn unknown_preset_is_a_config_error() {
        assert!(matches!(builtin("nope"), Err(Error::Config { .. })));
    }
}
