//! Distance of a slot operator from idempotence.

use std::f64::consts::PI;

use super::matrix::OperatorMatrix;
use crate::coherent::sigma_p;
use crate::error::{Error, Result};
use crate::slots::SlotPartition;

/// `||P^2 - P||_1 / ||P||_1` from singular values.
pub fn projectivity_error_numeric(p: &OperatorMatrix) -> Result<f64> {
    let denom = p.trace_norm();
    if denom == 0.0 {
        return Err(Error::param("operator", "zero operator has no projectivity error"));
    }
    Ok((&p.square() - p).trace_norm() / denom)
}

/// `F(u) = (exp(-u^2) - 1)/u + sqrt(pi) erf(u)`; tends to `sqrt(pi)`.
pub fn overlap_profile(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        // series: u - u^3/6 + ...
        return u - u * u * u / 6.0;
    }
    ((-u * u).exp() - 1.0) / u + PI.sqrt() * libm::erf(u)
}

/// Closed form for a rectangle `delta_x * delta_p` measured with coherent
/// states of width `sigma_x`.
pub fn projectivity_error_closed_form(part: &SlotPartition, sigma_x: f64) -> Result<f64> {
    part.validate()?;
    if !(sigma_x > 0.0 && sigma_x.is_finite()) {
        return Err(Error::param("sigma_x", "must be positive and finite"));
    }
    let ux = part.delta_x / (2.0 * sigma_x);
    let up = part.delta_p / (2.0 * sigma_p(sigma_x));
    Ok(1.0 - overlap_profile(ux) * overlap_profile(up) / PI)
}

/// Leading terms `(2/sqrt(pi)) (sx/dx + sp/dp) - 4 sx sp / (pi dx dp)`.
pub fn projectivity_error_asymptote(part: &SlotPartition, sigma_x: f64) -> f64 {
    let rx = sigma_x / part.delta_x;
    let rp = sigma_p(sigma_x) / part.delta_p;
    2.0 / PI.sqrt() * (rx + rp) - 4.0 * rx * rp / PI
}
