//! Chord geometry of the annulus with outer radius 1 and inner radius `R`.
//!
//! Angles `β` are measured at the outer wall between the particle velocity
//! and the inward normal, positive for counter-clockwise motion. A chord
//! leaving the outer wall at angle `β` has impact parameter `sin β` and so
//! reaches the inner wall iff `|sin β| < R`.

use crate::error::{Error, Result};
use std::f64::consts::{PI, TAU};

/// Radicands of `R² − sin²β` below this are treated as zero.
const GRAZING_RADICAND: f64 = 1e-14;

fn check_reach(beta: f64, r: f64) -> Result<f64> {
    let s = beta.sin();
    if s.abs() > r * (1.0 + 1e-15) {
        return Err(Error::Unreachable(format!(
            "|sin β| = {} exceeds R = {r}",
            s.abs()
        )));
    }
    Ok(s)
}

/// True when a velocity with outer-wall components `(z, w)` (tangential,
/// inward normal) strikes the inner wall. Exact tangency counts as a miss.
#[inline]
pub fn reaches_inner(z: f64, w: f64, r: f64) -> bool {
    z * z * (1.0 - r * r) < r * r * w * w
}

/// Angular advance between the outer launch point and the inner impact
/// point: `arcsin(sin β / R) − β`.
pub fn beta_hat(beta: f64, r: f64) -> Result<f64> {
    let s = check_reach(beta, r)?;
    Ok((s / r).clamp(-1.0, 1.0).asin() - beta)
}

/// Outer-to-inner chord length `cos β − √(R² − sin²β)`.
pub fn chord_length(beta: f64, r: f64) -> Result<f64> {
    let s = check_reach(beta, r)?;
    let radicand = r * r - s * s;
    let root = if radicand < GRAZING_RADICAND {
        0.0
    } else {
        radicand.sqrt()
    };
    Ok(beta.cos() - root)
}

/// Reduce an angle to `(−π, π]`.
pub fn reduce_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Advance along the outer wall for an outer → inner → outer excursion
/// whose two legs leave/arrive at angles `beta` and `beta2`.
pub fn fiber_advance(beta: f64, beta2: f64, r: f64) -> Result<f64> {
    Ok(reduce_angle(beta_hat(beta, r)? + beta_hat(beta2, r)?))
}

/// Advance along the outer wall for a chord that misses the inner wall:
/// `π − 2β` reduced to `[0, 2π)`.
pub fn miss_advance(beta_out: f64) -> f64 {
    (PI - 2.0 * beta_out).rem_euclid(TAU)
}

/// Outer-wall angle of a velocity given by its split at the inner wall
/// (`tangential`, `normal` with `normal > 0`): `sin β = R · sin β_inner`.
pub fn outer_angle_from_inner(tangential: f64, normal: f64, r: f64) -> f64 {
    let speed = tangential.hypot(normal);
    (r * tangential / speed).asin()
}

/// Angular advance of one outer↔inner leg for a velocity split at the inner
/// wall. Equals `beta_hat` of the corresponding outer angle.
pub fn leg_advance_from_inner(tangential: f64, normal: f64, r: f64) -> f64 {
    let inner = tangential.atan2(normal);
    inner - outer_angle_from_inner(tangential, normal, r)
}
