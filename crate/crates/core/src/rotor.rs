//! The rotor collision law and its specialisations.
//!
//! A point particle hitting a circular wall of radius `r` that spins with
//! angular velocity `ω` keeps the magnitude of its normal velocity (the sign
//! flips) and exchanges tangential momentum with the wall rim:
//!
//! ```text
//! vt' = vt − 2η/(1+η) (vt − rω)
//! rω' = rω + 2/(1+η)  (vt − rω)
//! ```
//!
//! Both `vt + η rω` and `vt² + η (rω)²` are unchanged, and the map is an
//! involution on `(vt, rω)`.

use crate::error::{Error, Result};
use crate::geometry::reaches_inner;
use crate::params::{PhysicalParams, RescaledVelocity};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotorContact {
    pub vn: f64,
    pub vt: f64,
    /// Rim speed `r·ω`.
    pub r_omega: f64,
    pub eta: f64,
    pub r: f64,
}

impl RotorContact {
    pub fn new(vn: f64, vt: f64, r_omega: f64, eta: f64, r: f64) -> Result<Self> {
        if !(eta > 0.0) || !(r > 0.0) {
            return Err(Error::InvalidParams(format!(
                "rotor contact needs eta > 0 and r > 0 (eta = {eta}, r = {r})"
            )));
        }
        Ok(Self {
            vn,
            vt,
            r_omega,
            eta,
            r,
        })
    }

    /// `vt + η rω`.
    pub fn linear_invariant(&self) -> f64 {
        self.vt + self.eta * self.r_omega
    }

    /// `vt² + η (rω)²`.
    pub fn quadratic_invariant(&self) -> f64 {
        self.vt * self.vt + self.eta * self.r_omega * self.r_omega
    }
}

/// Tangential exchange of the rotor law on the pair `(vt, rω)`.
#[inline]
pub fn exchange(vt: f64, r_omega: f64, eta: f64) -> (f64, f64) {
    // Both speeds reflect through the weighted mean (vt + η rω)/(1 + η).
    // The mean is formed in double-double: a once-rounded 2/(1+η) has a
    // fixed error whose energy change keeps the same sign on every impact.
    let (w, w_lo) = two_sum(1.0, eta);
    let p = eta * r_omega;
    let (s, s_lo) = two_sum(vt, p);
    let s_lo = s_lo + eta.mul_add(r_omega, -p);
    let mean = s / w;
    let mean_lo = (mean.mul_add(-w, s) + s_lo - mean * w_lo) / w;
    let twice = 2.0 * mean;
    (
        (twice - vt) + 2.0 * mean_lo,
        (twice - r_omega) + 2.0 * mean_lo,
    )
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

pub fn rotor_reflect(c: &RotorContact) -> RotorContact {
    let (vt, r_omega) = exchange(c.vt, c.r_omega, c.eta);
    RotorContact {
        vn: -c.vn,
        vt,
        r_omega,
        ..*c
    }
}

/// Self-test: applying the law twice restores the contact to 1e-14 per
/// component (relative to the contact's velocity scale).
pub fn rotor_reflect_involution_check(c: &RotorContact) -> bool {
    let back = rotor_reflect(&rotor_reflect(c));
    let scale = c.vn.abs().max(c.vt.abs()).max(c.r_omega.abs()).max(1.0);
    [(back.vn, c.vn), (back.vt, c.vt), (back.r_omega, c.r_omega)]
        .iter()
        .all(|(a, b)| (a - b).abs() <= 1e-14 * scale)
}

/// Normal speed at the outer wall implied by the full energy, taken with the
/// positive sign. Negative radicands (rounding) clamp to zero.
fn outer_normal(f: f64, x: f64, y: f64, z: f64, r: f64) -> f64 {
    (f - x * x / (r * r) - y * y - z * z).max(0.0).sqrt()
}

/// Collision with the rotating inner wall in rescaled coordinates. Updates
/// `(x, z)`; `y` is untouched and `w` is recomputed from the full energy.
pub fn inner_collision_double(
    v: &RescaledVelocity,
    p: &PhysicalParams,
) -> Result<RescaledVelocity> {
    if !reaches_inner(v.z, v.w, p.r) {
        return Err(Error::Unreachable(format!(
            "z^2/w^2 = {} is not below R^2/(1-R^2) = {}",
            v.z * v.z / (v.w * v.w),
            p.r * p.r / (1.0 - p.r * p.r)
        )));
    }
    let f = v.full_energy(p);
    let root = p.eta1.sqrt();
    // x = √η₁ R²ω₁, and the law acts on (v_t, R²ω₁) with v_t = z.
    let (z, r2_omega1) = exchange(v.z, v.x / root, p.eta1);
    let x = root * r2_omega1;
    Ok(RescaledVelocity {
        x,
        y: v.y,
        z,
        w: outer_normal(f, x, v.y, z, p.r),
    })
}

/// Collision with the rotating outer wall in rescaled coordinates. Updates
/// `(y, z)`; `x` is untouched and `w` is recomputed from the full energy.
pub fn outer_collision_double(v: &RescaledVelocity, p: &PhysicalParams) -> RescaledVelocity {
    let f = v.full_energy(p);
    let eta2 = p.eta2_or_nan();
    let root = eta2.sqrt();
    let (z, omega2) = exchange(v.z, v.y / root, eta2);
    let y = root * omega2;
    RescaledVelocity {
        x: v.x,
        y,
        z,
        w: outer_normal(f, v.x, y, z, p.r),
    }
}

/// Inner-wall collision of the one-rotor system on `(v_t, ω)` with the
/// split taken at the inner wall. Returns `(v_t', ω')`.
pub fn inner_collision_single(vt: f64, omega: f64, p: &PhysicalParams) -> (f64, f64) {
    let (vt, r_omega) = exchange(vt, p.r * omega, p.eta1);
    (vt, r_omega / p.r)
}

/// Collision of one particle of the two-particle system with the inner wall,
/// on the coordinates `(tangential, q)` with `q = √η R ω`.
/// Returns `(tangential', q')`.
pub fn particle_collision_two(tangential: f64, q: f64, eta: f64) -> (f64, f64) {
    let root = eta.sqrt();
    let (t, r_omega) = exchange(tangential, q / root, eta);
    (t, root * r_omega)
}

/// Reflection of `v` across the plane through the origin with normal `m`.
pub fn mirror(v: [f64; 3], m: [f64; 3]) -> [f64; 3] {
    let dot = v[0] * m[0] + v[1] * m[1] + v[2] * m[2];
    let nn = m[0] * m[0] + m[1] * m[1] + m[2] * m[2];
    let k = 2.0 * dot / nn;
    [v[0] - k * m[0], v[1] - k * m[1], v[2] - k * m[2]]
}
