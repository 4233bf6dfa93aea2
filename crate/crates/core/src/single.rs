//! One particle between a rotating inner wall and an elastic outer wall.
//!
//! The particle's normal speed at the inner wall never changes, and the
//! pair `(v_t, ω)` flips between two values: the rotor law is an
//! involution and the outer bounce leaves angular momentum untouched. The
//! outer impact point therefore advances by the same angle after every
//! round trip.

use crate::error::{Error, Result};
use crate::geometry::{leg_advance_from_inner, reaches_inner};
use crate::params::{Integrals, PhysicalParams};
use crate::rotor::inner_collision_single;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Inner,
    Outer,
}

/// State right after a collision.
///
/// `vt` is the tangential velocity and `vn > 0` the normal speed, both
/// measured at the inner wall. `phi` is the polar angle of the most recent
/// impact in `[0, 2π)` and `winding` counts its full turns. `phase` names the
/// wall hit next.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleRotorState {
    pub vn: f64,
    pub vt: f64,
    pub omega: f64,
    pub phi: f64,
    pub winding: i64,
    pub phase: Phase,
}

impl SingleRotorState {
    pub fn new(vn: f64, vt: f64, omega: f64, phi: f64, phase: Phase) -> Result<Self> {
        if !(vn > 0.0) || !vn.is_finite() {
            return Err(Error::InvalidState(format!(
                "normal speed at the inner wall must be positive, got {vn}"
            )));
        }
        let mut st = Self {
            vn,
            vt,
            omega,
            phi: 0.0,
            winding: 0,
            phase,
        };
        st.advance(phi);
        Ok(st)
    }

    /// State just after an outer bounce from components `(v_t, v_n)` split at
    /// the outer wall. Chords that miss the inner wall are rejected.
    pub fn from_outer(
        vt_outer: f64,
        vn_outer: f64,
        omega: f64,
        phi: f64,
        p: &PhysicalParams,
    ) -> Result<Self> {
        if !reaches_inner(vt_outer, vn_outer, p.r) || vn_outer <= 0.0 {
            return Err(Error::Unreachable(format!(
                "outer split (v_t, v_n) = ({vt_outer}, {vn_outer}) never reaches R = {}",
                p.r
            )));
        }
        let vt = vt_outer / p.r;
        let vn = (vn_outer * vn_outer + vt_outer * vt_outer - vt * vt).sqrt();
        Self::new(vn, vt, omega, phi, Phase::Inner)
    }

    /// Unwrapped impact angle.
    pub fn lift(&self) -> f64 {
        self.winding as f64 * TAU + self.phi
    }

    pub fn integrals(&self, p: &PhysicalParams) -> Integrals {
        let rw = p.r * self.omega;
        Integrals::single(
            self.vt + p.eta1 * rw,
            self.vt * self.vt + p.eta1 * rw * rw,
            self.vn,
        )
    }

    fn advance(&mut self, d: f64) {
        let total = self.phi + d;
        let turns = total.div_euclid(TAU);
        self.winding += turns as i64;
        self.phi = total - turns * TAU;
        if self.phi >= TAU {
            self.phi -= TAU;
            self.winding += 1;
        }
    }
}

/// One collision. At the inner wall the incoming leg is flown and the rotor
/// law applied; at the outer wall the outgoing leg of the last inner bounce
/// is flown and the normal reverses, leaving `(v_t, ω)` unchanged.
pub fn single_step(st: &SingleRotorState, p: &PhysicalParams) -> SingleRotorState {
    let mut next = *st;
    next.advance(leg_advance_from_inner(st.vt, st.vn, p.r));
    match st.phase {
        Phase::Inner => {
            let (vt, omega) = inner_collision_single(st.vt, st.omega, p);
            next.vt = vt;
            next.omega = omega;
            next.phase = Phase::Outer;
        }
        Phase::Outer => next.phase = Phase::Inner,
    }
    next
}

/// Angle swept by the outer impact point per round trip: one leg with each
/// of the two tangential velocities of the period-2 cycle.
pub fn fiber_rotation_angle(st: &SingleRotorState, p: &PhysicalParams) -> Result<f64> {
    if !(st.vn > 0.0) {
        return Err(Error::Unreachable(format!(
            "normal speed {} never reaches the inner wall",
            st.vn
        )));
    }
    let (other, _) = inner_collision_single(st.vt, st.omega, p);
    Ok(leg_advance_from_inner(st.vt, st.vn, p.r) + leg_advance_from_inner(other, st.vn, p.r))
}

/// Tangential velocities `(v_t, v_t')` of the period-2 cycle fixed by the
/// integrals `N = v_t + ηRω` and `E = v_t² + η R²ω²`, with `v_t ≥ v_t'`.
pub fn cycle_from_integrals(n: f64, e: f64, p: &PhysicalParams) -> Result<(f64, f64)> {
    // v_t² + (N − v_t)²/η = E
    let eta = p.eta1;
    let a = 1.0 + 1.0 / eta;
    let b = -2.0 * n / eta;
    let c = n * n / eta - e;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Err(Error::EmptyCircle {
            excess: n * n / (1.0 + eta),
        });
    }
    let root = disc.sqrt();
    // The two roots are exactly the exchanged pair.
    Ok(((-b + root) / (2.0 * a), (-b - root) / (2.0 * a)))
}
