//! Point-particle dynamics in an annulus whose circular walls may rotate and
//! trade angular momentum with the particle.
//!
//! The crate has two independent layers:
//!
//! * closed-form reduced maps: the rotor collision law ([`rotor`]), chord
//!   geometry ([`geometry`]), the velocity circle and its two-sheet base map
//!   ([`circle`]), the one-rotor system ([`single`]), the skew product over
//!   the base ([`skew`]) and the two-particle map ([`two`]);
//! * an event-driven Cartesian simulator ([`oracle`]) that knows nothing
//!   about the reduced coordinates and is used to cross-check them.

// `!(x > 0.0)` is used on purpose so that NaN fails the guard too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circle;
pub mod error;
pub mod geometry;
pub mod oracle;
pub mod params;
pub mod rng;
pub mod rotor;
pub mod single;
pub mod skew;
pub mod two;

pub use circle::{BaseState, GammaClass, GammaKind, Sheet, USet, VelocityCircle};
pub use error::{Error, Result};
pub use params::{Integrals, Mode, PhysicalParams, RescaledVelocity, ValidationReport};
pub use skew::{DoubleRotor, SkewState};
pub use two::{TwoParticleState, TwoParticleSystem};

/// Reduce `x` to `[0, 1)`.
#[inline]
pub fn wrap01(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Signed distance on the unit circle `[0, 1)`, in `[-0.5, 0.5)`.
#[inline]
pub fn circle_diff(a: f64, b: f64) -> f64 {
    wrap01(a - b + 0.5) - 0.5
}
