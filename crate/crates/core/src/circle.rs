//! The velocity circle: intersection of the energy sphere `|p|² = E` with
//! the momentum plane `n·p = N` in rescaled velocity space, the arclength
//! coordinate `s ∈ [0,1)` on it, the set `U` of outer bounces that miss the
//! inner wall, and the two-sheet base map.
//!
//! Both collision types act on the circle as reflections across lines
//! through its centre. The first reflection (outer wall for the double
//! rotor, first particle for the two-particle system) fixes the anchor, so
//! in `s` it reads `s ↦ −s`; the second reads `s ↦ −s − γ`.

use crate::error::{Error, Result};
use crate::params::{Integrals, Mode, PhysicalParams};
use crate::{circle_diff, wrap01};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

type V3 = [f64; 3];

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: V3, b: V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn scale(a: V3, k: f64) -> V3 {
    [a[0] * k, a[1] * k, a[2] * k]
}

fn add(a: V3, b: V3) -> V3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn unit(a: V3) -> V3 {
    scale(a, 1.0 / dot(a, a).sqrt())
}

/// Default relative tolerance for on-circle checks.
pub const ON_CIRCLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityCircle {
    pub center: V3,
    pub radius: f64,
    /// Orthonormal basis of the momentum plane; `s` runs from `basis[0]`
    /// towards `basis[1]`.
    pub basis: [V3; 2],
    pub anchor: V3,
    /// `γ` in units of a full turn, in `(0, 1/2)`.
    pub gamma_norm: f64,
    /// Unit normal of the momentum plane.
    pub normal: V3,
    pub n: f64,
    pub e: f64,
    /// Mirror-plane normals of the first and second reflections.
    pub mirrors: [V3; 2],
}

impl VelocityCircle {
    /// Build from the (unnormalised) momentum-plane normal and the two
    /// mirror normals. `prefer` names the coordinates used to pick the
    /// anchor among the two intersections with the first mirror line:
    /// larger `prefer[0]`, ties broken by larger `prefer[1]`.
    pub fn from_planes(
        plane_normal: V3,
        n: f64,
        e: f64,
        first_mirror: V3,
        second_mirror: V3,
        prefer: [usize; 2],
    ) -> Result<Self> {
        let nn = dot(plane_normal, plane_normal);
        let excess = n * n / nn;
        let radius_sq = e - excess;
        if !(radius_sq > 0.0) {
            return Err(Error::EmptyCircle { excess });
        }
        let radius = radius_sq.sqrt();
        let normal = unit(plane_normal);
        let center = scale(plane_normal, n / nn);

        let d1 = unit(cross(normal, first_mirror));
        let a = add(center, scale(d1, radius));
        let b = sub(center, scale(d1, radius));
        let tie = 1e-14 * e.sqrt();
        let pick_a = if (a[prefer[0]] - b[prefer[0]]).abs() > tie {
            a[prefer[0]] > b[prefer[0]]
        } else {
            a[prefer[1]] >= b[prefer[1]]
        };
        let (anchor, e1) = if pick_a {
            (a, d1)
        } else {
            (b, scale(d1, -1.0))
        };
        let mut e2 = cross(normal, e1);

        let d2 = unit(cross(normal, second_mirror));
        let theta2 = dot(d2, e2).atan2(dot(d2, e1));
        let mut gamma = wrap01(-theta2 / PI);
        if gamma > 0.5 {
            e2 = scale(e2, -1.0);
            gamma = 1.0 - gamma;
        }
        Ok(Self {
            center,
            radius,
            basis: [e1, e2],
            anchor,
            gamma_norm: gamma,
            normal,
            n,
            e,
            mirrors: [first_mirror, second_mirror],
        })
    }

    /// Circle of the double-rotor system in `(x, y, z)`. The first
    /// reflection is the outer wall, the second the inner wall.
    pub fn double_rotor(p: &PhysicalParams, ints: &Integrals) -> Result<Self> {
        if p.mode != Mode::DoubleRotor {
            return Err(Error::InvalidParams(
                "double-rotor circle needs DoubleRotor mode".into(),
            ));
        }
        let (a, b) = (p.eta1.sqrt(), p.eta2_or_nan().sqrt());
        Self::from_planes(
            [a, b, 1.0],
            ints.n,
            ints.e,
            [0.0, -1.0, b],
            [-1.0, 0.0, a],
            [2, 1],
        )
    }

    /// Circle of the two-particle system in `(v, u, q)`, `q = √η R ω`. The
    /// first reflection is a collision of the first particle, the second a
    /// collision of the second particle.
    pub fn two_particle(eta: f64, n: f64, e: f64) -> Result<Self> {
        let a = eta.sqrt();
        Self::from_planes([1.0, 1.0, a], n, e, [a, 0.0, -1.0], [0.0, a, -1.0], [2, 1])
    }

    pub fn point_at(&self, s: f64) -> V3 {
        let th = TAU * s;
        let [e1, e2] = self.basis;
        add(
            self.center,
            add(
                scale(e1, self.radius * th.cos()),
                scale(e2, self.radius * th.sin()),
            ),
        )
    }

    /// Arclength coordinate of a point on the circle.
    pub fn s_of_point(&self, p: V3) -> Result<f64> {
        self.s_of_point_tol(p, ON_CIRCLE_TOL)
    }

    pub fn s_of_point_tol(&self, p: V3, tol: f64) -> Result<f64> {
        let plane = (dot(self.normal, p) - dot(self.normal, self.center)).abs();
        let sphere = (dot(p, p) - self.e).abs() / self.e;
        let residual = (plane / self.e.sqrt()).max(sphere);
        if residual > tol {
            return Err(Error::OffCircle { residual });
        }
        let d = sub(p, self.center);
        let th = dot(d, self.basis[1]).atan2(dot(d, self.basis[0]));
        Ok(wrap01(th / TAU))
    }

    /// `s ↦ −s`.
    pub fn reflect_first(&self, s: f64) -> f64 {
        wrap01(-s)
    }

    /// `s ↦ −s − γ`.
    pub fn reflect_second(&self, s: f64) -> f64 {
        wrap01(-s - self.gamma_norm)
    }

    /// `cos(γ/2)` measured from the two reflection lines.
    pub fn measured_cos_half_gamma(&self) -> f64 {
        let d1 = unit(cross(self.normal, self.mirrors[0]));
        let d2 = unit(cross(self.normal, self.mirrors[1]));
        dot(d1, d2).abs()
    }
}

/// Normalised `γ` from the closed form `cos(πγ) = cos(γ/2)`.
pub fn gamma_closed_form(p: &PhysicalParams) -> f64 {
    p.cos_half_gamma().acos() / PI
}

/// An open arc of `[0,1)` running forward from `start` to `end`, possibly
/// across 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub start: f64,
    pub end: f64,
}

impl Arc {
    pub fn length(&self) -> f64 {
        let l = wrap01(self.end - self.start);
        if l == 0.0 {
            1.0
        } else {
            l
        }
    }

    pub fn contains(&self, s: f64) -> bool {
        let d = wrap01(s - self.start);
        d > 0.0 && d < self.length()
    }
}

/// Finite union of open arcs of the circle.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct USet {
    pub arcs: Vec<Arc>,
    pub full: bool,
}

/// Uniform scan resolution of [`USet::from_indicator`].
pub const U_SCAN_POINTS: usize = 1 << 16;
/// Bisection tolerance for arc endpoints.
pub const U_ENDPOINT_TOL: f64 = 1e-12;

impl USet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        !self.full && self.arcs.is_empty()
    }

    pub fn contains(&self, s: f64) -> bool {
        self.full || self.arcs.iter().any(|a| a.contains(s))
    }

    pub fn measure(&self) -> f64 {
        if self.full {
            1.0
        } else {
            // fold from +0 so that an empty set reports 0 rather than -0
            self.arcs.iter().map(Arc::length).fold(0.0, |a, b| a + b)
        }
    }

    /// Distance from `s` to the nearest arc endpoint (infinite if none).
    pub fn boundary_distance(&self, s: f64) -> f64 {
        self.arcs
            .iter()
            .flat_map(|a| [a.start, a.end])
            .map(|b| circle_diff(s, b).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// The set `{ s : g(s) > 0 }` for a smooth periodic `g`, located by a
    /// uniform scan followed by bisection of each sign change.
    pub fn from_indicator(g: impl Fn(f64) -> f64, samples: usize) -> Self {
        let h = 1.0 / samples as f64;
        let vals: Vec<f64> = (0..samples).map(|i| g(i as f64 * h)).collect();
        let pos: Vec<bool> = vals.iter().map(|&v| v > 0.0).collect();
        if pos.iter().all(|&p| p) {
            return Self {
                arcs: vec![],
                full: true,
            };
        }
        if !pos.iter().any(|&p| p) {
            return Self::empty();
        }
        let bisect = |mut lo: f64, mut hi: f64, lo_pos: bool| {
            while hi - lo > U_ENDPOINT_TOL {
                let mid = 0.5 * (lo + hi);
                if (g(mid) > 0.0) == lo_pos {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            wrap01(0.5 * (lo + hi))
        };
        // crossings in increasing s: (location, rising)
        let mut crossings = Vec::new();
        for i in 0..samples {
            let j = (i + 1) % samples;
            if pos[i] != pos[j] {
                let lo = i as f64 * h;
                crossings.push((bisect(lo, lo + h, pos[i]), pos[j]));
            }
        }
        let first_rise = crossings.iter().position(|c| c.1).unwrap_or(0);
        crossings.rotate_left(first_rise);
        let arcs = crossings
            .chunks(2)
            .map(|pair| Arc {
                start: pair[0].0,
                end: pair[1].0,
            })
            .collect();
        Self { arcs, full: false }
    }

    /// Image under `s ↦ −s − γ`.
    pub fn reflected(&self, gamma: f64) -> Self {
        let mut arcs: Vec<Arc> = self
            .arcs
            .iter()
            .map(|a| Arc {
                start: wrap01(-a.end - gamma),
                end: wrap01(-a.start - gamma),
            })
            .collect();
        arcs.sort_by(|a, b| a.start.total_cmp(&b.start));
        Self {
            arcs,
            full: self.full,
        }
    }

    /// Largest endpoint mismatch between `self` and `other` (infinite when
    /// the arc counts differ).
    pub fn distance(&self, other: &USet) -> f64 {
        if self.full != other.full || self.arcs.len() != other.arcs.len() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for a in &self.arcs {
            let best = other
                .arcs
                .iter()
                .map(|b| {
                    circle_diff(a.start, b.start)
                        .abs()
                        .max(circle_diff(a.end, b.end).abs())
                })
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(best);
        }
        worst
    }

    /// Whether the arcs cover the circle.
    fn covers(arcs: &mut [Arc]) -> bool {
        if arcs.is_empty() {
            return false;
        }
        if arcs.iter().any(|a| a.length() >= 1.0) {
            return true;
        }
        // Unroll around the start of one arc and sweep.
        let origin = arcs[0].start;
        let mut spans: Vec<(f64, f64)> = arcs
            .iter()
            .map(|a| {
                let st = wrap01(a.start - origin);
                (st, st + a.length())
            })
            .collect();
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut reach = spans[0].1;
        for &(st, en) in &spans[1..] {
            if st >= reach {
                return false;
            }
            reach = reach.max(en);
        }
        reach > 1.0
    }

    /// Smallest `N` such that `U, U − γ, …, U − (N−1)γ` cover the circle,
    /// searched up to `max_n`.
    pub fn cover_bound(&self, gamma: f64, max_n: usize) -> Option<usize> {
        if self.full {
            return Some(1);
        }
        if self.arcs.is_empty() {
            return None;
        }
        let shifted = |n: usize| -> Vec<Arc> {
            (0..n)
                .flat_map(|j| {
                    let sh = j as f64 * gamma;
                    self.arcs.iter().map(move |a| Arc {
                        start: wrap01(a.start - sh),
                        end: wrap01(a.end - sh),
                    })
                })
                .collect()
        };
        let mut hi = 1;
        while !Self::covers(&mut shifted(hi)) {
            if hi >= max_n {
                return None;
            }
            hi = (hi * 2).min(max_n);
        }
        let mut lo = hi / 2;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if Self::covers(&mut shifted(mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }
}

/// Velocity states whose outgoing trajectory from the outer wall misses the
/// inner wall: `z² > R²/(1−R²) · w²`, with `w² = F − x²/R² − y² − z²`.
///
/// `w²` is used with its sign, so on parts of the circle that are not
/// physically realisable (`w² < 0`) the inequality holds trivially.
pub fn compute_u(circle: &VelocityCircle, p: &PhysicalParams, ints: &Integrals) -> USet {
    let f = ints.f.unwrap_or(f64::NAN);
    let r2 = p.r * p.r;
    let c = r2 / (1.0 - r2);
    USet::from_indicator(
        |s| {
            let [x, y, z] = circle.point_at(s);
            let w2 = f - x * x / r2 - y * y - z * z;
            z * z - c * w2
        },
        U_SCAN_POINTS,
    )
}

/// Which copy of the velocity circle a base point lives on: `Inner` holds
/// velocities just after an inner bounce, `Outer` just after an outer one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sheet {
    #[serde(rename = "I")]
    Inner,
    #[serde(rename = "O")]
    Outer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseState {
    pub s: f64,
    pub sheet: Sheet,
}

impl BaseState {
    pub fn new(s: f64, sheet: Sheet) -> Self {
        Self {
            s: wrap01(s),
            sheet,
        }
    }
}

/// One application of the two-sheet base map:
/// `(s,O) ↦ (−s,O)` for `s ∈ U`, `(s,O) ↦ (−s−γ,I)` otherwise, and
/// `(s,I) ↦ (−s,O)`.
pub fn base_step(b: BaseState, c: &VelocityCircle, u: &USet) -> Result<BaseState> {
    match b.sheet {
        Sheet::Outer if u.contains(b.s) => Ok(BaseState::new(c.reflect_first(b.s), Sheet::Outer)),
        Sheet::Outer => Ok(BaseState::new(c.reflect_second(b.s), Sheet::Inner)),
        Sheet::Inner if u.contains(b.s) => Err(Error::InvalidState(format!(
            "s = {} lies in U and cannot be realised on the inner sheet",
            b.s
        ))),
        Sheet::Inner => Ok(BaseState::new(c.reflect_first(b.s), Sheet::Outer)),
    }
}

/// Inverse of [`base_step`].
pub fn base_step_inverse(b: BaseState, c: &VelocityCircle, u: &USet) -> Result<BaseState> {
    match b.sheet {
        Sheet::Inner if u.contains(b.s) => Err(Error::InvalidState(format!(
            "s = {} lies in U and cannot be realised on the inner sheet",
            b.s
        ))),
        Sheet::Inner => Ok(BaseState::new(c.reflect_second(b.s), Sheet::Outer)),
        Sheet::Outer => {
            let prev = c.reflect_first(b.s);
            let sheet = if u.contains(prev) {
                Sheet::Outer
            } else {
                Sheet::Inner
            };
            Ok(BaseState::new(prev, sheet))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GammaKind {
    Rational { p: u64, q: u64 },
    DiophantineLike,
    LiouvilleLike,
}

/// Continued-fraction evidence about a number in `[0,1)`. Floating point
/// cannot certify irrationality; every label here is numerical evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaClass {
    pub value: f64,
    pub kind: GammaKind,
    pub partial_quotients: Vec<u64>,
    /// Last convergent `(p, q)` computed.
    pub convergent: (u64, u64),
    pub convergent_error: f64,
    pub max_partial_quotient: u64,
    /// Mean of `ln a_k` over `k ≥ 1`.
    pub mean_log_quotient: f64,
}

/// A convergent closer than this is taken as exact.
pub const RATIONAL_TOL: f64 = 1e-13;
/// Largest denominator accepted as a rational identification.
pub const RATIONAL_MAX_DENOMINATOR: u64 = 10_000;
/// Convergent error below which further partial quotients are noise.
const FLOAT_EXHAUSTED: f64 = 1e-15;

pub fn classify_value(x: f64, depth: usize) -> Result<GammaClass> {
    if depth == 0 || depth > 60 {
        return Err(Error::OutOfRange(format!(
            "continued-fraction depth {depth} not in 1..=60"
        )));
    }
    if !(0.0..1.0).contains(&x) {
        return Err(Error::OutOfRange(format!("value {x} not in [0,1)")));
    }
    let (mut p_prev, mut q_prev, mut p, mut q) = (0u64, 1u64, 1u64, 0u64);
    let mut rem = x;
    let mut quotients = Vec::new();
    let mut err = f64::INFINITY;
    let mut liouville = false;
    let mut kind = None;
    for _ in 0..depth {
        let a = rem.floor();
        if a > 1e15 {
            break;
        }
        let a = a as u64;
        let (Some(pn), Some(qn)) = (
            a.checked_mul(p).and_then(|v| v.checked_add(p_prev)),
            a.checked_mul(q).and_then(|v| v.checked_add(q_prev)),
        ) else {
            break;
        };
        if quotients.len() >= 2 && q >= 10 && (a as f64) > (q as f64).powi(2) {
            liouville = true;
        }
        quotients.push(a);
        (p_prev, q_prev, p, q) = (p, q, pn, qn);
        err = (x - p as f64 / q as f64).abs();
        if err < RATIONAL_TOL && q <= RATIONAL_MAX_DENOMINATOR {
            kind = Some(GammaKind::Rational { p, q });
            break;
        }
        if err < FLOAT_EXHAUSTED {
            break;
        }
        let frac = rem - rem.floor();
        if frac <= 0.0 {
            break;
        }
        rem = 1.0 / frac;
    }
    let tail = &quotients[1.min(quotients.len())..];
    let mean_log = if tail.is_empty() {
        0.0
    } else {
        tail.iter().map(|&a| (a as f64).ln()).sum::<f64>() / tail.len() as f64
    };
    let kind = kind.unwrap_or(if liouville {
        GammaKind::LiouvilleLike
    } else {
        GammaKind::DiophantineLike
    });
    Ok(GammaClass {
        value: x,
        kind,
        max_partial_quotient: tail.iter().copied().max().unwrap_or(0),
        partial_quotients: quotients,
        convergent: (p, q),
        convergent_error: err,
        mean_log_quotient: mean_log,
    })
}

/// Classify `γ` of the double-rotor or two-particle system.
pub fn classify_gamma(p: &PhysicalParams, depth: usize) -> Result<GammaClass> {
    classify_value(gamma_closed_form(p), depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn unit_setup(f: f64) -> (PhysicalParams, Integrals, VelocityCircle) {
        let p = PhysicalParams::double(0.5, 1.0, 1.0);
        let ints = Integrals::double(0.0, 1.0, f);
        let c = VelocityCircle::double_rotor(&p, &ints).unwrap();
        (p, ints, c)
    }

    #[test]
    fn plane_through_origin() {
        let (_, _, c) = unit_setup(8.0);
        assert!(c.center.iter().all(|v| v.abs() < 1e-16));
        assert!((c.radius - 1.0).abs() < 1e-15);
        assert!((c.gamma_norm - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn circle_invariants() {
        let mut rng = rand_xoshiro::SplitMix64::seed_from_u64(23);
        for _ in 0..200 {
            let p =
                PhysicalParams::double(0.5, rng.gen_range(0.05..20.0), rng.gen_range(0.05..20.0));
            let e: f64 = rng.gen_range(0.5..3.0);
            let nmax = (e * p.plane_norm_sq()).sqrt();
            let ints = Integrals::double(rng.gen_range(-0.9..0.9) * nmax, e, 10.0);
            let c = VelocityCircle::double_rotor(&p, &ints).unwrap();
            let nvec = [p.eta1.sqrt(), p.eta2.unwrap().sqrt(), 1.0];
            let nn = dot(nvec, nvec);
            let want_c = scale(nvec, ints.n / nn);
            for (got, want) in c.center.iter().zip(want_c) {
                assert!((got - want).abs() < 1e-14);
            }
            assert!((c.radius * c.radius - (e - ints.n * ints.n / nn)).abs() < 1e-13);
            // anchor on circle and fixed by the outer collision
            let a = c.anchor;
            assert!((dot(a, a) - e).abs() < 1e-12);
            let m = crate::rotor::mirror(a, c.mirrors[0]);
            assert!(dist(m, a) < 1e-12);
            assert!(c.s_of_point(a).unwrap().min(1.0 - c.s_of_point(a).unwrap()) < 1e-12);
            assert!(((PI * c.gamma_norm).cos() - p.cos_half_gamma()).abs() < 1e-12);
            assert!(c.gamma_norm > 0.0 && c.gamma_norm < 0.5);
        }
    }

    fn dist(a: V3, b: V3) -> f64 {
        let d = sub(a, b);
        dot(d, d).sqrt()
    }

    #[test]
    fn s_round_trip() {
        let p = PhysicalParams::double(0.4, 1.3, 2.7);
        let ints = Integrals::double(0.3, 1.1, 9.0);
        let c = VelocityCircle::double_rotor(&p, &ints).unwrap();
        let mut rng = rand_xoshiro::SplitMix64::seed_from_u64(29);
        for _ in 0..10_000 {
            let s: f64 = rng.gen();
            let back = c.s_of_point(c.point_at(s)).unwrap();
            assert!(circle_diff(back, s).abs() < 1e-12);
        }
        assert!(matches!(
            c.s_of_point([5.0, 0.0, 0.0]),
            Err(Error::OffCircle { .. })
        ));
    }

    #[test]
    fn collisions_act_as_reflections_in_s() {
        use crate::params::RescaledVelocity;
        use crate::rotor::{inner_collision_double, outer_collision_double};
        let p = PhysicalParams::double(0.5, 1.0, 2.0);
        let ints = Integrals::double(0.2, 1.0, 30.0);
        let c = VelocityCircle::double_rotor(&p, &ints).unwrap();
        let f = ints.f.unwrap();
        let mut rng = rand_xoshiro::SplitMix64::seed_from_u64(31);
        let mut worst: f64 = 0.0;
        for _ in 0..10_000 {
            let s: f64 = rng.gen();
            let [x, y, z] = c.point_at(s);
            let w = (f - x * x / 0.25 - y * y - z * z).sqrt();
            let v = RescaledVelocity { x, y, z, w };
            let o = outer_collision_double(&v, &p);
            let so = c.s_of_point([o.x, o.y, o.z]).unwrap();
            worst = worst.max(circle_diff(so, c.reflect_first(s)).abs());
            let i = inner_collision_double(&v, &p).unwrap();
            let si = c.s_of_point([i.x, i.y, i.z]).unwrap();
            worst = worst.max(circle_diff(si, c.reflect_second(s)).abs());
        }
        assert!(worst < 1e-10, "worst {worst:e}");
    }

    #[test]
    fn gamma_independent_of_integrals() {
        let p = PhysicalParams::double(0.5, 0.7, 3.1);
        let g: Vec<f64> = (0..10)
            .map(|k| {
                let e = 0.5 + 0.3 * k as f64;
                let n = 0.1 * k as f64 - 0.3;
                VelocityCircle::double_rotor(&p, &Integrals::double(n, e, 20.0))
                    .unwrap()
                    .gamma_norm
            })
            .collect();
        for v in &g {
            assert!((v - g[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_circle_error() {
        let p = PhysicalParams::double(0.5, 1.0, 1.0);
        let r = VelocityCircle::double_rotor(&p, &Integrals::double(3.0, 1.0, 8.0));
        assert!(matches!(r, Err(Error::EmptyCircle { .. })));
    }

    #[test]
    fn near_degenerate_circle_builds() {
        let p = PhysicalParams::double(0.5, 1.0, 1.0);
        let n = 3f64.sqrt() * (1.0 - 1e-9);
        let c = VelocityCircle::double_rotor(&p, &Integrals::double(n, 1.0, 8.0)).unwrap();
        assert!(c.radius < 1e-4 && c.radius > 0.0);
    }

    #[test]
    fn u_empty_for_large_full_energy() {
        let (p, ints, c) = unit_setup(8.0);
        assert!(compute_u(&c, &p, &ints).is_empty());
    }

    /// Brute force on a 10⁶-point grid, independent of the arc search.
    fn brute_u_fraction(c: &VelocityCircle, p: &PhysicalParams, ints: &Integrals) -> f64 {
        let f = ints.f.unwrap();
        let r2 = p.r * p.r;
        let n = 1_000_000;
        let hits = (0..n)
            .filter(|&i| {
                let [x, y, z] = c.point_at(i as f64 / n as f64);
                let w2 = f - x * x / r2 - y * y - z * z;
                z * z > r2 / (1.0 - r2) * w2
            })
            .count();
        hits as f64 / n as f64
    }

    #[test]
    fn u_nonempty_near_tangential_energy() {
        let (p, ints, c) = unit_setup(1.01);
        let u = compute_u(&c, &p, &ints);
        let brute = brute_u_fraction(&c, &p, &ints);
        assert!(brute > 0.0);
        assert!(!u.is_empty());
        assert!((u.measure() - brute).abs() < 1e-5);
    }

    #[test]
    fn u_matches_brute_force_and_is_reflection_invariant() {
        let p = PhysicalParams::double(0.5, 1.0, 2.0);
        for f in [2.5, 3.0, 3.5, 3.9] {
            let ints = Integrals::double(0.3, 1.0, f);
            let c = VelocityCircle::double_rotor(&p, &ints).unwrap();
            let u = compute_u(&c, &p, &ints);
            assert!(!u.is_empty(), "F = {f}");
            assert!((u.measure() - brute_u_fraction(&c, &p, &ints)).abs() < 1e-5);
            let refl = u.reflected(c.gamma_norm);
            assert!(u.distance(&refl) < 1e-10, "F = {f}: {}", u.distance(&refl));
            for a in &u.arcs {
                let mid = wrap01(a.start + 0.5 * a.length());
                assert!(u.contains(mid));
            }
        }
    }

    #[test]
    fn base_map_branches() {
        let (_, _, c) = unit_setup(8.0);
        let u = USet::empty();
        let b = base_step(BaseState::new(0.0, Sheet::Outer), &c, &u).unwrap();
        assert_eq!(b.sheet, Sheet::Inner);
        assert!((b.s - (1.0 - c.gamma_norm)).abs() < 1e-15);
        let b = base_step(BaseState::new(0.2, Sheet::Inner), &c, &u).unwrap();
        assert_eq!(b, BaseState::new(0.8, Sheet::Outer));
        // T² on O rotates by γ
        let b0 = BaseState::new(0.123, Sheet::Outer);
        let b2 = base_step(base_step(b0, &c, &u).unwrap(), &c, &u).unwrap();
        assert_eq!(b2.sheet, Sheet::Outer);
        assert!(circle_diff(b2.s, 0.123 + c.gamma_norm).abs() < 1e-15);
    }

    #[test]
    fn inner_sheet_in_u_is_invalid() {
        let u = USet {
            arcs: vec![Arc {
                start: 0.1,
                end: 0.2,
            }],
            full: false,
        };
        let (_, _, c) = unit_setup(8.0);
        assert!(matches!(
            base_step(BaseState::new(0.15, Sheet::Inner), &c, &u),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn base_map_inverse() {
        let p = PhysicalParams::double(0.5, 1.0, 2.0);
        let ints = Integrals::double(0.3, 1.0, 3.0);
        let c = VelocityCircle::double_rotor(&p, &ints).unwrap();
        let u = compute_u(&c, &p, &ints);
        let mut rng = rand_xoshiro::SplitMix64::seed_from_u64(37);
        let mut checked = 0;
        while checked < 10_000 {
            let s: f64 = rng.gen();
            let sheet = if rng.gen::<bool>() {
                Sheet::Outer
            } else {
                Sheet::Inner
            };
            if sheet == Sheet::Inner && u.contains(s) {
                continue;
            }
            let b = BaseState::new(s, sheet);
            let fwd = base_step(b, &c, &u).unwrap();
            let back = base_step_inverse(fwd, &c, &u).unwrap();
            assert_eq!(back.sheet, b.sheet);
            assert!(circle_diff(back.s, b.s).abs() < 1e-14);
            checked += 1;
        }
    }

    #[test]
    fn cover_bound_simple() {
        let u = USet {
            arcs: vec![Arc {
                start: 0.0,
                end: 0.3,
            }],
            full: false,
        };
        // shifts by 0.25 of a 0.3 arc: 4 copies cover
        assert_eq!(u.cover_bound(0.25, 100), Some(4));
        assert_eq!(USet::empty().cover_bound(0.3, 100), None);
        let u = USet {
            arcs: vec![Arc {
                start: 0.0,
                end: 0.1,
            }],
            full: false,
        };
        assert_eq!(u.cover_bound(0.5, 100), None);
    }

    #[test]
    fn classification() {
        let g = classify_gamma(&PhysicalParams::double(0.5, 1.0, 1.0), 40).unwrap();
        assert_eq!(g.kind, GammaKind::Rational { p: 1, q: 3 });

        let g = classify_gamma(&PhysicalParams::double(0.5, 1.0, 2.0), 40).unwrap();
        assert!(
            (g.value - 0.304_086_723_984_695_6).abs() < 1e-12,
            "{}",
            g.value
        );
        assert_eq!(g.kind, GammaKind::DiophantineLike);

        // cos(γ/2) = √2/2 gives γ/2 = π/4, i.e. a quarter turn
        let eta = 1.0 + 2f64.sqrt();
        let g = classify_gamma(&PhysicalParams::double(0.5, eta, eta), 40).unwrap();
        assert_eq!(g.kind, GammaKind::Rational { p: 1, q: 4 });

        assert!(classify_value(0.3, 61).is_err());
        assert!(classify_value(1.3, 10).is_err());
    }

    #[test]
    fn liouville_like_evidence() {
        // 10/73 perturbed far below 1/73²: the next partial quotient dwarfs 73²
        let g = classify_value(10.0 / 73.0 + 1e-11, 60).unwrap();
        assert_eq!(g.kind, GammaKind::LiouvilleLike, "{g:?}");
        let g = classify_value(10.0 / 73.0, 60).unwrap();
        assert_eq!(g.kind, GammaKind::Rational { p: 10, q: 73 });
    }
}
