//! Physical parameters, integrals of motion and rescaled velocity coordinates.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Which of the three annulus systems a parameter set describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// One particle, inner wall rotates, outer wall elastic.
    SingleRotor,
    /// One particle, both walls rotate.
    DoubleRotor,
    /// Two equal-mass particles, inner wall rotates, outer wall elastic.
    TwoParticle,
}

/// Inner radius and rescaled moments of inertia. The outer radius is 1.
///
/// `eta1 = Θ₁/(m R²)` belongs to the inner wall and `eta2 = Θ₂/m` to the
/// outer wall; `eta2` is only present for [`Mode::DoubleRotor`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub r: f64,
    pub eta1: f64,
    pub eta2: Option<f64>,
    pub mode: Mode,
}

impl PhysicalParams {
    pub fn single(r: f64, eta: f64) -> Self {
        Self {
            r,
            eta1: eta,
            eta2: None,
            mode: Mode::SingleRotor,
        }
    }

    pub fn double(r: f64, eta1: f64, eta2: f64) -> Self {
        Self {
            r,
            eta1,
            eta2: Some(eta2),
            mode: Mode::DoubleRotor,
        }
    }

    pub fn two_particle(r: f64, eta: f64) -> Self {
        Self {
            r,
            eta1: eta,
            eta2: None,
            mode: Mode::TwoParticle,
        }
    }

    /// `eta2`, or NaN when absent. Only meaningful in double-rotor mode.
    pub fn eta2_or_nan(&self) -> f64 {
        self.eta2.unwrap_or(f64::NAN)
    }

    /// Closed form of `cos(γ/2)` for the mode's pair of reflections.
    pub fn cos_half_gamma(&self) -> f64 {
        match self.mode {
            Mode::DoubleRotor => {
                let eta2 = self.eta2_or_nan();
                ((1.0 + 1.0 / self.eta1) * (1.0 + 1.0 / eta2)).powf(-0.5)
            }
            Mode::TwoParticle => 1.0 / (1.0 + self.eta1),
            Mode::SingleRotor => f64::NAN,
        }
    }

    /// Squared norm of the momentum-plane normal `|n|²`.
    pub fn plane_norm_sq(&self) -> f64 {
        match self.mode {
            Mode::DoubleRotor => 1.0 + self.eta1 + self.eta2_or_nan(),
            Mode::TwoParticle => 2.0 + self.eta1,
            Mode::SingleRotor => 1.0 + self.eta1,
        }
    }
}

/// Conserved quantities of a trajectory.
///
/// `f` is the full energy (double-rotor only). `vn_fixed` is the conserved
/// normal speed at the inner wall for the single-rotor system and for the
/// first particle of the two-particle system; `un_fixed` is that of the
/// second particle.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Integrals {
    pub n: f64,
    pub e: f64,
    #[serde(default)]
    pub f: Option<f64>,
    #[serde(default)]
    pub vn_fixed: Option<f64>,
    #[serde(default)]
    pub un_fixed: Option<f64>,
}

impl Integrals {
    pub fn double(n: f64, e: f64, f: f64) -> Self {
        Self {
            n,
            e,
            f: Some(f),
            ..Self::default()
        }
    }

    pub fn single(n: f64, e: f64, vn: f64) -> Self {
        Self {
            n,
            e,
            vn_fixed: Some(vn),
            ..Self::default()
        }
    }

    pub fn two_particle(n: f64, e: f64, vn: f64, un: f64) -> Self {
        Self {
            n,
            e,
            vn_fixed: Some(vn),
            un_fixed: Some(un),
            ..Self::default()
        }
    }
}

/// One reason a `(params, integrals)` pair is rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    RadiusOutOfRange { r: f64 },
    NonPositiveInertia { field: String, value: f64 },
    MissingField { field: String },
    UnexpectedField { field: String },
    NonPositiveEnergy { e: f64 },
    FullEnergyNotAboveTangential { e: f64, f: f64 },
    EmptyVelocityCircle { n_sq_over_norm: f64, e: f64 },
    NonPositiveNormal { field: String, value: f64 },
    ZeroParticleVelocity { min_speed_sq: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RadiusOutOfRange { r } => write!(f, "R must lie in (0,1), got {r}"),
            Violation::NonPositiveInertia { field, value } => {
                write!(f, "{field} must be positive, got {value}")
            }
            Violation::MissingField { field } => write!(f, "missing field `{field}`"),
            Violation::UnexpectedField { field } => {
                write!(f, "field `{field}` does not apply to this mode")
            }
            Violation::NonPositiveEnergy { e } => write!(f, "E must be positive, got {e}"),
            Violation::FullEnergyNotAboveTangential { e, f: full } => {
                write!(f, "F must exceed E (E = {e}, F = {full})")
            }
            Violation::EmptyVelocityCircle { n_sq_over_norm, e } => write!(
                f,
                "empty velocity circle: N^2/|n|^2 = {n_sq_over_norm} is not below E = {e}"
            ),
            Violation::NonPositiveNormal { field, value } => {
                write!(f, "{field} must be positive, got {value}")
            }
            Violation::ZeroParticleVelocity { min_speed_sq } => write!(
                f,
                "particle velocity vanishes on the velocity circle (min |v|^2 = {min_speed_sq:e})"
            ),
        }
    }
}

/// Result of [`validate_params`]. Empty `violations` means valid; warnings
/// never invalidate.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Radius² below which a nonempty circle is flagged as near-degenerate.
const NEAR_DEGENERATE_REL: f64 = 1e-6;

pub fn validate_params(p: &PhysicalParams, ints: &Integrals) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let v = &mut rep.violations;

    if !(p.r > 0.0 && p.r < 1.0) {
        v.push(Violation::RadiusOutOfRange { r: p.r });
    }
    if !(p.eta1 > 0.0) {
        v.push(Violation::NonPositiveInertia {
            field: "eta1".into(),
            value: p.eta1,
        });
    }
    match (p.mode, p.eta2) {
        (Mode::DoubleRotor, None) => v.push(Violation::MissingField {
            field: "eta2".into(),
        }),
        (Mode::DoubleRotor, Some(e2)) if !(e2 > 0.0) => v.push(Violation::NonPositiveInertia {
            field: "eta2".into(),
            value: e2,
        }),
        (Mode::SingleRotor | Mode::TwoParticle, Some(_)) => v.push(Violation::UnexpectedField {
            field: "eta2".into(),
        }),
        _ => {}
    }
    if !(ints.e > 0.0) {
        v.push(Violation::NonPositiveEnergy { e: ints.e });
    }

    let require_positive = |name: &str, val: Option<f64>, v: &mut Vec<Violation>| match val {
        None => v.push(Violation::MissingField { field: name.into() }),
        Some(x) if !(x > 0.0) => v.push(Violation::NonPositiveNormal {
            field: name.into(),
            value: x,
        }),
        _ => {}
    };

    match p.mode {
        Mode::DoubleRotor => match ints.f {
            None => v.push(Violation::MissingField { field: "F".into() }),
            Some(f) if !(f > ints.e) => {
                v.push(Violation::FullEnergyNotAboveTangential { e: ints.e, f })
            }
            _ => {}
        },
        Mode::SingleRotor => require_positive("vn_fixed", ints.vn_fixed, v),
        Mode::TwoParticle => {
            require_positive("vn_fixed", ints.vn_fixed, v);
            require_positive("un_fixed", ints.un_fixed, v);
        }
    }

    if !v.is_empty() {
        return rep;
    }

    let n_sq = ints.n * ints.n / p.plane_norm_sq();
    let radius_sq = ints.e - n_sq;
    // A single-rotor circle may degenerate to the co-moving fixed point.
    let empty = match p.mode {
        Mode::SingleRotor => radius_sq < 0.0,
        _ => !(radius_sq > 0.0),
    };
    if empty {
        v.push(Violation::EmptyVelocityCircle {
            n_sq_over_norm: n_sq,
            e: ints.e,
        });
        return rep;
    }
    if radius_sq < NEAR_DEGENERATE_REL * ints.e {
        rep.warnings.push(format!(
            "near-degenerate velocity circle: radius^2 = {radius_sq:e}"
        ));
    }

    if p.mode == Mode::DoubleRotor {
        let f = ints.f.unwrap_or(f64::NAN);
        if let Ok(circle) = crate::circle::VelocityCircle::double_rotor(p, ints) {
            let probe = |s: f64| {
                let [x, y, z] = circle.point_at(s);
                let w_sq = f - x * x / (p.r * p.r) - y * y - z * z;
                (z * z + w_sq.abs(), w_sq)
            };
            let (min_speed, _) = minimize_on_circle(|s| probe(s).0, 4096);
            let (min_w_sq_val, _) = minimize_on_circle(|s| probe(s).1, 4096);
            if min_speed < 1e-12 * ints.e {
                v.push(Violation::ZeroParticleVelocity {
                    min_speed_sq: min_speed,
                });
            }
            if min_w_sq_val < 0.0 {
                rep.warnings.push(format!(
                    "part of the velocity circle is not physically realisable (min w^2 = {min_w_sq_val:e}); \
                     orbits started at physical points stay physical"
                ));
            }
        }
    }
    rep
}

/// Minimum of a smooth periodic function on `[0,1)`: grid scan followed by a
/// golden-section refinement around the best sample. Returns `(min, argmin)`.
pub(crate) fn minimize_on_circle(f: impl Fn(f64) -> f64, samples: usize) -> (f64, f64) {
    let h = 1.0 / samples as f64;
    let (mut best_s, mut best) = (0.0, f(0.0));
    for i in 1..samples {
        let s = i as f64 * h;
        let val = f(s);
        if val < best {
            best = val;
            best_s = s;
        }
    }
    let (mut a, mut b) = (best_s - h, best_s + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let m = 0.5 * (a + b);
    let fm = f(m);
    if fm < best {
        (fm, crate::wrap01(m))
    } else {
        (best, best_s)
    }
}

/// Rescaled velocity coordinates of the double-rotor system:
/// `x = √η₁ R² ω₁`, `y = √η₂ ω₂`, `z = v_t`, `w = v_n ≥ 0` with the
/// tangential/normal split taken at the outer wall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaledVelocity {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
}

impl RescaledVelocity {
    pub fn angular_momentum(&self, p: &PhysicalParams) -> f64 {
        p.eta1.sqrt() * self.x + p.eta2_or_nan().sqrt() * self.y + self.z
    }

    pub fn tangential_energy(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn full_energy(&self, p: &PhysicalParams) -> f64 {
        self.x * self.x / (p.r * p.r) + self.y * self.y + self.z * self.z + self.w * self.w
    }

    pub fn integrals(&self, p: &PhysicalParams) -> Integrals {
        Integrals::double(
            self.angular_momentum(p),
            self.tangential_energy(),
            self.full_energy(p),
        )
    }
}

/// Map physical components `(v_t, ω₁, ω₂, v_n)` to rescaled coordinates.
pub fn rescale(vt: f64, omega1: f64, omega2: f64, vn: f64, p: &PhysicalParams) -> RescaledVelocity {
    RescaledVelocity {
        x: p.eta1.sqrt() * p.r * p.r * omega1,
        y: p.eta2_or_nan().sqrt() * omega2,
        z: vt,
        w: vn,
    }
}

/// Inverse of [`rescale`]: returns `(v_t, ω₁, ω₂, v_n)`.
pub fn unrescale(v: &RescaledVelocity, p: &PhysicalParams) -> (f64, f64, f64, f64) {
    (
        v.z,
        v.x / (p.eta1.sqrt() * p.r * p.r),
        v.y / p.eta2_or_nan().sqrt(),
        v.w,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn valid_double_rotor() {
        let p = PhysicalParams::double(0.5, 1.0, 1.0);
        let rep = validate_params(&p, &Integrals::double(0.0, 1.0, 8.0));
        assert!(rep.is_valid(), "{rep:?}");
    }

    #[test]
    fn empty_circle_rejected() {
        let p = PhysicalParams::double(0.5, 1.0, 1.0);
        let rep = validate_params(&p, &Integrals::double(3.0, 1.0, 8.0));
        assert_eq!(rep.violations.len(), 1);
        match &rep.violations[0] {
            Violation::EmptyVelocityCircle { n_sq_over_norm, .. } => {
                assert!((n_sq_over_norm - 3.0).abs() < 1e-15)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn radius_out_of_range() {
        let p = PhysicalParams::double(1.2, 1.0, 1.0);
        let rep = validate_params(&p, &Integrals::double(0.0, 1.0, 8.0));
        assert!(matches!(
            rep.violations[0],
            Violation::RadiusOutOfRange { .. }
        ));
    }

    #[test]
    fn missing_full_energy_named() {
        let p = PhysicalParams::double(0.5, 1.0, 1.0);
        let ints = Integrals {
            n: 0.0,
            e: 1.0,
            ..Default::default()
        };
        let rep = validate_params(&p, &ints);
        assert_eq!(
            rep.violations,
            vec![Violation::MissingField { field: "F".into() }]
        );
        assert!(rep.violations[0].to_string().contains("`F`"));
    }

    #[test]
    fn full_energy_must_exceed_tangential() {
        let p = PhysicalParams::double(0.5, 1.0, 1.0);
        let rep = validate_params(&p, &Integrals::double(0.0, 1.0, 0.9));
        assert!(matches!(
            rep.violations[0],
            Violation::FullEnergyNotAboveTangential { .. }
        ));
    }

    #[test]
    fn near_degenerate_circle_warns() {
        let p = PhysicalParams::double(0.5, 1.0, 1.0);
        let n = 3f64.sqrt() * (1.0 - 1e-9);
        let rep = validate_params(&p, &Integrals::double(n, 1.0, 8.0));
        assert!(rep.is_valid(), "{rep:?}");
        assert!(rep.warnings.iter().any(|w| w.contains("near-degenerate")));
    }

    #[test]
    fn zero_velocity_configuration_rejected() {
        // x = 1, y = z = 0 lies on the circle; pick F so that w = 0 there.
        let (r, eta) = (0.5, 1.0);
        let p = PhysicalParams::double(r, eta, eta);
        let (n, e) = (eta.sqrt(), 1.0);
        let f = 1.0 / (r * r);
        let rep = validate_params(&p, &Integrals::double(n, e, f));
        assert!(
            rep.violations
                .iter()
                .any(|v| matches!(v, Violation::ZeroParticleVelocity { .. })),
            "{rep:?}"
        );
    }

    #[test]
    fn two_particle_requires_normals() {
        let p = PhysicalParams::two_particle(0.5, 1.0);
        let rep = validate_params(
            &p,
            &Integrals {
                n: 0.0,
                e: 1.0,
                ..Default::default()
            },
        );
        assert_eq!(rep.violations.len(), 2);
        let rep = validate_params(&p, &Integrals::two_particle(0.0, 1.0, 10.0, 10.0));
        assert!(rep.is_valid());
        // N²/(2+η) = 4/3 > 1
        let rep = validate_params(&p, &Integrals::two_particle(2.0, 1.0, 10.0, 10.0));
        assert!(matches!(
            rep.violations[0],
            Violation::EmptyVelocityCircle { .. }
        ));
    }

    #[test]
    fn rescale_examples() {
        let p = PhysicalParams::double(0.5, 4.0, 1.0);
        let v = rescale(0.0, 2.0, 0.0, 0.0, &p);
        assert!((v.x - 1.0).abs() < 1e-15);
        let v = rescale(0.0, 0.0, 0.0, 0.0, &p);
        assert_eq!((v.x, v.y, v.z, v.w), (0.0, 0.0, 0.0, 0.0));
        let v = rescale(0.0, 0.0, -3.0, 0.0, &p);
        assert_eq!(v.y, -3.0);
    }

    #[test]
    fn rescale_round_trip_bulk() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_xoshiro::SplitMix64::seed_from_u64(7);
        let mut worst = 0.0f64;
        for _ in 0..100_000 {
            let p = PhysicalParams::double(
                rng.gen_range(0.05..0.95),
                rng.gen_range(0.1..10.0),
                rng.gen_range(0.1..10.0),
            );
            let c: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
            let v = rescale(c[0], c[1], c[2], c[3], &p);
            let (a, b, cc, d) = unrescale(&v, &p);
            for (got, want) in [(a, c[0]), (b, c[1]), (cc, c[2]), (d, c[3])] {
                worst = worst.max((got - want).abs() / want.abs().max(1.0));
            }
        }
        assert!(worst <= 1e-14, "worst round-trip error {worst:e}");
    }

    proptest! {
        #[test]
        fn integrals_recomputed_from_physical_components(
            r in 0.05f64..0.95, e1 in 0.1f64..10.0, e2 in 0.1f64..10.0,
            vt in -3f64..3.0, w1 in -3f64..3.0, w2 in -3f64..3.0, vn in 0.0f64..3.0,
        ) {
            let p = PhysicalParams::double(r, e1, e2);
            let v = rescale(vt, w1, w2, vn, &p);
            let ints = v.integrals(&p);
            let n = vt + e1 * r * r * w1 + e2 * w2;
            let e = vt * vt + e1 * r.powi(4) * w1 * w1 + e2 * w2 * w2;
            let f = vn * vn + vt * vt + e1 * r * r * w1 * w1 + e2 * w2 * w2;
            prop_assert!((ints.n - n).abs() <= 1e-12 * (1.0 + n.abs()));
            prop_assert!((ints.e - e).abs() <= 1e-12 * e.max(1e-300));
            prop_assert!((ints.f.unwrap() - f).abs() <= 1e-12 * f.max(1e-300));
        }
    }
}
