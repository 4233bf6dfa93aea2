//! Two equal-mass particles sharing one rotating inner wall, observed at the
//! inner collisions of the first particle.
//!
//! The state on that section is `(s, t)`: `s` locates `(v, u, q)` on the
//! velocity circle right after the collision, with `v` and `u` the
//! tangential velocities of the two particles at the inner wall and
//! `q = √η R ω`; `t·τ₂(s)` is the time elapsed since the second particle
//! last hit the inner wall.
//!
//! Between two collisions of the first particle the second one completes
//! some number of round trips. Its period alternates between `τ₂` and `τ₃`
//! because each of its collisions toggles the rotor between the two states
//! of the velocity circle. The parity of that number decides whether the
//! next state is `−s` (even) or `s + γ` (odd).

use crate::circle::VelocityCircle;
use crate::error::{Error, Result};
use crate::geometry::{chord_length, outer_angle_from_inner};
use crate::params::{validate_params, Integrals, Mode, PhysicalParams};
use crate::rng::SampleRng;
use crate::{circle_diff, wrap01};
use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Half-width of the band around the branch boundary that is routed odd.
pub const BRANCH_TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoParticleState {
    pub s: f64,
    pub t: f64,
}

impl TwoParticleState {
    pub fn new(s: f64, t: f64) -> Self {
        Self {
            s: wrap01(s),
            t: wrap01(t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Even,
    Odd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    /// Round-trip time of the first particle.
    pub tau1: f64,
    /// Round-trip time of the second particle in its current phase.
    pub tau2: f64,
    /// Round-trip time of the second particle after its next collision.
    pub tau3: f64,
    pub lambda_hat: f64,
    pub t_hat: f64,
}

/// Inner-wall to inner-wall time for a particle whose velocity at the inner
/// wall splits into `tangential` and `normal > 0`: it flies out to the
/// elastic outer wall and straight back.
pub fn return_time(tangential: f64, normal: f64, r: f64) -> Result<f64> {
    if !(normal > 0.0) {
        return Err(Error::Unreachable(format!(
            "normal speed {normal} at the inner wall"
        )));
    }
    let beta = outer_angle_from_inner(tangential, normal, r);
    Ok(2.0 * chord_length(beta, r)? / tangential.hypot(normal))
}

/// Guaranteed number of odd steps for initial phases within `eps` of ½:
/// `⌊min(ln(2−2ε)/ln(1+3ε), ln(8ε)/ln(1−3ε))⌋ − 2`.
pub fn n_epsilon(eps: f64) -> Result<usize> {
    if !(eps > 0.0 && eps < 0.125) {
        return Err(Error::OutOfRange(format!(
            "eps = {eps} must lie in (0, 1/8)"
        )));
    }
    let a = (2.0 - 2.0 * eps).ln() / (1.0 + 3.0 * eps).ln();
    let b = (8.0 * eps).ln() / (1.0 - 3.0 * eps).ln();
    let n = a.min(b).floor() - 2.0;
    if n < 0.0 {
        return Err(Error::OutOfRange(format!(
            "eps = {eps} gives a negative step count"
        )));
    }
    Ok(n as usize)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoParticleSystem {
    pub params: PhysicalParams,
    pub integrals: Integrals,
    pub circle: VelocityCircle,
}

/// Which of the four closeness conditions on the timing failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WBound {
    THatNearHalf,
    LambdaHatNearHalf,
    PeriodRatioNearOne,
    OddShiftNearZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WBoundFailure {
    pub bound: WBound,
    pub s: f64,
    /// Deviation from the target value.
    pub deviation: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub s0: f64,
    pub t0: f64,
    /// `|t0 − ½| < eps`; samples outside are reported but not judged.
    pub in_initial_set: bool,
    /// Consecutive leading odd steps with `s_k = s0 + kγ`, capped at the
    /// guaranteed count.
    pub survived_steps: usize,
    /// Phase bounds `½(1−3ε)^{k+1} < t_k < ½(1+3ε)^{k+1}` for all guaranteed `k`.
    pub bounds_ok: bool,
    pub first_even_step: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceReport {
    pub eps: f64,
    pub n_epsilon: usize,
    pub samples: Vec<SampleReport>,
}

impl PersistenceReport {
    /// Every sample of the initial set survived all guaranteed steps with
    /// its phase bounds intact.
    pub fn all_survived(&self) -> bool {
        self.samples
            .iter()
            .filter(|r| r.in_initial_set)
            .all(|r| r.survived_steps == self.n_epsilon && r.bounds_ok)
    }
}

/// Result of the automatic search for normal speeds in the persistence regime.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WConstruction {
    pub k_prime: f64,
    pub system: TwoParticleSystem,
}

/// Grid used to verify the timing conditions.
pub const W_GRID: usize = 1 << 14;
/// The conditions must hold with this fraction of `eps` to spare.
pub const W_MARGIN: f64 = 0.1;

impl TwoParticleSystem {
    pub fn new(p: PhysicalParams, ints: Integrals) -> Result<Self> {
        if p.mode != Mode::TwoParticle {
            return Err(Error::InvalidParams(
                "two-particle system needs TwoParticle mode".into(),
            ));
        }
        let report = validate_params(&p, &ints);
        if !report.is_valid() {
            let msg: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
            return Err(Error::InvalidParams(msg.join("; ")));
        }
        let circle = VelocityCircle::two_particle(p.eta1, ints.n, ints.e)?;
        Ok(Self {
            params: p,
            integrals: ints,
            circle,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.circle.gamma_norm
    }

    pub fn vn(&self) -> f64 {
        self.integrals.vn_fixed.unwrap_or(f64::NAN)
    }

    pub fn un(&self) -> f64 {
        self.integrals.un_fixed.unwrap_or(f64::NAN)
    }

    /// `(v, u, q)` at `s`.
    pub fn velocities(&self, s: f64) -> [f64; 3] {
        self.circle.point_at(s)
    }

    pub fn timing(&self, s: f64) -> Result<Timing> {
        let r = self.params.r;
        let [v, u, _] = self.velocities(s);
        let u2 = self.velocities(self.circle.reflect_second(s))[1];
        let tau1 = return_time(v, self.vn(), r)?;
        let tau2 = return_time(u, self.un(), r)?;
        let tau3 = return_time(u2, self.un(), r)?;
        let period = tau2 + tau3;
        Ok(Timing {
            tau1,
            tau2,
            tau3,
            lambda_hat: tau2 / period,
            t_hat: wrap01(tau1 / period),
        })
    }

    /// One return to the section. The second particle's position within its
    /// two-phase cycle at the next collision of the first particle is
    /// `p = {tλ̂ + t̂}`; `p < λ̂` means it is still in the `τ₂` phase.
    pub fn two_step(&self, st: &TwoParticleState) -> Result<(TwoParticleState, Branch)> {
        let tm = self.timing(st.s)?;
        let lam = tm.lambda_hat;
        let pos = wrap01(st.t * lam + tm.t_hat);
        if (pos - lam).abs() < BRANCH_TIE {
            warn!("branch boundary at s = {}, t = {}; routing odd", st.s, st.t);
        }
        if pos < lam - BRANCH_TIE {
            Ok((TwoParticleState::new(-st.s, pos / lam), Branch::Even))
        } else {
            let t = ((pos - lam) / (1.0 - lam)).max(0.0);
            Ok((TwoParticleState::new(st.s + self.gamma(), t), Branch::Odd))
        }
    }

    /// The map with the odd-branch phase update
    /// `t' = (τ₂/τ₃) t + t̂/(1−λ̂)` and the branch chosen by comparing the
    /// unreduced sum `tλ̂ + t̂` with `λ̂`. It differs from [`Self::two_step`]
    /// by `τ₂/τ₃` in the odd phase and kept for comparison only.
    pub fn two_step_as_printed(&self, st: &TwoParticleState) -> Result<(TwoParticleState, Branch)> {
        let tm = self.timing(st.s)?;
        let lam = tm.lambda_hat;
        if st.t * lam + tm.t_hat < lam - BRANCH_TIE {
            Ok((
                TwoParticleState::new(-st.s, st.t + tm.t_hat / lam),
                Branch::Even,
            ))
        } else {
            let t = tm.tau2 / tm.tau3 * st.t + tm.t_hat / (1.0 - lam);
            Ok((TwoParticleState::new(st.s + self.gamma(), t), Branch::Odd))
        }
    }

    /// Check `t̂, λ̂ ∈ (½−ε, ½+ε)`, `τ₂/τ₃ ∈ (1−ε, 1+ε)` and
    /// `dist(t̂/(1−λ̂), ℤ) < ε` on a uniform grid, each with `margin·ε` to
    /// spare. Returns the first failure.
    pub fn check_w_bounds(
        &self,
        eps: f64,
        margin: f64,
        grid: usize,
    ) -> Result<Option<WBoundFailure>> {
        let limit = eps * (1.0 - margin);
        let fails: Vec<Option<WBoundFailure>> = (0..grid)
            .into_par_iter()
            .map(|i| {
                let s = i as f64 / grid as f64;
                let tm = self.timing(s)?;
                let checks = [
                    (WBound::THatNearHalf, (tm.t_hat - 0.5).abs()),
                    (WBound::LambdaHatNearHalf, (tm.lambda_hat - 0.5).abs()),
                    (WBound::PeriodRatioNearOne, (tm.tau2 / tm.tau3 - 1.0).abs()),
                    (
                        WBound::OddShiftNearZero,
                        circle_diff(tm.t_hat / (1.0 - tm.lambda_hat), 0.0).abs(),
                    ),
                ];
                Ok(checks
                    .iter()
                    .find(|c| !(c.1 < limit))
                    .map(|&(bound, deviation)| WBoundFailure {
                        bound,
                        s,
                        deviation,
                        limit,
                    }))
            })
            .collect::<Result<_>>()?;
        Ok(fails.into_iter().flatten().next())
    }

    /// Persistence run from explicit initial states instead of sampled ones.
    pub fn persistence_run(&self, eps: f64, initial: &[(f64, f64)]) -> Result<PersistenceReport> {
        let n_eps = n_epsilon(eps)?;
        let gamma = self.gamma();
        let samples = initial
            .par_iter()
            .map(|&(s0, t0)| -> Result<SampleReport> {
                let mut st = TwoParticleState::new(s0, t0);
                let mut survived = 0;
                let mut alive = true;
                let mut bounds_ok = true;
                let mut first_even = None;
                for k in 0..n_eps {
                    let lo = 0.5 * (1.0 - 3.0 * eps).powi(k as i32 + 1);
                    let hi = 0.5 * (1.0 + 3.0 * eps).powi(k as i32 + 1);
                    if !(lo < st.t && st.t < hi) {
                        bounds_ok = false;
                    }
                    let on_rotation = circle_diff(st.s, s0 + k as f64 * gamma).abs() < 1e-10;
                    let (next, branch) = self.two_step(&st)?;
                    if branch == Branch::Even && first_even.is_none() {
                        first_even = Some(k);
                    }
                    if alive && on_rotation && branch == Branch::Odd {
                        survived += 1;
                    } else {
                        alive = false;
                    }
                    st = next;
                }
                Ok(SampleReport {
                    s0,
                    t0,
                    in_initial_set: (t0 - 0.5).abs() < eps,
                    survived_steps: survived,
                    bounds_ok,
                    first_even_step: first_even,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PersistenceReport {
            eps,
            n_epsilon: n_eps,
            samples,
        })
    }

    /// Persistence run on `n` samples drawn from the initial set: `s0`
    /// uniform, `t0` uniform in `(½−ε, ½+ε)`, drawn in that order.
    pub fn persistence_experiment(
        &self,
        eps: f64,
        n: usize,
        rng: &mut SampleRng,
    ) -> Result<PersistenceReport> {
        let initial: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.uniform(), rng.uniform_in(0.5 - eps, 0.5 + eps)))
            .collect();
        self.persistence_run(eps, &initial)
    }
}

/// Search normal speeds `v_n = K'`, `u_n = K' + ε/2` with `K'` doubling
/// from 1 until the timing conditions hold on [`W_GRID`] points with
/// [`W_MARGIN`] to spare.
pub fn construct_w(r: f64, eta: f64, n: f64, e: f64, eps: f64) -> Result<WConstruction> {
    n_epsilon(eps)?;
    let p = PhysicalParams::two_particle(r, eta);
    let mut k = 1.0;
    let mut last = None;
    for _ in 0..40 {
        let sys = TwoParticleSystem::new(p, Integrals::two_particle(n, e, k, k + eps / 2.0))?;
        match sys.check_w_bounds(eps, W_MARGIN, W_GRID)? {
            None => {
                return Ok(WConstruction {
                    k_prime: k,
                    system: sys,
                })
            }
            Some(f) => last = Some(f),
        }
        k *= 2.0;
    }
    let f = last.expect("loop runs at least once");
    Err(Error::PreconditionUnmet(format!(
        "timing bound {:?} fails at s = {} (deviation {:e}, limit {:e}) for every K' up to {k:e}",
        f.bound, f.s, f.deviation, f.limit
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(vn: f64, un: f64) -> TwoParticleSystem {
        TwoParticleSystem::new(
            PhysicalParams::two_particle(0.5, 1.0),
            Integrals::two_particle(0.5, 1.0, vn, un),
        )
        .unwrap()
    }

    #[test]
    fn return_time_values() {
        assert!((return_time(0.0, 1.0, 0.5).unwrap() - 1.0).abs() < 1e-15);
        let a = return_time(0.3, 0.8, 0.4).unwrap();
        let b = return_time(0.6, 1.6, 0.4).unwrap();
        assert!((a - 2.0 * b).abs() < 1e-15);
        assert!(return_time(0.3, 0.0, 0.4).is_err());
    }

    #[test]
    fn n_epsilon_values() {
        assert_eq!(n_epsilon(0.01).unwrap(), 21);
        let mut prev = usize::MAX;
        for i in 1..=50 {
            let n = n_epsilon(i as f64 * 0.001).unwrap();
            assert!(n <= prev);
            prev = n;
        }
        assert!(matches!(n_epsilon(0.2), Err(Error::OutOfRange(_))));
        assert!(n_epsilon(0.0).is_err());
    }

    #[test]
    fn gamma_matches_closed_form() {
        for eta in [0.3, 1.0, 2.5, 7.0] {
            for (n, e) in [(0.0, 1.0), (0.5, 2.0), (-1.0, 3.0)] {
                let s = TwoParticleSystem::new(
                    PhysicalParams::two_particle(0.5, eta),
                    Integrals::two_particle(n, e, 1.0, 1.0),
                )
                .unwrap();
                let c = (std::f64::consts::PI * s.gamma()).cos();
                assert!((c - 1.0 / (1.0 + eta)).abs() < 1e-12);
                assert!((s.circle.measured_cos_half_gamma() - c).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn symmetric_point_has_balanced_phases() {
        let sy = sys(2.0, 2.0);
        let s = wrap01(-sy.gamma() / 2.0);
        assert!((sy.timing(s).unwrap().lambda_hat - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fractional_part_wraps() {
        // the first particle slow enough that τ₁ just exceeds τ₂ + τ₃
        let sy = sys(1.0, 2.0);
        let tm = sy.timing(0.3).unwrap();
        let ratio = tm.tau1 / (tm.tau2 + tm.tau3);
        assert!((tm.t_hat - ratio.fract()).abs() < 1e-15);
        assert!((0.0..1.0).contains(&tm.t_hat) && (0.0..1.0).contains(&tm.lambda_hat));
    }

    #[test]
    fn branches_move_s_as_reflections() {
        let sy = sys(3.0, 2.2);
        for i in 0..1000 {
            let st = TwoParticleState::new(i as f64 / 1000.0, (i as f64 * 0.618).fract());
            let (n, b) = sy.two_step(&st).unwrap();
            let want = match b {
                Branch::Even => wrap01(-st.s),
                Branch::Odd => wrap01(st.s + sy.gamma()),
            };
            assert!(circle_diff(n.s, want).abs() < 1e-15);
        }
    }

    /// Elapsed-time form: after the step, `t'·τ₂(s')` equals the time since
    /// the second particle's last collision, computed by walking its
    /// collision times forward from `−t·τ₂`.
    #[test]
    fn phase_update_matches_collision_walk() {
        let sy = sys(3.0, 2.2);
        for i in 0..10_000 {
            let st =
                TwoParticleState::new((i as f64 * 0.7548).fract(), (i as f64 * 0.5698).fract());
            let tm = sy.timing(st.s).unwrap();
            let mut last = -st.t * tm.tau2;
            let mut next = last + tm.tau2;
            let mut hits = 0;
            while next <= tm.tau1 {
                last = next;
                next += if hits % 2 == 0 { tm.tau3 } else { tm.tau2 };
                hits += 1;
            }
            let (n, b) = sy.two_step(&st).unwrap();
            assert_eq!(b == Branch::Odd, hits % 2 == 1, "parity at {st:?}");
            let elapsed = tm.tau1 - last;
            let tau2_new = sy.timing(n.s).unwrap().tau2;
            let want = elapsed / tau2_new;
            assert!((n.t - want).abs() < 1e-9, "{} vs {}", n.t, want);
        }
    }

    /// The printed odd update is `t' = (tτ₂ + t̂(τ₂+τ₃))/τ₂(s')`, which
    /// exceeds the elapsed-time value by `τ₂/τ₃` modulo 1.
    #[test]
    fn printed_form_identities() {
        let sy = sys(3.0, 2.2);
        let mut odd = 0;
        for i in 0..10_000 {
            let st =
                TwoParticleState::new((i as f64 * 0.7548).fract(), (i as f64 * 0.5698).fract());
            let tm = sy.timing(st.s).unwrap();
            let (np, bp) = sy.two_step_as_printed(&st).unwrap();
            let tau2_new = sy.timing(np.s).unwrap().tau2;
            let unified = (st.t * tm.tau2 + tm.t_hat * (tm.tau2 + tm.tau3)) / tau2_new;
            assert!(circle_diff(np.t, unified).abs() < 1e-9);
            if bp == Branch::Even {
                assert!((tau2_new - tm.tau2).abs() < 1e-12 * tm.tau2);
            } else {
                odd += 1;
                assert!((tau2_new - tm.tau3).abs() < 1e-12 * tm.tau3);
                let (ne, be) = sy.two_step(&st).unwrap();
                if be == Branch::Odd {
                    assert!(circle_diff(np.t - ne.t, tm.tau2 / tm.tau3).abs() < 1e-9);
                }
            }
        }
        assert!(odd > 0);
    }

    #[test]
    fn persistence_in_constructed_regime() {
        let w = construct_w(0.5, 1.0, 0.5, 1.0, 0.01).unwrap();
        assert!(w.k_prime > 1.0);
        let mut rng = SampleRng::new(5);
        let rep = w
            .system
            .persistence_experiment(0.01, 100, &mut rng)
            .unwrap();
        assert_eq!(rep.n_epsilon, 21);
        assert!(
            rep.all_survived(),
            "{:?}",
            rep.samples.iter().find(|r| r.survived_steps < 21)
        );
        let out = w.system.persistence_run(0.01, &[(0.2, 0.95)]).unwrap();
        assert!(!out.samples[0].in_initial_set);
        assert!(out.all_survived());
    }

    #[test]
    fn w_construction_reports_failing_bound() {
        let sy = sys(1.0, 1.005);
        let f = sy.check_w_bounds(0.01, W_MARGIN, 256).unwrap().unwrap();
        assert!(f.deviation >= f.limit);
    }

    #[test]
    fn conservation_along_reduced_orbit() {
        let sy = sys(3.0, 2.2);
        let mut st = TwoParticleState::new(0.1, 0.4);
        let eta = sy.params.eta1;
        for _ in 0..1000 {
            let [v, u, q] = sy.velocities(st.s);
            assert!((v * v + u * u + q * q - 1.0).abs() < 1e-12);
            assert!((v + u + eta.sqrt() * q - 0.5).abs() < 1e-12);
            st = sy.two_step(&st).unwrap().0;
        }
    }
}
