//! Motion of the outer impact point over the base dynamics of the double
//! rotor: the torus map `(s, φ) ↦ (T_O s, φ + α(s))` with return time
//! `τ(s)`, plus diagnostics for its orbits.

use crate::circle::{base_step, compute_u, BaseState, USet, VelocityCircle};
use crate::error::{Error, Result};
use crate::geometry::{beta_hat, chord_length};
use crate::params::{validate_params, Integrals, Mode, PhysicalParams, RescaledVelocity};
use crate::{circle_diff, wrap01};
use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Orbit points closer than this to an endpoint of `U` are nudged forward.
pub const BOUNDARY_NUDGE: f64 = 1e-12;
/// Recurrence tolerance of [`DoubleRotor::detect_period`].
pub const PERIOD_TOL: f64 = 1e-11;

/// The velocity circle of a double-rotor system with its set `U`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DoubleRotor {
    pub params: PhysicalParams,
    pub integrals: Integrals,
    pub circle: VelocityCircle,
    pub u: USet,
}

/// State at an outer impact: velocity coordinate `s`, impact position `phi`
/// in turns with `winding` full turns, and elapsed time `clock`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewState {
    pub s: f64,
    pub phi: f64,
    pub winding: i64,
    pub clock: f64,
}

impl SkewState {
    pub fn new(s: f64, phi: f64) -> Self {
        Self {
            s: wrap01(s),
            phi: wrap01(phi),
            winding: phi.floor() as i64,
            clock: 0.0,
        }
    }

    pub fn lift(&self) -> f64 {
        self.winding as f64 + self.phi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanAlpha {
    /// Trapezoid rule on `n` nodes.
    pub value: f64,
    /// Same rule on `2n` nodes.
    pub refined: f64,
    /// `2∫β̂(s) ds`, which equals the mean by invariance of `s ↦ s₂`.
    pub symmetric: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equidistribution {
    /// Pearson statistic of the `bins × bins` histogram divided by its
    /// degrees of freedom. Near 1 for independent uniform points.
    pub chi2_per_dof: f64,
    /// Largest deviation `|count/n − ab|` over anchored boxes `[0,a)×[0,b)`
    /// with corners on the bin grid.
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitDiagnostics {
    /// Mean fiber increment per step, in turns.
    pub rotation_estimate: f64,
    pub discrepancy: f64,
    pub chi2_per_dof: f64,
    pub period: Option<usize>,
}

/// A small integer relation `p·a + q·b ∈ ℤ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegerRelation {
    pub p: i64,
    pub q: i64,
    pub residual: f64,
}

impl DoubleRotor {
    pub fn new(p: PhysicalParams, ints: Integrals) -> Result<Self> {
        if p.mode != Mode::DoubleRotor {
            return Err(Error::InvalidParams(
                "skew product needs DoubleRotor mode".into(),
            ));
        }
        let report = validate_params(&p, &ints);
        if !report.is_valid() {
            let msg: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
            return Err(Error::InvalidParams(msg.join("; ")));
        }
        for w in &report.warnings {
            warn!("{w}");
        }
        let circle = VelocityCircle::double_rotor(&p, &ints)?;
        let u = compute_u(&circle, &p, &ints);
        Ok(Self {
            params: p,
            integrals: ints,
            circle,
            u,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.circle.gamma_norm
    }

    pub fn is_alternating(&self) -> bool {
        self.u.is_empty()
    }

    /// Velocity at `s` just after an outer bounce, with `w` from the full
    /// energy (clamped at zero where the circle is not realisable).
    pub fn velocity(&self, s: f64) -> RescaledVelocity {
        let [x, y, z] = self.circle.point_at(s);
        let r2 = self.params.r * self.params.r;
        let f = self.integrals.f.unwrap_or(f64::NAN);
        let w = (f - x * x / r2 - y * y - z * z).max(0.0).sqrt();
        RescaledVelocity { x, y, z, w }
    }

    /// Angle at the outer wall between the velocity and the inward normal.
    pub fn beta(&self, s: f64) -> f64 {
        let v = self.velocity(s);
        v.z.atan2(v.w)
    }

    fn speed(&self, s: f64) -> f64 {
        let v = self.velocity(s);
        v.z.hypot(v.w)
    }

    /// Advance along the outer wall of the leg starting at `s`, to the inner
    /// wall (or back to the outer one for `s ∈ U`), in turns.
    pub fn leg_advance(&self, s: f64) -> Result<f64> {
        Ok(beta_hat(self.beta(s), self.params.r)? / TAU)
    }

    /// Fiber increment `α(s)` in turns.
    pub fn alpha(&self, s: f64) -> Result<f64> {
        let beta = self.beta(s);
        if self.u.contains(s) {
            let miss = PI - 2.0 * beta.abs();
            return Ok(beta.signum() * miss / TAU);
        }
        let s2 = self.circle.reflect_second(s);
        let r = self.params.r;
        Ok((beta_hat(beta, r)? + beta_hat(self.beta(s2), r)?) / TAU)
    }

    /// Time `τ(s)` between the outer impact at `s` and the next one.
    pub fn tau(&self, s: f64) -> Result<f64> {
        let beta = self.beta(s);
        if self.u.contains(s) {
            return Ok(2.0 * beta.cos() / self.speed(s));
        }
        let s2 = self.circle.reflect_second(s);
        let r = self.params.r;
        Ok(chord_length(beta, r)? / self.speed(s)
            + chord_length(self.beta(s2), r)? / self.speed(s2))
    }

    /// First return of the base map to the outer sheet.
    pub fn first_return(&self, s: f64) -> f64 {
        if self.u.contains(s) {
            self.circle.reflect_first(s)
        } else {
            wrap01(s + self.gamma())
        }
    }

    pub fn skew_step(&self, st: &SkewState) -> Result<SkewState> {
        let mut s = st.s;
        if !self.u.is_empty() && self.u.boundary_distance(s) < BOUNDARY_NUDGE {
            warn!("s = {s} lies within {BOUNDARY_NUDGE:e} of the boundary of U; nudging forward");
            s = wrap01(s + BOUNDARY_NUDGE);
        }
        let a = self.alpha(s)?;
        let tau = self.tau(s)?;
        let total = st.phi + a;
        let turns = total.floor();
        Ok(SkewState {
            s: self.first_return(s),
            phi: wrap01(total),
            winding: st.winding + turns as i64,
            clock: st.clock + tau,
        })
    }

    pub fn orbit(&self, st0: SkewState, steps: usize) -> Result<Vec<SkewState>> {
        let mut out = Vec::with_capacity(steps + 1);
        out.push(st0);
        let mut st = st0;
        for _ in 0..steps {
            st = self.skew_step(&st)?;
            out.push(st);
        }
        Ok(out)
    }

    /// First `k ≤ max_steps` with `T^k b0 = b0` (same sheet, `s` within
    /// [`PERIOD_TOL`]).
    pub fn detect_period(&self, b0: BaseState, max_steps: usize) -> Result<Option<usize>> {
        let mut b = b0;
        for k in 1..=max_steps {
            b = base_step(b, &self.circle, &self.u)?;
            if b.sheet == b0.sheet && circle_diff(b.s, b0.s).abs() < PERIOD_TOL {
                return Ok(Some(k));
            }
        }
        Ok(None)
    }

    /// Smallest `N` whose `U`-translates cover the circle.
    pub fn cover_bound(&self, max_n: usize) -> Option<usize> {
        self.u.cover_bound(self.gamma(), max_n)
    }

    /// Mean of `α` over the circle by the periodic trapezoid rule.
    pub fn mean_alpha(&self, n_quad: usize) -> Result<MeanAlpha> {
        if !self.is_alternating() {
            return Err(Error::NonAlternating);
        }
        let trap = |n: usize, f: &(dyn Fn(f64) -> Result<f64> + Sync)| -> Result<f64> {
            let vals: Result<Vec<f64>> = (0..n)
                .into_par_iter()
                .map(|i| f(i as f64 / n as f64))
                .collect();
            Ok(vals?.iter().sum::<f64>() / n as f64)
        };
        let alpha = |s: f64| self.alpha(s);
        let leg = |s: f64| self.leg_advance(s);
        Ok(MeanAlpha {
            value: trap(n_quad, &alpha)?,
            refined: trap(2 * n_quad, &alpha)?,
            symmetric: 2.0 * trap(n_quad, &leg)?,
        })
    }

    /// Lowest tangential velocity on the circle.
    pub fn min_tangential(&self) -> f64 {
        let n = 1 << 14;
        let (mut best, mut arg) = (f64::INFINITY, 0.0);
        for i in 0..n {
            let s = i as f64 / n as f64;
            let z = self.circle.point_at(s)[2];
            if z < best {
                (best, arg) = (z, s);
            }
        }
        // golden-section polish around the grid minimum
        let h = 1.0 / n as f64;
        let (mut a, mut b) = (arg - h, arg + h);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..60 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if self.circle.point_at(c)[2] < self.circle.point_at(d)[2] {
                b = d;
            } else {
                a = c;
            }
        }
        best.min(self.circle.point_at(0.5 * (a + b))[2])
    }
}

/// `(F, ᾱ(F))` over a grid of full energies at fixed `(N, E)`, in a regime
/// where the tangential velocity stays positive on the whole circle.
pub fn alpha_monotonicity_scan(
    p: &PhysicalParams,
    n: f64,
    e: f64,
    f_grid: &[f64],
    n_quad: usize,
) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(f_grid.len());
    for &f in f_grid {
        let sys = DoubleRotor::new(*p, Integrals::double(n, e, f))?;
        let min_z = sys.min_tangential();
        if !(min_z > 0.0) {
            return Err(Error::ConventionViolated { min_z });
        }
        out.push((f, sys.mean_alpha(n_quad)?.value));
    }
    Ok(out)
}

/// Histogram uniformity and grid star discrepancy of points on the torus.
pub fn equidistribution(points: &[(f64, f64)], bins: usize) -> Equidistribution {
    let n = points.len() as f64;
    let mut hist = vec![0u64; bins * bins];
    for &(a, b) in points {
        let i = ((wrap01(a) * bins as f64) as usize).min(bins - 1);
        let j = ((wrap01(b) * bins as f64) as usize).min(bins - 1);
        hist[i * bins + j] += 1;
    }
    let expected = n / (bins * bins) as f64;
    let chi2: f64 = hist
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    // cum[i][j] = points with a < i/bins and b < j/bins
    let mut cum = vec![0u64; (bins + 1) * (bins + 1)];
    let w = bins + 1;
    let mut disc: f64 = 0.0;
    for i in 1..=bins {
        for j in 1..=bins {
            cum[i * w + j] =
                hist[(i - 1) * bins + (j - 1)] + cum[(i - 1) * w + j] + cum[i * w + j - 1]
                    - cum[(i - 1) * w + j - 1];
            let area = (i * j) as f64 / (bins * bins) as f64;
            disc = disc.max((cum[i * w + j] as f64 / n - area).abs());
        }
    }
    Equidistribution {
        chi2_per_dof: chi2 / (bins * bins - 1) as f64,
        discrepancy: disc,
    }
}

/// Orbit summary: mean fiber increment and torus uniformity.
pub fn diagnose(orbit: &[SkewState], bins: usize, period: Option<usize>) -> OrbitDiagnostics {
    let steps = (orbit.len().max(2) - 1) as f64;
    let rotation = (orbit[orbit.len() - 1].lift() - orbit[0].lift()) / steps;
    let pts: Vec<(f64, f64)> = orbit.iter().map(|st| (st.s, st.phi)).collect();
    let eq = equidistribution(&pts, bins);
    OrbitDiagnostics {
        rotation_estimate: rotation,
        discrepancy: eq.discrepancy,
        chi2_per_dof: eq.chi2_per_dof,
        period,
    }
}

/// Search `|p|, |q| ≤ bound`, not both zero, for `p·a + q·b` within `tol`
/// of an integer. Returns the relation with the smallest `|p| + |q|`.
pub fn rational_dependence(a: f64, b: f64, bound: i64, tol: f64) -> Option<IntegerRelation> {
    let mut best: Option<IntegerRelation> = None;
    for p in -bound..=bound {
        for q in -bound..=bound {
            if (p == 0 && q == 0) || p < 0 || (p == 0 && q < 0) {
                continue;
            }
            let v = p as f64 * a + q as f64 * b;
            let residual = (v - v.round()).abs();
            if residual < tol {
                let better = best.is_none_or(|r| p.abs() + q.abs() < r.p.abs() + r.q.abs());
                if better {
                    best = Some(IntegerRelation { p, q, residual });
                }
            }
        }
    }
    best
}

/// Largest gap between sorted points of the circle.
pub fn max_gap(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 1.0;
    }
    let mut v: Vec<f64> = values.iter().map(|&x| wrap01(x)).collect();
    v.sort_by(f64::total_cmp);
    let inner = v.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    inner.max(v[0] + 1.0 - v[v.len() - 1])
}

/// Largest deviation of the Birkhoff sums of `τ` from `k·τ̄` along the
/// rotation orbit of `s0`, for `k ≤ steps`. Bounded deviations mean `τ` is
/// a coboundary plus a constant along the orbit.
pub fn ceiling_deviation(sys: &DoubleRotor, s0: f64, steps: usize, mean_tau: f64) -> Result<f64> {
    let mut s = s0;
    let (mut sum, mut worst): (f64, f64) = (0.0, 0.0);
    for k in 1..=steps {
        sum += sys.tau(s)?;
        s = sys.first_return(s);
        worst = worst.max((sum - k as f64 * mean_tau).abs());
    }
    Ok(worst)
}

/// Time average of `g(position on the torus)` over the suspension flow,
/// sampled at outer impacts and weighted by the flight time that follows.
pub fn suspension_time_average(
    sys: &DoubleRotor,
    st0: SkewState,
    steps: usize,
    g: impl Fn(f64, f64) -> f64,
) -> Result<f64> {
    let mut st = st0;
    let (mut acc, mut total) = (0.0, 0.0);
    for _ in 0..steps {
        let tau = sys.tau(st.s)?;
        acc += g(st.s, st.phi) * tau;
        total += tau;
        st = sys.skew_step(&st)?;
    }
    Ok(acc / total)
}
