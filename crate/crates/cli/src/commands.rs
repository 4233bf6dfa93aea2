//! Experiment drivers behind the command-line verbs. Each returns the paths
//! it wrote, in a fixed order.

use crate::config::{LoadedConfig, RunMode};
use crate::error::{io_err, CliResult};
use crate::output::{csv_writer, fmt_f64, write_json};
use rayon::prelude::*;
use rotor_annulus::circle::{
    classify_value, compute_u, gamma_closed_form, Arc, GammaClass, GammaKind,
};
use rotor_annulus::oracle::{
    conserved_drift, double_rotor_annulus, double_rotor_state, extract_outer_impacts,
    outer_impact_s, reversibility_error, two_particle_annulus, two_particle_sections,
    two_particle_state, Annulus, CartesianState, Conserved, Particle, SectionTracker, Simulator,
    Wall, DRIFT_LIMIT,
};
use rotor_annulus::params::validate_params;
use rotor_annulus::rng::SampleRng;
use rotor_annulus::single::{
    cycle_from_integrals, fiber_rotation_angle, single_step, Phase, SingleRotorState,
};
use rotor_annulus::skew::{diagnose, max_gap, rational_dependence, IntegerRelation, MeanAlpha};
use rotor_annulus::two::{
    construct_w, n_epsilon, Branch, PersistenceReport, TwoParticleState, W_GRID, W_MARGIN,
};
use rotor_annulus::{
    circle_diff, BaseState, DoubleRotor, Error, Integrals, Mode, PhysicalParams, Sheet, SkewState,
    TwoParticleSystem, VelocityCircle,
};
use serde::Serialize;
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

pub const DEFAULT_STEPS: usize = 10_000;
pub const DEFAULT_BINS: usize = 50;
pub const DEFAULT_EPS: f64 = 0.01;
pub const DEFAULT_SAMPLES: usize = 100;
pub const DEFAULT_DEPTH: usize = 40;
pub const DEFAULT_MAX_PERIOD: usize = 1000;
pub const DEFAULT_THETA2: f64 = 2.0;
pub const MAX_SWEEP_CELLS: usize = 1_000_000;
/// Outer impacts compared against the simulator by `--oracle-check`.
pub const ORACLE_CHECK_IMPACTS: usize = 10_000;
/// Quadrature nodes for the mean fiber rotation.
pub const MEAN_ALPHA_NODES: usize = 1 << 14;
/// Events between conservation checks in `oracle`.
const DRIFT_CHECK_EVERY: usize = 1024;

/// Command-line overrides. Each takes precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub steps: Option<usize>,
    pub oracle_check: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verb {
    Base,
    Single,
    Two,
    Oracle,
    Classify,
    Sweep,
    Validate,
}

pub fn run(verb: Verb, cfg: &LoadedConfig, opts: &Options) -> CliResult<Vec<PathBuf>> {
    match verb {
        Verb::Base => cmd_base(cfg, opts),
        Verb::Single => cmd_single(cfg, opts),
        Verb::Two => cmd_two(cfg, opts),
        Verb::Oracle => cmd_oracle(cfg, opts),
        Verb::Classify => cmd_classify(cfg, opts),
        Verb::Sweep => cmd_sweep(cfg, opts),
        Verb::Validate => cmd_validate(cfg).map(|_| Vec::new()),
    }
}

struct Ctx {
    out: PathBuf,
    seed: u64,
    steps: usize,
    depth: usize,
    bins: usize,
    oracle_check: bool,
}

impl Ctx {
    fn new(cfg: &LoadedConfig, opts: &Options) -> CliResult<Self> {
        let c = &cfg.config;
        let depth = c.depth.unwrap_or(DEFAULT_DEPTH);
        if !(1..=60).contains(&depth) {
            return Err(cfg.error_at("depth", format!("depth must lie in 1..=60, got {depth}")));
        }
        let bins = c.bins.unwrap_or(DEFAULT_BINS);
        if bins == 0 {
            return Err(cfg.error_at("bins", "bins must be positive"));
        }
        let out = opts
            .out
            .clone()
            .or_else(|| c.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        std::fs::create_dir_all(&out).map_err(io_err(&out))?;
        Ok(Self {
            out,
            seed: opts.seed.or(c.seed).unwrap_or(0),
            steps: opts.steps.or(c.steps).unwrap_or(DEFAULT_STEPS),
            depth,
            bins,
            oracle_check: opts.oracle_check,
        })
    }

    fn file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn require_mode(cfg: &LoadedConfig, p: &PhysicalParams, modes: &[Mode]) -> CliResult<()> {
    if modes.contains(&p.mode) {
        Ok(())
    } else {
        Err(cfg.error_at(
            "params",
            format!("params.mode {:?} is not one of {modes:?}", p.mode),
        ))
    }
}

// ---------------------------------------------------------------- base

#[derive(Serialize)]
struct USummary<'a> {
    empty: bool,
    full: bool,
    measure: f64,
    arcs: &'a [Arc],
}

#[derive(Serialize)]
struct CircleSummary<'a> {
    params: &'a PhysicalParams,
    integrals: &'a Integrals,
    center: [f64; 3],
    radius: f64,
    gamma_norm: f64,
    gamma_closed_form: f64,
    cos_half_gamma_measured: f64,
    cos_half_gamma_closed_form: f64,
    classification: GammaClass,
    alternating: bool,
    u: USummary<'a>,
    /// Translates of `U` needed to cover the circle, when `U` is nonempty.
    cover_bound: Option<usize>,
}

#[derive(Serialize)]
struct OracleCheck {
    impacts_compared: usize,
    events: usize,
    max_ds: f64,
    max_dphi: f64,
    max_dtau: f64,
}

#[derive(Serialize)]
struct BaseDiagnostics {
    seed: u64,
    s0: f64,
    phi0: f64,
    steps: usize,
    /// Base-map period of `(s0, O)` found within `2·steps`, if any.
    period: Option<usize>,
    rotation_estimate: f64,
    discrepancy: f64,
    chi2_per_dof: f64,
    bins: usize,
    /// Largest gap left by the visited velocity coordinates.
    max_gap: f64,
    mean_alpha: Option<MeanAlpha>,
    /// Small integer relation between `γ` and the mean rotation, if found.
    integer_relation: Option<IntegerRelation>,
    oracle_check: Option<OracleCheck>,
}

pub fn cmd_base(cfg: &LoadedConfig, opts: &Options) -> CliResult<Vec<PathBuf>> {
    cfg.check_mode(&[RunMode::DoubleRotor], "base")?;
    let (p, ints) = cfg.validated(Mode::DoubleRotor)?;
    let ctx = Ctx::new(cfg, opts)?;
    let sys = DoubleRotor::new(p, ints)?;
    let mut rng = SampleRng::new(ctx.seed);
    let init = cfg.config.initial;
    let s0 = init.s.unwrap_or_else(|| rng.uniform());
    let phi0 = init.phi.unwrap_or_else(|| rng.uniform());

    let summary = CircleSummary {
        params: &p,
        integrals: &ints,
        center: sys.circle.center,
        radius: sys.circle.radius,
        gamma_norm: sys.gamma(),
        gamma_closed_form: gamma_closed_form(&p),
        cos_half_gamma_measured: sys.circle.measured_cos_half_gamma(),
        cos_half_gamma_closed_form: p.cos_half_gamma(),
        classification: classify_value(sys.gamma(), ctx.depth)?,
        alternating: sys.is_alternating(),
        u: USummary {
            empty: sys.u.is_empty(),
            full: sys.u.full,
            measure: sys.u.measure(),
            arcs: &sys.u.arcs,
        },
        cover_bound: if sys.u.is_empty() {
            None
        } else {
            sys.cover_bound(1 << 20)
        },
    };
    let mut files = vec![write_json(&ctx.file("circle.json"), &summary)?];

    let orbit = sys.orbit(SkewState::new(s0, phi0), ctx.steps)?;
    let path = ctx.file("orbit.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["step", "s", "phi", "winding", "phi_lift", "time"])?;
    for (k, st) in orbit.iter().enumerate() {
        w.write_record([
            k.to_string(),
            fmt_f64(st.s),
            fmt_f64(st.phi),
            st.winding.to_string(),
            fmt_f64(st.lift()),
            fmt_f64(st.clock),
        ])?;
    }
    w.flush().map_err(io_err(&path))?;
    files.push(path);

    let period = sys.detect_period(BaseState::new(s0, Sheet::Outer), 2 * ctx.steps)?;
    let d = diagnose(&orbit, ctx.bins, period);
    let mean_alpha = if sys.is_alternating() {
        Some(sys.mean_alpha(MEAN_ALPHA_NODES)?)
    } else {
        None
    };
    let integer_relation = mean_alpha
        .as_ref()
        .and_then(|m| rational_dependence(sys.gamma(), m.value, 50, 1e-9));
    let s_values: Vec<f64> = orbit.iter().map(|st| st.s).collect();
    let oracle_check = if ctx.oracle_check {
        Some(base_oracle_check(&sys, &orbit)?)
    } else {
        None
    };
    let diag = BaseDiagnostics {
        seed: ctx.seed,
        s0,
        phi0,
        steps: ctx.steps,
        period: d.period,
        rotation_estimate: d.rotation_estimate,
        discrepancy: d.discrepancy,
        chi2_per_dof: d.chi2_per_dof,
        bins: ctx.bins,
        max_gap: max_gap(&s_values),
        mean_alpha,
        integer_relation,
        oracle_check,
    };
    files.push(write_json(&ctx.file("diagnostics.json"), &diag)?);
    Ok(files)
}

fn base_oracle_check(sys: &DoubleRotor, orbit: &[SkewState]) -> CliResult<OracleCheck> {
    let wanted = (orbit.len() - 1).min(ORACLE_CHECK_IMPACTS);
    let (s0, phi0) = (orbit[0].s, orbit[0].phi);
    let mut sim = Simulator::new(
        double_rotor_annulus(sys),
        &double_rotor_state(sys, s0, phi0),
    )?;
    let mut log = Vec::new();
    let mut outer = 0;
    while outer < wanted {
        let ev = sim.step()?;
        if ev.wall == Wall::Outer {
            outer += 1;
        }
        log.push(ev);
    }
    let impacts = extract_outer_impacts(&log, &sys.params, &sys.circle, phi0)?;
    let (mut ds, mut dphi, mut dtau): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut prev_time = 0.0;
    for (k, imp) in impacts.iter().enumerate() {
        let (a, b) = (&orbit[k], &orbit[k + 1]);
        ds = ds.max(circle_diff(imp.s, b.s).abs());
        dphi = dphi.max((imp.phi_lift - b.lift()).abs());
        dtau = dtau.max(((imp.time - prev_time) - (b.clock - a.clock)).abs());
        prev_time = imp.time;
    }
    Ok(OracleCheck {
        impacts_compared: impacts.len(),
        events: log.len(),
        max_ds: ds,
        max_dphi: dphi,
        max_dtau: dtau,
    })
}

// ---------------------------------------------------------------- single

#[derive(Serialize)]
struct SingleSummary {
    params: PhysicalParams,
    integrals: Integrals,
    seed: u64,
    steps: usize,
    /// Impact-angle advance per round trip, radians.
    fiber_rotation_angle: f64,
    /// The two tangential velocities at the inner wall.
    cycle: (f64, f64),
    /// Largest change of `(v_t, ω)` across two inner collisions.
    max_period2_error: f64,
}

/// Single-rotor start from the config: explicit outer split or the
/// period-2 cycle fixed by the integrals. `phi` is read in turns.
fn single_start(
    cfg: &LoadedConfig,
    p: &PhysicalParams,
    rng: &mut SampleRng,
) -> CliResult<SingleRotorState> {
    let init = cfg.config.initial;
    let st = match (init.vt, init.vn, init.omega) {
        (Some(vt), Some(vn), Some(omega)) => {
            let phi = init.phi.unwrap_or_else(|| rng.uniform()) * TAU;
            SingleRotorState::from_outer(vt, vn, omega, phi, p)?
        }
        (None, None, None) => {
            let ints = cfg.integrals()?;
            cfg.check_params(p, &ints)?;
            let (vt, _) = cycle_from_integrals(ints.n, ints.e, p)?;
            let omega = (ints.n - vt) / (p.eta1 * p.r);
            let phi = init.phi.unwrap_or_else(|| rng.uniform()) * TAU;
            let vn = ints.vn_fixed.expect("validated");
            SingleRotorState::new(vn, vt, omega, phi, Phase::Inner)?
        }
        _ => return Err(cfg.error_at("initial", "give all of vt, vn, omega or none of them")),
    };
    cfg.check_params(p, &st.integrals(p))?;
    Ok(st)
}

pub fn cmd_single(cfg: &LoadedConfig, opts: &Options) -> CliResult<Vec<PathBuf>> {
    cfg.check_mode(&[RunMode::SingleRotor], "single")?;
    let p = cfg.params()?;
    require_mode(cfg, &p, &[Mode::SingleRotor])?;
    let ctx = Ctx::new(cfg, opts)?;
    let mut rng = SampleRng::new(ctx.seed);
    let st0 = single_start(cfg, &p, &mut rng)?;
    let ints = st0.integrals(&p);

    let path = ctx.file("orbit.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["step", "wall", "phi", "phi_lift", "vt", "omega"])?;
    let record =
        |w: &mut csv::Writer<std::fs::File>, k: usize, wall: &str, st: &SingleRotorState| {
            w.write_record([
                k.to_string(),
                wall.into(),
                fmt_f64(st.phi),
                fmt_f64(st.lift()),
                fmt_f64(st.vt),
                fmt_f64(st.omega),
            ])
        };
    record(&mut w, 0, "O", &st0)?;
    let mut history = vec![st0];
    for k in 1..=ctx.steps {
        let prev = history[k - 1];
        let wall = if prev.phase == Phase::Inner { "I" } else { "O" };
        let st = single_step(&prev, &p);
        record(&mut w, k, wall, &st)?;
        history.push(st);
    }
    w.flush().map_err(io_err(&path))?;

    // two inner collisions are four steps apart
    let max_period2_error = history
        .windows(5)
        .map(|h| {
            (h[4].vt - h[0].vt)
                .abs()
                .max((h[4].omega - h[0].omega).abs())
        })
        .fold(0.0, f64::max);
    let (other, _) = rotor_annulus::rotor::inner_collision_single(st0.vt, st0.omega, &p);
    let summary = SingleSummary {
        params: p,
        integrals: ints,
        seed: ctx.seed,
        steps: ctx.steps,
        fiber_rotation_angle: fiber_rotation_angle(&st0, &p)?,
        cycle: (st0.vt, other),
        max_period2_error,
    };
    Ok(vec![path, write_json(&ctx.file("summary.json"), &summary)?])
}

// ---------------------------------------------------------------- two

#[derive(Serialize)]
struct TwoOracleCheck {
    steps_compared: usize,
    max_ds: f64,
    max_dt: f64,
}

#[derive(Serialize)]
struct TwoReport {
    seed: u64,
    /// Normal speed of the first particle found by the automatic search.
    k_prime: Option<f64>,
    vn: f64,
    un: f64,
    gamma_norm: f64,
    samples_in_initial_set: usize,
    survival_fraction: f64,
    all_survived: bool,
    #[serde(flatten)]
    persistence: PersistenceReport,
    oracle_check: Option<TwoOracleCheck>,
}

pub fn cmd_two(cfg: &LoadedConfig, opts: &Options) -> CliResult<Vec<PathBuf>> {
    cfg.check_mode(&[RunMode::TwoParticle], "two")?;
    let p = cfg.params()?;
    require_mode(cfg, &p, &[Mode::TwoParticle])?;
    let eps = cfg.config.eps.unwrap_or(DEFAULT_EPS);
    let n_eps = n_epsilon(eps).map_err(|e| cfg.error_at("eps", e))?;
    let ints = cfg.integrals()?;
    let (sys, k_prime) = match (ints.vn_fixed, ints.un_fixed) {
        (Some(_), Some(_)) => {
            cfg.check_params(&p, &ints)?;
            let sys = TwoParticleSystem::new(p, ints)?;
            if let Some(f) = sys.check_w_bounds(eps, W_MARGIN, W_GRID)? {
                return Err(Error::PreconditionUnmet(format!(
                    "timing bound {:?} fails at s = {} (deviation {:e}, limit {:e})",
                    f.bound, f.s, f.deviation, f.limit
                ))
                .into());
            }
            (sys, None)
        }
        (None, None) => {
            cfg.check_params(&p, &Integrals::two_particle(ints.n, ints.e, 1.0, 1.0))?;
            let w = construct_w(p.r, p.eta1, ints.n, ints.e, eps)?;
            (w.system, Some(w.k_prime))
        }
        _ => return Err(cfg.error_at("integrals", "give both vn_fixed and un_fixed or neither")),
    };
    let ctx = Ctx::new(cfg, opts)?;
    let mut rng = SampleRng::new(ctx.seed);
    let samples = cfg.config.samples.unwrap_or(DEFAULT_SAMPLES);
    let persistence = sys.persistence_experiment(eps, samples, &mut rng)?;
    let judged: Vec<_> = persistence
        .samples
        .iter()
        .filter(|r| r.in_initial_set)
        .collect();
    let survivors = judged
        .iter()
        .filter(|r| r.survived_steps == n_eps && r.bounds_ok)
        .count();
    let mut files = Vec::new();

    let oracle_check = match (ctx.oracle_check, persistence.samples.first()) {
        (true, Some(first)) => {
            let theta2 = cfg.config.initial.theta2.unwrap_or(DEFAULT_THETA2);
            let (check, path) = two_oracle_trace(
                &sys,
                first.s0,
                first.t0,
                theta2,
                n_eps,
                &ctx.file("oracle_trace.csv"),
            )?;
            files.push(path);
            Some(check)
        }
        _ => None,
    };
    let report = TwoReport {
        seed: ctx.seed,
        k_prime,
        vn: sys.vn(),
        un: sys.un(),
        gamma_norm: sys.gamma(),
        samples_in_initial_set: judged.len(),
        survival_fraction: if judged.is_empty() {
            f64::NAN
        } else {
            survivors as f64 / judged.len() as f64
        },
        all_survived: persistence.all_survived(),
        persistence,
        oracle_check,
    };
    files.insert(0, write_json(&ctx.file("two_report.json"), &report)?);
    Ok(files)
}

fn two_oracle_trace(
    sys: &TwoParticleSystem,
    s0: f64,
    t0: f64,
    theta2: f64,
    steps: usize,
    path: &Path,
) -> CliResult<(TwoOracleCheck, PathBuf)> {
    let pts = two_particle_sections(sys, s0, t0, theta2, steps, 1000 * (steps + 1))?;
    let mut w = csv_writer(path)?;
    w.write_record([
        "step",
        "s_reduced",
        "t_reduced",
        "branch",
        "s_oracle",
        "t_oracle",
        "u_hits",
    ])?;
    let mut st = TwoParticleState::new(s0, t0);
    let (mut ds, mut dt): (f64, f64) = (0.0, 0.0);
    for (k, pt) in pts.iter().enumerate() {
        let (next, branch) = sys.two_step(&st)?;
        st = next;
        ds = ds.max(circle_diff(st.s, pt.s).abs());
        dt = dt.max(circle_diff(st.t, pt.t).abs());
        let b = if branch == Branch::Odd { "odd" } else { "even" };
        w.write_record([
            (k + 1).to_string(),
            fmt_f64(st.s),
            fmt_f64(st.t),
            b.into(),
            fmt_f64(pt.s),
            fmt_f64(pt.t),
            pt.u_hits.to_string(),
        ])?;
    }
    w.flush().map_err(io_err(path))?;
    Ok((
        TwoOracleCheck {
            steps_compared: pts.len(),
            max_ds: ds,
            max_dt: dt,
        },
        path.to_path_buf(),
    ))
}

// ---------------------------------------------------------------- oracle

#[derive(Serialize)]
struct OracleSummary {
    mode: Mode,
    seed: u64,
    events: usize,
    final_clock: f64,
    start: CartesianState,
    conserved_start: Conserved,
    conserved_end: Conserved,
    /// Largest relative drift seen at any checkpoint.
    max_drift: f64,
    reversibility_error: Option<f64>,
}

/// Reduced system behind an oracle run, used to label events with their
/// circle coordinate.
enum Reduced {
    Double(DoubleRotor),
    /// System and the time the second particle last left the inner wall.
    Two(TwoParticleSystem, f64),
    Single,
}

/// Cartesian start and wall set for the configured system.
fn oracle_start(
    cfg: &LoadedConfig,
    p: &PhysicalParams,
    rng: &mut SampleRng,
) -> CliResult<(Annulus, CartesianState, Reduced)> {
    let init = cfg.config.initial;
    match p.mode {
        Mode::DoubleRotor => {
            let (p, ints) = cfg.validated(Mode::DoubleRotor)?;
            let sys = DoubleRotor::new(p, ints)?;
            let s = init.s.unwrap_or_else(|| rng.uniform());
            let phi = init.phi.unwrap_or_else(|| rng.uniform());
            Ok((
                double_rotor_annulus(&sys),
                double_rotor_state(&sys, s, phi),
                Reduced::Double(sys),
            ))
        }
        Mode::TwoParticle => {
            let (p, ints) = cfg.validated(Mode::TwoParticle)?;
            let sys = TwoParticleSystem::new(p, ints)?;
            let s = init.s.unwrap_or_else(|| rng.uniform());
            let t = init.t.unwrap_or_else(|| rng.uniform());
            let theta2 = init.theta2.unwrap_or(DEFAULT_THETA2);
            let state = two_particle_state(&sys, s, t, theta2)?;
            let last_u_time = -t * sys.timing(s)?.tau2;
            Ok((
                two_particle_annulus(&sys),
                state,
                Reduced::Two(sys, last_u_time),
            ))
        }
        Mode::SingleRotor => {
            let st = single_start(cfg, p, rng)?;
            // outgoing leg from the outer wall, split at radius 1
            let vt_out = p.r * st.vt;
            let vn_out = (st.vn * st.vn + st.vt * st.vt - vt_out * vt_out).sqrt();
            let (c, s) = (st.phi.cos(), st.phi.sin());
            let particle = Particle {
                pos: [c, s],
                vel: [-vn_out * c - vt_out * s, -vn_out * s + vt_out * c],
            };
            let state = CartesianState {
                particles: vec![particle],
                omega_inner: st.omega,
                omega_outer: 0.0,
                clock: 0.0,
            };
            Ok((
                Annulus {
                    r: p.r,
                    eta_inner: Some(p.eta1),
                    eta_outer: None,
                },
                state,
                Reduced::Single,
            ))
        }
    }
}

pub fn cmd_oracle(cfg: &LoadedConfig, opts: &Options) -> CliResult<Vec<PathBuf>> {
    cfg.check_mode(&[RunMode::Oracle], "oracle")?;
    let p = cfg.params()?;
    let ctx = Ctx::new(cfg, opts)?;
    let mut rng = SampleRng::new(ctx.seed);
    let (annulus, start, reduced) = oracle_start(cfg, &p, &mut rng)?;
    let mut sim = Simulator::new(annulus, &start)?;
    let c0 = sim.conserved();
    let mut tracker = match &reduced {
        Reduced::Two(sys, last_u_time) => Some(SectionTracker::new(sys, &start, *last_u_time)),
        _ => None,
    };

    let path = ctx.file("events.csv");
    let mut w = csv_writer(&path)?;
    w.write_record([
        "index",
        "time",
        "particle",
        "wall",
        "x",
        "y",
        "vx_pre",
        "vy_pre",
        "vx_post",
        "vy_post",
        "omega_inner_pre",
        "omega_inner_post",
        "omega_outer_pre",
        "omega_outer_post",
        "s",
        "t",
    ])?;
    let mut max_drift: f64 = 0.0;
    for k in 0..ctx.steps {
        let ev = sim.step()?;
        let wall = if ev.wall == Wall::Inner { "I" } else { "O" };
        // circle coordinate at outer double-rotor impacts and, for two
        // particles, at the first particle's inner impacts (with the phase)
        let (s_col, t_col) = match (&reduced, tracker.as_mut()) {
            (Reduced::Double(sys), _) if ev.wall == Wall::Outer => (
                fmt_f64(outer_impact_s(&ev, &sys.params, &sys.circle)?),
                String::new(),
            ),
            (Reduced::Two(..), Some(tr)) => {
                let before = tr.points.len();
                tr.observe(&ev)?;
                match tr.points.get(before) {
                    Some(pt) => (fmt_f64(pt.s), fmt_f64(pt.t)),
                    None => (String::new(), String::new()),
                }
            }
            _ => (String::new(), String::new()),
        };
        w.write_record([
            ev.index.to_string(),
            fmt_f64(ev.time),
            ev.particle.to_string(),
            wall.into(),
            fmt_f64(ev.point[0]),
            fmt_f64(ev.point[1]),
            fmt_f64(ev.vel_pre[0]),
            fmt_f64(ev.vel_pre[1]),
            fmt_f64(ev.vel_post[0]),
            fmt_f64(ev.vel_post[1]),
            fmt_f64(ev.omega_inner_pre),
            fmt_f64(ev.omega_inner_post),
            fmt_f64(ev.omega_outer_pre),
            fmt_f64(ev.omega_outer_post),
            s_col,
            t_col,
        ])?;
        if (k + 1) % DRIFT_CHECK_EVERY == 0 || k + 1 == ctx.steps {
            max_drift = max_drift.max(conserved_drift(&c0, &sim.conserved()));
            if max_drift > DRIFT_LIMIT {
                w.flush().map_err(io_err(&path))?;
                return Err(Error::NumericalDrift(format!(
                    "conserved quantities drifted by {max_drift:e} after {} events",
                    k + 1
                ))
                .into());
            }
        }
    }
    w.flush().map_err(io_err(&path))?;
    let reversibility_error = if ctx.oracle_check {
        Some(reversibility_error(annulus, &start, ctx.steps)?)
    } else {
        None
    };
    let summary = OracleSummary {
        mode: p.mode,
        seed: ctx.seed,
        events: sim.events_processed(),
        final_clock: sim.clock,
        start,
        conserved_start: c0,
        conserved_end: sim.conserved(),
        max_drift,
        reversibility_error,
    };
    Ok(vec![
        path,
        write_json(&ctx.file("oracle_summary.json"), &summary)?,
    ])
}

// ---------------------------------------------------------------- classify

#[derive(Serialize)]
struct ClassifyReport {
    source: &'static str,
    gamma_norm: f64,
    classification: GammaClass,
}

pub fn cmd_classify(cfg: &LoadedConfig, opts: &Options) -> CliResult<Vec<PathBuf>> {
    cfg.check_mode(&[RunMode::Classify], "classify")?;
    let ctx = Ctx::new(cfg, opts)?;
    let (source, x) = match cfg.config.value {
        Some(v) => ("value", v),
        None => {
            let p = cfg.params()?;
            require_mode(cfg, &p, &[Mode::DoubleRotor, Mode::TwoParticle])?;
            let etas_ok =
                p.eta1 > 0.0 && (p.mode == Mode::TwoParticle || p.eta2.is_some_and(|e| e > 0.0));
            if !etas_ok {
                return Err(
                    cfg.error_at("params", "inertia parameters must be present and positive")
                );
            }
            ("params", gamma_closed_form(&p))
        }
    };
    let classification = classify_value(x, ctx.depth).map_err(|e| cfg.error_at("value", e))?;
    let report = ClassifyReport {
        source,
        gamma_norm: x,
        classification,
    };
    Ok(vec![write_json(&ctx.file("classify.json"), &report)?])
}

// ---------------------------------------------------------------- sweep

/// One grid cell of a sweep. Invalid cells keep their row with NaN values
/// and the reason in `status`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub eta1: f64,
    pub eta2: f64,
    pub lambda: f64,
    pub gamma_norm: f64,
    pub rational: bool,
    pub u_empty: bool,
    pub u_measure: f64,
    pub period: i64,
    pub status: String,
}

/// Evaluate one cell at fixed `(R, N, E)` with `F = λE`.
pub fn sweep_cell(
    r: f64,
    n: f64,
    e: f64,
    (eta1, eta2, lambda): (f64, f64, f64),
    s0: f64,
    max_period: usize,
    depth: usize,
) -> SweepRow {
    let mut row = SweepRow {
        eta1,
        eta2,
        lambda,
        gamma_norm: f64::NAN,
        rational: false,
        u_empty: false,
        u_measure: f64::NAN,
        period: -1,
        status: "ok".into(),
    };
    let p = PhysicalParams::double(r, eta1, eta2);
    let ints = Integrals::double(n, e, lambda * e);
    let report = validate_params(&p, &ints);
    if let Some(v) = report.violations.first() {
        row.status = v.to_string();
        return row;
    }
    let outcome = (|| -> rotor_annulus::Result<()> {
        let circle = VelocityCircle::double_rotor(&p, &ints)?;
        let u = compute_u(&circle, &p, &ints);
        row.gamma_norm = circle.gamma_norm;
        row.rational = matches!(
            classify_value(circle.gamma_norm, depth)?.kind,
            GammaKind::Rational { .. }
        );
        row.u_empty = u.is_empty();
        row.u_measure = u.measure();
        let sys = DoubleRotor {
            params: p,
            integrals: ints,
            circle,
            u,
        };
        if let Some(k) = sys.detect_period(BaseState::new(s0, Sheet::Outer), max_period)? {
            row.period = k as i64;
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        row.status = e.to_string();
    }
    row
}

pub fn cmd_sweep(cfg: &LoadedConfig, opts: &Options) -> CliResult<Vec<PathBuf>> {
    cfg.check_mode(&[RunMode::Sweep], "sweep")?;
    let p = cfg.params()?;
    require_mode(cfg, &p, &[Mode::DoubleRotor])?;
    let ints = cfg.integrals()?;
    let axes = cfg
        .config
        .sweep
        .clone()
        .ok_or_else(|| cfg.error_at("sweep", "missing `sweep` section"))?;
    let axis = |a: &Option<crate::config::Axis>,
                fallback: Option<f64>,
                key: &str|
     -> CliResult<Vec<f64>> {
        match (a, fallback) {
            (Some(a), _) if !a.is_empty() => Ok(a.values()),
            (Some(_), _) => Err(cfg.error_at(key, format!("axis `{key}` is empty"))),
            (None, Some(v)) => Ok(vec![v]),
            (None, None) => {
                Err(cfg.error_at("sweep", format!("no axis or default value for `{key}`")))
            }
        }
    };
    let sizes =
        [&axes.eta1, &axes.eta2, &axes.lambda].map(|a| a.as_ref().map_or(1, |a| a.len().max(1)));
    let cells = sizes
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .unwrap_or(usize::MAX);
    if cells > MAX_SWEEP_CELLS {
        return Err(cfg.error_at(
            "sweep",
            format!("grid has {cells} cells, the limit is {MAX_SWEEP_CELLS}"),
        ));
    }
    let eta1s = axis(&axes.eta1, Some(p.eta1), "eta1")?;
    let eta2s = axis(&axes.eta2, p.eta2, "eta2")?;
    let lambdas = axis(&axes.lambda, ints.f.map(|f| f / ints.e), "lambda")?;
    let ctx = Ctx::new(cfg, opts)?;
    let max_period = axes.max_period.unwrap_or(DEFAULT_MAX_PERIOD);
    let s0 = SampleRng::new(ctx.seed).uniform();

    // row-major: eta1 slowest, lambda fastest
    let mut grid = Vec::with_capacity(cells);
    for &a in &eta1s {
        for &b in &eta2s {
            grid.extend(lambdas.iter().map(|&l| (a, b, l)));
        }
    }
    let rows: Vec<SweepRow> = grid
        .par_iter()
        .map(|&cell| sweep_cell(p.r, ints.n, ints.e, cell, s0, max_period, ctx.depth))
        .collect();

    let path = ctx.file("sweep.csv");
    let mut w = csv_writer(&path)?;
    w.write_record([
        "r",
        "n",
        "e",
        "eta1",
        "eta2",
        "lambda",
        "gamma_norm",
        "rational",
        "u_empty",
        "u_measure",
        "period",
        "status",
    ])?;
    for row in &rows {
        w.write_record([
            fmt_f64(p.r),
            fmt_f64(ints.n),
            fmt_f64(ints.e),
            fmt_f64(row.eta1),
            fmt_f64(row.eta2),
            fmt_f64(row.lambda),
            fmt_f64(row.gamma_norm),
            row.rational.to_string(),
            row.u_empty.to_string(),
            fmt_f64(row.u_measure),
            row.period.to_string(),
            row.status.clone(),
        ])?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(vec![path])
}

// ---------------------------------------------------------------- validate

/// Check everything that can be checked without running an experiment.
pub fn cmd_validate(cfg: &LoadedConfig) -> CliResult<()> {
    let c = &cfg.config;
    if let Some(p) = c.params {
        let ints = cfg.integrals()?;
        cfg.check_params(&p, &ints)?;
    }
    if let Some(eps) = c.eps {
        n_epsilon(eps).map_err(|e| cfg.error_at("eps", e))?;
    }
    if let Some(d) = c.depth {
        if !(1..=60).contains(&d) {
            return Err(cfg.error_at("depth", format!("depth must lie in 1..=60, got {d}")));
        }
    }
    if c.bins == Some(0) {
        return Err(cfg.error_at("bins", "bins must be positive"));
    }
    if let Some(s) = &c.sweep {
        let cells: usize = [&s.eta1, &s.eta2, &s.lambda]
            .iter()
            .map(|a| a.as_ref().map_or(1, |a| a.len().max(1)))
            .try_fold(1usize, |acc, n| acc.checked_mul(n))
            .unwrap_or(usize::MAX);
        if cells > MAX_SWEEP_CELLS {
            return Err(cfg.error_at(
                "sweep",
                format!("grid has {cells} cells, the limit is {MAX_SWEEP_CELLS}"),
            ));
        }
    }
    Ok(())
}
