//! Event-driven Cartesian simulation of one or two point particles in the
//! annulus `R ≤ |x| ≤ 1`.
//!
//! Each wall is either elastic or a rotor with rescaled inertia `η` (moment
//! of inertia `η r²` for unit particle mass). Particles fly straight between
//! walls; impact times come from closed-form quadratic roots, so there is no
//! integration error. Particles interact only through the rotors.
//!
//! This module knows nothing of the reduced coordinates except in the
//! helpers at the bottom that build initial states and read off section
//! data, and those only go through the public circle API.

use crate::circle::VelocityCircle;
use crate::error::{Error, Result};
use crate::rotor::exchange;
use crate::skew::DoubleRotor;
use crate::two::{return_time, TwoParticleSystem};
use crate::{circle_diff, wrap01};
use log::warn;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Roots closer than this to the current time are the departing wall.
pub const MIN_ROOT: f64 = 1e-13;
/// Positions within this distance of a wall count as on it.
pub const ON_WALL: f64 = 1e-12;
/// Impact points further than this from the wall abort the run.
pub const DRIFT_LIMIT: f64 = 1e-9;

type V2 = [f64; 2];

fn dot(a: V2, b: V2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// `a + b` as an unevaluated sum of two doubles.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Dot product carried in double-double precision.
fn dot_dd(a: V2, b: V2) -> (f64, f64) {
    let p = a[0] * b[0];
    let q = a[1] * b[1];
    let (s, e) = two_sum(p, q);
    (s, e + a[0].mul_add(b[0], -p) + a[1].mul_add(b[1], -q))
}

/// Velocity after reflecting `v` in the wall normal along `p` and adding
/// `kick` times the rotated radius vector. The normal projection is
/// carried in double-double and each component is rounded once, because
/// plain evaluation is biased by a few 1e-17 per bounce and that adds up
/// to a visible energy drift over 1e6 bounces.
fn bounce(v: V2, p: V2, kick: f64) -> V2 {
    let (vp, vp_lo) = dot_dd(v, p);
    let (pp, pp_lo) = dot_dd(p, p);
    let hi = vp / pp;
    let lo = (hi.mul_add(-pp, vp) + vp_lo - hi * pp_lo) / pp;
    let tang = [-p[1], p[0]];
    let comp = |k: usize| (-2.0 * hi).mul_add(p[k], v[k]) + (kick * tang[k] - 2.0 * lo * p[k]);
    [comp(0), comp(1)]
}

fn norm(a: V2) -> f64 {
    a[0].hypot(a[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Wall {
    Inner,
    Outer,
}

/// Annulus with optional rotors. `None` means an elastic wall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub r: f64,
    pub eta_inner: Option<f64>,
    pub eta_outer: Option<f64>,
}

impl Annulus {
    pub fn radius(&self, wall: Wall) -> f64 {
        match wall {
            Wall::Inner => self.r,
            Wall::Outer => 1.0,
        }
    }

    fn eta(&self, wall: Wall) -> Option<f64> {
        match wall {
            Wall::Inner => self.eta_inner,
            Wall::Outer => self.eta_outer,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub pos: V2,
    pub vel: V2,
}

impl Particle {
    /// Angular momentum about the centre.
    pub fn angular_momentum(&self) -> f64 {
        self.pos[0] * self.vel[1] - self.pos[1] * self.vel[0]
    }

    pub fn speed_sq(&self) -> f64 {
        dot(self.vel, self.vel)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartesianState {
    pub particles: Vec<Particle>,
    pub omega_inner: f64,
    pub omega_outer: f64,
    pub clock: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub wall: Wall,
    pub dt: f64,
    pub point: V2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub index: usize,
    pub time: f64,
    pub particle: usize,
    pub wall: Wall,
    pub point: V2,
    pub vel_pre: V2,
    pub vel_post: V2,
    pub omega_inner_pre: f64,
    pub omega_inner_post: f64,
    pub omega_outer_pre: f64,
    pub omega_outer_post: f64,
}

/// First wall reached from `pos` moving with `vel`.
///
/// A particle on a wall and moving into it hits at `dt = 0`. The inner wall
/// counts only when the line crosses the inner disc (tangency is a miss).
pub fn next_wall_hit(pos: V2, vel: V2, r: f64) -> Result<Hit> {
    let a = dot(vel, vel);
    if !(a > 0.0) {
        return Err(Error::Stuck("zero velocity".into()));
    }
    let b = dot(pos, vel);
    let rad = norm(pos);
    if (rad - 1.0).abs() < ON_WALL && b > 0.0 {
        return Ok(Hit {
            wall: Wall::Outer,
            dt: 0.0,
            point: pos,
        });
    }
    if (rad - r).abs() < ON_WALL && b < 0.0 {
        return Ok(Hit {
            wall: Wall::Inner,
            dt: 0.0,
            point: pos,
        });
    }
    let along = |t: f64| [pos[0] + t * vel[0], pos[1] + t * vel[1]];
    // a t² + 2 b t + c = 0 for the inner circle
    if b < 0.0 {
        let c = dot(pos, pos) - r * r;
        let disc = b * b - a * c;
        if disc > 0.0 {
            let t = c / (-b + disc.sqrt());
            if t > MIN_ROOT {
                return Ok(Hit {
                    wall: Wall::Inner,
                    dt: t,
                    point: along(t),
                });
            }
        }
    }
    let c = dot(pos, pos) - 1.0;
    let disc = (b * b - a * c).max(0.0);
    let root = disc.sqrt();
    let t = if b < 0.0 {
        (-b + root) / a
    } else {
        -c / (b + root)
    };
    if !(t > MIN_ROOT) || !t.is_finite() {
        return Err(Error::Stuck(format!(
            "no forward wall hit from pos = {pos:?}, vel = {vel:?} (grazing the outer wall)"
        )));
    }
    Ok(Hit {
        wall: Wall::Outer,
        dt: t,
        point: along(t),
    })
}

/// Conserved quantities of a Cartesian state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conserved {
    /// Kinetic energy of particles and rotors, times two.
    pub energy: f64,
    /// Total angular momentum.
    pub angular_momentum: f64,
    /// `Σ L_i²/ρ² + Σ η ρ² ω²` over the rotors, with `ρ` the radius of the
    /// wall whose rotor trades with the particles' tangential velocities.
    pub tangential_energy: f64,
    /// Squared normal speed of each particle at the inner wall. Only
    /// conserved, and only reported, when the outer wall is elastic.
    pub inner_normal_sq: Vec<f64>,
}

pub struct Simulator {
    pub annulus: Annulus,
    /// Reference positions at `ref_time`; current position is extrapolated.
    refs: Vec<(V2, f64)>,
    vel: Vec<V2>,
    pub omega_inner: f64,
    pub omega_outer: f64,
    pub clock: f64,
    hits: Vec<Hit>,
    events: usize,
}

impl Simulator {
    pub fn new(annulus: Annulus, state: &CartesianState) -> Result<Self> {
        if !(annulus.r > 0.0 && annulus.r < 1.0) {
            return Err(Error::InvalidParams(format!(
                "R = {} must lie in (0, 1)",
                annulus.r
            )));
        }
        if state.particles.is_empty() || state.particles.len() > 2 {
            return Err(Error::InvalidParams(
                "one or two particles supported".into(),
            ));
        }
        let mut hits = Vec::new();
        for (i, p) in state.particles.iter().enumerate() {
            let rad = norm(p.pos);
            if rad < annulus.r - ON_WALL || rad > 1.0 + ON_WALL {
                return Err(Error::InvalidState(format!(
                    "particle {i} at radius {rad} is outside the annulus"
                )));
            }
            hits.push(next_wall_hit(p.pos, p.vel, annulus.r)?);
        }
        Ok(Self {
            annulus,
            refs: state
                .particles
                .iter()
                .map(|p| (p.pos, state.clock))
                .collect(),
            vel: state.particles.iter().map(|p| p.vel).collect(),
            omega_inner: state.omega_inner,
            omega_outer: state.omega_outer,
            clock: state.clock,
            hits,
            events: 0,
        })
    }

    pub fn state(&self) -> CartesianState {
        let particles = self
            .refs
            .iter()
            .zip(&self.vel)
            .map(|(&(p, t0), &v)| {
                let dt = self.clock - t0;
                Particle {
                    pos: [p[0] + dt * v[0], p[1] + dt * v[1]],
                    vel: v,
                }
            })
            .collect();
        CartesianState {
            particles,
            omega_inner: self.omega_inner,
            omega_outer: self.omega_outer,
            clock: self.clock,
        }
    }

    pub fn events_processed(&self) -> usize {
        self.events
    }

    /// Process the next collision.
    pub fn step(&mut self) -> Result<CollisionEvent> {
        let due = |i: usize| self.refs[i].1 + self.hits[i].dt;
        let mut i = 0;
        if self.hits.len() == 2 {
            let (t0, t1) = (due(0), due(1));
            if (t0 - t1).abs() <= 1e-15 * t0.abs().max(1.0) {
                warn!("simultaneous collisions at t = {t0}; processing particle 0 first");
            }
            if t1 < t0 {
                i = 1;
            }
        }
        let hit = self.hits[i];
        let time = due(i);
        let rho = self.annulus.radius(hit.wall);
        let rad = norm(hit.point);
        if (rad - rho).abs() > DRIFT_LIMIT {
            return Err(Error::NumericalDrift(format!(
                "impact at radius {rad} on wall of radius {rho} (event {})",
                self.events
            )));
        }
        let n = [hit.point[0] / rad, hit.point[1] / rad];
        let point = [rho * n[0], rho * n[1]];
        let tang = [-n[1], n[0]];
        let v = self.vel[i];
        let vt = dot(v, tang);
        let (oi, oo) = (self.omega_inner, self.omega_outer);
        let vt_new = match self.annulus.eta(hit.wall) {
            Some(eta) => {
                let omega = if hit.wall == Wall::Inner {
                    &mut self.omega_inner
                } else {
                    &mut self.omega_outer
                };
                let (vt_new, rim) = exchange(vt, rho * *omega, eta);
                *omega = rim / rho;
                vt_new
            }
            None => vt,
        };
        let v_new = bounce(v, hit.point, (vt_new - vt) / rad);
        self.vel[i] = v_new;
        self.refs[i] = (point, time);
        self.clock = time;
        self.hits[i] = next_wall_hit(point, v_new, self.annulus.r)?;
        let ev = CollisionEvent {
            index: self.events,
            time,
            particle: i,
            wall: hit.wall,
            point,
            vel_pre: v,
            vel_post: v_new,
            omega_inner_pre: oi,
            omega_inner_post: self.omega_inner,
            omega_outer_pre: oo,
            omega_outer_post: self.omega_outer,
        };
        self.events += 1;
        Ok(ev)
    }

    /// Time of the next collision.
    pub fn next_event_time(&self) -> f64 {
        (0..self.hits.len())
            .map(|i| self.refs[i].1 + self.hits[i].dt)
            .fold(f64::INFINITY, f64::min)
    }

    /// Free flight up to `time` without processing collisions. Fails if a
    /// collision is due before `time`, up to a relative slack of 1e-9 that
    /// absorbs rounding in long clocks.
    pub fn fly_to(&mut self, time: f64) -> Result<()> {
        let due = self.next_event_time();
        if due < time - 1e-9 * time.abs().max(1.0) {
            return Err(Error::InvalidState(format!(
                "collision due at {due} before target time {time}"
            )));
        }
        self.clock = self.clock.max(time);
        Ok(())
    }

    /// Process `n` events, passing each to `f`.
    pub fn run_with(&mut self, n: usize, mut f: impl FnMut(&CollisionEvent)) -> Result<()> {
        for _ in 0..n {
            let ev = self.step()?;
            f(&ev);
        }
        Ok(())
    }

    pub fn run(&mut self, n: usize) -> Result<Vec<CollisionEvent>> {
        let mut log = Vec::with_capacity(n);
        self.run_with(n, |e| log.push(*e))?;
        Ok(log)
    }

    pub fn conserved(&self) -> Conserved {
        conserved(&self.annulus, &self.state())
    }
}

pub fn conserved(a: &Annulus, st: &CartesianState) -> Conserved {
    let r = a.r;
    let ei = a.eta_inner.unwrap_or(0.0);
    let eo = a.eta_outer.unwrap_or(0.0);
    let mut energy = ei * r * r * st.omega_inner.powi(2) + eo * st.omega_outer.powi(2);
    let mut momentum = ei * r * r * st.omega_inner + eo * st.omega_outer;
    // With an outer rotor the tangential velocities are measured at radius 1.
    let (rho, rotor_part) = if a.eta_outer.is_some() {
        (
            1.0,
            ei * r.powi(4) * st.omega_inner.powi(2) + eo * st.omega_outer.powi(2),
        )
    } else {
        (r, ei * r * r * st.omega_inner.powi(2))
    };
    let mut tangential = rotor_part;
    let mut normals = Vec::new();
    for p in &st.particles {
        let l = p.angular_momentum();
        energy += p.speed_sq();
        momentum += l;
        tangential += (l / rho).powi(2);
        if a.eta_outer.is_none() {
            normals.push(p.speed_sq() - (l / r).powi(2));
        }
    }
    Conserved {
        energy,
        angular_momentum: momentum,
        tangential_energy: tangential,
        inner_normal_sq: normals,
    }
}

/// Largest relative change between two sets of conserved quantities.
/// Momentum is scaled by `√energy` so that a zero total does not blow up.
pub fn conserved_drift(a: &Conserved, b: &Conserved) -> f64 {
    let rel = |x: f64, y: f64, scale: f64| (x - y).abs() / scale.max(f64::MIN_POSITIVE);
    let mut d = rel(a.energy, b.energy, a.energy.abs())
        .max(rel(
            a.angular_momentum,
            b.angular_momentum,
            a.angular_momentum.abs().max(a.energy.sqrt()),
        ))
        .max(rel(
            a.tangential_energy,
            b.tangential_energy,
            a.tangential_energy.abs(),
        ));
    for (x, y) in a.inner_normal_sq.iter().zip(&b.inner_normal_sq) {
        d = d.max(rel(*x, *y, x.abs()));
    }
    d
}

/// Negate all velocities and angular velocities.
pub fn reversed(st: &CartesianState) -> CartesianState {
    CartesianState {
        particles: st
            .particles
            .iter()
            .map(|p| Particle {
                pos: p.pos,
                vel: [-p.vel[0], -p.vel[1]],
            })
            .collect(),
        omega_inner: -st.omega_inner,
        omega_outer: -st.omega_outer,
        clock: st.clock,
    }
}

/// Largest component difference of positions, velocities and angular
/// velocities (clock ignored).
pub fn state_distance(a: &CartesianState, b: &CartesianState) -> f64 {
    let mut d = (a.omega_inner - b.omega_inner)
        .abs()
        .max((a.omega_outer - b.omega_outer).abs());
    for (p, q) in a.particles.iter().zip(&b.particles) {
        for k in 0..2 {
            d = d
                .max((p.pos[k] - q.pos[k]).abs())
                .max((p.vel[k] - q.vel[k]).abs());
        }
    }
    d
}

/// Run `n` events, reverse, undo the same `n` events and fly on for the
/// time between the start and the first event. Reports the distance of
/// the re-reversed state to the start.
pub fn reversibility_error(annulus: Annulus, start: &CartesianState, n: usize) -> Result<f64> {
    let mut fwd = Simulator::new(annulus, start)?;
    fwd.run_with(n, |_| {})?;
    let elapsed = fwd.clock - start.clock;
    let mut back = Simulator::new(annulus, &reversed(&fwd.state()))?;
    let t0 = back.clock;
    back.run_with(n, |_| {})?;
    back.fly_to(t0 + elapsed)?;
    Ok(state_distance(&reversed(&back.state()), start))
}

fn polar(phi_turns: f64, rho: f64) -> (V2, V2, V2) {
    let th = TAU * phi_turns;
    let n = [th.cos(), th.sin()];
    ([rho * n[0], rho * n[1]], n, [-n[1], n[0]])
}

/// Double-rotor state right after an outer bounce at `phi` (turns) with
/// velocity `s` on the circle.
pub fn double_rotor_state(sys: &DoubleRotor, s: f64, phi: f64) -> CartesianState {
    let v = sys.velocity(s);
    let p = &sys.params;
    let (pos, n, t) = polar(phi, 1.0);
    CartesianState {
        particles: vec![Particle {
            pos,
            vel: [-v.w * n[0] + v.z * t[0], -v.w * n[1] + v.z * t[1]],
        }],
        omega_inner: v.x / (p.eta1.sqrt() * p.r * p.r),
        omega_outer: v.y / p.eta2_or_nan().sqrt(),
        clock: 0.0,
    }
}

pub fn double_rotor_annulus(sys: &DoubleRotor) -> Annulus {
    Annulus {
        r: sys.params.r,
        eta_inner: Some(sys.params.eta1),
        eta_outer: sys.params.eta2,
    }
}

/// One outer impact read off an event: velocity coordinate and position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuterImpact {
    pub time: f64,
    pub s: f64,
    /// Unwrapped position in turns.
    pub phi_lift: f64,
}

/// Circle coordinate of the velocity just after an outer double-rotor impact.
pub fn outer_impact_s(
    ev: &CollisionEvent,
    p: &crate::params::PhysicalParams,
    circle: &VelocityCircle,
) -> Result<f64> {
    let z = ev.point[0] * ev.vel_post[1] - ev.point[1] * ev.vel_post[0];
    let x = p.eta1.sqrt() * p.r * p.r * ev.omega_inner_post;
    let y = p.eta2_or_nan().sqrt() * ev.omega_outer_post;
    circle.s_of_point([x, y, z])
}

/// Outer impacts of a one-particle double-rotor log, with `s` read from the
/// post-collision velocity and the impact angle unwrapped from `phi0`.
pub fn extract_outer_impacts(
    log: &[CollisionEvent],
    p: &crate::params::PhysicalParams,
    circle: &VelocityCircle,
    phi0: f64,
) -> Result<Vec<OuterImpact>> {
    let mut out = Vec::new();
    let mut lift = phi0;
    for ev in log
        .iter()
        .filter(|e| e.wall == Wall::Outer && e.particle == 0)
    {
        let s = outer_impact_s(ev, p, circle)?;
        let phi = wrap01(ev.point[1].atan2(ev.point[0]) / TAU);
        lift += circle_diff(phi, lift);
        out.push(OuterImpact {
            time: ev.time,
            s,
            phi_lift: lift,
        });
    }
    Ok(out)
}

/// Polar angles (radians, unwrapped) of the outer impacts in a log.
pub fn outer_impact_angles(log: &[CollisionEvent], particle: usize) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for ev in log
        .iter()
        .filter(|e| e.wall == Wall::Outer && e.particle == particle)
    {
        let a = ev.point[1].atan2(ev.point[0]);
        match out.last() {
            None => out.push(a),
            Some(&prev) => out.push(prev + crate::geometry::reduce_angle(a - prev)),
        }
    }
    out
}

/// Two-particle state on the section: the first particle has just hit the
/// inner wall at angle 0 and `t·τ₂(s)` has passed since the second one
/// left the inner wall at angle `theta2`.
pub fn two_particle_state(
    sys: &TwoParticleSystem,
    s: f64,
    t: f64,
    theta2: f64,
) -> Result<CartesianState> {
    let r = sys.params.r;
    let [v, u, q] = sys.velocities(s);
    let first = Particle {
        pos: [r, 0.0],
        vel: [sys.vn(), v],
    };
    let (pos2, n2, t2) = polar(theta2 / TAU, r);
    let mut pos = pos2;
    let mut vel = [sys.un() * n2[0] + u * t2[0], sys.un() * n2[1] + u * t2[1]];
    let mut remaining = t * return_time(u, sys.un(), r)?;
    loop {
        let hit = next_wall_hit(pos, vel, r)?;
        if hit.dt >= remaining || hit.wall == Wall::Inner {
            if hit.dt < remaining {
                return Err(Error::InvalidState(
                    "second particle returns before its phase time".into(),
                ));
            }
            pos = [pos[0] + remaining * vel[0], pos[1] + remaining * vel[1]];
            break;
        }
        remaining -= hit.dt;
        let rad = norm(hit.point);
        let n = [hit.point[0] / rad, hit.point[1] / rad];
        pos = n;
        let vn = dot(vel, n);
        vel = [vel[0] - 2.0 * vn * n[0], vel[1] - 2.0 * vn * n[1]];
    }
    Ok(CartesianState {
        particles: vec![first, Particle { pos, vel }],
        omega_inner: q / (sys.params.eta1.sqrt() * r),
        omega_outer: 0.0,
        clock: 0.0,
    })
}

pub fn two_particle_annulus(sys: &TwoParticleSystem) -> Annulus {
    Annulus {
        r: sys.params.r,
        eta_inner: Some(sys.params.eta1),
        eta_outer: None,
    }
}

/// Section point read off the oracle at an inner collision of particle 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionPoint {
    pub time: f64,
    pub s: f64,
    pub t: f64,
    /// Inner collisions of particle 1 since the previous section point.
    pub u_hits: usize,
}

/// Track inner collisions of particle 0 and convert each to `(s, t)`.
/// `last_u_time` is the time of particle 1's last inner collision before
/// the log starts.
pub struct SectionTracker<'a> {
    sys: &'a TwoParticleSystem,
    last_u_time: f64,
    vel: [V2; 2],
    pos: [V2; 2],
    u_hits: usize,
    pub points: Vec<SectionPoint>,
}

impl<'a> SectionTracker<'a> {
    pub fn new(sys: &'a TwoParticleSystem, start: &CartesianState, last_u_time: f64) -> Self {
        let p = &start.particles;
        Self {
            sys,
            last_u_time,
            vel: [p[0].vel, p[1].vel],
            pos: [p[0].pos, p[1].pos],
            u_hits: 0,
            points: Vec::new(),
        }
    }

    pub fn observe(&mut self, ev: &CollisionEvent) -> Result<()> {
        self.vel[ev.particle] = ev.vel_post;
        self.pos[ev.particle] = ev.point;
        if ev.wall != Wall::Inner {
            return Ok(());
        }
        if ev.particle == 1 {
            self.last_u_time = ev.time;
            self.u_hits += 1;
            return Ok(());
        }
        let r = self.sys.params.r;
        // angular momentum is constant in flight, so the stored velocity and
        // any point on the current leg give the tangential velocity at R
        let l = |i: usize| self.pos[i][0] * self.vel[i][1] - self.pos[i][1] * self.vel[i][0];
        let v = l(0) / r;
        let u = l(1) / r;
        let q = self.sys.params.eta1.sqrt() * r * ev.omega_inner_post;
        let s = self.sys.circle.s_of_point([v, u, q])?;
        let tau2 = self.sys.timing(s)?.tau2;
        self.points.push(SectionPoint {
            time: ev.time,
            s,
            t: (ev.time - self.last_u_time) / tau2,
            u_hits: self.u_hits,
        });
        self.u_hits = 0;
        Ok(())
    }
}

/// Start the simulator at the section point `(s, t)` and record the next
/// `count` section points, giving up after `max_events` collisions.
pub fn two_particle_sections(
    sys: &TwoParticleSystem,
    s: f64,
    t: f64,
    theta2: f64,
    count: usize,
    max_events: usize,
) -> Result<Vec<SectionPoint>> {
    let start = two_particle_state(sys, s, t, theta2)?;
    let tau2 = sys.timing(s)?.tau2;
    let mut tracker = SectionTracker::new(sys, &start, -t * tau2);
    let mut sim = Simulator::new(two_particle_annulus(sys), &start)?;
    while tracker.points.len() < count {
        if sim.events_processed() >= max_events {
            return Err(Error::PreconditionUnmet(format!(
                "only {} of {count} section points within {max_events} collisions",
                tracker.points.len()
            )));
        }
        let ev = sim.step()?;
        tracker.observe(&ev)?;
    }
    Ok(tracker.points)
}
