//! Reduced maps against the Cartesian simulator.

use rotor_annulus::circle::{BaseState, Sheet};
use rotor_annulus::oracle::{
    double_rotor_annulus, double_rotor_state, extract_outer_impacts, outer_impact_angles,
    two_particle_annulus, two_particle_state, Annulus, CartesianState, Particle, SectionTracker,
    Simulator, Wall,
};
use rotor_annulus::rng::SampleRng;
use rotor_annulus::single::{fiber_rotation_angle, Phase, SingleRotorState};
use rotor_annulus::two::{construct_w, Branch, TwoParticleState, TwoParticleSystem};
use rotor_annulus::{circle_diff, DoubleRotor, Integrals, PhysicalParams, SkewState};

#[test]
fn single_rotor_fiber_angle_matches_oracle() {
    let p = PhysicalParams::single(0.45, 1.6);
    // just after an outer bounce at (1, 0): inward normal plus tangential
    let (vt_out, vn_out, omega) = (0.25, 1.1, -0.6);
    let st = SingleRotorState::from_outer(vt_out, vn_out, omega, 0.0, &p).unwrap();
    let want = fiber_rotation_angle(&st, &p).unwrap();
    let a = Annulus {
        r: p.r,
        eta_inner: Some(p.eta1),
        eta_outer: None,
    };
    let start = CartesianState {
        particles: vec![Particle {
            pos: [1.0, 0.0],
            vel: [-vn_out, vt_out],
        }],
        omega_inner: omega,
        omega_outer: 0.0,
        clock: 0.0,
    };
    let mut sim = Simulator::new(a, &start).unwrap();
    let log = sim.run(2002).unwrap();
    let mut angles = vec![0.0];
    angles.extend(outer_impact_angles(&log, 0));
    assert!(angles.len() > 1000);
    for w in angles.windows(2).take(1000) {
        assert!(
            (w[1] - w[0] - want).abs() < 1e-9,
            "{} vs {want}",
            w[1] - w[0]
        );
    }
    // reduced orbit gives the same impact positions
    let mut red = st;
    let mut k = 1;
    for _ in 0..400 {
        red = rotor_annulus::single::single_step(&red, &p);
        if red.phase == Phase::Inner {
            assert!((red.lift() - angles[k]).abs() < 1e-9);
            k += 1;
        }
    }
}

fn skew_system() -> DoubleRotor {
    DoubleRotor::new(
        PhysicalParams::double(0.5, 1.0, 2.0),
        Integrals::double(0.2, 1.0, 9.0),
    )
    .unwrap()
}

#[test]
fn skew_product_matches_oracle_outer_impacts() {
    let sys = skew_system();
    assert!(sys.is_alternating());
    let (s0, phi0) = (0.37, 0.11);
    let mut sim = Simulator::new(
        double_rotor_annulus(&sys),
        &double_rotor_state(&sys, s0, phi0),
    )
    .unwrap();
    let log = sim.run(20_000).unwrap();
    let impacts = extract_outer_impacts(&log, &sys.params, &sys.circle, phi0).unwrap();
    assert!(impacts.len() >= 10_000);
    let mut st = SkewState::new(s0, phi0);
    let mut prev_time = 0.0;
    let (mut ds, mut dphi, mut dt): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for imp in impacts.iter().take(10_000) {
        let tau = sys.tau(st.s).unwrap();
        st = sys.skew_step(&st).unwrap();
        ds = ds.max(circle_diff(imp.s, st.s).abs());
        dphi = dphi.max((imp.phi_lift - st.lift()).abs());
        dt = dt.max((imp.time - prev_time - tau).abs());
        prev_time = imp.time;
    }
    assert!(ds < 1e-8 && dphi < 1e-8, "ds = {ds:e}, dphi = {dphi:e}");
    assert!(dt < 1e-9, "dt = {dt:e}");
}

#[test]
fn alpha_matches_single_oracle_excursions() {
    let sys = skew_system();
    let mut rng = SampleRng::new(77);
    for _ in 0..1000 {
        let s = rng.uniform();
        let phi = rng.uniform();
        let mut sim = Simulator::new(
            double_rotor_annulus(&sys),
            &double_rotor_state(&sys, s, phi),
        )
        .unwrap();
        let log = sim.run(2).unwrap();
        assert_eq!((log[0].wall, log[1].wall), (Wall::Inner, Wall::Outer));
        let imp = extract_outer_impacts(&log, &sys.params, &sys.circle, phi).unwrap();
        assert!((imp[0].phi_lift - phi - sys.alpha(s).unwrap()).abs() < 1e-9);
        assert!((imp[0].time - sys.tau(s).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn non_alternating_orbit_bounces_twice_outside() {
    let sys = DoubleRotor::new(
        PhysicalParams::double(0.5, 1.0, 2.0),
        Integrals::double(0.3, 1.0, 3.0),
    )
    .unwrap();
    assert!(!sys.is_alternating());
    // a point of U with a realisable normal speed (U also covers w² < 0)
    let s0 = (0..100_000)
        .map(|i| i as f64 / 100_000.0)
        .filter(|&s| sys.u.contains(s))
        .max_by(|&a, &b| sys.velocity(a).w.total_cmp(&sys.velocity(b).w))
        .unwrap();
    assert!(sys.velocity(s0).w > 0.1);
    let mut sim = Simulator::new(
        double_rotor_annulus(&sys),
        &double_rotor_state(&sys, s0, 0.0),
    )
    .unwrap();
    let log = sim.run(1).unwrap();
    assert_eq!(log[0].wall, Wall::Outer);
    let imp = extract_outer_impacts(&log, &sys.params, &sys.circle, 0.0).unwrap();
    assert!(circle_diff(imp[0].s, -s0).abs() < 1e-10);
    assert!((imp[0].phi_lift - sys.alpha(s0).unwrap()).abs() < 1e-10);
    // base map prediction along a longer run
    let mut sim = Simulator::new(
        double_rotor_annulus(&sys),
        &double_rotor_state(&sys, s0, 0.0),
    )
    .unwrap();
    let log = sim.run(400).unwrap();
    let mut b = BaseState::new(s0, Sheet::Outer);
    for ev in &log {
        b = rotor_annulus::circle::base_step(b, &sys.circle, &sys.u).unwrap();
        let want = if b.sheet == Sheet::Outer {
            Wall::Outer
        } else {
            Wall::Inner
        };
        assert_eq!(ev.wall, want);
    }
}

fn w_system() -> TwoParticleSystem {
    construct_w(0.5, 1.0, 0.5, 1.0, 0.01).unwrap().system
}

fn oracle_sections(
    sys: &TwoParticleSystem,
    s0: f64,
    t0: f64,
    events: usize,
) -> Vec<(f64, f64, usize)> {
    let start = two_particle_state(sys, s0, t0, 2.0).unwrap();
    let tau2 = sys.timing(s0).unwrap().tau2;
    let mut tracker = SectionTracker::new(sys, &start, -t0 * tau2);
    let mut sim = Simulator::new(two_particle_annulus(sys), &start).unwrap();
    sim.run_with(events, |ev| tracker.observe(ev).unwrap())
        .unwrap();
    tracker
        .points
        .iter()
        .map(|p| (p.s, p.t, p.u_hits))
        .collect()
}

#[test]
fn two_particle_sections_match_reduced_map_in_w() {
    let sys = w_system();
    let (s0, t0) = (0.23, 0.504);
    let pts = oracle_sections(&sys, s0, t0, 200);
    assert!(pts.len() >= 21);
    let mut st = TwoParticleState::new(s0, t0);
    let mut worst: f64 = 0.0;
    for &(s, t, hits) in pts.iter().take(21) {
        let (next, branch) = sys.two_step(&st).unwrap();
        st = next;
        assert_eq!(branch, Branch::Odd);
        assert_eq!(hits % 2, 1);
        worst = worst
            .max(circle_diff(s, st.s).abs())
            .max(circle_diff(t, st.t).abs());
    }
    assert!(worst < 1e-8, "worst = {worst:e}");
}

#[test]
fn branch_parity_matches_oracle_u_hits() {
    let sys = TwoParticleSystem::new(
        PhysicalParams::two_particle(0.5, 1.3),
        Integrals::two_particle(0.4, 1.0, 2.0, 3.1),
    )
    .unwrap();
    let (s0, t0) = (0.61, 0.27);
    let pts = oracle_sections(&sys, s0, t0, 10_000);
    let mut st = TwoParticleState::new(s0, t0);
    let (mut even, mut odd) = (0, 0);
    for &(s, t, hits) in &pts {
        // resynchronise on the oracle to avoid comparing chaotic drift
        let (next, branch) = sys.two_step(&st).unwrap();
        assert_eq!(branch == Branch::Odd, hits % 2 == 1);
        assert!(circle_diff(next.s, s).abs() < 1e-8 && circle_diff(next.t, t).abs() < 1e-7);
        match branch {
            Branch::Even => even += 1,
            Branch::Odd => odd += 1,
        }
        st = TwoParticleState::new(s, t);
    }
    assert!(even > 0 && odd > 0, "even = {even}, odd = {odd}");
}

/// The odd-phase update `(τ₂/τ₃)t + t̂/(1−λ̂)` is off by `τ₂/τ₃` modulo 1
/// from the elapsed-time phase the simulator observes.
#[test]
fn printed_odd_update_disagrees_with_oracle() {
    let sys = TwoParticleSystem::new(
        PhysicalParams::two_particle(0.5, 1.3),
        Integrals::two_particle(0.4, 1.0, 2.0, 3.1),
    )
    .unwrap();
    let (s0, t0) = (0.61, 0.27);
    let pts = oracle_sections(&sys, s0, t0, 2_000);
    let mut st = TwoParticleState::new(s0, t0);
    let mut worst_printed: f64 = 0.0;
    for &(s, t, _) in &pts {
        let (np, bp) = sys.two_step_as_printed(&st).unwrap();
        if bp == Branch::Odd && sys.two_step(&st).unwrap().1 == Branch::Odd {
            worst_printed = worst_printed.max(circle_diff(np.t, t).abs());
        }
        st = TwoParticleState::new(s, t);
    }
    assert!(
        worst_printed > 1e-3,
        "printed update unexpectedly agrees: {worst_printed:e}"
    );
}
