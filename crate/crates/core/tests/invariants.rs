//! Property tests for structural invariants of the maps and the simulator.

use proptest::prelude::*;
use rotor_annulus::circle::{base_step, base_step_inverse, classify_value, GammaKind};
use rotor_annulus::oracle::{conserved_drift, double_rotor_annulus, double_rotor_state, Simulator};
use rotor_annulus::rng::SampleRng;
use rotor_annulus::rotor::exchange;
use rotor_annulus::two::n_epsilon;
use rotor_annulus::{
    circle_diff, wrap01, BaseState, DoubleRotor, Integrals, PhysicalParams, Sheet,
};

fn double_system() -> impl Strategy<Value = DoubleRotor> {
    (
        0.2..0.8f64,
        0.3..3.0f64,
        0.3..3.0f64,
        -0.5..0.5f64,
        1.5..12.0f64,
    )
        .prop_filter_map(
            "parameters admit a velocity circle",
            |(r, eta1, eta2, n, f)| {
                DoubleRotor::new(
                    PhysicalParams::double(r, eta1, eta2),
                    Integrals::double(n, 1.0, f),
                )
                .ok()
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exchange_is_an_involution(vt in -5.0..5.0f64, rim in -5.0..5.0f64, eta in 0.05..20.0f64) {
        let (a, b) = exchange(vt, rim, eta);
        let (c, d) = exchange(a, b, eta);
        let scale = vt.abs().max(rim.abs()).max(1.0);
        prop_assert!((c - vt).abs() <= 1e-14 * scale * (1.0 + eta));
        prop_assert!((d - rim).abs() <= 1e-14 * scale * (1.0 + eta));
    }

    #[test]
    fn exchange_keeps_both_invariants(vt in -5.0..5.0f64, rim in -5.0..5.0f64, eta in 0.05..20.0f64) {
        let (a, b) = exchange(vt, rim, eta);
        let lin = vt + eta * rim;
        let quad = vt * vt + eta * rim * rim;
        prop_assert!((a + eta * b - lin).abs() <= 1e-13 * (1.0 + eta) * (1.0 + lin.abs()));
        prop_assert!((a * a + eta * b * b - quad).abs() <= 1e-13 * (1.0 + eta) * (1.0 + quad));
    }

    #[test]
    fn reflections_are_involutions_and_stay_on_circle(sys in double_system(), s in 0.0..1.0f64) {
        let c = &sys.circle;
        prop_assert!(circle_diff(c.reflect_first(c.reflect_first(s)), s).abs() < 1e-12);
        prop_assert!(circle_diff(c.reflect_second(c.reflect_second(s)), s).abs() < 1e-12);
        let back = c.s_of_point(c.point_at(s)).unwrap();
        prop_assert!(circle_diff(back, s).abs() < 1e-10);
    }

    #[test]
    fn gamma_lies_in_open_half(sys in double_system()) {
        let g = sys.gamma();
        prop_assert!(g > 0.0 && g < 0.5, "gamma = {}", g);
    }

    #[test]
    fn u_is_invariant_under_second_reflection(sys in double_system(), s in 0.0..1.0f64) {
        let mirror = sys.circle.reflect_second(s);
        let margin = sys.u.boundary_distance(s).min(sys.u.boundary_distance(mirror));
        prop_assume!(margin > 1e-9);
        prop_assert_eq!(sys.u.contains(s), sys.u.contains(mirror));
    }

    #[test]
    fn base_step_inverts(sys in double_system(), s in 0.0..1.0f64, outer in any::<bool>()) {
        let sheet = if outer { Sheet::Outer } else { Sheet::Inner };
        prop_assume!(sys.u.boundary_distance(s) > 1e-9);
        prop_assume!(outer || !sys.u.contains(s));
        let b = BaseState::new(s, sheet);
        let next = base_step(b, &sys.circle, &sys.u).unwrap();
        prop_assume!(sys.u.boundary_distance(next.s) > 1e-9);
        let back = base_step_inverse(next, &sys.circle, &sys.u).unwrap();
        prop_assert_eq!(back.sheet, b.sheet);
        prop_assert!(circle_diff(back.s, b.s).abs() < 1e-12);
    }

    #[test]
    fn oracle_conserves_over_short_runs(sys in double_system(), s in 0.0..1.0f64, phi in 0.0..1.0f64) {
        prop_assume!(sys.is_alternating());
        let mut sim = Simulator::new(double_rotor_annulus(&sys), &double_rotor_state(&sys, s, phi)).unwrap();
        let c0 = sim.conserved();
        // grazing starts may stop early, which is fine here
        if sim.run_with(500, |_| {}).is_ok() {
            prop_assert!(conserved_drift(&c0, &sim.conserved()) < 1e-11);
        }
    }

    #[test]
    fn uniform_samples_lie_in_unit_interval(seed in any::<u64>()) {
        let mut rng = SampleRng::new(seed);
        for _ in 0..256 {
            let x = rng.uniform();
            prop_assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn wrap_lands_in_unit_interval(x in -1e6..1e6f64) {
        let w = wrap01(x);
        prop_assert!((0.0..1.0).contains(&w));
        prop_assert!(circle_diff(w, x).abs() < 1e-9);
    }

    #[test]
    fn step_count_is_nonincreasing(a in 0.0005..0.05f64, b in 0.0005..0.05f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(n_epsilon(lo).unwrap() >= n_epsilon(hi).unwrap());
    }

    #[test]
    fn small_rationals_classify_as_rational(p in 1u64..20, q in 2u64..40) {
        prop_assume!(p < q);
        let c = classify_value(p as f64 / q as f64, 40).unwrap();
        let is_rational = matches!(c.kind, GammaKind::Rational { .. });
        prop_assert!(is_rational, "{}/{} classified as {:?}", p, q, c.kind);
    }
}

#[test]
fn same_seed_same_stream() {
    let mut a = SampleRng::new(42);
    let mut b = SampleRng::new(42);
    assert!((0..1000).all(|_| a.next_u64() == b.next_u64()));
}
