//! Property tests for the invariants that hold over whole parameter ranges.

use num_complex::Complex64;
use proptest::prelude::*;
use scatterlab::forward::{
    farfield_plane_wave, reflection_coefficients, Direction, ScattererConfig, ScattererKind,
    TruncationPolicy, Vec3, WaveNumber,
};
use scatterlab::phase::{cos_phase_diff, cross_term, triangle_phase_consistency};
use scatterlab::special;

fn unit_direction() -> impl Strategy<Value = Direction> {
    (0.0..std::f64::consts::PI, 0.0..std::f64::consts::TAU)
        .prop_map(|(theta, phi)| Direction::from_polar(theta, phi))
}

fn phasor(max_mag: f64) -> impl Strategy<Value = Complex64> {
    (0.0..max_mag, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

fn lossless_kind() -> impl Strategy<Value = ScattererKind> {
    prop_oneof![
        Just(ScattererKind::Dirichlet),
        Just(ScattererKind::Neumann),
        (0.1..5.0).prop_map(|re| ScattererKind::Impedance(Complex64::new(re, 0.0))),
        (1.1..4.0).prop_map(|n| ScattererKind::Medium(Complex64::new(n, 0.0))),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cross_term_is_exact_algebra(a in phasor(5.0), b in phasor(5.0)) {
        let got = cross_term(a.norm(), b.norm(), (a + b).norm()).unwrap();
        let want = (a * b.conj()).re;
        prop_assert!((got - want).abs() <= 1e-12 * (a.norm_sqr() + b.norm_sqr()).max(1e-30));
    }

    #[test]
    fn recovered_cosine_stays_in_range(a in phasor(5.0), b in phasor(5.0)) {
        if let Some(c) = cos_phase_diff(a.norm(), b.norm(), (a + b).norm(), 1e-12).unwrap() {
            prop_assert!((-1.0..=1.0).contains(&c));
            // and it matches the true phase difference
            let want = (a.arg() - b.arg()).cos();
            prop_assert!((c - want).abs() < 1e-9 * (1.0 + 1.0 / (a.norm() * b.norm())));
        }
    }

    #[test]
    fn true_complex_triples_are_always_consistent(
        a in phasor(3.0), b in phasor(3.0), c in phasor(3.0)
    ) {
        let out = triangle_phase_consistency(
            [a.norm(), b.norm(), c.norm()],
            [(a + b).norm(), (b + c).norm(), (c + a).norm()],
            1e-9,
        ).unwrap();
        if let Some(residual) = out {
            prop_assert!(residual <= 1e-6, "residual {residual}");
        }
    }

    #[test]
    fn lossless_modes_sit_on_the_unit_circle(
        kind in lossless_kind(),
        ka in 0.2..8.0,
    ) {
        let config = ScattererConfig::new(Vec3::ZERO, ka, kind).unwrap();
        let k = WaveNumber::new(1.0).unwrap();
        let n_max = TruncationPolicy::default().plane_cutoff(ka);
        let refl = reflection_coefficients(&config, k, n_max).unwrap();
        for r in refl {
            let s = (Complex64::new(1.0, 0.0) + 2.0 * r).norm();
            prop_assert!((s - 1.0).abs() < 1e-11, "|1+2R| = {s}");
        }
    }

    #[test]
    fn reciprocity_for_shifted_spheres(
        xhat in unit_direction(),
        d in unit_direction(),
        cx in -0.5..0.5,
        cy in -0.5..0.5,
    ) {
        let config = ScattererConfig::new(
            Vec3::new(cx, cy, 0.2),
            1.0,
            ScattererKind::Dirichlet,
        ).unwrap();
        let k = WaveNumber::new(2.0).unwrap();
        let policy = TruncationPolicy::default();
        let forward = farfield_plane_wave(&config, k, xhat, d, &policy).unwrap();
        let swapped = farfield_plane_wave(&config, k, d.flipped(), xhat.flipped(), &policy).unwrap();
        prop_assert!((forward - swapped).norm() <= 1e-12);
    }

    #[test]
    fn translation_leaves_plane_modulus_unchanged(
        xhat in unit_direction(),
        d in unit_direction(),
        hx in -1.0..1.0,
        hz in -1.0..1.0,
    ) {
        let k = WaveNumber::new(2.0).unwrap();
        let policy = TruncationPolicy::default();
        let base = ScattererConfig::new(Vec3::ZERO, 1.0, ScattererKind::Dirichlet).unwrap();
        let moved = base.translated(Vec3::new(hx, 0.3, hz));
        let u0 = farfield_plane_wave(&base, k, xhat, d, &policy).unwrap();
        let u1 = farfield_plane_wave(&moved, k, xhat, d, &policy).unwrap();
        prop_assert!((u0.norm() - u1.norm()).abs() <= 1e-12);
    }

    #[test]
    fn wronskian_holds_across_orders_and_arguments(n in 0usize..40, x in 0.1f64..40.0) {
        let j = special::spherical_j(n, x);
        let jp = special::spherical_j_prime(n, x);
        let y = special::spherical_y(n, x);
        let yp = special::spherical_y_prime(n, x);
        prop_assume!(y.is_finite() && yp.is_finite());
        let w = x * x * (j * yp - jp * y);
        prop_assert!((w - 1.0).abs() < 1e-9, "wronskian {w} at n={n}, x={x}");
    }

    #[test]
    fn legendre_stays_bounded(n in 0usize..80, t in -1.0f64..1.0) {
        prop_assert!(special::legendre_p(n, t).abs() <= 1.0 + 1e-12);
    }
}
