//! Cross-module invariants and oracle comparisons that back the unit
//! suites: an independent textbook stepper, stability-disk checks, and
//! randomized structure tests.

#![allow(clippy::needless_range_loop, clippy::type_complexity)]

use proptest::prelude::*;

use enrk_core::denominator::{parse_kind, validate, DenominatorKind, DenominatorSpec};
use enrk_core::harness::{convergence_table, ReferenceCache};
use enrk_core::integrator::integrate;
use enrk_core::models::{predator_prey, spectrum_classification};
use enrk_core::stability::{
    elementary_stability_threshold, p_polynomial, stability_coeffs, Eigenvalue,
};
use enrk_core::tableau::{registry_get, ButcherTableau, REGISTRY_NAMES};

/// Deliberately plain re-implementation of the explicit Runge-Kutta step,
/// kept independent of the library's stepper.
fn textbook_rk(t: &ButcherTableau, h: f64, f: &dyn Fn(&[f64]) -> Vec<f64>, y0: &[f64], steps: usize) -> Vec<f64> {
    let mut y = y0.to_vec();
    for _ in 0..steps {
        let mut k: Vec<Vec<f64>> = Vec::with_capacity(t.s);
        for i in 0..t.s {
            let mut arg = y.clone();
            for j in 0..i {
                if t.a[i][j] != 0.0 {
                    for (a, kj) in arg.iter_mut().zip(&k[j]) {
                        *a += h * t.a[i][j] * kj;
                    }
                }
            }
            k.push(f(&arg));
        }
        for i in 0..t.s {
            if t.b[i] != 0.0 {
                for (yd, ki) in y.iter_mut().zip(&k[i]) {
                    *yd += h * t.b[i] * ki;
                }
            }
        }
    }
    y
}

#[test]
fn standard_spec_matches_textbook_stepper() {
    // a couple of smooth nonlinear fields with fixed coefficients
    let fields: Vec<Box<dyn Fn(&[f64]) -> Vec<f64>>> = vec![
        Box::new(|y: &[f64]| {
            vec![
                -0.7 * y[0] + 0.2 * y[1] + 0.1 * (y[1]).sin(),
                0.3 * y[0] - 0.5 * y[1] + 0.05 * (y[0] * y[1]).cos(),
            ]
        }),
        Box::new(|y: &[f64]| {
            vec![
                y[1],
                -y[0] - 0.1 * y[1] + 0.01 * y[0] * y[0],
                -0.2 * y[2] + 0.1 * y[0],
            ]
        }),
    ];
    let starts: Vec<Vec<f64>> = vec![vec![1.0, -0.5], vec![0.3, 0.1, 2.0]];
    for (f, y0) in fields.iter().zip(&starts) {
        for name in REGISTRY_NAMES {
            let t = registry_get(name).unwrap();
            let spec = DenominatorSpec::standard(t.p);
            let g = |y: &[f64], dy: &mut [f64]| {
                let v = f(y);
                dy.copy_from_slice(&v);
            };
            let traj = integrate(&t, &spec, &g, y0, 0.05, 50).unwrap();
            let oracle = textbook_rk(&t, 0.05, f.as_ref(), y0, 50);
            for (a, b) in traj.terminal().iter().zip(&oracle) {
                assert!(
                    (a - b).abs() <= 1e-13,
                    "{name}: {a} vs textbook {b}"
                );
            }
        }
    }
}

#[test]
fn rk43_standard_small_h_stays_positive() {
    // well inside the positivity threshold (phi = 0.01 << H = 2), a long
    // standard run never leaves the positive orthant
    let m = predator_prey(2.0, 1.0, 10.0);
    let t = registry_get("rk43").unwrap();
    let traj = integrate(
        &t,
        &DenominatorSpec::standard(3),
        m.rhs().as_ref(),
        &[1.0, 1.6],
        0.01,
        1000,
    )
    .unwrap();
    assert!(traj
        .states
        .iter()
        .all(|state| state.iter().all(|&v| v > 0.0)));
}

#[test]
fn eigen_extraction_rejects_large_dimensions() {
    let j5 = vec![vec![0.0; 5]; 5];
    assert!(enrk_core::models::eigenvalues_dense(&j5).is_err());
}

#[test]
fn disk_check_inside_threshold() {
    // for phi below phi*, stable eigenvalues stay inside the unit disk and
    // the unstable direction stays outside
    let m = predator_prey(2.0, 1.0, 10.0);
    let cls = spectrum_classification(&m).unwrap();
    for name in REGISTRY_NAMES {
        let t = registry_get(name).unwrap();
        let sp = stability_coeffs(&t);
        let phi_star = elementary_stability_threshold(&t, &cls).unwrap();
        assert!(phi_star.is_finite());
        for i in 0..20 {
            let phi = phi_star * (i as f64 + 0.5) / 20.5;
            for lambda in &cls.stable_eigs {
                let r = sp.eval(lambda.as_complex() * phi).norm();
                assert!(r < 1.0, "{name}: |R| = {r} at phi = {phi} (stable side)");
            }
            let outside = cls
                .unstable_eigs
                .iter()
                .any(|lambda| sp.eval(lambda.as_complex() * phi).norm() > 1.0);
            assert!(outside, "{name}: no unstable eigenvalue outside at phi = {phi}");
        }
    }
}

#[test]
fn standard_rates_match_claimed_order() {
    let cache = ReferenceCache::new();
    let m = predator_prey(2.0, 1.0, 10.0);
    for name in REGISTRY_NAMES {
        let t = registry_get(name).unwrap();
        let rows = convergence_table(
            &cache,
            &t,
            &m,
            &[DenominatorSpec::standard(t.p)],
            &[0.1, 0.05, 0.01],
            10.0,
            1e-4,
        )
        .unwrap();
        for row in &rows[1..] {
            let cell = &row.cells[0];
            if cell.error.unwrap() < 1e-11 {
                continue;
            }
            let rate = cell.rate.unwrap();
            assert!(
                (rate - t.p as f64).abs() <= 0.2,
                "{name}: standard rate {rate} vs order {}",
                t.p
            );
        }
    }
}

#[test]
fn small_h_order_pattern() {
    // |phi(h) - h| <= C h^{p+1} with C calibrated at the largest h
    let cases = [
        (DenominatorKind::Phi2 { tau2: 0.095, m: 4 }, 1u32),
        (DenominatorKind::Phi2 { tau2: 0.002, m: 8 }, 4),
        (
            DenominatorKind::Phi3 {
                tau1: 0.68,
                tau2: 0.002,
                m: 8,
                k: 8,
            },
            4,
        ),
        (
            DenominatorKind::Phi3 {
                tau1: 1.0005,
                tau2: 0.095,
                m: 4,
                k: 2,
            },
            1,
        ),
    ];
    for (kind, p) in cases {
        let spec = DenominatorSpec::new(kind, p).unwrap();
        assert!(validate(&spec, f64::INFINITY).order_preserving);
        let pw = (p + 1) as i32;
        let h0 = 1e-2;
        let c = (spec.eval(h0).unwrap() - h0).abs() / h0.powi(pw);
        for h in [1e-3, 1e-4] {
            let dev = (spec.eval(h).unwrap() - h).abs();
            assert!(
                dev <= c * h.powi(pw) + 1e-30,
                "{kind:?}: dev {dev} at h={h} exceeds C h^{pw}"
            );
        }
    }
}

#[test]
fn phi3_approaches_phi1_for_large_h() {
    let spec3 = DenominatorSpec::new(
        DenominatorKind::Phi3 {
            tau1: 0.68,
            tau2: 0.002,
            m: 8,
            k: 8,
        },
        4,
    )
    .unwrap();
    let spec1 = DenominatorSpec::new(DenominatorKind::Phi1 { tau1: 0.68 }, 4).unwrap();
    let mut prev = f64::INFINITY;
    for h in [2.0, 3.0, 5.0, 10.0] {
        let gap = (spec3.eval(h).unwrap() - spec1.eval(h).unwrap()).abs();
        assert!(gap <= prev + 1e-18);
        prev = gap;
    }
    assert!(prev < 1e-12);
}

#[test]
fn derivative_at_zero_is_one() {
    for kind in [
        DenominatorKind::Standard,
        DenominatorKind::Phi1 { tau1: 1.0005 },
        DenominatorKind::Phi2 { tau2: 0.095, m: 4 },
        DenominatorKind::Phi3 {
            tau1: 0.68,
            tau2: 0.002,
            m: 8,
            k: 8,
        },
    ] {
        let spec = DenominatorSpec::new(kind, 1).unwrap();
        let h = 1e-8;
        let slope = spec.eval(h).unwrap() / h;
        assert!((slope - 1.0).abs() <= 1e-6, "{kind:?}: slope {slope}");
    }
}

proptest! {
    #[test]
    fn parse_print_round_trip_random(
        tau1 in 0.01f64..10.0,
        tau2 in 1e-6f64..1.0,
        m in 1u32..12,
        k in 1u32..12,
        which in 0usize..4,
    ) {
        let kind = match which {
            0 => DenominatorKind::Standard,
            1 => DenominatorKind::Phi1 { tau1 },
            2 => DenominatorKind::Phi2 { tau2, m },
            _ => DenominatorKind::Phi3 { tau1, tau2, m, k },
        };
        let reparsed = parse_kind(&kind.to_string()).unwrap();
        prop_assert_eq!(reparsed, kind);
    }

    #[test]
    fn denominator_positive_everywhere(
        h in 1e-6f64..50.0,
        tau1 in 0.01f64..5.0,
        tau2 in 1e-5f64..0.5,
        m in 1u32..10,
        k in 1u32..10,
    ) {
        // exp(-700) is near the f64 underflow edge; past it phi2 collapses
        // to exactly zero, the accepted degenerate (identity-step) limit
        let representable = tau2 * h.powi(m as i32) < 700.0;
        for kind in [
            DenominatorKind::Standard,
            DenominatorKind::Phi1 { tau1 },
            DenominatorKind::Phi2 { tau2, m },
            DenominatorKind::Phi3 { tau1, tau2, m, k },
        ] {
            let spec = DenominatorSpec::new(kind, 1).unwrap();
            let v = spec.eval(h).unwrap();
            if representable || !matches!(kind, DenominatorKind::Phi2 { .. }) {
                prop_assert!(v > 0.0, "{kind:?} at h={h}");
            } else {
                prop_assert!(v >= 0.0);
            }
        }
    }

    #[test]
    fn p_polynomial_identity_random(
        re in -3.0f64..3.0,
        im in -3.0f64..3.0,
        phi in 0.01f64..5.0,
        idx in 0usize..5,
    ) {
        prop_assume!(re.hypot(im) > 0.05);
        let t = registry_get(REGISTRY_NAMES[idx]).unwrap();
        let sp = stability_coeffs(&t);
        let lambda = Eigenvalue::new(re, im);
        let poly = p_polynomial(&sp, &lambda).unwrap();
        let direct = sp.eval(lambda.as_complex() * phi).norm_sqr() - 1.0;
        let via = phi * poly.eval(phi);
        prop_assert!((direct - via).abs() <= 1e-9 * direct.abs().max(1.0));
    }

    #[test]
    fn eigenvalue_polar_consistency(re in -10.0f64..10.0, im in -10.0f64..10.0) {
        prop_assume!(re != 0.0 || im != 0.0);
        let e = Eigenvalue::new(re, im);
        let c = e.cos_theta();
        let s = e.sin_theta();
        prop_assert!((c * c + s * s - 1.0).abs() <= 1e-12);
        prop_assert!((e.modulus() * c - re).abs() <= 1e-12 * e.modulus().max(1.0));
        prop_assert!((e.modulus() * s - im).abs() <= 1e-12 * e.modulus().max(1.0));
    }
}
