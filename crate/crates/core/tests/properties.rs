//! Cross-module properties sampled with a fixed seed.

use modwave::dispersion::{parse_symbol, DispersionSymbol};
use modwave::hill::{assemble, spectrum, zero_wave};
use modwave::indices::ind;
use modwave::numerics::{CosineSeries, SAMPLING_SEED};
use modwave::pencil::{build_pencil, rescaled_charpoly};
use modwave::stokes::{expansion, newton_wave, EquationKind, DEFAULT_NEWTON_TOL};
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

fn builtin(i: usize) -> DispersionSymbol {
    match i {
        0 => DispersionSymbol::bbm(),
        1 => DispersionSymbol::boussinesq(),
        2 => DispersionSymbol::whitham(),
        _ => DispersionSymbol::fractional(3.0),
    }
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: RngSeed::Fixed(SAMPLING_SEED),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn parsed_builtins_match_closed_forms(i in 0usize..3, k in 1e-3f64..50.0) {
        let sym = builtin(i);
        let expr = sym.as_builtin().unwrap().as_expr();
        let parsed = parse_symbol(&expr, &Default::default()).unwrap();
        prop_assert!(parsed.warnings.is_empty());
        let (a, b) = (parsed.symbol.eval(k).unwrap(), sym.eval(k).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{expr} at {k}: {a} {b}");
    }

    #[test]
    fn group_speed_is_derivative_of_k_m(i in 0usize..4, k in 0.05f64..20.0) {
        let sym = builtin(i);
        let h = 1e-5 * k.max(1.0);
        let km = |x: f64| x * sym.eval(x).unwrap();
        let fd = (km(k + h) - km(k - h)) / (2.0 * h);
        let g = sym.group_speed(k).unwrap();
        prop_assert!((g - fd).abs() <= 1e-6 * g.abs().max(1e-3), "{k}: {g} {fd}");
    }

    #[test]
    fn index_sign_identity(i in 0usize..4, kind in 0usize..3, k in 0.1f64..10.0) {
        let kind = EquationKind::ALL[kind];
        let r = ind(kind, &builtin(i), k).unwrap();
        if r.ind.is_finite() && r.ind != 0.0 {
            prop_assert_eq!(r.ind.signum(), r.product_sign());
        }
    }

    #[test]
    fn index_is_insensitive_to_derivative_source(i in 0usize..4, k in 0.2f64..6.0) {
        let sym = builtin(i);
        let exact = ind(EquationKind::Bbm, &sym, k).unwrap().ind;
        let fd = ind(EquationKind::Bbm, &sym.clone().with_finite_differences(), k).unwrap().ind;
        // relative test, away from zeros of ind
        prop_assume!(exact.is_finite() && exact.abs() > 1e-3);
        prop_assert!((exact - fd).abs() <= 1e-5 * exact.abs(), "{k}: {exact} {fd}");
    }

    #[test]
    fn rescaled_coefficients_are_real(i in 0usize..4, bnesq: bool, k in 0.3f64..5.0,
                                      xi in 1e-3f64..5e-2, a in 0.0f64..2e-2) {
        let kind = if bnesq { EquationKind::Boussinesq } else { EquationKind::Bbm };
        if let Ok(p) = build_pencil(kind, &builtin(i), k, xi, a) {
            let poly = rescaled_charpoly(&p).unwrap();
            prop_assert!(poly.imag_residue <= 1e-10);
        }
    }

    #[test]
    fn pencil_eigenvalues_are_rescaled_roots(bnesq: bool, k in 0.3f64..5.0, xi in 1e-3f64..5e-2, a in 0.0f64..2e-2) {
        let (kind, sym) = if bnesq {
            (EquationKind::Boussinesq, DispersionSymbol::boussinesq())
        } else {
            (EquationKind::Bbm, DispersionSymbol::bbm())
        };
        let Ok(p) = build_pencil(kind, &sym, k, xi, a) else { return Ok(()) };
        let ev = p.eigenvalues().unwrap();
        let scale = ev.iter().map(|z| z.norm()).fold(xi, f64::max);
        for r in rescaled_charpoly(&p).unwrap().roots().unwrap() {
            let lambda = Complex64::new(0.0, -xi) * r;
            let best = ev.iter().map(|e| (e - lambda).norm()).fold(f64::MAX, f64::min);
            prop_assert!(best <= 1e-7 * scale, "{kind} {k} {xi} {a}: {lambda} vs {ev:?}");
        }
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn newton_stays_within_cubic_bound(i in 0usize..2, k in prop::sample::select(vec![0.5, 1.0, 2.0, 4.0]),
                                       a in -0.02f64..0.02) {
        let (kind, sym) = if i == 0 {
            (EquationKind::Bbm, DispersionSymbol::bbm())
        } else {
            (EquationKind::Boussinesq, DispersionSymbol::boussinesq())
        };
        let wave = newton_wave(kind, &sym, k, a, 32, DEFAULT_NEWTON_TOL).unwrap();
        let stokes = CosineSeries::new(expansion(kind, &sym, k, a).unwrap().u_cos(32));
        let err = wave.u_series().l2_distance(&stokes);
        prop_assert!(err <= 10.0 * a.abs().powi(3) + 1e-14, "{kind} {k} {a}: {err}");
    }

    #[test]
    fn zero_state_spectra_are_imaginary(i in 0usize..4, kind in 0usize..3, k in 0.3f64..3.0, xi in 0.0f64..0.5) {
        let kind = EquationKind::ALL[kind];
        let sym = builtin(i);
        let wave = zero_wave(kind, &sym, k, 24).unwrap();
        let s = spectrum(&assemble(kind, &sym, &wave, xi, 24).unwrap(), &sym).unwrap();
        let worst = s.eigenvalues.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
        prop_assert!(worst <= 1e-10, "{kind} {k} {xi}: {worst}");
    }

    #[test]
    fn spectra_are_conjugate_under_xi_reflection(bnesq: bool, k in 0.5f64..2.5, xi in 0.01f64..0.5) {
        let (kind, sym) = if bnesq {
            (EquationKind::Boussinesq, DispersionSymbol::boussinesq())
        } else {
            (EquationKind::Bbm, DispersionSymbol::bbm())
        };
        let wave = newton_wave(kind, &sym, k, 0.01, 16, DEFAULT_NEWTON_TOL).unwrap();
        let plus = spectrum(&assemble(kind, &sym, &wave, xi, 16).unwrap(), &sym).unwrap();
        let minus = spectrum(&assemble(kind, &sym, &wave, -xi, 16).unwrap(), &sym).unwrap();
        for z in &plus.eigenvalues {
            let best = minus.eigenvalues.iter().map(|w| (z - w.conj()).norm()).fold(f64::MAX, f64::min);
            prop_assert!(best < 1e-8, "{kind} {k} {xi}: {z}");
        }
    }
}
