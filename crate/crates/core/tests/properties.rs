use std::f64::consts::PI;

use parahyp_core::basis::{eigenpair, ModeForcing};
use parahyp_core::domain::{ForcingTerm, SpatialProfile, TemporalProfile};
use parahyp_core::modes::{mode_coefficients, DerivativeForm, Region, Variant};
use parahyp_core::oracle::{conjugation_solve, ConjugationSystem};
use parahyp_core::series::solve;
use parahyp_core::verify::lemma2_bound_check;
use parahyp_core::{Field, Forcing, ModeSolution, RectDomain, Side, TruncationPolicy};
use proptest::prelude::*;
use rand::SeedableRng;

fn trig() -> impl Strategy<Value = TemporalProfile> {
    (-2.0..2.0f64, 0.1..8.0f64, -PI..PI).prop_map(|(amplitude, omega, phase)| TemporalProfile::Trig {
        amplitude,
        omega,
        phase,
    })
}

fn poly() -> impl Strategy<Value = TemporalProfile> {
    prop::collection::vec(-1.5..1.5f64, 1..5).prop_map(|coeffs| TemporalProfile::Polynomial { coeffs })
}

fn expo() -> impl Strategy<Value = TemporalProfile> {
    (-1.0..1.0f64, -2.0..2.0f64).prop_map(|(amplitude, rate)| TemporalProfile::Exponential { amplitude, rate })
}

fn smooth_profile() -> impl Strategy<Value = TemporalProfile> {
    prop_oneof![trig(), poly(), expo()]
}

/// Random smooth mode forcing: one to three analytic profiles.
fn mode_forcing(t_max: f64) -> impl Strategy<Value = ModeForcing> {
    prop::collection::vec(smooth_profile(), 1..4).prop_map(move |p| ModeForcing::from_profiles(p, t_max))
}

fn lambda_multiple() -> impl Strategy<Value = f64> {
    (1..=10usize).prop_map(|k| k as f64 * PI)
}

fn mode(lambda: f64, forcing: ModeForcing) -> ModeSolution {
    let p = PI / lambda;
    let domain = RectDomain::new(p, forcing.t_max()).unwrap();
    ModeSolution::new(eigenpair(1, &domain).unwrap(), forcing, 1e-12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn seam_identities_hold(f in mode_forcing(1.0), lambda in lambda_multiple()) {
        let m = mode(lambda, f);
        let gaps = m.seam_gaps().unwrap();
        for g in gaps.iter().flatten() {
            prop_assert!(*g <= 1e-9, "gaps {:?}", gaps);
        }
        prop_assert_eq!(m.coefficients().a, m.coefficients().c);
    }

    #[test]
    fn mode_equations_hold(f in mode_forcing(1.0), lambda in lambda_multiple()) {
        let m = mode(lambda, f.clone());
        let l2 = lambda * lambda;
        for i in 0..50 {
            let t = i as f64 / 49.0;
            let r_plus = m.alpha_dtt(t).unwrap() + l2 * m.alpha(t).unwrap() - f.value(t);
            let r_minus = m.beta_dt(-t).unwrap() - l2 * m.beta(-t).unwrap() - f.value(-t);
            let scale = 1.0 + f.sup_bound(0).unwrap() + f.sup_bound(2).unwrap() / l2;
            prop_assert!(r_plus.abs() <= 1e-8 * scale, "plus {} at {}", r_plus, t);
            prop_assert!(r_minus.abs() <= 1e-8 * scale, "minus {} at {}", r_minus, t);
        }
    }

    #[test]
    fn expanded_forms_match_identities(f in mode_forcing(1.0), lambda in lambda_multiple(), t in 0.0..=1.0f64) {
        let m = mode(lambda, f);
        for form in DerivativeForm::ALL {
            let t = if form.region() == Region::Plus { t } else { -t };
            let expanded = m.closed_form(form, t, Variant::Expanded).unwrap();
            let identity = m.identity_form(form, t).unwrap();
            prop_assert!((expanded - identity).abs() <= 1e-7 * (1.0 + identity.abs()),
                "{:?} {} {}", form, expanded, identity);
        }
    }

    #[test]
    fn coefficients_match_linear_solve(f0 in -10.0..10.0f64, fp0 in -10.0..10.0f64, k in 1..=20usize) {
        let lambda = k as f64 * PI;
        let closed = mode_coefficients(f0, fp0, lambda);
        let solved = conjugation_solve(f0, fp0, lambda).unwrap();
        prop_assert!((closed.a - solved.a).abs() <= 1e-12);
        prop_assert!((closed.b - solved.b).abs() <= 1e-12);
        prop_assert!((closed.c - solved.c).abs() <= 1e-12);
        let det = ConjugationSystem::assemble(f0, fp0, lambda).determinant();
        prop_assert!(det.abs() >= lambda.powi(3));
    }

    #[test]
    fn integral_bounds_hold(f in mode_forcing(1.5), lambda in lambda_multiple(), seed in any::<u64>()) {
        let domain = RectDomain::new(PI / lambda, 1.5).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for c in lemma2_bound_check(&f, lambda, &domain, 3, &mut rng).unwrap() {
            prop_assert!(c.pass, "{:?}", c);
        }
    }
}

fn spatial() -> impl Strategy<Value = SpatialProfile> {
    prop_oneof![
        (1..6usize).prop_map(|k| SpatialProfile::SineMode { k }),
        (-2.0..2.0f64).prop_map(|amplitude| SpatialProfile::PolyBubble { amplitude }),
    ]
}

fn forcing() -> impl Strategy<Value = Forcing> {
    prop::collection::vec((spatial(), smooth_profile()), 1..3)
        .prop_map(|terms| Forcing::new(terms.into_iter().map(|(s, t)| ForcingTerm::new(s, t)).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solutions_are_linear(f1 in forcing(), f2 in forcing(), x in 0.0..=1.0f64, t in -1.0..=1.0f64) {
        let d = RectDomain::new(1.0, 1.0).unwrap();
        let policy = TruncationPolicy::fixed(10);
        let s1 = solve(&f1, &d, &policy, 1e-13).unwrap();
        let s2 = solve(&f2, &d, &policy, 1e-13).unwrap();
        let s12 = solve(&f1.plus(&f2), &d, &policy, 1e-13).unwrap();
        let side = if t >= 0.0 { Side::Plus } else { Side::Minus };
        for field in Field::ALL {
            let sum = s1.eval(field, x, t, side).unwrap() + s2.eval(field, x, t, side).unwrap();
            let whole = s12.eval(field, x, t, side).unwrap();
            prop_assert!((sum - whole).abs() <= 1e-10, "{:?}: {} vs {}", field, sum, whole);
        }
    }

    #[test]
    fn walls_and_seam(f in forcing(), k in 0..33usize) {
        let d = RectDomain::new(1.0, 1.0).unwrap();
        let sol = solve(&f, &d, &TruncationPolicy::fixed(8), 1e-13).unwrap();
        for t in [-1.0, -0.3, 0.4, 1.0] {
            prop_assert!(sol.eval_u(0.0, t, Side::Auto).unwrap().abs() <= 1e-15);
            prop_assert!(sol.eval_u(1.0, t, Side::Auto).unwrap().abs() <= 1e-15);
        }
        let x = k as f64 / 32.0;
        for field in [Field::U, Field::Ut, Field::Utt] {
            let jump = sol.eval(field, x, 0.0, Side::Plus).unwrap() - sol.eval(field, x, 0.0, Side::Minus).unwrap();
            prop_assert!(jump.abs() <= 1e-9, "{:?} jump {}", field, jump);
        }
    }
}
