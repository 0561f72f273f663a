use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use proptest::prelude::*;

use zwm_tomography::forms::{round_robin, OffsetRule};
use zwm_tomography::fringe::angle_diff;
use zwm_tomography::matrix::trace_overlap;
use zwm_tomography::reconstruction::{extract_elements, SettingFit};
use zwm_tomography::{
    closed_form_pattern, fidelity, fit_fringe, haar_random, nearest_unitary, plan_schedule,
    reconstruct, CompoundForm, ComplexMatrix, NoiseConfig, PhaseGridSpec, PhaseMode, Protocol,
    Simulator, ThetaChoice, UnitaryMatrix,
};

fn grid() -> Vec<f64> {
    PhaseGridSpec::default().grid().unwrap()
}

fn compound_plan(n: usize) -> zwm_tomography::MeasurementPlan {
    plan_schedule(n, Protocol::Compound, &PhaseGridSpec::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fidelity_symmetric_and_phase_blind(n in 2usize..7, s1 in 0u64..1000, s2 in 0u64..1000, g in -PI..PI) {
        let a = haar_random(n, s1).unwrap();
        let b = haar_random(n, s2).unwrap();
        let ab = fidelity(&a, &b).unwrap();
        prop_assert!((ab - fidelity(&b, &a).unwrap()).abs() < 1e-14);
        prop_assert!((0.0..=1.0).contains(&ab));
        let shifted = a.matrix().scale(Complex64::from_polar(1.0, g));
        prop_assert!((trace_overlap(&shifted, a.matrix()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nearest_unitary_is_idempotent(n in 2usize..7, seed in 0u64..1000, eps in 0.0f64..0.2) {
        let u = haar_random(n, seed).unwrap();
        let noisy = ComplexMatrix::from_fn(n, |i, j| {
            u.matrix().get(i, j) + Complex64::new(eps * ((i + 2 * j) as f64).sin(), eps * ((3 * i + j) as f64).cos())
        }).unwrap();
        let once = nearest_unitary(&noisy).unwrap();
        let twice = nearest_unitary(once.matrix()).unwrap();
        prop_assert!(once.matrix().max_abs_diff(twice.matrix()).unwrap() < 1e-12);
        prop_assert!(nearest_unitary(u.matrix()).unwrap().matrix().max_abs_diff(u.matrix()).unwrap() < 1e-12);
    }

    #[test]
    fn basic_forms_of_a_compound_commute(n in 2usize..9, idx in 0usize..9, theta in 0.0f64..(2.0 * PI)) {
        let forms = round_robin(n);
        let pairs = forms[idx % forms.len()].clone();
        let compound = CompoundForm::new(pairs, theta, n).unwrap();
        let basics = compound.basic_forms();
        for a in &basics {
            for b in &basics {
                let ab = a.matrix().compose(&b.matrix()).unwrap();
                let ba = b.matrix().compose(&a.matrix()).unwrap();
                prop_assert!(ab.matrix().max_abs_diff(ba.matrix()).unwrap() < 1e-14);
            }
        }
    }

    #[test]
    fn noiseless_round_trip(n in 2usize..9, seed in 0u64..10_000) {
        let u = haar_random(n, seed).unwrap();
        let rep = reconstruct(&Simulator::ideal(u.clone()), &compound_plan(n), PhaseMode::Absolute, Some(&u)).unwrap();
        prop_assert!(rep.estimate.max_abs_diff(u.matrix()).unwrap() < 1e-8);
    }

    #[test]
    fn relative_mode_fixes_reference_argument(n in 2usize..7, seed in 0u64..10_000, offset in -PI..PI) {
        let u = haar_random(n, seed).unwrap();
        let noise = NoiseConfig {
            phase_offset_mode: zwm_tomography::PhaseOffsetMode::Hidden,
            hidden_offset: Some(offset),
            ..NoiseConfig::default()
        };
        let sim = Simulator::new(u.clone(), 0.5, 1.0, noise).unwrap();
        let rep = reconstruct(&sim, &compound_plan(n), PhaseMode::Relative, Some(&u)).unwrap();
        match rep.phase_convention {
            zwm_tomography::reconstruction::PhaseConvention::Relative { row, col, .. } => {
                prop_assert!(rep.estimate.get(row, col).arg().abs() < 1e-12);
            }
            other => prop_assert!(false, "unexpected convention {other:?}"),
        }
        prop_assert!(trace_overlap(&rep.estimate, u.matrix()).unwrap() > 1.0 - 1e-9);
    }
}

#[test]
fn basic_and_compound_protocols_agree() {
    for n in 2..=6 {
        for seed in 0..4 {
            let u = haar_random(n, 40 + seed).unwrap();
            let sim = Simulator::ideal(u.clone());
            let basic = plan_schedule(n, Protocol::Basic, &PhaseGridSpec::default()).unwrap();
            let a = reconstruct(&sim, &basic, PhaseMode::Absolute, None).unwrap();
            let b = reconstruct(&sim, &compound_plan(n), PhaseMode::Absolute, None).unwrap();
            let diff = a.estimate.max_abs_diff(&b.estimate).unwrap();
            assert!(diff < 1e-10, "n={n} seed={seed}: {diff:e}");
        }
    }
}

fn form_fits(u: &UnitaryMatrix, form: &CompoundForm) -> HashMap<(ThetaChoice, usize), SettingFit> {
    let mut fits = HashMap::new();
    for theta in [ThetaChoice::Zero, ThetaChoice::HalfPi] {
        let o = form.with_theta(theta.radians()).matrix();
        for &(q, r) in form.pairs() {
            for mode in [q, r] {
                let p = closed_form_pattern(u, &o, mode, &grid(), 0.5, 1.0).unwrap();
                fits.insert((theta, mode), SettingFit { setting_id: mode, fit: fit_fringe(&p).unwrap() });
            }
        }
    }
    fits
}

#[test]
fn each_form_yields_four_estimates_per_pair() {
    for n in 2..=9 {
        let u = haar_random(n, 9 + n as u64).unwrap();
        for pairs in round_robin(n) {
            let form = CompoundForm::new(pairs.clone(), 0.0, n).unwrap();
            let est = extract_elements(&form, &form_fits(&u, &form), 1e-9).unwrap();
            assert_eq!(est.len(), 4 * pairs.len());
            for e in &est {
                let got = e.value();
                let want = u.matrix().get(e.row, e.col);
                assert!((got - want).norm() < 1e-10, "n={n} U[{}][{}]", e.row, e.col);
            }
        }
    }
}

#[test]
fn minus_pi_rule_on_real_positive_element() {
    // A real rotation has arg U_rq = 0, so the q fringe at a quarter turn must
    // sit at -pi and the rule has to add pi back.
    let u = CompoundForm::new(vec![(0, 1)], 0.4, 2).unwrap().matrix();
    assert!(u.matrix().get(1, 0).re > 0.0);
    let form = CompoundForm::new(vec![(0, 1)], 0.0, 2).unwrap();
    let fits = form_fits(&u, &form);
    let raw = fits[&(ThetaChoice::HalfPi, 0)].fit.phase;
    assert!(angle_diff(raw, -PI).abs() < 1e-12, "raw phase {raw}");
    let est = extract_elements(&form, &fits, 1e-9).unwrap();
    let rq = est.iter().find(|e| (e.row, e.col) == (1, 0)).unwrap();
    assert_eq!(rq.offset_rule, OffsetRule::MinusPi);
    assert!(rq.argument.abs() < 1e-12);
}

#[test]
fn coherence_scales_visibility() {
    let u = haar_random(4, 3).unwrap();
    let o = CompoundForm::new(vec![(0, 2), (1, 3)], FRAC_PI_2, 4).unwrap().matrix();
    let flat = closed_form_pattern(&u, &o, 1, &grid(), 0.5, 0.0).unwrap();
    assert!(flat.values().all(|v| (v - 0.5).abs() < 1e-15));
    assert_eq!(fit_fringe(&flat).unwrap().visibility, 0.0);
    let full = fit_fringe(&closed_form_pattern(&u, &o, 1, &grid(), 0.5, 1.0).unwrap()).unwrap();
    for c in [0.1, 0.5, 0.9] {
        let part = fit_fringe(&closed_form_pattern(&u, &o, 1, &grid(), 0.5, c).unwrap()).unwrap();
        assert!((part.visibility - c * full.visibility).abs() < 1e-12);
        assert!(angle_diff(part.phase, full.phase).abs() < 1e-10);
    }
}

fn visibility_spread(counts: f64, seeds: u64) -> f64 {
    let u = zwm_tomography::named_gate("hadamard4", 4).unwrap();
    let plan = compound_plan(4);
    let setting = &plan.settings[0];
    let vis: Vec<f64> = (0..seeds)
        .map(|seed| {
            let sim = Simulator::new(u.clone(), 0.5, 1.0, NoiseConfig::poisson(counts, seed)).unwrap();
            fit_fringe(&sim.simulate(setting).unwrap()).unwrap().visibility
        })
        .collect();
    let mean = vis.iter().sum::<f64>() / vis.len() as f64;
    (vis.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vis.len() - 1) as f64).sqrt()
}

#[test]
fn poisson_error_shrinks_as_inverse_sqrt_counts() {
    let low = visibility_spread(1e3, 200);
    let high = visibility_spread(1e5, 200);
    let ratio = low / high;
    assert!((ratio - 10.0).abs() <= 3.0, "spread ratio {ratio} ({low:e} / {high:e})");
}
