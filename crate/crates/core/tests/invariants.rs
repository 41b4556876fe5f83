use mirrorport::dynamics::propagator;
use mirrorport::gaussian::{
    physicality_defect, relative_symplectic_defect, symplectic_defect, CovMatrix2,
};
use mirrorport::optomech::{compute_couplings, PhysicalParams};
use mirrorport::protocol::{
    conditional_correlation, effective_occupation, fidelity_from_covariances,
};
use mirrorport::{
    coeffs_analytic, fidelity_coherent, fidelity_no_heterodyne, period, teleport_covariance,
    Couplings, ThermalOccupation,
};
use proptest::prelude::*;

fn couplings() -> impl Strategy<Value = Couplings> {
    (0.0..3.0f64, 0.05..3.0f64).prop_map(|(chi, gap)| Couplings::new(chi, chi + gap).unwrap())
}

fn reference() -> Couplings {
    compute_couplings(&PhysicalParams::reference()).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn metric_is_preserved(cp in couplings(), x in 0.0..1.0f64) {
        let t = x * period(&cp).unwrap();
        prop_assert!(symplectic_defect(&propagator(&cp, t).unwrap()) <= 1e-10);
    }

    #[test]
    fn propagator_is_a_one_parameter_group(cp in couplings(), x in 0.0..1.0f64, y in 0.0..1.0f64) {
        let tp = period(&cp).unwrap();
        let (t1, t2) = (x * tp, y * tp);
        let joint = propagator(&cp, t1 + t2).unwrap();
        let split = propagator(&cp, t1).unwrap().compose(&propagator(&cp, t2).unwrap());
        prop_assert!((joint.m - split.m).amax() <= 1e-10);
    }

    #[test]
    fn reference_propagator_invariants(x in 0.0..1.0f64, y in 0.0..1.0f64) {
        // Entries reach ~4e6 here, so defects are measured against the size of
        // the products that form them.
        let cp = reference();
        let tp = period(&cp).unwrap();
        let (t1, t2) = (x * tp, y * tp);
        let joint = propagator(&cp, t1 + t2).unwrap();
        prop_assert!(relative_symplectic_defect(&joint) <= 1e-10);
        let (m1, m2) = (propagator(&cp, t1).unwrap(), propagator(&cp, t2).unwrap());
        let split = m1.compose(&m2);
        let scale = (m1.max_abs_entry() * m2.max_abs_entry()).max(1.0);
        prop_assert!((joint.m - split.m).amax() / scale <= 1e-10);
    }

    #[test]
    fn coefficients_are_affine_in_occupation(cp in couplings(), x in 0.0..1.0f64, n in 0.0..100.0f64) {
        let t = x * period(&cp).unwrap();
        let g0 = coeffs_analytic(&cp, ThermalOccupation(0.0), t).unwrap().as_array();
        let g1 = coeffs_analytic(&cp, ThermalOccupation(1.0), t).unwrap().as_array();
        let gn = coeffs_analytic(&cp, ThermalOccupation(n), t).unwrap().as_array();
        for i in 0..6 {
            prop_assert!(close(gn[i], g0[i] + n * (g1[i] - g0[i]), 1e-11));
        }
    }

    #[test]
    fn occupations_are_non_negative(cp in couplings(), x in 0.0..1.0f64, n in 0.0..100.0f64) {
        let t = x * period(&cp).unwrap();
        let g = coeffs_analytic(&cp, ThermalOccupation(n), t).unwrap();
        prop_assert!(g.a() >= 0.0 && g.b() >= 0.0 && g.e() >= 0.0);
        prop_assert!(effective_occupation(&g).unwrap() >= 0.0);
    }

    #[test]
    fn coefficients_revive_after_a_period(cp in couplings(), x in 0.0..1.0f64, n in 0.0..100.0f64) {
        let tp = period(&cp).unwrap();
        let a = coeffs_analytic(&cp, ThermalOccupation(n), x * tp).unwrap().as_array();
        let b = coeffs_analytic(&cp, ThermalOccupation(n), x * tp + tp).unwrap().as_array();
        for i in 0..6 {
            prop_assert!(close(a[i], b[i], 1e-9));
        }
    }

    #[test]
    fn conditioned_state_is_physical(cp in couplings(), x in 0.0..1.0f64, n in 0.0..1000.0f64) {
        let t = x * period(&cp).unwrap();
        let g = coeffs_analytic(&cp, ThermalOccupation(n), t).unwrap();
        prop_assert!(physicality_defect(&conditional_correlation(&g).unwrap()) <= 1e-10);
    }

    #[test]
    fn reference_conditioned_state_is_physical(x in 0.0..1.0f64, n in prop::sample::select(vec![0.0, 1.0, 10.0, 1000.0])) {
        let cp = reference();
        let t = x * period(&cp).unwrap();
        let g = coeffs_analytic(&cp, ThermalOccupation(n), t).unwrap();
        prop_assert!(physicality_defect(&conditional_correlation(&g).unwrap()) <= 1e-10);
    }

    #[test]
    fn fidelity_and_added_noise_agree(x in 0.0..1.0f64, n in 0.0..1000.0f64, use_reference in any::<bool>(), cp in couplings()) {
        let cp = if use_reference { reference() } else { cp };
        let t = x * period(&cp).unwrap();
        let g = coeffs_analytic(&cp, ThermalOccupation(n), t).unwrap();
        let n_eff = effective_occupation(&g).unwrap();
        let f = fidelity_coherent(&g).unwrap();
        prop_assert!((f - 1.0 / (1.0 + n_eff)).abs() <= 1e-12);

        let gin = CovMatrix2::coherent();
        let gout = teleport_covariance(&conditional_correlation(&g).unwrap(), &gin).unwrap();
        prop_assert!(close(gout.xx() - gin.xx(), n_eff, 1e-12));
        prop_assert!(close(gout.pp() - gin.pp(), n_eff, 1e-12));
        prop_assert!(gout.xp().abs() <= 1e-12);
        prop_assert!(close(fidelity_from_covariances(&gin, &gout), f, 1e-12));
        prop_assert!(fidelity_no_heterodyne(&g) <= f + 1e-12);
    }
}
