mod common;

use common::{field, grid_models};
use ks_core::analysis::{
    consistency_order, dft, dft_power, etdrk4_integrate, profile_compare, profile_compare_shifted,
    time_averaged_spectrum, TestProfile,
};
use ks_core::continuation::{bifurcation_diagram, StepControl};
use ks_core::experiments::steady_on_branch;
use ks_core::integrate::{integrate, Trajectory};
use ks_core::{GridField, ModelKind, ModelSpec, PeriodicSequence, System};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval(u in prop::collection::vec(-3.0..3.0f64, 4..64)) {
        let total: f64 = dft(&u).iter().map(|c| c.norm_sqr()).sum();
        let mean_sq = u.iter().map(|v| v * v).sum::<f64>() / u.len() as f64;
        prop_assert!((total - mean_sq).abs() <= 1e-12 * mean_sq.max(1.0));
    }

    #[test]
    fn power_ignores_translation(u in prop::collection::vec(-3.0..3.0f64, 5..64), k in 0isize..64) {
        let shifted = PeriodicSequence::new(u.clone()).unwrap().shifted(k).into_vec();
        let a = dft_power(&field(u));
        let b = dft_power(&field(shifted));
        for ((_, p), (_, q)) in a.iter().zip(&b) {
            prop_assert!((p - q).abs() <= 1e-12 * p.max(*q).max(1.0));
        }
    }

    #[test]
    fn real_fields_have_conjugate_symmetric_coefficients(u in prop::collection::vec(-3.0..3.0f64, 4..40)) {
        let c = dft(&u);
        let n = u.len();
        for k in 1..n {
            prop_assert!((c[k] - c[n - k].conj()).norm() <= 1e-13);
        }
    }
}

#[test]
fn power_of_constants_and_single_modes() {
    let s = GridField::sample(16, |x| x.sin()).unwrap();
    let p = dft_power(&s);
    assert!((p[0].1 - 0.25).abs() < 1e-15);
    assert!(p[1..].iter().all(|(_, v)| *v < 1e-30));
    let c = field(vec![2.5; 16]);
    assert!(dft_power(&c).iter().all(|(_, v)| *v < 1e-30));
}

/// Orders 2, 4, 6 for both families; the holistic model of order `p`
/// keeps coupling terms up to `γ^{p-1}`.
fn expected_order(kind: ModelKind) -> (f64, f64) {
    match kind {
        ModelKind::Holistic { order } => ((2 * order - 4) as f64, if order == 5 { 0.3 } else { 0.2 }),
        ModelKind::Centered { order } => (order as f64, 0.2),
        _ => unreachable!(),
    }
}

#[test]
fn consistency_orders_with_and_without_nonlinearity() {
    let grids = [32, 48, 64, 96, 128];
    let profile = TestProfile::Mixed;
    for alpha in [7.0, 0.0] {
        for kind in grid_models() {
            let r = consistency_order(&ModelSpec::new(kind, alpha), profile, &grids).unwrap();
            let (want, tol) = expected_order(kind);
            assert!(r.monotone, "{kind} alpha={alpha}: {:?}", r.max_errors);
            assert!(
                (r.fitted_order - want).abs() <= tol,
                "{kind} alpha={alpha}: order {} errors {:?}",
                r.fitted_order,
                r.max_errors
            );
        }
    }
}

#[test]
fn consistency_rejects_galerkin_and_bad_grids() {
    let gal = ModelSpec::new(ModelKind::Galerkin { modes: 4 }, 7.0);
    assert_eq!(consistency_order(&gal, TestProfile::Mixed, &[32, 64]).unwrap_err().class(), "unsupported");
    let hol = ModelSpec::new(ModelKind::Holistic { order: 5 }, 7.0);
    assert_eq!(consistency_order(&hol, TestProfile::Mixed, &[64, 32]).unwrap_err().class(), "usage");
    assert_eq!(consistency_order(&hol, TestProfile::Mixed, &[8, 32]).unwrap_err().class(), "usage");
}

#[test]
fn steady_trajectory_spectrum_is_its_own_power() {
    let u: Vec<f64> = common::random_values(12, 5);
    let traj = Trajectory {
        times: vec![0.0, 1.0, 2.0, 3.0],
        states: vec![u.clone(); 4],
    };
    let s = time_averaged_spectrum(&traj, 0.5).unwrap();
    assert_eq!(s.samples_used, 3);
    for ((_, p), q) in dft_power(&field(u)).iter().zip(&s.power) {
        assert!((p - q).abs() <= 1e-15 * p.max(1.0));
    }
    assert_eq!(time_averaged_spectrum(&traj, 3.0).unwrap_err().class(), "insufficient-data");
}

#[test]
fn profile_compare_basics() {
    let a = GridField::sample(16, |x| x.sin() + 0.2 * (3.0 * x).cos()).unwrap();
    assert_eq!(profile_compare(&a, &a).unwrap(), 0.0);
    let fine = GridField::sample(64, |x| x.sin() + 0.2 * (3.0 * x).cos()).unwrap();
    assert!(profile_compare(&a, &fine).unwrap() <= 1e-12);
    assert_eq!(profile_compare(&fine, &a).unwrap_err().class(), "incompatible-domains");
}

#[test]
fn exponential_reference_agrees_with_rk4() {
    let sys = System::new(
        ModelSpec::new(ModelKind::Centered { order: 6 }, 20.0),
        Some("full:32".parse().unwrap()),
    )
    .unwrap();
    let x0: Vec<f64> = (0..32)
        .map(|j| (std::f64::consts::PI * j as f64 / 32.0).sin().abs())
        .collect();
    let a = etdrk4_integrate(&sys, &x0, 1e-4, 0.3, usize::MAX).unwrap();
    let b = integrate(&sys, &x0, 1e-5, 0.3, usize::MAX).unwrap();
    let (a, b) = (a.last().unwrap(), b.last().unwrap());
    let d = a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    assert!(d <= 1e-7, "{d:e}");
}

fn steady_profile(model: &str, geometry: &str, alpha: f64) -> (GridField, f64) {
    let sys = System::new(
        ModelSpec::new(model.parse().unwrap(), 0.0),
        Some(geometry.parse().unwrap()),
    )
    .unwrap();
    let d = bifurcation_diagram(&sys, (0.5, alpha + 2.0), StepControl::default()).unwrap();
    let s = steady_on_branch(&sys, &d, "bimodal-", alpha).unwrap();
    let u = sys.full_field(&s.x);
    let h = std::f64::consts::PI / (u.len() / 2) as f64;
    (field(u), 0.5 * h)
}

#[test]
fn holistic_steady_state_is_closer_to_the_reference() {
    let (reference, rs) = steady_profile("cd:6", "odd:48", 20.0);
    let gap = |model: &str| {
        let (u, s) = steady_profile(model, "odd:8", 20.0);
        profile_compare_shifted(&u, s, &reference, rs).unwrap()
    };
    let (hol, cd) = (gap("hol:5"), gap("cd:6"));
    assert!(hol < cd, "holistic {hol} vs centered {cd}");
}
