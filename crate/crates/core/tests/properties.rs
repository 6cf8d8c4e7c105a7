mod common;

use common::{field, five_point_scheme, grid_models, max_rel_diff, mixed_advection, printed_advection};
use ks_core::grid_models::{rhs_centered, rhs_holistic};
use ks_core::stencil::{central_diff_even, central_diff_odd_mu, Stencil};
use ks_core::{GridField, ModelKind, ModelSpec, PeriodicSequence, System};
use proptest::prelude::*;

fn rhs(u: &GridField, spec: &ModelSpec) -> Vec<f64> {
    let g = match spec.kind {
        ModelKind::Holistic { .. } => rhs_holistic(u, spec),
        _ => rhs_centered(u, spec),
    };
    g.unwrap().into_vec()
}

fn seq(u: Vec<f64>) -> PeriodicSequence {
    PeriodicSequence::new(u).unwrap()
}

fn values(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    n.prop_flat_map(|n| prop::collection::vec(-2.0..2.0f64, n))
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    let scale = a
        .iter()
        .chain(b)
        .fold(1.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * scale)
}

fn model() -> impl Strategy<Value = ModelKind> {
    prop::sample::select(grid_models())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn second_difference_twice_is_fourth(u in values(9..40)) {
        let u = seq(u);
        let twice = central_diff_even(&central_diff_even(&u, 2).unwrap(), 2).unwrap();
        let four = central_diff_even(&u, 4).unwrap();
        prop_assert!(close(twice.as_slice(), four.as_slice(), 1e-13));
    }

    #[test]
    fn operators_are_linear(
        u in prop::collection::vec(-2.0..2.0f64, 20),
        v in prop::collection::vec(-2.0..2.0f64, 20),
        a in -3.0..3.0f64,
        b in -3.0..3.0f64,
    ) {
        let w: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
        let (u, v, w) = (seq(u), seq(v), seq(w));
        for order in 1..=8 {
            let op = if order % 2 == 0 { central_diff_even } else { central_diff_odd_mu };
            let (ou, ov, ow) = (op(&u, order).unwrap(), op(&v, order).unwrap(), op(&w, order).unwrap());
            let comb: Vec<f64> = ou.as_slice().iter().zip(ov.as_slice()).map(|(x, y)| a * x + b * y).collect();
            prop_assert!(close(ow.as_slice(), &comb, 1e-13));
        }
    }

    #[test]
    fn operators_commute_with_shifts(u in values(10..30), k in -15isize..15) {
        let u = seq(u);
        for order in 1..=8 {
            let op = if order % 2 == 0 { central_diff_even } else { central_diff_odd_mu };
            let a = op(&u.shifted(k), order).unwrap();
            let b = op(&u, order).unwrap().shifted(k);
            prop_assert_eq!(a.as_slice(), b.as_slice());
        }
    }

    #[test]
    fn grid_models_are_translation_equivariant(
        kind in model(),
        u in values(12..28),
        k in -6isize..6,
        alpha in 0.0..70.0f64,
    ) {
        let spec = ModelSpec::new(kind, alpha);
        let shifted = field(seq(u.clone()).shifted(k).into_vec());
        let a = rhs(&shifted, &spec);
        let b = seq(rhs(&field(u), &spec)).shifted(k).into_vec();
        prop_assert!(close(&a, &b, 1e-12));
    }

    #[test]
    fn grid_models_are_reflection_equivariant(
        kind in model(),
        u in values(12..28),
        alpha in 0.0..70.0f64,
    ) {
        // (R u)_j = -u_{-j}
        let n = u.len();
        let reflect = |v: &[f64]| -> Vec<f64> { (0..n).map(|j| -v[(n - j) % n]).collect() };
        let spec = ModelSpec::new(kind, alpha);
        let a = rhs(&field(reflect(&u)), &spec);
        let b = reflect(&rhs(&field(u), &spec));
        prop_assert!(close(&a, &b, 1e-12));
    }

    #[test]
    fn odd_fields_stay_odd(kind in model(), half in values(6..14), alpha in 0.0..70.0f64) {
        // Antisymmetric about a node and about a cell face.
        let m = half.len();
        let nodal: Vec<f64> = (0..2 * m)
            .map(|j| match j {
                0 => 0.0,
                j if j < m => half[j],
                j if j == m => 0.0,
                j => -half[2 * m - j],
            })
            .collect();
        let centred: Vec<f64> = (0..2 * m)
            .map(|j| if j < m { half[j] } else { -half[2 * m - 1 - j] })
            .collect();
        let spec = ModelSpec::new(kind, alpha);
        let n = 2 * m;
        let g = rhs(&field(nodal), &spec);
        let scale = g.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for j in 0..n {
            prop_assert!((g[j] + g[(n - j) % n]).abs() <= 1e-12 * scale);
        }
        let g = rhs(&field(centred), &spec);
        let scale = g.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for j in 0..n {
            prop_assert!((g[j] + g[n - 1 - j]).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn holistic_rhs_is_a_quartic_in_gamma(
        p in 3u8..=5,
        u in values(12..20),
        alpha in 0.0..40.0f64,
        probe in 0.05..3.0f64,
    ) {
        let f = field(u);
        let at = |g: f64| rhs(&f, &ModelSpec::new(ModelKind::Holistic { order: p }, alpha).with_gamma(g));
        prop_assert!(at(0.0).iter().all(|v| *v == 0.0));
        // Lagrange interpolation through five nodes reproduces any quartic.
        let nodes = [0.0, 0.5, 1.0, 1.5, 2.0];
        let samples: Vec<Vec<f64>> = nodes.iter().map(|&g| at(g)).collect();
        let weights: Vec<f64> = (0..5)
            .map(|i| {
                (0..5)
                    .filter(|&k| k != i)
                    .map(|k| (probe - nodes[k]) / (nodes[i] - nodes[k]))
                    .product()
            })
            .collect();
        let predicted: Vec<f64> = (0..f.len())
            .map(|j| (0..5).map(|i| weights[i] * samples[i][j]).sum())
            .collect();
        prop_assert!(close(&predicted, &at(probe), 1e-9));
    }

    #[test]
    fn five_point_holistic_matches_pointwise_form(u in values(8..24), alpha in 0.0..70.0f64) {
        let f = field(u.clone());
        let got = rhs(&f, &ModelSpec::new(ModelKind::Holistic { order: 3 }, alpha));
        let want = five_point_scheme(&u, f.h, alpha);
        prop_assert!(max_rel_diff(&got, &want) <= 1e-12);
    }

    #[test]
    fn advection_blend_identity(u in values(8..24)) {
        let h = 0.3;
        for j in 0..u.len() as isize {
            let a = mixed_advection(&u, j, h);
            let b = printed_advection(&u, j, h);
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300) + 1e-15);
        }
    }

    #[test]
    fn half_shift_commutes_with_odd_dynamics(
        kind in model(),
        m in 8usize..16,
        seed in any::<u64>(),
        alpha in 0.0..70.0f64,
    ) {
        for geometry in [format!("odd:{m}"), format!("oddn:{m}")] {
            let sys = System::new(ModelSpec::new(kind, alpha), Some(geometry.parse().unwrap())).unwrap();
            let w = common::random_values(sys.dim(), seed);
            let a = sys.rhs(&sys.half_shift(&w).unwrap()).unwrap();
            let b = sys.half_shift(&sys.rhs(&w).unwrap()).unwrap();
            prop_assert!(close(&a, &b, 1e-12));
        }
    }

    #[test]
    fn galerkin_half_shift_commutes(m in 1usize..8, seed in any::<u64>(), alpha in 0.0..70.0f64, nl in any::<bool>()) {
        let kind = if nl { ModelKind::NonlinearGalerkin { modes: m } } else { ModelKind::Galerkin { modes: m } };
        let sys = System::new(ModelSpec::new(kind, alpha), None).unwrap();
        let b = common::random_values(m, seed);
        let x = sys.rhs(&sys.half_shift(&b).unwrap()).unwrap();
        let y = sys.half_shift(&sys.rhs(&b).unwrap()).unwrap();
        prop_assert!(close(&x, &y, 1e-12));
    }

    #[test]
    fn jacobian_product_is_step_independent(kind in model(), seed in any::<u64>(), alpha in 0.0..70.0f64) {
        let sys = System::new(ModelSpec::new(kind, alpha), Some("odd:10".parse().unwrap())).unwrap();
        let x = common::random_values(sys.dim(), seed);
        let v = common::random_values(sys.dim(), seed ^ 0x5eed);
        let (mut a, mut b) = (vec![0.0; sys.dim()], vec![0.0; sys.dim()]);
        sys.jvp_eps(&x, &v, 1e-3, &mut a);
        sys.jvp_eps(&x, &v, 1e-6, &mut b);
        // Rounding in f(x ± εv) scales with |f(x)|, not with |J v|.
        let scale = a.iter().chain(&sys.rhs(&x).unwrap()).fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!(a.iter().zip(&b).all(|(p, q)| (p - q).abs() <= 1e-9 * scale));
    }
}

#[test]
fn stencil_weight_structure() {
    for a in [2, 4, 6, 8] {
        let s = Stencil::even(a).unwrap();
        let sum: f64 = s.entries().map(|(_, w)| w).sum();
        assert_eq!(sum, 0.0, "delta^{a}");
    }
    for a in [1, 3, 5, 7] {
        let s = Stencil::odd_mu(a).unwrap();
        let w: Vec<(isize, f64)> = s.entries().collect();
        for &(o, x) in &w {
            let mirror = w.iter().find(|(p, _)| *p == -o).unwrap().1;
            assert_eq!(x, -mirror, "delta^{a} mu at offset {o}");
        }
    }
}
