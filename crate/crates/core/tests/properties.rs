use std::sync::OnceLock;

use bergman_lab::cli::{parse_budget, parse_grid};
use bergman_lab::estimates::{automorphism, automorphism_identity_residual};
use bergman_lab::geometry::{chord_upper, distance_bracket, lower_bound};
use bergman_lab::kernel::{build_kernel_model, export_table, import_table, kernel_eval, KernelModel, DEFAULT_MOMENT_TOL};
use bergman_lab::metric::{hessian, vec_norm_h};
use bergman_lab::{ComplexMatrix, Point};
use num_complex::Complex64;
use proptest::prelude::*;

/// Points of `B_n` with `|z| <= radius`, drawn as a direction scaled into the ball.
fn point(n: usize, radius: f64) -> impl Strategy<Value = Point> {
    (prop::collection::vec(-1.0f64..1.0, 2 * n), 0.0f64..1.0).prop_filter_map("zero direction", move |(v, t)| {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-6 {
            return None;
        }
        let s = radius * t / norm;
        Point::new(v.chunks(2).map(|c| Complex64::new(c[0] * s, c[1] * s)).collect()).ok()
    })
}

fn pair(radius: f64) -> impl Strategy<Value = (Point, Point)> {
    (1usize..=3).prop_flat_map(move |n| (point(n, radius), point(n, radius)))
}

fn vector(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| Complex64::new(a, b)), n)
}

fn model(n: usize) -> &'static KernelModel {
    static MODELS: [OnceLock<KernelModel>; 2] = [OnceLock::new(), OnceLock::new()];
    MODELS[n - 1].get_or_init(|| build_kernel_model(n, 128, DEFAULT_MOMENT_TOL, 0.9).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_is_hermitian_positive_with_known_determinant(
        (z, xi) in (1usize..=4).prop_flat_map(|n| (point(n, 0.97), vector(n)))
    ) {
        let m = hessian(&z).unwrap();
        prop_assert!(m.hess.is_hermitian(1e-12 * m.hess.max_abs()));
        let s = z.norm_sq();
        let det = (1.0 + s) / (1.0 - s).powi(2 * z.dim() as i32 + 1);
        prop_assert!((m.det - det).abs() <= 1e-10 * det);
        prop_assert!(m.hess.mul(&m.inv).max_abs_diff(&ComplexMatrix::identity(z.dim())) <= 1e-10);
        // the metric norm is sandwiched by the tangent and radial eigenvalues
        let e2: f64 = xi.iter().map(|x| x.norm_sqr()).sum();
        let h2 = vec_norm_h(&z, &xi).unwrap().powi(2);
        prop_assert!(h2 >= m.eig_tangent * e2 * (1.0 - 1e-12));
        prop_assert!(h2 <= m.eig_radial * e2 * (1.0 + 1e-12));
    }

    #[test]
    fn automorphism_is_an_involution((z, w) in pair(0.9)) {
        let back = automorphism(&z, &automorphism(&z, &w).unwrap()).unwrap();
        let err = back.coords().iter().zip(w.coords()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-10, "err {err}");
        prop_assert!(automorphism_identity_residual(&z, &w).unwrap() <= 1e-12);
        let origin = automorphism(&z, &z).unwrap();
        prop_assert!(origin.norm() <= 1e-12);
    }

    #[test]
    fn distance_bounds_are_ordered((z, w) in pair(0.9)) {
        let lower = lower_bound(&z, &w).unwrap();
        let chord = if z == w { 0.0 } else { chord_upper(&z, &w, 64).unwrap() };
        prop_assert!(lower >= 0.0);
        prop_assert!(lower <= chord * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn distance_bracket_is_consistent_and_symmetric((z, w) in pair(0.9)) {
        let a = distance_bracket(&z, &w, 8).unwrap();
        let b = distance_bracket(&w, &z, 8).unwrap();
        prop_assert!(a.lower <= a.upper);
        prop_assert!(a.overlaps(&b));
    }

    #[test]
    fn kernel_table_round_trip(n in 1usize..=2, k in 16usize..200, cap in 0.1f64..0.8) {
        let m = KernelModel::with_order(n, k, DEFAULT_MOMENT_TOL, cap).unwrap();
        prop_assert_eq!(import_table(&export_table(&m)).unwrap(), m);
    }

    #[test]
    fn kernel_cauchy_schwarz((z, w) in (1usize..=2).prop_flat_map(|n| (point(n, 0.9), point(n, 0.9)))) {
        let m = model(z.dim());
        let (kzw, _) = kernel_eval(m, &z, &w).unwrap();
        let (kzz, _) = kernel_eval(m, &z, &z).unwrap();
        let (kww, _) = kernel_eval(m, &w, &w).unwrap();
        prop_assert!(2.0 * kzw <= kzz + kww + 1e-9 * (1.0 + kzz.abs() + kww.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn grid_lists_round_trip(name in "[a-z][a-z0-9_]{0,20}", values in prop::collection::vec(0.0f64..1.0, 1..20)) {
        let spec = format!("{name}={}", values.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
        prop_assert_eq!(parse_grid(&spec).unwrap(), (name, values));
    }

    #[test]
    fn grid_ranges_are_sorted_and_bounded(start in 0.0f64..0.5, len in 0.0f64..0.49, step in 0.01f64..0.2) {
        let spec = format!("g={start}:{}:{step}", start + len);
        let (_, v) = parse_grid(&spec).unwrap();
        prop_assert!(!v.is_empty());
        prop_assert!(v.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(v.iter().all(|x| *x >= 0.0 && *x < 1.0));
    }

    #[test]
    fn budgets_round_trip(name in "[a-z][a-z0-9_]{0,20}", value in 0u64..1_000_000_000) {
        prop_assert_eq!(parse_budget(&format!("{name}={value}")).unwrap(), (name.clone(), value));
        if value <= 1_000_000 {
            prop_assert_eq!(parse_budget(&format!("{name}={value}k")).unwrap().1, value * 1000);
        }
        if value <= 1000 {
            prop_assert_eq!(parse_budget(&format!("{name}={value}M")).unwrap().1, value * 1_000_000);
        }
    }

    #[test]
    fn parsers_never_panic(s in "\\PC{0,64}") {
        let _ = parse_grid(&s);
        let _ = parse_budget(&s);
    }
}
