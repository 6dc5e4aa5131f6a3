use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::estimates::{
    automorphism, automorphism_identity_residual, bump_derivative_check, cutoff_suite, diagonal_suite,
    eq_difference_sides, imp_ineq_suite, main_theorem_suite, smvp_suite, test_function_suite, CutoffSettings,
    LocalPlan, MainTheoremSettings, SmvpSettings,
};
use crate::geometry::{
    carleson_box_check, carleson_polycylinder_check, distance_bracket_with, inclusion_check, radial_bounds,
    radial_distance, upper_bound, volume_scaling, OptimizerSettings,
};
use crate::kernel::{
    build_kernel_model_with_limit, kernel_eval, reproducing_integral, weight_mass,
    KernelModel, DEFAULT_MOMENT_TOL, TRUNCATION_TOL,
};
use crate::linalg::{self, Point};
use crate::metric::{
    algebra_residuals, dual_norm_sup_check, form_norm, form_norm_antisymmetric, form_norm_quadratic, hessian,
    hessian_finite_difference, FormValue,
};
use crate::report::{Extrema, VerificationReport};
use crate::rng::{task_rng, uniform_in_complex_ball, unit_complex_vector};

use super::config::RunConfig;

pub const SUITES: [&str; 4] = ["metric", "geometry", "kernel", "estimates"];

/// Runs one named suite and returns its reports in a fixed order.
pub fn run_suite(name: &str, cfg: &RunConfig) -> Result<Vec<VerificationReport>> {
    match name {
        "metric" => metric_suite(cfg),
        "geometry" => geometry_suite(cfg),
        "kernel" => kernel_suite(cfg),
        "estimates" => estimates_suite(cfg),
        other => Err(LabError::OutOfRange(format!("unknown suite '{other}'"))),
    }
}

/// Kernel model certified at the configured radius cap.
pub fn kernel_model(cfg: &RunConfig) -> Result<KernelModel> {
    build_kernel_model_with_limit(
        cfg.n,
        cfg.count("k_max"),
        DEFAULT_MOMENT_TOL,
        cfg.radius_cap,
        cfg.count("kmax_limit"),
    )
}

fn random_point(seed: u64, tag: &str, i: usize, n: usize, radius: f64) -> Result<Point> {
    Point::new(uniform_in_complex_ball(&mut task_rng(seed, tag, i as u64), n, radius))
}

fn threshold_report(name: &str, n: usize, values: &[f64], tol: f64) -> VerificationReport {
    let mut rep = VerificationReport::new(name, n).param("tolerance", tol);
    for &v in values {
        rep.samples += 1;
        rep.extrema.observe(v);
        if !(v <= tol) {
            rep.violations += 1;
        }
    }
    rep
}

fn metric_suite(cfg: &RunConfig) -> Result<Vec<VerificationReport>> {
    let n = cfg.n;
    let seed = cfg.seed;
    let count = cfg.count("metric_samples");
    let residuals = (0..=count)
        .into_par_iter()
        .map(|i| {
            let z = if i == 0 { Point::origin(n)? } else { random_point(seed, "metric_algebra", i, n, 0.95)? };
            algebra_residuals(&z)
        })
        .collect::<Result<Vec<_>>>()?;
    let maxima: Vec<f64> = residuals.iter().map(|r| r.max()).collect();
    let mut algebra = threshold_report("hessian_algebra", n, &maxima, 1e-10).param("max_norm", 0.95).param("seed", seed);
    let worst = |f: fn(&crate::metric::AlgebraResiduals) -> f64| residuals.iter().map(f).fold(0.0, f64::max);
    algebra.metric("det_residual_max", worst(|r| r.det));
    algebra.metric("inverse_residual_max", worst(|r| r.inverse));
    algebra.metric("sqrt_residual_max", worst(|r| r.sqrt));
    algebra.metric("spectral_residual_max", worst(|r| r.spectral));

    let fd_points = cfg.count("fd_points");
    let fd = (0..fd_points)
        .into_par_iter()
        .map(|i| {
            let z = random_point(seed, "metric_fd", i, n, 0.8)?;
            let exact = hessian(&z)?.hess;
            Ok(hessian_finite_difference(&z, 1e-5).max_abs_diff(&exact) / exact.max_abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    let fd_rep = threshold_report("hessian_finite_difference", n, &fd, 1e-5)
        .param("step", 1e-5)
        .param("max_norm", 0.8)
        .param("seed", seed);

    let trials = cfg.count("dual_trials");
    let forms = (0..fd_points.max(1))
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut rng = task_rng(seed, "metric_forms", i as u64);
            let z = Point::new(uniform_in_complex_ball(&mut rng, n, 0.95))?;
            let comps: Vec<Complex64> = unit_complex_vector(&mut rng, n).into_iter().map(|c| c * rng.random_range(0.1..10.0)).collect();
            let m = hessian(&z)?;
            let mut worst = 0.0f64;
            for f in [FormValue::form01(comps.clone()), FormValue::form10(comps.clone())] {
                let norm = form_norm(&z, &f)?;
                worst = worst.max((form_norm_antisymmetric(&z, &f) - norm).abs() / norm);
                worst = worst.max((form_norm_quadratic(&m, &f) - norm).abs() / norm);
                let sup = dual_norm_sup_check(&z, &f, trials, seed ^ i as u64)?;
                worst = worst.max((sup / norm - 1.0).max(0.0));
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>>>()?;
    let forms_rep = threshold_report("form_norm", n, &forms, 1e-9).param("dual_trials", trials as u64).param("seed", seed);

    Ok(vec![algebra.finish(true, 0.0), fd_rep.finish(true, 0.0), forms_rep.finish(true, 0.0)])
}

fn geometry_suite(cfg: &RunConfig) -> Result<Vec<VerificationReport>> {
    let n = cfg.n;
    let seed = cfg.seed;
    let budget = cfg.count("bracket");
    let settings = OptimizerSettings::default();
    let mut reports = Vec::new();

    let radial = cfg.grid("radial");
    let rows = radial
        .par_iter()
        .map(|&t| -> Result<(f64, bool)> {
            let d = radial_distance(t)?;
            let (lo, hi) = radial_bounds(t);
            let inside = lo <= d * (1.0 + 1e-12) && d <= hi * (1.0 + 1e-12);
            if t == 0.0 {
                return Ok((0.0, inside && d == 0.0));
            }
            let (up, _) = upper_bound(&Point::origin(n)?, &Point::on_axis(n, t)?, budget, &settings)?;
            let gap = (up - d).abs() / d;
            Ok((gap, inside && gap <= 1e-3))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rep = VerificationReport::new("radial_distance", n).param("grid", radial.to_vec()).param("budget", budget as u64);
    for (gap, ok) in rows {
        rep.samples += 1;
        rep.extrema.observe(gap);
        if !ok {
            rep.violations += 1;
        }
    }
    reports.push(rep.finish(true, 0.0));

    let pairs = cfg.count("lipschitz_pairs");
    let slack = (0..pairs)
        .into_par_iter()
        .map(|i| -> Result<(f64, bool)> {
            let z = random_point(seed, "lipschitz_z", i, n, 0.95)?;
            let w = random_point(seed, "lipschitz_w", i, n, 0.95)?;
            let b = distance_bracket_with(&z, &w, budget, &settings)?;
            let lhs = (w.gap().ln() - z.gap().ln()).abs();
            let ok = lhs <= 2.0 * b.upper * (1.0 + 1e-12) && b.lower <= b.upper;
            Ok((if b.upper > 0.0 { lhs / (2.0 * b.upper) } else { 0.0 }, ok))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rep = VerificationReport::new("exhaustion_lipschitz", n).param("pairs", pairs as u64).param("seed", seed);
    for (ratio, ok) in slack {
        rep.samples += 1;
        rep.extrema.observe(ratio);
        if !ok {
            rep.violations += 1;
        }
    }
    reports.push(rep.finish(true, 0.0));

    let samples = cfg.count("samples");
    for (i, &t) in cfg.grid("z").iter().enumerate() {
        let z = Point::on_axis(n, t)?;
        for (j, &r) in cfg.grid("r").iter().enumerate() {
            let cell = seed ^ ((i * 64 + j) as u64) << 32;
            reports.push(carleson_box_check(&z, r, samples, cell)?);
            reports.push(carleson_polycylinder_check(&z, r, samples, cell)?);
            reports.push(inclusion_check(&z, r, samples, budget, cell)?);
        }
    }

    for &r in cfg.grid("volume_r") {
        let v = volume_scaling(n, r, cfg.grid("volume_z"), cfg.count("volume_samples"), budget, seed)?;
        reports.push(v.report(seed));
    }
    Ok(reports)
}

fn kernel_suite(cfg: &RunConfig) -> Result<Vec<VerificationReport>> {
    let n = cfg.n;
    let model = kernel_model(cfg)?;
    let mut reports = Vec::new();

    let mut rep = VerificationReport::new("kernel_truncation", n)
        .param("k_max", model.k_max() as u64)
        .param("radius_cap", model.radius_cap)
        .param("grid", cfg.grid("diag").to_vec());
    let change = model.truncation_certificate()?;
    for &t in cfg.grid("diag") {
        let (lk, _) = kernel_eval(&model, &Point::on_axis(n, t)?, &Point::on_axis(n, t)?)?;
        rep.samples += 1;
        rep.extrema.observe(lk);
        if !lk.is_finite() {
            rep.violations += 1;
        }
    }
    rep.metric("truncation_change", change);
    reports.push(rep.finish(change < TRUNCATION_TOL, 0.0));

    reports.push(diagonal_suite(&model, cfg.grid("diag"))?);

    let panels = cfg.count("quad_panels");
    let (lk0, _) = kernel_eval(&model, &Point::origin(n)?, &Point::origin(n)?)?;
    let mass = weight_mass(n, panels.max(1));
    let err = (lk0.exp() * mass - 1.0).abs();
    let mut rep = threshold_report("kernel_origin", n, &[err], 1e-8).param("panels", panels as u64);
    rep.metric("log_k00", lk0);
    rep.metric("weight_mass", mass);
    reports.push(rep.finish(true, 0.0));

    if n == 1 {
        // the quadrature only pairs z with |w| < 1, so certify up to |<z,w>| <= max |z|
        let reach = cfg.grid("reproducing_z").iter().copied().fold(0.25, f64::max).sqrt();
        let local = build_kernel_model_with_limit(1, cfg.count("k_max"), DEFAULT_MOMENT_TOL, reach, cfg.count("kmax_limit"))?;
        reports.push(reproducing_report(cfg, &local)?);
    }

    let pairs = cfg.count("cs_pairs");
    let excess = (0..pairs)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let z = random_point(cfg.seed, "kernel_cs_z", i, n, model.radius_cap)?;
            let w = random_point(cfg.seed, "kernel_cs_w", i, n, model.radius_cap)?;
            let (kzw, _) = kernel_eval(&model, &z, &w)?;
            let (kzz, _) = kernel_eval(&model, &z, &z)?;
            let (kww, _) = kernel_eval(&model, &w, &w)?;
            Ok((2.0 * kzw - kzz - kww) / (1.0 + kzz.abs() + kww.abs()))
        })
        .collect::<Result<Vec<f64>>>()?;
    let rep = threshold_report("kernel_cauchy_schwarz", n, &excess, 1e-9).param("pairs", pairs as u64).param("seed", cfg.seed);
    reports.push(rep.finish(true, 0.0));
    Ok(reports)
}

fn reproducing_report(cfg: &RunConfig, model: &KernelModel) -> Result<VerificationReport> {
    let grid = cfg.grid("reproducing_z");
    let (panels, angles) = (cfg.count("quad_panels").max(1), cfg.count("quad_angles").max(1));
    let mut rep = VerificationReport::new("kernel_reproducing", 1)
        .param("grid", grid.to_vec())
        .param("panels", panels as u64)
        .param("angles", angles as u64)
        .param("tolerance", 1e-6);
    let fs: [(u32, fn(Complex64) -> Complex64); 3] =
        [(0, |_| Complex64::new(1.0, 0.0)), (1, |w| w), (3, |w| w * w * w)];
    for &t in grid {
        let z = Point::on_axis(1, t)?;
        for (power, f) in fs {
            let got = reproducing_integral(model, &z, f, panels, angles)?;
            let want = f(z.coords()[0]);
            let err = (got - want).norm();
            rep.samples += 1;
            rep.extrema.observe(err);
            rep.metric(&format!("error_z{t}_w{power}"), err);
            if !(err <= 1e-6) {
                rep.violations += 1;
            }
        }
    }
    Ok(rep.finish(true, 0.0))
}

fn estimates_suite(cfg: &RunConfig) -> Result<Vec<VerificationReport>> {
    let n = cfg.n;
    let seed = cfg.seed;
    let mut reports = Vec::new();

    let pairs = cfg.count("identity_pairs");
    let rows = (0..pairs)
        .into_par_iter()
        .map(|i| -> Result<(f64, f64, f64)> {
            let z = random_point(seed, "identity_z", i, n, 0.95)?;
            let w = random_point(seed, "identity_w", i, n, 0.95)?;
            let auto = automorphism_identity_residual(&z, &w)?;
            let back = automorphism(&z, &automorphism(&z, &w)?)?;
            let involution = linalg::norm(&linalg::sub(&back, &w));
            let z = random_point(seed, "difference_z", i, n, 0.99)?;
            let w = random_point(seed, "difference_w", i, n, 0.99)?;
            let (lhs, rhs) = eq_difference_sides(&z, &w)?;
            Ok((auto, involution, (lhs - rhs).abs() / (1.0 + lhs.abs())))
        })
        .collect::<Result<Vec<_>>>()?;
    let auto: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let mut rep = threshold_report("automorphism_identity", n, &auto, 1e-12).param("max_norm", 0.95).param("seed", seed);
    rep.metric("involution_max", rows.iter().map(|r| r.1).fold(0.0, f64::max));
    rep.violations += rows.iter().filter(|r| !(r.1 <= 1e-10)).count() as u64;
    reports.push(rep.finish(true, 0.0));
    let diff: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let rep = threshold_report("eq_difference", n, &diff, 1e-10).param("max_norm", 0.99).param("seed", seed);
    reports.push(rep.finish(true, 0.0));

    for &r in cfg.grid("local_r") {
        let plan = LocalPlan {
            n,
            r,
            z_grid: cfg.grid("local_z").to_vec(),
            samples_per_z: cfg.count("local_samples"),
            seed,
        };
        reports.push(imp_ineq_suite(&plan)?);
        reports.push(test_function_suite(&plan)?);
    }

    for &r in cfg.grid("smvp_r") {
        let mut smvp = SmvpSettings::new(n, seed);
        smvp.r = r;
        smvp.z_grid = cfg.grid("smvp_z").to_vec();
        smvp.trials = cfg.count("smvp_trials");
        smvp.mc_samples = cfg.count("smvp_samples");
        smvp.budget = cfg.count("bracket");
        reports.push(smvp_suite(&smvp)?);
    }

    reports.push(bump_derivative_check(cfg.count("bump_points"))?);

    for (i, &t) in cfg.grid("z").iter().enumerate() {
        for (j, &delta) in cfg.grid("delta").iter().enumerate() {
            let settings = CutoffSettings::new(Point::on_axis(n, t)?, delta, cfg.count("cutoff_samples"), seed ^ ((i * 64 + j) as u64) << 32);
            reports.push(cutoff_suite(&settings)?);
        }
    }

    let model = kernel_model(cfg)?;
    let mut main = MainTheoremSettings::new(cfg.count("pairs"), seed);
    main.bracket_budget = cfg.count("bracket");
    main.max_radius = main.max_radius.min(model.radius_cap);
    reports.push(main_theorem_suite(&model, &main)?);
    Ok(reports)
}

/// Applies the configured inconclusive budget on top of each suite's own allowance.
pub fn apply_inconclusive_budget(reports: &mut [VerificationReport], permille: u64) {
    for rep in reports {
        let allowed = (permille as f64 / 1000.0 * rep.samples as f64).floor() as u64;
        if rep.inconclusive > allowed {
            rep.pass = false;
        }
    }
}

/// Min and max over the extrema of every report.
pub fn overall_extrema(reports: &[VerificationReport]) -> Extrema {
    let mut e = Extrema::empty();
    for r in reports {
        e.merge(&r.extrema);
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::Format;

    fn config(n: usize, budgets: &[&str]) -> RunConfig {
        let b: Vec<String> = budgets.iter().map(|s| s.to_string()).collect();
        RunConfig::build(n, 7, 0.99, &[], &b, "unused".into(), Format::Json).unwrap()
    }

    #[test]
    fn metric_suite_passes() {
        let reps = run_suite("metric", &config(2, &["metric_samples=200", "fd_points=20"])).unwrap();
        assert_eq!(reps.len(), 3);
        assert!(reps.iter().all(|r| r.pass), "{reps:?}");
        assert!(reps[0].metrics["det_residual_max"] < 1e-10);
    }

    #[test]
    fn kernel_suite_passes_for_n1() {
        let reps = run_suite("kernel", &config(1, &["quad_panels=60", "quad_angles=128"])).unwrap();
        let names: Vec<&str> = reps.iter().map(|r| r.suite_name.as_str()).collect();
        assert_eq!(names, ["kernel_truncation", "diagonal", "kernel_origin", "kernel_reproducing", "kernel_cauchy_schwarz"]);
        assert!(reps.iter().all(|r| r.pass), "{reps:?}");
    }

    #[test]
    fn low_kmax_limit_is_an_error() {
        let err = run_suite("kernel", &config(1, &["kmax_limit=4096"])).unwrap_err();
        assert!(matches!(err, LabError::TruncationLimit { .. }));
    }

    #[test]
    fn inconclusive_budget_tightens() {
        let mut r = VerificationReport::new("x", 1);
        r.samples = 100;
        r.inconclusive = 2;
        r.extrema.observe(1.0);
        let mut reps = vec![r.finish(true, 0.05)];
        apply_inconclusive_budget(&mut reps, 30);
        assert!(reps[0].pass);
        apply_inconclusive_budget(&mut reps, 10);
        assert!(!reps[0].pass);
    }
}
