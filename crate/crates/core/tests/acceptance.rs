//! Acceptance criteria 1-11. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::time::{Duration, Instant};

use bergman_lab::cli::run_with;
use bergman_lab::estimates::{
    automorphism_identity_residual, diagonal_suite, eq_difference_sides, main_theorem_suite, MainTheoremSettings,
};
use bergman_lab::geometry::{
    distance_bracket, inclusion_check, radial_bounds, radial_distance, upper_bound, volume_scaling, OptimizerSettings,
};
use bergman_lab::kernel::{build_kernel_model, kernel_eval, reproducing_integral, DEFAULT_MOMENT_TOL};
use bergman_lab::metric::hessian;
use bergman_lab::rng::{task_rng, uniform_in_complex_ball};
use bergman_lab::{ComplexMatrix, Point};
use num_complex::Complex64;

const ALGEBRA_TOL: f64 = 1e-10;
const FD_TOL: f64 = 1e-5;
const RADIAL_OPT_TOL: f64 = 1e-3;
const INCONCLUSIVE_SHARE: f64 = 0.01;
const VOLUME_SLOPE_TOL: f64 = 0.02;
const VOLUME_RATIO_SPREAD: f64 = 2.0;
const REPRODUCING_TOL: f64 = 1e-6;
const ORIGIN_TOL: f64 = 1e-8;
const DOUBLING_TOL: f64 = 1e-6;
const DIFFERENCE_TOL: f64 = 1e-10;
const AUTOMORPHISM_TOL: f64 = 1e-12;

/// `E_2(1) = e^{-1} - E_1(1)`, so that `int_D e^{-psi} dA = pi E_2(1)` for `n = 1`.
const E2_AT_ONE: f64 = 0.367_879_441_171_442_33 - 0.219_383_934_395_520_27;

type Outcome = Result<String, String>;

fn point(seed: u64, tag: &str, i: usize, n: usize, radius: f64) -> Point {
    Point::new(uniform_in_complex_ball(&mut task_rng(seed, tag, i as u64), n, radius)).unwrap()
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn entry(m: &ComplexMatrix, j: usize, k: usize) -> Complex64 {
    m.row(j)[k]
}

/// `d^2 psi / dz_j d conj(z_k) = delta_jk / g^2 + 2 conj(z_j) z_k / g^3`.
fn hessian_oracle(z: &Point) -> ComplexMatrix {
    let g = 1.0 - z.norm_sq();
    let zc = z.coords();
    ComplexMatrix::from_fn(z.dim(), |j, k| {
        let d = if j == k { 1.0 / (g * g) } else { 0.0 };
        c(d) + zc[j].conj() * zc[k] * (2.0 / (g * g * g))
    })
}

fn determinant(m: &ComplexMatrix) -> Complex64 {
    let n = m.dim();
    let mut a: Vec<Vec<Complex64>> = (0..n).map(|j| m.row(j).to_vec()).collect();
    let mut det = c(1.0);
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x][col].norm().total_cmp(&a[y][col].norm())).unwrap();
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= a[col][col];
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for k in col..n {
                let v = a[col][k];
                a[r][k] -= f * v;
            }
        }
    }
    det
}

fn max_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut m = 0.0f64;
    for j in 0..n {
        for k in 0..n {
            m = m.max((entry(a, j, k) - entry(b, j, k)).norm());
        }
    }
    m
}

fn mat_vec(m: &ComplexMatrix, v: &[Complex64]) -> Vec<Complex64> {
    (0..m.dim()).map(|j| (0..m.dim()).map(|k| entry(m, j, k) * v[k]).sum()).collect()
}

fn vnorm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn criterion_1() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let n = 1 + i % 3;
        let z = point(11, "acceptance_algebra_z", i, n, 0.95);
        let m = hessian(&z).map_err(|e| e.to_string())?;
        let oracle = hessian_oracle(&z);
        let scale = m.hess.max_abs();
        let s = z.norm_sq();
        let g = 1.0 - s;
        let det_closed = (1.0 + s) / g.powi(2 * n as i32 + 1);
        let errs = [
            max_diff(&m.hess, &oracle) / scale,
            (determinant(&oracle) - c(det_closed)).norm() / det_closed,
            (m.det - det_closed).abs() / det_closed,
            max_diff(&m.hess.mul(&m.inv), &ComplexMatrix::identity(n)),
            max_diff(&m.sqrt.mul(&m.sqrt), &oracle) / scale,
        ];
        worst = errs.iter().copied().fold(worst, f64::max);
        // conj(z) spans the radial eigenline, its orthogonal complement the tangent one
        let zb: Vec<Complex64> = z.coords().iter().map(|x| x.conj()).collect();
        if z.norm() > 1e-3 {
            let hz = mat_vec(&oracle, &zb);
            let r: Vec<Complex64> = hz.iter().zip(&zb).map(|(a, b)| a - b * m.eig_radial).collect();
            worst = worst.max(vnorm(&r) / (m.eig_radial * vnorm(&zb)));
        }
        for j in 0..n {
            let mut e = vec![c(0.0); n];
            e[j] = c(1.0);
            let p: Complex64 = e.iter().zip(&zb).map(|(a, b)| a * b.conj()).sum::<Complex64>() / s.max(f64::MIN_POSITIVE);
            let t: Vec<Complex64> = if s > 0.0 { e.iter().zip(&zb).map(|(a, b)| a - b * p).collect() } else { e };
            if vnorm(&t) < 1e-3 {
                continue;
            }
            let ht = mat_vec(&oracle, &t);
            let r: Vec<Complex64> = ht.iter().zip(&t).map(|(a, b)| a - b * m.eig_tangent).collect();
            worst = worst.max(vnorm(&r) / (m.eig_radial * vnorm(&t)));
        }
    }
    let msg = format!("max residual {worst:.3e} over 1000 (n,z), tol {ALGEBRA_TOL:e}");
    if worst <= ALGEBRA_TOL { Ok(msg) } else { Err(msg) }
}

fn psi_real(x: &[f64]) -> f64 {
    1.0 / (1.0 - x.iter().map(|v| v * v).sum::<f64>())
}

fn criterion_2() -> Outcome {
    let h = 1e-4;
    let mut worst = 0.0f64;
    for i in 0..100 {
        let n = 1 + i % 3;
        let z = point(12, "acceptance_fd", i, n, 0.8);
        let x: Vec<f64> = z.coords().iter().flat_map(|c| [c.re, c.im]).collect();
        let d2 = |a: usize, b: usize| {
            let at = |sa: f64, sb: f64| {
                let mut y = x.clone();
                y[a] += sa * h;
                y[b] += sb * h;
                psi_real(&y)
            };
            (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h * h)
        };
        let fd = ComplexMatrix::from_fn(n, |j, k| {
            let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
            Complex64::new(d2(xj, xk) + d2(yj, yk), d2(xj, yk) - d2(yj, xk)) * 0.25
        });
        let exact = hessian(&z).map_err(|e| e.to_string())?.hess;
        worst = worst.max(max_diff(&fd, &exact) / exact.max_abs());
    }
    let msg = format!("max relative error {worst:.3e} over 100 points, tol {FD_TOL:e}");
    if worst <= FD_TOL { Ok(msg) } else { Err(msg) }
}

/// Composite Simpson rule for the radial integrand.
fn radial_oracle(t: f64) -> f64 {
    let m = 20_000;
    let f = |s: f64| (1.0 + s * s).sqrt() / (1.0 - s * s).powf(1.5);
    let h = t / m as f64;
    let mut sum = f(0.0) + f(t);
    for i in 1..m {
        sum += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

fn criterion_3() -> Outcome {
    let settings = OptimizerSettings::default();
    let (mut sandwich, mut oracle_err, mut opt_err) = (0u32, 0.0f64, 0.0f64);
    for i in 0..50 {
        let t = 0.98 * i as f64 / 49.0;
        let d = radial_distance(t).map_err(|e| e.to_string())?;
        let (lo, hi) = radial_bounds(t);
        if !(lo <= d * (1.0 + 1e-12) && d <= hi * (1.0 + 1e-12)) {
            sandwich += 1;
        }
        if t > 0.0 {
            oracle_err = oracle_err.max((d - radial_oracle(t)).abs() / d);
            let n = 1 + i % 2;
            let (up, _) = upper_bound(&Point::origin(n).unwrap(), &Point::on_axis(n, t).unwrap(), 20, &settings)
                .map_err(|e| e.to_string())?;
            opt_err = opt_err.max((up - d).abs() / d);
        }
    }
    let msg = format!(
        "50 t values: sandwich violations {sandwich}, integral vs Simpson {oracle_err:.2e}, optimizer gap {opt_err:.2e} (tol {RADIAL_OPT_TOL:e})"
    );
    if sandwich == 0 && oracle_err < 1e-6 && opt_err <= RADIAL_OPT_TOL { Ok(msg) } else { Err(msg) }
}

fn criterion_4() -> Outcome {
    let mut violations = 0u32;
    let mut tightest = 0.0f64;
    for i in 0..1000 {
        let n = 1 + i % 2;
        let z = point(14, "acceptance_lip_z", i, n, 0.95);
        let w = point(14, "acceptance_lip_w", i, n, 0.95);
        let b = distance_bracket(&z, &w, 20).map_err(|e| e.to_string())?;
        let lhs = ((1.0 - w.norm_sq()).ln() - (1.0 - z.norm_sq()).ln()).abs();
        if lhs > 2.0 * b.upper * (1.0 + 1e-12) || b.lower > b.upper {
            violations += 1;
        }
        tightest = tightest.max(lhs / (2.0 * b.upper));
    }
    let msg = format!("1000 pairs: {violations} violations, max |dlog g| / 2 d_upper = {tightest:.4}");
    if violations == 0 { Ok(msg) } else { Err(msg) }
}

fn criterion_5() -> Outcome {
    let (mut violations, mut worst_share) = (0u64, 0.0f64);
    for n in 1..=2 {
        for (i, t) in [0.0, 0.5, 0.9].into_iter().enumerate() {
            for (j, r) in [0.02, 0.05, 0.08].into_iter().enumerate() {
                let z = Point::on_axis(n, t).unwrap();
                let rep = inclusion_check(&z, r, 10_000, 20, 500 + (i * 3 + j) as u64).map_err(|e| e.to_string())?;
                violations += rep.violations;
                worst_share = worst_share.max(rep.inconclusive as f64 / rep.samples as f64);
            }
        }
    }
    let msg = format!("18 cells x 1e4: {violations} violations, max inconclusive share {:.3}%", 100.0 * worst_share);
    if violations == 0 && worst_share <= INCONCLUSIVE_SHARE { Ok(msg) } else { Err(msg) }
}

fn criterion_6() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for n in 1..=2 {
        let v = volume_scaling(n, 0.05, &[0.2, 0.4, 0.6, 0.8, 0.9], 20_000, 20, 16).map_err(|e| e.to_string())?;
        let expected = (2 * n + 1) as f64;
        let rel = (v.slope / expected - 1.0).abs();
        let ratios: Vec<f64> = v.rows.iter().map(|r| r.ball.estimate / r.polycylinder.estimate).collect();
        let spread = ratios.iter().copied().fold(f64::MIN, f64::max) / ratios.iter().copied().fold(f64::MAX, f64::min);
        ok &= rel < VOLUME_SLOPE_TOL && spread < VOLUME_RATIO_SPREAD;
        parts.push(format!("n={n} slope {:.4} (target {expected}), B/D spread {spread:.3}", v.slope));
    }
    let msg = parts.join("; ");
    if ok { Ok(msg) } else { Err(msg) }
}

fn criterion_7() -> Outcome {
    // the quadrature pairs z with |w| < 1, so |<z,w>| <= 0.7 must be certified
    let model = build_kernel_model(1, 64, DEFAULT_MOMENT_TOL, 0.85).map_err(|e| e.to_string())?;
    let fs: [fn(Complex64) -> Complex64; 3] = [|_| c(1.0), |w| w, |w| w * w * w];
    let mut worst = 0.0f64;
    for t in [0.0, 0.4, 0.7] {
        let z = Point::on_axis(1, t).unwrap();
        for f in fs {
            let got = reproducing_integral(&model, &z, f, 100, 256).map_err(|e| e.to_string())?;
            worst = worst.max((got - f(c(t))).norm());
        }
    }
    let o = Point::origin(1).unwrap();
    let (lk, _) = kernel_eval(&model, &o, &o).map_err(|e| e.to_string())?;
    let origin = (lk.exp() - 1.0 / (std::f64::consts::PI * E2_AT_ONE)).abs() * std::f64::consts::PI * E2_AT_ONE;
    let msg = format!("reproducing max error {worst:.2e} (tol {REPRODUCING_TOL:e}), K(0,0) relative error {origin:.2e} (tol {ORIGIN_TOL:e})");
    if worst <= REPRODUCING_TOL && origin <= ORIGIN_TOL { Ok(msg) } else { Err(msg) }
}

fn criterion_8() -> Outcome {
    let grid: Vec<f64> = (0..=19).map(|i| i as f64 * 0.05).collect();
    let mut parts = Vec::new();
    let mut ok = true;
    for n in 1..=2 {
        let m = build_kernel_model(n, 512, DEFAULT_MOMENT_TOL, 0.95).map_err(|e| e.to_string())?;
        let rep = diagonal_suite(&m, &grid).map_err(|e| e.to_string())?;
        let change = rep.metrics["doubling_change"];
        ok &= rep.pass && change < DOUBLING_TOL && rep.extrema.is_finite() && rep.extrema.min > 0.0;
        parts.push(format!(
            "n={n} hessian ratio in [{:.3}, {:.3}], doubling change {change:.1e}, laplacian last/max {:.2e}",
            rep.extrema.min, rep.extrema.max, rep.metrics["laplacian_last_over_max"]
        ));
    }
    let msg = parts.join("; ");
    if ok { Ok(msg) } else { Err(msg) }
}

fn criterion_9() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for n in 1..=2 {
        let m = build_kernel_model(n, 512, DEFAULT_MOMENT_TOL, 0.95).map_err(|e| e.to_string())?;
        let rep = main_theorem_suite(&m, &MainTheoremSettings::new(300, 90 + n as u64)).map_err(|e| e.to_string())?;
        let eps = rep.fitted_constants.map_or(f64::NAN, |f| f.epsilon);
        ok &= rep.pass
            && eps > 0.0
            && eps < std::f64::consts::SQRT_2
            && rep.metrics["envelope_violations"] == 0.0
            && rep.metrics["cauchy_schwarz_violations"] == 0.0;
        parts.push(format!(
            "n={n} eps_hat {eps:.4}, envelope violations {}, Cauchy-Schwarz violations {}",
            rep.metrics["envelope_violations"], rep.metrics["cauchy_schwarz_violations"]
        ));
    }
    let msg = parts.join("; ");
    if ok { Ok(msg) } else { Err(msg) }
}

fn criterion_10() -> Outcome {
    let (mut diff, mut auto) = (0.0f64, 0.0f64);
    for i in 0..10_000 {
        let n = 1 + i % 3;
        let z = point(20, "acceptance_diff_z", i, n, 0.99);
        let w = point(20, "acceptance_diff_w", i, n, 0.99);
        let (lhs, rhs) = eq_difference_sides(&z, &w).map_err(|e| e.to_string())?;
        diff = diff.max((lhs - rhs).abs() / (1.0 + lhs.abs()));
        let z = point(20, "acceptance_auto_z", i, n, 0.95);
        let w = point(20, "acceptance_auto_w", i, n, 0.95);
        auto = auto.max(automorphism_identity_residual(&z, &w).map_err(|e| e.to_string())?);
    }
    let msg = format!("1e4 pairs: difference identity {diff:.2e} (tol {DIFFERENCE_TOL:e}), automorphism identity {auto:.2e} (tol {AUTOMORPHISM_TOL:e})");
    if diff <= DIFFERENCE_TOL && auto <= AUTOMORPHISM_TOL { Ok(msg) } else { Err(msg) }
}

fn criterion_11() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("reports");
    let args = ["bergman-lab", "verify", "all", "--n", "1", "--seed", "7", "--out", out.to_str().unwrap()];
    let snapshot = || -> Result<Vec<(String, Vec<u8>)>, String> {
        let code = run_with(args, &mut std::io::sink(), &mut std::io::sink());
        if code == 2 {
            return Err("verify all exited with a configuration error".into());
        }
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&out)
            .map_err(|e| e.to_string())?
            .map(|e| {
                let p = e.unwrap().path();
                (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
            })
            .collect();
        files.sort();
        std::fs::remove_dir_all(&out).map_err(|e| e.to_string())?;
        Ok(files)
    };
    let first = snapshot()?;
    let second = snapshot()?;
    let bytes: usize = first.iter().map(|f| f.1.len()).sum();
    let msg = format!("{} report files, {bytes} bytes, identical: {}", first.len(), first == second);
    if first.len() == 4 && first == second { Ok(msg) } else { Err(msg) }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 11] = [
        ("hessian algebra", criterion_1, Duration::from_secs(5)),
        ("finite-difference consistency", criterion_2, Duration::from_secs(5)),
        ("radial geodesic", criterion_3, Duration::from_secs(60)),
        ("exhaustion Lipschitz", criterion_4, Duration::from_secs(600)),
        ("inclusion theorem", criterion_5, Duration::from_secs(1800)),
        ("volume scaling", criterion_6, Duration::from_secs(600)),
        ("kernel correctness oracle", criterion_7, Duration::from_secs(300)),
        ("diagonal bound", criterion_8, Duration::from_secs(300)),
        ("off-diagonal decay", criterion_9, Duration::from_secs(1800)),
        ("identity checks", criterion_10, Duration::from_secs(10)),
        ("determinism", criterion_11, Duration::from_secs(3600)),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(m) => (elapsed <= *limit, m),
            Err(m) => (false, m),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {name}: {} ({detail}; {:.1}s, limit {}s)",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
