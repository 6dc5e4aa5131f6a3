use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::geometry::{in_ball_certified, GeodesicBall, Membership, PolyCylinder};
use crate::linalg::Point;
use crate::report::VerificationReport;
use crate::rng::{self, task_rng};

/// Holomorphic polynomial `sum_alpha c_alpha w^alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub n: usize,
    pub terms: Vec<(Vec<u32>, Complex64)>,
}

impl Polynomial {
    pub fn constant(n: usize, c: Complex64) -> Self {
        Polynomial { n, terms: vec![(vec![0; n], c)] }
    }

    pub fn monomial(exponents: Vec<u32>, c: Complex64) -> Self {
        Polynomial { n: exponents.len(), terms: vec![(exponents, c)] }
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(e, _)| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn eval(&self, w: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(e, c)| e.iter().zip(w).fold(*c, |acc, (&k, &x)| acc * x.powu(k)))
            .sum()
    }
}

fn exponents(n: usize, degree: u32) -> Vec<Vec<u32>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for head in 0..=degree {
        for mut tail in exponents(n - 1, degree - head) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// All monomials of total degree `<= degree` with standard complex normal coefficients.
pub fn random_polynomial<R: Rng + ?Sized>(rng: &mut R, n: usize, degree: u32) -> Polynomial {
    let terms = exponents(n, degree)
        .into_iter()
        .map(|e| {
            let c = Complex64::new(rng::standard_normal(rng), rng::standard_normal(rng)) * std::f64::consts::FRAC_1_SQRT_2;
            (e, c)
        })
        .collect();
    Polynomial { n, terms }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmvpSettings {
    pub n: usize,
    pub r: f64,
    pub s_values: Vec<f64>,
    pub trials: usize,
    pub degree: u32,
    /// `|z|` values; directions are drawn per grid point.
    pub z_grid: Vec<f64>,
    /// Grid values up to this bound form the base grid for the stability check.
    pub base_max: f64,
    pub mc_samples: usize,
    pub budget: usize,
    pub seed: u64,
}

impl SmvpSettings {
    pub fn new(n: usize, seed: u64) -> Self {
        SmvpSettings {
            n,
            r: 0.05,
            s_values: vec![0.0, 1.0, -1.0],
            trials: 8,
            degree: 6,
            z_grid: vec![0.0, 0.25, 0.5, 0.7, 0.9],
            base_max: 0.5,
            mc_samples: 100_000,
            budget: 20,
            seed,
        }
    }
}

/// One `(f, s)` evaluation at a fixed center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmvpCell {
    /// Ratio against the certified part of the ball.
    pub ratio: f64,
    /// Ratio with uncertified samples counted as inside.
    pub ratio_lower: f64,
    /// Integral over samples certified inside the ball.
    pub integral: f64,
    /// Integral over samples neither certified in nor out.
    pub unknown_mass: f64,
    pub stderr: f64,
    pub inconclusive: bool,
}

/// `R(f,z) = |f(z)|^2 e^{-s psi(z)} (1-|z|^2)^{2n+1} / int_{B_psi(z,r)} |f|^2 e^{-s psi}`
/// for every `(f, s)`, sharing one Monte-Carlo sample of `D_psi(z, 2r)`.
/// Both sides are scaled by `e^{s psi(z)}`. A cell is inconclusive when the
/// standard error exceeds 5% of the integral.
pub fn smvp_ratios(
    z: &Point,
    r: f64,
    polys: &[Polynomial],
    s_values: &[f64],
    mc_samples: usize,
    budget: usize,
    seed: u64,
) -> Result<Vec<SmvpCell>> {
    if !(r > 0.0 && r < 1.0 / 12.0) {
        return Err(LabError::OutOfRange(format!("r = {r} not in (0, 1/12)")));
    }
    let env = PolyCylinder::new(z.clone(), 2.0 * r)?;
    let ball = GeodesicBall::new(z.clone(), r)?;
    let frame = env.frame();
    let points: Vec<(Point, Membership)> = (0..mc_samples)
        .into_par_iter()
        .map(|i| -> Result<Option<(Point, Membership)>> {
            let mut rng = task_rng(seed, "smvp_mc", i as u64);
            let Ok(w) = Point::new(env.sample(&mut rng, &frame)) else {
                return Ok(None);
            };
            let m = in_ball_certified(&ball, &w, budget)?;
            Ok((m != Membership::Out).then_some((w, m)))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let vol = env.closed_form_volume();
    let count = mc_samples as f64;
    let psi_z = 1.0 / z.gap();
    let scale = z.gap().powi(2 * z.dim() as i32 + 1);
    let mut cells = Vec::with_capacity(polys.len() * s_values.len());
    for f in polys {
        let f_vals: Vec<f64> = points.iter().map(|(w, _)| f.eval(w).norm_sqr()).collect();
        let fz = f.eval(z).norm_sqr();
        for &s in s_values {
            let (mut sum, mut sum_sq, mut unknown) = (0.0, 0.0, 0.0);
            for ((w, m), fv) in points.iter().zip(&f_vals) {
                let v = fv * (-s * (1.0 / w.gap() - psi_z)).exp();
                if *m == Membership::In {
                    sum += v;
                    sum_sq += v * v;
                } else {
                    unknown += v;
                }
            }
            let mean = sum / count;
            let var = (sum_sq / count - mean * mean).max(0.0);
            let integral = vol * mean;
            let stderr = vol * (var / count).sqrt();
            let ratio = fz * scale / integral;
            let unknown_mass = vol * unknown / count;
            let inconclusive = !(stderr <= 0.05 * integral);
            cells.push(SmvpCell { ratio, ratio_lower: fz * scale / (integral + unknown_mass), integral, unknown_mass, stderr, inconclusive });
        }
    }
    Ok(cells)
}

/// Sub-mean-value ratios for random polynomials across a `|z|` grid.
pub fn smvp_suite(cfg: &SmvpSettings) -> Result<VerificationReport> {
    if cfg.trials == 0 || cfg.z_grid.is_empty() || cfg.s_values.is_empty() {
        return Err(LabError::OutOfRange("empty sample plan".into()));
    }
    if let Some(t) = cfg.z_grid.iter().find(|t| !(**t >= 0.0 && **t <= 0.9)) {
        return Err(LabError::OutOfRange(format!("|z| = {t} outside [0, 0.9]")));
    }
    let polys: Vec<Polynomial> = (0..cfg.trials)
        .map(|t| random_polynomial(&mut task_rng(cfg.seed, "smvp_poly", t as u64), cfg.n, cfg.degree))
        .collect();
    let mut rep = VerificationReport::new("smvp", cfg.n)
        .param("r", cfg.r)
        .param("s", cfg.s_values.clone())
        .param("z_grid", cfg.z_grid.clone())
        .param("trials", cfg.trials as u64)
        .param("degree", cfg.degree as u64)
        .param("mc_samples", cfg.mc_samples as u64)
        .param("budget", cfg.budget as u64)
        .param("seed", cfg.seed);
    let (mut base_max, mut full_max) = (0.0f64, 0.0f64);
    let mut unknown_share = 0.0f64;
    let mut by_s = vec![0.0f64; cfg.s_values.len()];
    for (i, &t) in cfg.z_grid.iter().enumerate() {
        let dir = rng::unit_complex_vector(&mut task_rng(cfg.seed, "smvp_center", i as u64), cfg.n);
        let z = Point::new(dir.iter().map(|c| c * t).collect())?;
        let cells = smvp_ratios(&z, cfg.r, &polys, &cfg.s_values, cfg.mc_samples, cfg.budget, cfg.seed ^ i as u64)?;
        for (k, c) in cells.iter().enumerate() {
            rep.samples += 1;
            if c.inconclusive {
                rep.inconclusive += 1;
                continue;
            }
            rep.extrema.observe(c.ratio);
            unknown_share = unknown_share.max(c.unknown_mass / (c.integral + c.unknown_mass));
            full_max = full_max.max(c.ratio);
            if t <= cfg.base_max {
                base_max = base_max.max(c.ratio);
            }
            let s = k % cfg.s_values.len();
            by_s[s] = by_s[s].max(c.ratio);
        }
    }
    for (s, m) in cfg.s_values.iter().zip(&by_s) {
        rep.metric(&format!("max_ratio_s={s}"), *m);
    }
    let growth = full_max / base_max;
    rep.metric("max_ratio_base", base_max);
    rep.metric("max_ratio_full", full_max);
    rep.metric("grid_extension_growth", growth);
    rep.metric("max_uncertified_share", unknown_share);
    Ok(rep.finish(full_max.is_finite() && growth < 2.0, 0.05))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{volume_estimate, Region};

    #[test]
    fn polynomial_basics() {
        let mut rng = task_rng(1, "poly", 0);
        let p = random_polynomial(&mut rng, 2, 6);
        assert_eq!(p.terms.len(), 28);
        assert_eq!(p.degree(), 6);
        let w = [Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.4)];
        let m = Polynomial::monomial(vec![2, 1], Complex64::new(2.0, 0.0));
        assert!((m.eval(&w) - w[0] * w[0] * w[1] * 2.0).norm() < 1e-15);
    }

    #[test]
    fn constant_at_origin_matches_ball_volume() {
        let o = Point::origin(1).unwrap();
        let one = Polynomial::constant(1, Complex64::new(1.0, 0.0));
        let cell = smvp_ratios(&o, 0.05, &[one], &[0.0], 20_000, 20, 4).unwrap()[0];
        let v = volume_estimate(&Region::GeodesicBall(GeodesicBall::new(o, 0.05).unwrap()), 20_000, 8, 20).unwrap();
        assert!((cell.integral - v.estimate).abs() < 3.0 * (cell.stderr.powi(2) + v.stderr.powi(2)).sqrt());
        assert!((cell.ratio * cell.integral - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vanishing_numerator() {
        let o = Point::origin(2).unwrap();
        let f = Polynomial::monomial(vec![1, 0], Complex64::new(1.0, 0.0));
        let cells = smvp_ratios(&o, 0.05, &[f], &[0.0], 2000, 0, 1).unwrap();
        assert_eq!(cells[0].ratio, 0.0);
    }

    #[test]
    fn stable_under_grid_extension() {
        let mut cfg = SmvpSettings::new(1, 3);
        cfg.mc_samples = 20_000;
        cfg.trials = 4;
        let rep = smvp_suite(&cfg).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.metrics["max_ratio_s=1"].is_finite() && rep.metrics["max_ratio_s=0"].is_finite());
    }
}
