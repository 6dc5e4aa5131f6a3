use rand::Rng;
use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::geometry::{distance_bracket, PolyCylinder};
use crate::kernel::{diag_ratio_with_exponent, kernel_eval, offdiag_decay_fit, KernelModel, PairSample};
use crate::linalg::Point;
use crate::report::{Extrema, FittedConstants, VerificationReport};
use crate::rng::{task_rng, uniform_in_complex_ball};

/// Allowed relative change of diagonal ratios when the series order doubles.
const DOUBLING_TOL: f64 = 1e-6;
/// Slack for the envelope and Cauchy-Schwarz comparisons in the log domain.
const LOG_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MainTheoremSettings {
    pub pairs: usize,
    /// Both points are drawn from `|z| <= max_radius`.
    pub max_radius: f64,
    /// Every `near_every`-th pair draws `w` from a polycylinder around `z`.
    pub near_every: usize,
    pub bracket_budget: usize,
    pub seed: u64,
}

impl MainTheoremSettings {
    pub fn new(pairs: usize, seed: u64) -> Self {
        MainTheoremSettings { pairs, max_radius: 0.9, near_every: 4, bracket_budget: 20, seed }
    }
}

/// Pairs with certified distance brackets: mostly independent uniform points,
/// with a share of near-diagonal pairs so that short distances are represented.
pub fn sample_pairs(n: usize, cfg: &MainTheoremSettings) -> Result<Vec<PairSample>> {
    let rmax = cfg.max_radius;
    if !(rmax > 0.0 && rmax < 1.0) {
        return Err(LabError::OutOfRange(format!("max_radius = {rmax}")));
    }
    (0..cfg.pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(cfg.seed, "main_pairs", i as u64);
            let z = Point::new(uniform_in_complex_ball(&mut rng, n, rmax))?;
            let mut w = None;
            if cfg.near_every > 0 && i % cfg.near_every == 0 {
                let d = PolyCylinder::new(z.clone(), rng.random_range(0.02..0.5))?;
                let frame = d.frame();
                for _ in 0..16 {
                    let c = d.sample(&mut rng, &frame);
                    if let Ok(p) = Point::new(c) {
                        if p.norm() <= rmax {
                            w = Some(p);
                            break;
                        }
                    }
                }
            }
            let w = match w {
                Some(w) => w,
                None => Point::new(uniform_in_complex_ball(&mut rng, n, rmax))?,
            };
            let b = distance_bracket(&z, &w, cfg.bracket_budget)?;
            Ok(PairSample { z, w, d_lower: b.lower, d_upper: b.upper })
        })
        .collect()
}

fn axis_grid(cap: f64) -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).filter(|t| *t <= cap).collect()
}

struct DiagonalScan {
    hessian: Vec<f64>,
    laplacian: Vec<f64>,
    doubling_change: f64,
}

fn scan_diagonal(model: &KernelModel, grid: &[f64]) -> Result<DiagonalScan> {
    let n = model.dim;
    let mut doubled = model.clone();
    doubled.extend_to(2 * model.k_max())?;
    let (e_h, e_l) = ((2 * n + 1) as f64, (3 * n) as f64);
    let mut scan = DiagonalScan { hessian: Vec::new(), laplacian: Vec::new(), doubling_change: 0.0 };
    for &t in grid {
        let z = Point::on_axis(n, t)?;
        let h = diag_ratio_with_exponent(model, &z, e_h)?;
        let h2 = diag_ratio_with_exponent(&doubled, &z, e_h)?;
        scan.doubling_change = scan.doubling_change.max((h2 - h).abs() / h);
        scan.hessian.push(h);
        scan.laplacian.push(diag_ratio_with_exponent(model, &z, e_l)?);
    }
    Ok(scan)
}

/// Diagonal ratios `K(z,z) e^{-psi} (1-|z|^2)^e` along `t e_1` for the exponents
/// `2n+1` and `3n`. Passes when every value is positive and finite, doubling the
/// series order moves none of them by more than `1e-6` relative, and for `n > 1`
/// the `3n` ratio decays over the outer part of the grid.
pub fn diagonal_suite(model: &KernelModel, grid: &[f64]) -> Result<VerificationReport> {
    if grid.len() < 2 {
        return Err(LabError::OutOfRange("diagonal grid needs two points".into()));
    }
    let scan = scan_diagonal(model, grid)?;
    let mut rep = VerificationReport::new("diagonal", model.dim)
        .param("grid", grid.to_vec())
        .param("k_max", model.k_max() as u64)
        .param("radius_cap", model.radius_cap);
    let mut lap = Extrema::empty();
    for (t, (h, l)) in grid.iter().zip(scan.hessian.iter().zip(&scan.laplacian)) {
        rep.samples += 1;
        rep.extrema.observe(*h);
        lap.observe(*l);
        if !(h.is_finite() && *h > 0.0) {
            rep.violations += 1;
        }
        rep.metric(&format!("hessian_at_{t}"), *h);
        rep.metric(&format!("laplacian_at_{t}"), *l);
    }
    let last = *scan.laplacian.last().unwrap();
    let tail = &scan.laplacian[grid.len() / 2..];
    let decays = model.dim == 1 || (tail.windows(2).all(|w| w[1] < w[0]) && last < 0.5 * lap.max);
    rep.metric("doubling_change", scan.doubling_change);
    rep.metric("hessian_spread", rep.extrema.max / rep.extrema.min);
    rep.metric("laplacian_last_over_max", last / lap.max);
    let criterion = scan.doubling_change < DOUBLING_TOL && decays;
    Ok(rep.finish(criterion, 0.0))
}

/// Off-diagonal decay fit, envelope soundness at lower distance bounds,
/// Cauchy-Schwarz `|K(z,w)|^2 <= K(z,z) K(w,w)`, and diagonal stability.
pub fn main_theorem_suite(model: &KernelModel, cfg: &MainTheoremSettings) -> Result<VerificationReport> {
    if cfg.pairs < 200 {
        return Err(LabError::OutOfRange(format!("pair budget {} < 200", cfg.pairs)));
    }
    if cfg.max_radius > model.radius_cap {
        return Err(LabError::OutOfRange(format!(
            "max_radius {} exceeds radius_cap {}",
            cfg.max_radius, model.radius_cap
        )));
    }
    let pairs = sample_pairs(model.dim, cfg)?;
    let fit = offdiag_decay_fit(model, &pairs)?;

    let mut rep = VerificationReport::new("main_theorem", model.dim)
        .param("pairs", cfg.pairs as u64)
        .param("max_radius", cfg.max_radius)
        .param("bracket_budget", cfg.bracket_budget as u64)
        .param("k_max", model.k_max() as u64)
        .param("seed", cfg.seed);
    rep.samples = pairs.len() as u64;
    let mut envelope_violations = 0u64;
    let mut cs_violations = 0u64;
    let mut cs_excess = f64::NEG_INFINITY;
    let mut distances = Extrema::empty();
    for (p, (y, res)) in pairs.iter().zip(fit.y.iter().zip(&fit.residuals)) {
        rep.extrema.observe(*y);
        distances.observe(p.d_lower);
        distances.observe(p.d_upper);
        if *res > LOG_SLACK {
            envelope_violations += 1;
        }
        let (kzw, _) = kernel_eval(model, &p.z, &p.w)?;
        let (kzz, _) = kernel_eval(model, &p.z, &p.z)?;
        let (kww, _) = kernel_eval(model, &p.w, &p.w)?;
        let excess = 2.0 * kzw - kzz - kww;
        cs_excess = cs_excess.max(excess);
        if excess > LOG_SLACK * (1.0 + kzz.abs() + kww.abs()) {
            cs_violations += 1;
        }
    }
    rep.violations = envelope_violations + cs_violations;
    rep.fitted_constants = Some(FittedConstants { c: fit.c_hat, epsilon: fit.epsilon_hat });

    let scan = scan_diagonal(model, &axis_grid(model.radius_cap))?;
    let diag_sup = scan.hessian.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_residual = fit.residuals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    rep.metric("epsilon_hat", fit.epsilon_hat);
    rep.metric("log_c_hat", fit.log_c_hat);
    rep.metric("epsilon_ls", fit.epsilon_ls);
    rep.metric("intercept_ls", fit.intercept_ls);
    rep.metric("max_envelope_residual", max_residual);
    rep.metric("envelope_violations", envelope_violations as f64);
    rep.metric("cauchy_schwarz_violations", cs_violations as f64);
    rep.metric("cauchy_schwarz_max_excess", cs_excess);
    rep.metric("distance_min", distances.min);
    rep.metric("distance_max", distances.max);
    rep.metric("diag_sup", diag_sup);
    rep.metric("diag_doubling_change", scan.doubling_change);
    let criterion = fit.epsilon_hat > 0.0
        && fit.epsilon_hat < std::f64::consts::SQRT_2
        && diag_sup.is_finite()
        && scan.doubling_change < DOUBLING_TOL;
    Ok(rep.finish(criterion, 0.0))
}
