use crate::error::{LabError, Result};
use crate::linalg::Point;

use super::{kernel_eval, KernelModel};

/// Candidate slopes are `sqrt(2) k / EPSILON_GRID` for `k = 1..EPSILON_GRID`.
pub const EPSILON_GRID: usize = 64;
/// Minimum number of pairs accepted by [`offdiag_decay_fit`].
pub const MIN_PAIRS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct PairSample {
    pub z: Point,
    pub w: Point,
    pub d_lower: f64,
    pub d_upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub epsilon_hat: f64,
    pub c_hat: f64,
    pub log_c_hat: f64,
    /// Least-squares slope and intercept of `y` against `d_upper`.
    pub epsilon_ls: f64,
    pub intercept_ls: f64,
    pub y: Vec<f64>,
    /// `y - (log C_hat - epsilon_hat d_lower)`, never positive beyond rounding.
    pub residuals: Vec<f64>,
}

/// `2 log|K(z,w)| - psi(z) - psi(w) + (2n+1)(log(1-|z|^2) + log(1-|w|^2))`.
pub fn decay_exponent(m: &KernelModel, z: &Point, w: &Point) -> Result<f64> {
    let (lk, _) = kernel_eval(m, z, w)?;
    let e = (2 * m.dim + 1) as f64;
    Ok(2.0 * lk - 1.0 / z.gap() - 1.0 / w.gap() + e * ((-z.norm_sq()).ln_1p() + (-w.norm_sq()).ln_1p()))
}

/// Fits `y <= log C - epsilon d` on sampled pairs.
pub fn offdiag_decay_fit(m: &KernelModel, pairs: &[PairSample]) -> Result<DecayFit> {
    check_spread(pairs.iter().map(|p| p.d_upper))?;
    if pairs.len() < MIN_PAIRS {
        return Err(LabError::OutOfRange(format!("{} pairs < {MIN_PAIRS}", pairs.len())));
    }
    let y = pairs.iter().map(|p| decay_exponent(m, &p.z, &p.w)).collect::<Result<Vec<_>>>()?;
    let lower: Vec<f64> = pairs.iter().map(|p| p.d_lower).collect();
    let upper: Vec<f64> = pairs.iter().map(|p| p.d_upper).collect();
    fit_envelope(&lower, &upper, &y)
}

fn check_spread(d: impl Iterator<Item = f64>) -> Result<()> {
    let (lo, hi) = d.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !(hi - lo >= 0.05) {
        return Err(LabError::InsufficientSpread(format!("distances span [{lo}, {hi}]")));
    }
    Ok(())
}

/// Envelope fit on raw samples.
///
/// The slope is the largest grid value for which the envelope fitted on the
/// nearer half of the pairs (by `d_upper`) still bounds the farther half. The
/// constant is then fitted on all pairs at `d_upper`, which also bounds every
/// pair at `d_lower`.
pub fn fit_envelope(d_lower: &[f64], d_upper: &[f64], y: &[f64]) -> Result<DecayFit> {
    let n = y.len();
    if d_lower.len() != n || d_upper.len() != n {
        return Err(LabError::DimensionMismatch { expected: n, got: d_lower.len().min(d_upper.len()) });
    }
    check_spread(d_upper.iter().copied())?;
    let (epsilon_ls, intercept_ls) = least_squares(d_upper, y);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d_upper[a].total_cmp(&d_upper[b]).then(a.cmp(&b)));
    let (near, far) = order.split_at(n / 2);
    let envelope = |eps: f64, idx: &[usize]| idx.iter().map(|&i| y[i] + eps * d_upper[i]).fold(f64::NEG_INFINITY, f64::max);

    let mut epsilon_hat = 0.0;
    for k in (1..EPSILON_GRID).rev() {
        let eps = std::f64::consts::SQRT_2 * k as f64 / EPSILON_GRID as f64;
        if envelope(eps, far) <= envelope(eps, near) {
            epsilon_hat = eps;
            break;
        }
    }
    let log_c_hat = envelope(epsilon_hat, &order);
    let residuals = (0..n).map(|i| y[i] - (log_c_hat - epsilon_hat * d_lower[i])).collect();
    Ok(DecayFit {
        epsilon_hat,
        c_hat: log_c_hat.exp(),
        log_c_hat,
        epsilon_ls,
        intercept_ls,
        y: y.to_vec(),
        residuals,
    })
}

/// `(-slope, intercept)` of the least-squares line through `(x, y)`.
fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (-slope, my - slope * mx)
}
