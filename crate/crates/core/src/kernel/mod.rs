//! Series model `K(z, w) = sum_k c_k <z, w>^k` of the weighted Bergman kernel,
//! with `c_k = Gamma(n+k) / (2 pi^n k! I_k)` and
//! `I_k = int_0^1 r^{2k+2n-1} exp(-1/(1-r^2)) dr`.

mod fit;
mod table;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::linalg::{self, Point, MAX_DIM};
use crate::quadrature::{gl10, integrate_adaptive, Tolerance};

pub use fit::{decay_exponent, fit_envelope, offdiag_decay_fit, DecayFit, PairSample, EPSILON_GRID, MIN_PAIRS};
pub use table::{export_table, import_table, TABLE_MAGIC};

pub const DEFAULT_RADIUS_CAP: f64 = 0.95;
pub const DEFAULT_MOMENT_TOL: f64 = 1e-12;
/// Truncation orders never exceed this.
pub const K_MAX_LIMIT: usize = 8192;
/// Required change bound of `log K(z,z)` at the cap when the order grows by a quarter.
pub const TRUNCATION_TOL: f64 = 1e-8;

/// Default truncation order for dimension `n`.
pub fn default_k_max(n: usize) -> usize {
    if n <= 2 {
        512
    } else {
        768
    }
}

/// `log I_k` for the exponent `m = 2k + 2n - 1`, by adaptive quadrature of the
/// integrand divided by its maximum.
pub fn radial_moment_log(k: usize, n: usize, tol: f64) -> Result<f64> {
    let m = (2 * k + 2 * n - 1) as f64;
    let log_f = |r: f64| {
        if r <= 0.0 || r >= 1.0 {
            f64::NEG_INFINITY
        } else {
            m * r.ln() - 1.0 / (1.0 - r * r)
        }
    };
    let peak = log_peak(m);
    let top = log_f(peak);
    let f = |r: f64| (log_f(r) - top).exp();
    // Laplace width of the peak sets the absolute scale of the rescaled integral
    let width = (2.0 * PI / -log_curvature(m, peak)).sqrt().min(1.0);
    let tol = Tolerance::absolute(0.5 * tol * width);
    let left = integrate_adaptive(f, 0.0, peak, tol)?;
    let right = integrate_adaptive(f, peak, 1.0, tol)?;
    Ok(top + (left + right).ln())
}

/// Maximiser of `m ln r - 1/(1-r^2)` on `(0, 1)`: the root of `m/r - 2r/(1-r^2)^2`,
/// by Newton steps kept inside a shrinking bracket.
fn log_peak(m: f64) -> f64 {
    let d = |r: f64| m / r - 2.0 * r / ((1.0 - r * r) * (1.0 - r * r));
    let dd = |r: f64| log_curvature(m, r);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    // 1 - r^2 ~ sqrt(2/m) for large m
    let mut r = (1.0 - (2.0 / m).sqrt().min(0.9)).sqrt();
    for _ in 0..200 {
        let v = d(r);
        if v > 0.0 {
            lo = r;
        } else {
            hi = r;
        }
        let mut next = r - v / dd(r);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - r).abs() <= 1e-16 * r.max(1e-300) || hi - lo < 1e-16 {
            return next;
        }
        r = next;
    }
    r
}

/// Second derivative of `m ln r - 1/(1-r^2)`.
fn log_curvature(m: f64, r: f64) -> f64 {
    let g = 1.0 - r * r;
    -m / (r * r) - (2.0 * g + 8.0 * r * r) / (g * g * g)
}

/// `log(Gamma(n+k) / k!) = sum_{j=k+1}^{k+n-1} ln j`.
fn log_rising(k: usize, n: usize) -> f64 {
    ((k + 1)..(k + n)).map(|j| (j as f64).ln()).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelModel {
    pub dim: usize,
    /// `log c_k` for `k = 0..=k_max`.
    pub log_coeffs: Vec<f64>,
    pub moment_tol: f64,
    pub radius_cap: f64,
}

impl KernelModel {
    /// Model with exactly `k_max + 1` coefficients, no truncation certificate.
    pub fn with_order(n: usize, k_max: usize, tol: f64, radius_cap: f64) -> Result<Self> {
        validate(n, radius_cap, tol)?;
        let mut m = Self { dim: n, log_coeffs: Vec::new(), moment_tol: tol, radius_cap };
        m.extend_to(k_max)?;
        Ok(m)
    }

    pub fn k_max(&self) -> usize {
        self.log_coeffs.len() - 1
    }

    /// Appends coefficients up to order `k_max`.
    pub fn extend_to(&mut self, k_max: usize) -> Result<()> {
        let start = self.log_coeffs.len();
        if k_max + 1 <= start {
            return Ok(());
        }
        let n = self.dim;
        let tol = self.moment_tol;
        let base = -(2.0f64).ln() - n as f64 * PI.ln();
        let fresh: Vec<f64> = (start..=k_max)
            .into_par_iter()
            .map(|k| Ok(log_rising(k, n) + base - radial_moment_log(k, n, tol)?))
            .collect::<Result<_>>()?;
        self.log_coeffs.extend(fresh);
        Ok(())
    }

    /// Copy truncated at order `k_max`.
    pub fn truncated(&self, k_max: usize) -> Self {
        let mut m = self.clone();
        m.log_coeffs.truncate(k_max + 1);
        m
    }

    /// `log sum_k c_k s^k` for real `s >= 0`.
    pub fn log_series_real(&self, s: f64) -> f64 {
        log_series(&self.log_coeffs, s, 0.0).0
    }

    /// Largest `|<z,w>|` covered by the truncation certificate.
    pub fn pairing_cap(&self) -> f64 {
        self.radius_cap * self.radius_cap
    }
}

fn validate(n: usize, radius_cap: f64, tol: f64) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        return Err(LabError::UnsupportedDimension(n));
    }
    if !(radius_cap > 0.0 && radius_cap < 1.0) {
        return Err(LabError::OutOfRange(format!("radius_cap {radius_cap} not in (0, 1)")));
    }
    if !(tol > 0.0 && tol < 1e-3) {
        return Err(LabError::OutOfRange(format!("moment tolerance {tol} not in (0, 1e-3)")));
    }
    Ok(())
}

/// `(log |S|, arg S)` for `S = sum_k exp(log_c[k]) s^k e^{i k theta}`, summed in
/// order with the running maximum factored out.
fn log_series(log_c: &[f64], s: f64, theta: f64) -> (f64, f64) {
    if s == 0.0 {
        return (log_c[0], 0.0);
    }
    let ls = s.ln();
    let mut top = f64::NEG_INFINITY;
    let mut acc = Complex64::new(0.0, 0.0);
    let step = Complex64::from_polar(1.0, theta);
    let mut phase = Complex64::new(1.0, 0.0);
    for (k, lc) in log_c.iter().enumerate() {
        if k % 64 == 0 {
            phase = Complex64::from_polar(1.0, k as f64 * theta);
        }
        let lt = lc + k as f64 * ls;
        if lt > top {
            acc *= (top - lt).exp();
            top = lt;
        }
        acc += phase * (lt - top).exp();
        phase *= step;
    }
    (top + acc.norm().ln(), acc.arg())
}

impl KernelModel {
    /// [`truncation_change`] at the model's own order, computing the extra
    /// coefficients on a copy.
    pub fn truncation_certificate(&self) -> Result<f64> {
        let k = self.k_max();
        let mut longer = self.clone();
        longer.extend_to(k + k / 4)?;
        Ok(truncation_change(&longer, k))
    }
}

/// Passes when growing the order by a quarter moves `log K(z,z)` at the cap by
/// less than [`TRUNCATION_TOL`]. Returns the observed change; `model` must hold
/// coefficients up to `k_max + k_max / 4`.
pub fn truncation_change(model: &KernelModel, k_max: usize) -> f64 {
    let s = model.pairing_cap();
    let short = log_series(&model.log_coeffs[..=k_max], s, 0.0).0;
    let long = log_series(&model.log_coeffs[..=(k_max + k_max / 4)], s, 0.0).0;
    (long - short).abs()
}

/// Builds the model, doubling `k_max` until the truncation certificate holds.
pub fn build_kernel_model(n: usize, k_max: usize, tol: f64, radius_cap: f64) -> Result<KernelModel> {
    build_kernel_model_with_limit(n, k_max, tol, radius_cap, K_MAX_LIMIT)
}

/// [`build_kernel_model`] with an explicit bound on the truncation order.
pub fn build_kernel_model_with_limit(
    n: usize,
    k_max: usize,
    tol: f64,
    radius_cap: f64,
    limit: usize,
) -> Result<KernelModel> {
    if k_max < 16 {
        return Err(LabError::OutOfRange(format!("K_max = {k_max} < 16")));
    }
    validate(n, radius_cap, tol)?;
    let limit = limit.max(16);
    let mut order = k_max.min(limit);
    let mut model = KernelModel { dim: n, log_coeffs: Vec::new(), moment_tol: tol, radius_cap };
    loop {
        model.extend_to(order + order / 4)?;
        if truncation_change(&model, order) < TRUNCATION_TOL {
            return Ok(model.truncated(order));
        }
        if order >= limit {
            return Err(LabError::TruncationLimit { radius_cap, limit });
        }
        order = (2 * order).min(limit);
    }
}

/// `(log |K(z,w)|, arg K(z,w))`.
pub fn kernel_eval(m: &KernelModel, z: &Point, w: &Point) -> Result<(f64, f64)> {
    if z.dim() != m.dim || w.dim() != m.dim {
        return Err(LabError::DimensionMismatch { expected: m.dim, got: if z.dim() != m.dim { z.dim() } else { w.dim() } });
    }
    let t = linalg::dot(z, w);
    let s = t.norm();
    if s >= 1.0 || s > m.pairing_cap() * (1.0 + 1e-12) {
        return Err(LabError::OutOfRange(format!(
            "|<z,w>| = {s} beyond the certified range {}",
            m.pairing_cap()
        )));
    }
    Ok(log_series(&m.log_coeffs, s, t.arg()))
}

/// `K(z, w)` as a complex number (may overflow far from the origin).
pub fn kernel_value(m: &KernelModel, z: &Point, w: &Point) -> Result<Complex64> {
    let (l, a) = kernel_eval(m, z, w)?;
    Ok(Complex64::from_polar(l.exp(), a))
}

/// `K(z,z) e^{-psi(z)} (1-|z|^2)^{exponent}` in the log domain.
pub fn diag_ratio_with_exponent(m: &KernelModel, z: &Point, exponent: f64) -> Result<f64> {
    let (lk, _) = kernel_eval(m, z, z)?;
    Ok((lk - 1.0 / z.gap() + exponent * (-z.norm_sq()).ln_1p()).exp())
}

/// `K(z,z) e^{-psi(z)} (1-|z|^2)^{2n+1}`.
pub fn diag_ratio(m: &KernelModel, z: &Point) -> Result<f64> {
    diag_ratio_with_exponent(m, z, (2 * m.dim + 1) as f64)
}

/// `int_D f(w) K(z,w) e^{-psi(w)} dA(w)` for `n = 1` by Gauss-Legendre panels
/// in the radius and the trapezoid rule in the angle.
pub fn reproducing_integral(
    m: &KernelModel,
    z: &Point,
    f: impl Fn(Complex64) -> Complex64,
    panels: usize,
    angles: usize,
) -> Result<Complex64> {
    if m.dim != 1 || z.dim() != 1 {
        return Err(LabError::DimensionMismatch { expected: 1, got: z.dim().max(m.dim) });
    }
    let gl = gl10();
    let mut total = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let (a, b) = (p as f64 / panels as f64, (p + 1) as f64 / panels as f64);
        let half = 0.5 * (b - a);
        for (x, wt) in gl.nodes().iter().zip(gl.weights()) {
            let r = 0.5 * (a + b) + half * x;
            let weight = (-1.0 / (1.0 - r * r)).exp() * r * wt * half;
            let mut ring = Complex64::new(0.0, 0.0);
            for j in 0..angles {
                let w = Complex64::from_polar(r, 2.0 * PI * j as f64 / angles as f64);
                ring += f(w) * kernel_value(m, z, &Point::new(vec![w])?)?;
            }
            total += ring * (2.0 * PI / angles as f64) * weight;
        }
    }
    Ok(total)
}

/// `int_{B_n} e^{-psi} dV` by Gauss-Legendre panels in the radius.
pub fn weight_mass(n: usize, panels: usize) -> f64 {
    let gl = gl10();
    let sphere = 2.0 * PI.powi(n as i32) / (1..n).map(|k| k as f64).product::<f64>();
    let mut total = 0.0;
    for p in 0..panels {
        let (a, b) = (p as f64 / panels as f64, (p + 1) as f64 / panels as f64);
        let half = 0.5 * (b - a);
        for (x, wt) in gl.nodes().iter().zip(gl.weights()) {
            let r = 0.5 * (a + b) + half * x;
            total += r.powi(2 * n as i32 - 1) * (-1.0 / (1.0 - r * r)).exp() * wt * half;
        }
    }
    sphere * total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::trapezoid;
    use crate::rng::{task_rng, uniform_in_complex_ball};
    use std::sync::OnceLock;

    /// `E_1(1)`.
    const E1_AT_1: f64 = 0.219_383_934_395_520_27;

    fn model_n1() -> &'static KernelModel {
        static M: OnceLock<KernelModel> = OnceLock::new();
        M.get_or_init(|| build_kernel_model(1, 512, DEFAULT_MOMENT_TOL, DEFAULT_RADIUS_CAP).unwrap())
    }

    #[test]
    fn peak_is_stationary() {
        for m in [1.0, 3.0, 51.0, 1001.0, 20001.0] {
            let r = log_peak(m);
            let g = 1.0 - r * r;
            assert!((m / r - 2.0 * r / (g * g)).abs() < 1e-8 * m / r, "m = {m}");
        }
    }

    #[test]
    fn zeroth_moment_closed_form() {
        // n = 1: I_0 = (e^{-1} - E_1(1)) / 2
        let exact = 0.5 * ((-1.0f64).exp() - E1_AT_1);
        let v = radial_moment_log(0, 1, 1e-13).unwrap().exp();
        assert!((v - exact).abs() < 1e-12 * exact);
        let trap = trapezoid(|r| if r >= 1.0 { 0.0 } else { r * (-1.0 / (1.0 - r * r)).exp() }, 0.0, 1.0, 10_000_000);
        assert!((v - trap).abs() < 1e-10 * v);
    }

    #[test]
    fn moments_decrease_and_are_concave() {
        let logs: Vec<f64> = (0..=200).map(|k| radial_moment_log(k, 2, 1e-12).unwrap()).collect();
        for w in logs.windows(2) {
            assert!(w[1] < w[0]);
        }
        for w in logs.windows(3) {
            // log I_k is convex by Cauchy-Schwarz; its negative is concave
            assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-10);
        }
    }

    #[test]
    fn high_order_moments_stay_finite() {
        for k in [1000, 5000, 10_000] {
            let v = radial_moment_log(k, 3, 1e-12).unwrap();
            assert!(v.is_finite() && v < 0.0);
        }
    }

    #[test]
    fn origin_value_and_hermitian_symmetry() {
        let m = model_n1();
        let o = Point::origin(1).unwrap();
        let (l, a) = kernel_eval(m, &o, &o).unwrap();
        assert_eq!(l, m.log_coeffs[0]);
        assert_eq!(a, 0.0);
        let exact = 1.0 / (2.0 * PI * 0.5 * ((-1.0f64).exp() - E1_AT_1));
        assert!((l.exp() - exact).abs() < 1e-8 * exact);

        let m2 = build_kernel_model(2, 512, DEFAULT_MOMENT_TOL, DEFAULT_RADIUS_CAP).unwrap();
        let mut rng = task_rng(1, "herm", 0);
        for _ in 0..100 {
            let z = Point::new(uniform_in_complex_ball(&mut rng, 2, 0.95)).unwrap();
            let w = Point::new(uniform_in_complex_ball(&mut rng, 2, 0.95)).unwrap();
            let a = kernel_value(&m2, &z, &w).unwrap();
            let b = kernel_value(&m2, &w, &z).unwrap();
            assert!((a - b.conj()).norm() < 1e-12 * a.norm());
            let (lz, az) = kernel_eval(&m2, &z, &Point::origin(2).unwrap()).unwrap();
            assert_eq!((lz, az), (m2.log_coeffs[0], 0.0));
        }
    }

    #[test]
    fn diagonal_is_positive_and_matches_direct_sum() {
        let m = model_n1();
        for i in 0..=19 {
            let t = 0.05 * i as f64;
            let z = Point::on_axis(1, t.min(0.95)).unwrap();
            let (l, a) = kernel_eval(m, &z, &z).unwrap();
            assert_eq!(a, 0.0);
            let direct: f64 = m.log_coeffs.iter().enumerate().map(|(k, c)| (c + 2.0 * k as f64 * t.max(1e-300).ln()).exp()).sum();
            assert!((l - direct.ln()).abs() < 1e-12 * l.abs().max(1.0));
        }
    }

    /// `int_B f(w) K(z,w) e^{-psi(w)} dA(w)` in polar coordinates.
    fn reproduce(m: &KernelModel, z: f64, f: impl Fn(Complex64) -> Complex64) -> Complex64 {
        reproducing_integral(m, &Point::on_axis(1, z).unwrap(), f, 100, 256).unwrap()
    }

    #[test]
    fn reproducing_property_n1() {
        let m = model_n1();
        for z in [0.0, 0.4, 0.7] {
            let zc = Complex64::new(z, 0.0);
            for (name, f) in [
                ("1", Box::new(|_: Complex64| Complex64::new(1.0, 0.0)) as Box<dyn Fn(Complex64) -> Complex64>),
                ("w", Box::new(|w| w)),
                ("w^3", Box::new(|w: Complex64| w * w * w)),
            ] {
                let v = reproduce(m, z, &f);
                assert!((v - f(zc)).norm() < 1e-6, "f = {name}, z = {z}: {v}");
            }
        }
    }

    #[test]
    fn origin_value_is_inverse_mass() {
        for n in 1..=3 {
            let m = KernelModel::with_order(n, 16, DEFAULT_MOMENT_TOL, 0.5).unwrap();
            let o = Point::origin(n).unwrap();
            let k00 = kernel_value(&m, &o, &o).unwrap().re;
            assert!((k00 * weight_mass(n, 200) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn truncation_certificate_and_limit() {
        let m = model_n1();
        assert!(m.k_max() >= 512);
        assert!(truncation_change(&m.clone(), m.k_max() * 4 / 5) >= 0.0);
        let err = build_kernel_model_with_limit(1, 512, DEFAULT_MOMENT_TOL, 0.99, 4096).unwrap_err();
        assert_eq!(err, LabError::TruncationLimit { radius_cap: 0.99, limit: 4096 });
        let err = build_kernel_model(1, 512, DEFAULT_MOMENT_TOL, 0.995).unwrap_err();
        assert_eq!(err, LabError::TruncationLimit { radius_cap: 0.995, limit: K_MAX_LIMIT });
        assert!(build_kernel_model(1, 15, DEFAULT_MOMENT_TOL, 0.5).is_err());
    }

    #[test]
    fn doubling_order_leaves_ratios_unchanged() {
        let m = model_n1();
        let mut big = m.clone();
        big.extend_to(2 * m.k_max()).unwrap();
        for i in 0..=19 {
            let z = Point::on_axis(1, (0.05 * i as f64).min(0.95)).unwrap();
            let a = diag_ratio(m, &z).unwrap();
            let b = diag_ratio(&big, &z).unwrap();
            assert!(a.is_finite() && a > 0.0);
            assert!((a - b).abs() < 1e-6 * a);
        }
        let z = Point::origin(1).unwrap();
        assert!((diag_ratio(m, &z).unwrap() - m.log_coeffs[0].exp() * (-1.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn pairing_guard() {
        let m = build_kernel_model(1, 64, DEFAULT_MOMENT_TOL, 0.5).unwrap();
        let z = Point::on_axis(1, 0.6).unwrap();
        assert!(kernel_eval(&m, &z, &z).is_err());
        assert!(kernel_eval(&m, &z, &Point::on_axis(1, 0.4).unwrap()).is_ok());
    }
}
