//! The complex Hessian of `psi(z) = 1/(1-|z|^2)` and the norms it induces.
//!
//! Every quantity is taken from its closed form; numerical inversion is only
//! used by tests as an independent check.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{LabError, Result};
use crate::linalg::{self, dot, norm_sq, rank_one_a, ComplexMatrix, Point};
use crate::rng;

/// Points with `|z| >= 1 - BOUNDARY_GUARD` are refused.
pub const BOUNDARY_GUARD: f64 = 1e-12;

/// `psi(z) = 1 / (1 - |z|^2)`
pub fn psi(z: &Point) -> f64 {
    1.0 / z.gap()
}

pub fn check_guard(z: &Point) -> Result<()> {
    if z.norm() >= 1.0 - BOUNDARY_GUARD {
        return Err(LabError::TooCloseToBoundary(z.norm()));
    }
    Ok(())
}

/// `H_psi(z)` with its closed-form inverse, determinant, square root and spectrum.
#[derive(Debug, Clone)]
pub struct MetricTensor {
    pub at: Point,
    pub hess: ComplexMatrix,
    pub inv: ComplexMatrix,
    pub det: f64,
    pub sqrt: ComplexMatrix,
    /// Eigenvalue on the line spanned by `conj(z)`.
    pub eig_radial: f64,
    /// Eigenvalue on the orthogonal complement.
    pub eig_tangent: f64,
}

pub fn hessian(z: &Point) -> Result<MetricTensor> {
    check_guard(z)?;
    let n = z.dim();
    let s = z.norm_sq();
    let g = z.gap();
    let a_bar = rank_one_a(z).conj();
    let id = ComplexMatrix::identity(n);

    let hess = id.scaled(g).add(&a_bar.scaled(2.0)).scaled(1.0 / (g * g * g));
    let inv = id.sub(&a_bar.scaled(2.0 / (1.0 + s))).scaled(g * g);
    let det = (1.0 + s) / g.powi(2 * n as i32 + 1);

    let p_bar = linalg::projector_matrix(z).conj();
    let q_bar = id.sub(&p_bar);
    let sqrt = p_bar
        .scaled((1.0 + s).sqrt() / g.powf(1.5))
        .add(&q_bar.scaled(1.0 / g));

    Ok(MetricTensor {
        at: z.clone(),
        hess,
        inv,
        det,
        sqrt,
        eig_radial: (1.0 + s) / (g * g * g),
        eig_tangent: 1.0 / (g * g),
    })
}

/// `H_psi(z)` assembled from the spectral split `(1+|z|^2)/(1-|z|^2)^3 conj(P_z) + conj(Q_z)/(1-|z|^2)^2`.
pub fn hessian_spectral_form(z: &Point) -> ComplexMatrix {
    let s = z.norm_sq();
    let g = z.gap();
    let p_bar = linalg::projector_matrix(z).conj();
    let q_bar = ComplexMatrix::identity(z.dim()).sub(&p_bar);
    p_bar.scaled((1.0 + s) / (g * g * g)).add(&q_bar.scaled(1.0 / (g * g)))
}

/// Relative residuals of the closed forms in [`MetricTensor`] against direct computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgebraResiduals {
    /// `|det H - det_closed| / det_closed` with `det H` by elimination.
    pub det: f64,
    /// `max |H H^{-1} - I|`.
    pub inverse: f64,
    /// `max |S S - H| / max |H|`.
    pub sqrt: f64,
    /// Spectral split and eigenvector equations, relative to the radial eigenvalue.
    pub spectral: f64,
}

impl AlgebraResiduals {
    pub fn max(&self) -> f64 {
        self.det.max(self.inverse).max(self.sqrt).max(self.spectral)
    }
}

pub fn algebra_residuals(z: &Point) -> Result<AlgebraResiduals> {
    let m = hessian(z)?;
    let n = z.dim();
    let scale = m.hess.max_abs();
    let det = m.hess.determinant();
    let det_res = (det - Complex64::new(m.det, 0.0)).norm() / m.det;
    let inverse = m.hess.mul(&m.inv).max_abs_diff(&ComplexMatrix::identity(n));
    let sqrt = m.sqrt.mul(&m.sqrt).max_abs_diff(&m.hess) / scale;
    let mut spectral = m.hess.max_abs_diff(&hessian_spectral_form(z)) / scale;
    let zb = linalg::conj(z);
    if !z.is_origin() {
        let hz = m.hess.mul_vec(&zb);
        let e = linalg::norm(&linalg::sub(&hz, &linalg::scale(&zb, Complex64::new(m.eig_radial, 0.0))));
        spectral = spectral.max(e / (m.eig_radial * z.norm()));
    }
    for j in 0..n {
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        e[j] = Complex64::new(1.0, 0.0);
        let t = if z.is_origin() { e } else { linalg::proj_q(&zb, &e) };
        let len = linalg::norm(&t);
        if len < 1e-3 {
            continue;
        }
        let ht = m.hess.mul_vec(&t);
        let err = linalg::norm(&linalg::sub(&ht, &linalg::scale(&t, Complex64::new(m.eig_tangent, 0.0))));
        spectral = spectral.max(err / (m.eig_radial * len));
    }
    Ok(AlgebraResiduals { det: det_res, inverse, sqrt, spectral })
}

/// `|xi|_{h_psi}` at `z`.
pub fn vec_norm_h(z: &Point, xi: &[Complex64]) -> Result<f64> {
    check_guard(z)?;
    Ok(vec_norm_h_unchecked(z.coords(), z.gap(), xi))
}

/// `sqrt(2|<xi,z>|^2/(1-|z|^2)^3 + |xi|^2/(1-|z|^2)^2)` for a known gap `1-|z|^2`.
#[inline]
pub fn vec_norm_h_unchecked(z: &[Complex64], gap: f64, xi: &[Complex64]) -> f64 {
    let p = dot(xi, z).norm_sqr();
    (2.0 * p / (gap * gap * gap) + norm_sq(xi) / (gap * gap)).sqrt()
}

/// The same norm through the projections `P_z`, `Q_z`.
pub fn vec_norm_h_split(z: &Point, xi: &[Complex64]) -> f64 {
    let s = z.norm_sq();
    let g = z.gap();
    let p = norm_sq(&linalg::proj_p(z, xi));
    let q = norm_sq(&linalg::proj_q(z, xi));
    ((1.0 + s) / (g * g * g) * p + q / (g * g)).sqrt()
}

/// Norm of the invariant metric `|xi|^2/(1-|z|^2) + |<xi,z>|^2/(1-|z|^2)^2` whose
/// distance is `artanh |phi_z(w)|`. It is dominated by `|xi|_{h_psi}` pointwise.
pub fn invariant_norm(z: &[Complex64], gap: f64, xi: &[Complex64]) -> f64 {
    let p = dot(xi, z).norm_sqr();
    (norm_sq(xi) / gap + p / (gap * gap)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormKind {
    /// `sum alpha_j d conj(z_j)`
    Form01,
    /// `sum beta_j d z_j`
    Form10,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormValue {
    pub kind: FormKind,
    pub comps: Vec<Complex64>,
}

impl FormValue {
    pub fn form01(comps: Vec<Complex64>) -> Self {
        Self { kind: FormKind::Form01, comps }
    }

    pub fn form10(comps: Vec<Complex64>) -> Self {
        Self { kind: FormKind::Form10, comps }
    }

    /// Pairing with a tangent vector: `<alpha, xi>` for (0,1)-forms, `<beta, conj(xi)>` for (1,0)-forms.
    pub fn pair(&self, xi: &[Complex64]) -> Complex64 {
        match self.kind {
            FormKind::Form01 => dot(&self.comps, xi),
            FormKind::Form10 => self.comps.iter().zip(xi).map(|(b, x)| b * x).sum(),
        }
    }

    fn line_coefficient(&self, z: &[Complex64]) -> f64 {
        match self.kind {
            FormKind::Form01 => dot(&self.comps, z).norm_sqr(),
            FormKind::Form10 => self.comps.iter().zip(z).map(|(b, x)| b * x).sum::<Complex64>().norm_sqr(),
        }
    }
}

/// Norm of a form with respect to `i d dbar psi`.
pub fn form_norm(z: &Point, f: &FormValue) -> Result<f64> {
    check_guard(z)?;
    if f.comps.len() != z.dim() {
        return Err(LabError::DimensionMismatch { expected: z.dim(), got: f.comps.len() });
    }
    let s = z.norm_sq();
    let g = z.gap();
    let v = g * g * (norm_sq(&f.comps) - 2.0 * f.line_coefficient(z) / (1.0 + s));
    Ok(v.max(0.0).sqrt())
}

/// Form norm through the antisymmetrised sum
/// `(1-|z|^2)^2/(1+|z|^2) sum |a_j c_k - a_k c_j|^2 + (1-|z|^2)^3/(1+|z|^2) |a|^2`,
/// with `c = z` for (0,1)-forms and `c = conj(z)` for (1,0)-forms.
pub fn form_norm_antisymmetric(z: &Point, f: &FormValue) -> f64 {
    let s = z.norm_sq();
    let g = z.gap();
    let c: Vec<Complex64> = match f.kind {
        FormKind::Form01 => z.to_vec(),
        FormKind::Form10 => linalg::conj(z),
    };
    let a = &f.comps;
    let mut sum = 0.0;
    for j in 0..a.len() {
        for k in 0..a.len() {
            sum += (a[j] * c[k] - a[k] * c[j]).norm_sqr();
        }
    }
    (g * g / (1.0 + s) * sum + g * g * g / (1.0 + s) * norm_sq(a)).sqrt()
}

/// Form norm as the quadratic form `alpha^T H^{-1} conj(alpha)` (or its conjugate for (1,0)-forms).
pub fn form_norm_quadratic(m: &MetricTensor, f: &FormValue) -> f64 {
    let inv = match f.kind {
        FormKind::Form01 => m.inv.clone(),
        FormKind::Form10 => m.inv.conj(),
    };
    let a = &f.comps;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..a.len() {
        for k in 0..a.len() {
            acc += inv[(j, k)] * a[j] * a[k].conj();
        }
    }
    acc.re.max(0.0).sqrt()
}

/// Maximiser of `|pair(f, xi)| / |xi|_{h_psi}`.
pub fn dual_maximizer(m: &MetricTensor, f: &FormValue) -> Vec<Complex64> {
    match f.kind {
        FormKind::Form01 => m.inv.conj().mul_vec(&f.comps),
        FormKind::Form10 => linalg::conj(&m.inv.mul_vec(&f.comps)),
    }
}

/// Largest ratio `|pair(f, xi)| / |xi|_{h_psi}` over `trials` random directions
/// plus the closed-form maximiser.
pub fn dual_norm_sup_check(z: &Point, f: &FormValue, trials: usize, seed: u64) -> Result<f64> {
    if trials < 100 {
        return Err(LabError::OutOfRange(format!("trials = {trials} < 100")));
    }
    let m = hessian(z)?;
    let gap = z.gap();
    let ratio = |xi: &[Complex64]| {
        let den = vec_norm_h_unchecked(z, gap, xi);
        if den == 0.0 {
            0.0
        } else {
            f.pair(xi).norm() / den
        }
    };
    let mut rng = rng::task_rng(seed, "dual_norm", 0);
    let mut best = ratio(&dual_maximizer(&m, f));
    for _ in 0..trials {
        let scale: f64 = rng.random_range(0.1..10.0);
        let xi: Vec<Complex64> = rng::unit_complex_vector(&mut rng, z.dim())
            .into_iter()
            .map(|c| c * scale)
            .collect();
        best = best.max(ratio(&xi));
    }
    Ok(best)
}

/// `(0,1)`-form `dbar log(1/(1-|z|^2)) = sum z_j/(1-|z|^2) d conj(z_j)`.
pub fn dbar_log_exhaustion(z: &Point) -> FormValue {
    let g = z.gap();
    FormValue::form01(z.iter().map(|c| c / g).collect())
}

/// Wirtinger second derivatives `d^2 psi / dz_j d conj(z_k)` by central differences.
pub fn hessian_finite_difference(z: &Point, step: f64) -> ComplexMatrix {
    let n = z.dim();
    let base: Vec<f64> = z.iter().flat_map(|c| [c.re, c.im]).collect();
    let psi_at = |x: &[f64]| {
        let s: f64 = x.iter().map(|v| v * v).sum();
        1.0 / (1.0 - s)
    };
    let second = |a: usize, b: usize| -> f64 {
        let h = step;
        if a == b {
            let mut p = base.clone();
            let mut m = base.clone();
            p[a] += h;
            m[a] -= h;
            (psi_at(&p) - 2.0 * psi_at(&base) + psi_at(&m)) / (h * h)
        } else {
            let eval = |sa: f64, sb: f64| {
                let mut x = base.clone();
                x[a] += sa * h;
                x[b] += sb * h;
                psi_at(&x)
            };
            (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0)) / (4.0 * h * h)
        }
    };
    ComplexMatrix::from_fn(n, |j, k| {
        let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
        let re = second(xj, xk) + second(yj, yk);
        let im = second(xj, yk) - second(yj, xk);
        Complex64::new(re, im) * 0.25
    })
}
