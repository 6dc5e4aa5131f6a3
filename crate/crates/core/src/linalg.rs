//! Complex-vector primitives on `C^n` for small `n`.
//!
//! Points of the unit ball carry their squared norm; the projections
//! `P_z`/`Q_z` follow the convention `P_0 = I`, `Q_0 = 0`.

use std::fmt;
use std::ops::{Deref, Index, IndexMut};

use num_complex::Complex64;

use crate::error::{LabError, Result};

/// Largest supported complex dimension.
pub const MAX_DIM: usize = 4;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A point of the open unit ball `B_n` with its cached squared norm.
#[derive(Clone, PartialEq)]
pub struct Point {
    coords: Vec<Complex64>,
    norm_sq: f64,
}

impl Point {
    pub fn new(coords: Vec<Complex64>) -> Result<Self> {
        let n = coords.len();
        if n == 0 || n > MAX_DIM {
            return Err(LabError::UnsupportedDimension(n));
        }
        if coords.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(LabError::NonFinite);
        }
        let norm_sq = norm_sq(&coords);
        if norm_sq >= 1.0 {
            return Err(LabError::OutsideBall(norm_sq));
        }
        Ok(Self { coords, norm_sq })
    }

    pub fn origin(n: usize) -> Result<Self> {
        Self::new(vec![ZERO; n])
    }

    /// `t * e_1` in dimension `n`.
    pub fn on_axis(n: usize, t: f64) -> Result<Self> {
        let mut coords = vec![ZERO; n];
        if n > 0 {
            coords[0] = Complex64::new(t, 0.0);
        }
        Self::new(coords)
    }

    /// Build from interleaved real and imaginary parts `(x_1, y_1, x_2, y_2, ...)`.
    pub fn from_real_parts(parts: &[f64]) -> Result<Self> {
        if parts.len() % 2 != 0 {
            return Err(LabError::OutOfRange("odd number of real coordinates".into()));
        }
        Self::new(parts.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect())
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.coords
    }

    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq.sqrt()
    }

    /// `1 - |z|^2`, strictly positive.
    pub fn gap(&self) -> f64 {
        1.0 - self.norm_sq
    }

    pub fn is_origin(&self) -> bool {
        self.norm_sq == 0.0
    }

    pub fn into_coords(self) -> Vec<Complex64> {
        self.coords
    }
}

impl Deref for Point {
    type Target = [Complex64];

    fn deref(&self) -> &[Complex64] {
        &self.coords
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.coords.iter()).finish()
    }
}

/// `sum_j |v_j|^2`
pub fn norm_sq(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

pub fn norm(v: &[Complex64]) -> f64 {
    norm_sq(v).sqrt()
}

/// Hermitian product `<a, b> = sum_j a_j conj(b_j)` without a length check.
pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

/// Hermitian inner product `<z, w> = sum_j z_j conj(w_j)`.
pub fn inner(z: &[Complex64], w: &[Complex64]) -> Result<Complex64> {
    if z.len() != w.len() {
        return Err(LabError::DimensionMismatch { expected: z.len(), got: w.len() });
    }
    Ok(dot(z, w))
}

pub fn sub(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(a.len(), b.len(), "vector length mismatch");
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(a.len(), b.len(), "vector length mismatch");
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[Complex64], s: Complex64) -> Vec<Complex64> {
    a.iter().map(|x| x * s).collect()
}

/// `a + t (b - a)`
pub fn lerp(a: &[Complex64], b: &[Complex64], t: f64) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x + (y - x) * t).collect()
}

pub fn conj(a: &[Complex64]) -> Vec<Complex64> {
    a.iter().map(|x| x.conj()).collect()
}

/// Orthogonal projection of `w` onto the complex line through `z`; identity when `z = 0`.
pub fn proj_p(z: &[Complex64], w: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(z.len(), w.len(), "vector length mismatch");
    let zz = norm_sq(z);
    if zz == 0.0 {
        return w.to_vec();
    }
    let c = dot(w, z) / zz;
    scale(z, c)
}

/// `Q_z w = w - P_z w`; the zero vector when `z = 0`.
pub fn proj_q(z: &[Complex64], w: &[Complex64]) -> Vec<Complex64> {
    let p = proj_p(z, w);
    sub(w, &p)
}

/// Dense square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, entries: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |j, k| if j == k { ONE } else { ZERO })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for j in 0..dim {
            for k in 0..dim {
                entries.push(f(j, k));
            }
        }
        Self { dim, entries }
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "rows must form a square matrix");
        Self { dim, entries: rows.concat() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, j: usize) -> &[Complex64] {
        &self.entries[j * self.dim..(j + 1) * self.dim]
    }

    pub fn mul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        ComplexMatrix::from_fn(n, |j, k| (0..n).map(|l| self[(j, l)] * other[(l, k)]).sum())
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.dim, v.len());
        (0..self.dim)
            .map(|j| self.row(j).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.dim, |j, k| self[(k, j)].conj())
    }

    /// Entrywise conjugate.
    pub fn conj(&self) -> ComplexMatrix {
        ComplexMatrix { dim: self.dim, entries: self.entries.iter().map(|c| c.conj()).collect() }
    }

    pub fn scaled(&self, s: f64) -> ComplexMatrix {
        ComplexMatrix { dim: self.dim, entries: self.entries.iter().map(|c| c * s).collect() }
    }

    pub fn add(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, other.dim);
        ComplexMatrix {
            dim: self.dim,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, other.dim);
        ComplexMatrix {
            dim: self.dim,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|j| self[(j, j)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        self.sub(other).max_abs()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tol * self.max_abs().max(1.0)
    }

    /// Determinant by LU factorisation with partial pivoting.
    pub fn determinant(&self) -> Complex64 {
        let n = self.dim;
        let mut a = self.entries.clone();
        let mut det = ONE;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| a[x * n + col].norm().total_cmp(&a[y * n + col].norm()))
                .unwrap_or(col);
            if a[pivot * n + col] == ZERO {
                return ZERO;
            }
            if pivot != col {
                for k in 0..n {
                    a.swap(col * n + k, pivot * n + k);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det *= p;
            for row in col + 1..n {
                let factor = a[row * n + col] / p;
                for k in col..n {
                    let v = a[col * n + k];
                    a[row * n + k] -= factor * v;
                }
            }
        }
        det
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (j, k): (usize, usize)) -> &Complex64 {
        &self.entries[j * self.dim + k]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (j, k): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[j * self.dim + k]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries((0..self.dim).map(|j| self.row(j))).finish()
    }
}

/// `A(z)_{jk} = z_j conj(z_k)`
pub fn rank_one_a(z: &[Complex64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(z.len(), |j, k| z[j] * z[k].conj())
}

/// Matrix of `P_z` in the standard basis (identity at the origin).
pub fn projector_matrix(z: &[Complex64]) -> ComplexMatrix {
    let zz = norm_sq(z);
    if zz == 0.0 {
        return ComplexMatrix::identity(z.len());
    }
    rank_one_a(z).scaled(1.0 / zz)
}

/// Unitary `U` with `U z = (|z|, 0, ..., 0)`.
///
/// The first row is `conj(z)/|z|`. The remaining rows come from Gram-Schmidt on
/// the standard basis in index order, skipping the basis vector most parallel
/// to `z` (largest `|z_j|`, smallest index on ties).
pub fn unitary_to_axis(z: &[Complex64]) -> Result<ComplexMatrix> {
    let n = z.len();
    let zz = norm_sq(z);
    if zz == 0.0 {
        return Err(LabError::UnitaryAtOrigin);
    }
    let r = zz.sqrt();
    let mut skip = 0;
    for j in 1..n {
        if z[j].norm() > z[skip].norm() {
            skip = j;
        }
    }
    let mut rows: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    rows.push(z.iter().map(|c| c.conj() / r).collect());
    for j in (0..n).filter(|&j| j != skip) {
        let mut v = vec![ZERO; n];
        v[j] = ONE;
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for q in &rows {
                let c = dot(&v, q);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= c * qi;
                }
            }
        }
        let nv = norm(&v);
        rows.push(v.into_iter().map(|c| c / nv).collect());
    }
    Ok(ComplexMatrix::from_rows(&rows))
}
