//! Verification suites for the automorphism identities, local comparability of
//! the test functions, sub-mean-value inequalities, cutoff functions and the
//! kernel decay estimates.

mod cutoff;
mod local;
mod offdiag;
mod smvp;

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::linalg::{self, Point};

pub use cutoff::{bump_derivative, bump_derivative_check, bump_eta, cutoff_suite, CutoffSettings, CUTOFF_SCALE};
pub use local::{imp_ineq_suite, local_deviation, test_function_log, test_function_suite, LocalPlan};
pub use offdiag::{diagonal_suite, main_theorem_suite, sample_pairs, MainTheoremSettings};
pub use smvp::{random_polynomial, smvp_ratios, smvp_suite, Polynomial, SmvpCell, SmvpSettings};

/// `phi_z(w) = (z - P_z w - sqrt(1-|z|^2) Q_z w) / (1 - <w, z>)`.
pub fn automorphism(z: &Point, w: &Point) -> Result<Point> {
    if z.dim() != w.dim() {
        return Err(LabError::DimensionMismatch { expected: z.dim(), got: w.dim() });
    }
    let den = Complex64::new(1.0, 0.0) - linalg::dot(w, z);
    let p = linalg::proj_p(z, w);
    let q = linalg::proj_q(z, w);
    let s = z.gap().sqrt();
    let v: Vec<Complex64> = (0..z.dim()).map(|j| (z[j] - p[j] - q[j] * s) / den).collect();
    // rounding can land a hair outside when |phi| ~ 1
    Point::new(v).map_err(|e| match e {
        LabError::OutsideBall(x) => LabError::TooCloseToBoundary(x.sqrt()),
        other => other,
    })
}

/// Relative gap between `1 - |phi_z(w)|^2` and `(1-|z|^2)(1-|w|^2)/|1-<w,z>|^2`.
pub fn automorphism_identity_residual(z: &Point, w: &Point) -> Result<f64> {
    let phi = automorphism(z, w)?;
    let den = (Complex64::new(1.0, 0.0) - linalg::dot(w, z)).norm_sqr();
    let rhs = z.gap() * w.gap() / den;
    Ok((phi.gap() - rhs).abs() / rhs)
}

/// `|LHS - RHS|` for
/// `2 Re(1/(1-<w,z>)) - psi(z) - psi(w) = |z-w|^2/|1-<w,z>|^2 - |phi_z(w)|^2 (psi(z) + psi(w))`.
pub fn eq_difference_identity_check(z: &Point, w: &Point) -> Result<f64> {
    let (lhs, rhs) = eq_difference_sides(z, w)?;
    Ok((lhs - rhs).abs())
}

/// Both sides of the identity checked by [`eq_difference_identity_check`].
pub fn eq_difference_sides(z: &Point, w: &Point) -> Result<(f64, f64)> {
    let a = Complex64::new(1.0, 0.0) - linalg::dot(w, z);
    let (pz, pw) = (1.0 / z.gap(), 1.0 / w.gap());
    let lhs = 2.0 * (1.0 / a).re - pz - pw;
    let phi = automorphism(z, w)?;
    let rhs = linalg::norm_sq(&linalg::sub(z, w)) / a.norm_sqr() - phi.norm_sq() * (pz + pw);
    Ok((lhs, rhs))
}
