//! Hessian-metric geometry of `psi(z) = 1/(1-|z|^2)` on the unit ball of `C^n`
//! and a log-domain series model of the weighted Bergman kernel `K_psi`.

pub mod cli;
pub mod error;
pub mod estimates;
pub mod geometry;
pub mod kernel;
pub mod linalg;
pub mod metric;
pub mod quadrature;
pub mod report;
pub mod rng;

pub use error::{LabError, Result};
pub use linalg::{ComplexMatrix, Point};
pub use metric::{FormKind, FormValue, MetricTensor};
