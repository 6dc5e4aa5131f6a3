//! Gauss-Legendre rules and an adaptive bisection integrator.

use std::sync::OnceLock;

use crate::error::{LabError, Result};

/// Nodes and weights of an `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the rule by Newton iteration on the Legendre polynomial.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Applies the rule on `[a, b]`.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let (pn, pn1) = if n == 0 { (1.0, 0.0) } else { (p1, p0) };
    let d = n as f64 * (x * pn - pn1) / (x * x - 1.0);
    (pn, d)
}

/// Shared 10-point rule used by the adaptive integrator.
pub fn gl10() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(10))
}

/// Three-point rule on `[0, 1]` as `(node, weight)` pairs.
pub const GL3_UNIT: [(f64, f64); 3] = [
    (0.5 - 0.387_298_334_620_741_7, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.5 + 0.387_298_334_620_741_7, 5.0 / 18.0),
];

pub const MAX_DEPTH: usize = 40;

/// Tolerances for [`integrate_adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub fn absolute(abs: f64) -> Self {
        Self { abs, rel: 0.0 }
    }

    pub fn relative(rel: f64) -> Self {
        Self { abs: 0.0, rel }
    }
}

struct Piece {
    lo: f64,
    hi: f64,
    left: f64,
    right: f64,
    err: f64,
    depth: usize,
}

impl Piece {
    fn new(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, whole: f64, depth: usize) -> Self {
        let rule = gl10();
        let mid = 0.5 * (lo + hi);
        let left = rule.integrate(f, lo, mid);
        let right = rule.integrate(f, mid, hi);
        Self { lo, hi, left, right, err: (left + right - whole).abs(), depth }
    }

    fn est(&self) -> f64 {
        self.left + self.right
    }
}

/// Adaptive Gauss-Legendre integration by global interval bisection.
///
/// Each interval carries the 10-point estimate over its two halves and the
/// difference to the estimate over the whole as its error. The interval with
/// the largest error is split until the summed error meets the tolerance or
/// only roundoff remains. Fails once an interval would need more than
/// [`MAX_DEPTH`] bisections.
pub fn integrate_adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let whole = gl10().integrate(&f, a, b);
    let mut pieces = vec![Piece::new(&f, a, b, whole, 0)];
    loop {
        let total: f64 = pieces.iter().map(Piece::est).sum();
        if !total.is_finite() {
            return Err(LabError::Quadrature(format!("non-finite integrand on [{a:.6e}, {b:.6e}]")));
        }
        let err: f64 = pieces.iter().map(|p| p.err).sum();
        let target = tol.abs.max(tol.rel * total.abs());
        let (worst, w) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err).then(y.0.cmp(&x.0)))
            .expect("at least one piece");
        if err <= target || w.err <= 64.0 * f64::EPSILON * w.est().abs() {
            pieces.sort_by(|x, y| x.lo.total_cmp(&y.lo));
            return Ok(pieces.iter().map(Piece::est).sum());
        }
        if w.depth + 1 >= MAX_DEPTH {
            return Err(LabError::Quadrature(format!(
                "depth {MAX_DEPTH} reached on [{:.6e}, {:.6e}] with {} intervals \
                 (error {err:.3e} > {target:.3e})",
                w.lo,
                w.hi,
                pieces.len()
            )));
        }
        let w = pieces.swap_remove(worst);
        let mid = 0.5 * (w.lo + w.hi);
        pieces.push(Piece::new(&f, w.lo, mid, w.left, w.depth + 1));
        pieces.push(Piece::new(&f, mid, w.hi, w.right, w.depth + 1));
    }
}

/// Composite trapezoid rule with `panels` equal panels and compensated summation.
pub fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut sum = 0.5 * (f(a) + f(b));
    let mut comp = 0.0;
    for i in 1..panels {
        let y = f(a + h * i as f64) - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum * h
}
