use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::linalg::{self, Point};
use crate::metric;
use crate::quadrature::GL3_UNIT;

/// Piecewise-linear path through `K + 1` nodes of the ball.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    nodes: Vec<Point>,
}

impl Curve {
    pub fn new(nodes: Vec<Point>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(LabError::InvalidCurve(format!("need at least two nodes, got {}", nodes.len())));
        }
        let n = nodes[0].dim();
        for (i, pair) in nodes.windows(2).enumerate() {
            if pair[1].dim() != n {
                return Err(LabError::DimensionMismatch { expected: n, got: pair[1].dim() });
            }
            if pair[0].coords() == pair[1].coords() {
                return Err(LabError::InvalidCurve(format!("nodes {i} and {} coincide", i + 1)));
            }
        }
        Ok(Self { nodes })
    }

    /// Straight segment from `a` to `b` split into `segments` equal pieces.
    pub fn chord(a: &Point, b: &Point, segments: usize) -> Result<Self> {
        Self::polyline(&[a, b], segments)
    }

    /// Polyline through `waypoints` with `segments` pieces in total, shared
    /// between legs in proportion to their Euclidean length. Repeated waypoints are dropped.
    pub fn polyline(waypoints: &[&Point], segments: usize) -> Result<Self> {
        let mut pts: Vec<&Point> = Vec::with_capacity(waypoints.len());
        for p in waypoints {
            if pts.last().is_none_or(|q| linalg::norm(&linalg::sub(q, p)) > 1e-15) {
                pts.push(p);
            }
        }
        if pts.len() < 2 {
            return Err(LabError::InvalidCurve("waypoints do not span a path".into()));
        }
        let legs = pts.len() - 1;
        let segments = segments.max(legs);
        let lens: Vec<f64> = pts.windows(2).map(|w| linalg::norm(&linalg::sub(w[0], w[1]))).collect();
        let total: f64 = lens.iter().sum();
        let mut counts: Vec<usize> =
            lens.iter().map(|l| ((l / total * segments as f64).floor() as usize).max(1)).collect();
        let mut assigned: usize = counts.iter().sum();
        let mut i = 0;
        while assigned < segments {
            counts[i % legs] += 1;
            assigned += 1;
            i += 1;
        }
        let mut nodes = vec![pts[0].clone()];
        for (leg, &count) in counts.iter().enumerate() {
            for j in 1..=count {
                let t = j as f64 / count as f64;
                let p = if j == count {
                    pts[leg + 1].clone()
                } else {
                    Point::new(linalg::lerp(pts[leg], pts[leg + 1], t))?
                };
                nodes.push(p);
            }
        }
        Self::new(nodes)
    }

    /// Builds a curve from interleaved real coordinates `(re, im)` per complex entry.
    pub fn from_flat(n: usize, flat: &[f64]) -> Result<Self> {
        let nodes = flat
            .chunks(2 * n)
            .map(|c| Point::new(c.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(nodes)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.nodes.iter().flat_map(|p| p.iter().flat_map(|c| [c.re, c.im])).collect()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn dim(&self) -> usize {
        self.nodes[0].dim()
    }

    pub fn segments(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn start(&self) -> &Point {
        &self.nodes[0]
    }

    pub fn end(&self) -> &Point {
        self.nodes.last().expect("curve has nodes")
    }

    pub fn reversed(&self) -> Self {
        let mut nodes = self.nodes.clone();
        nodes.reverse();
        Self { nodes }
    }

    /// `self` followed by `other`; `other` must start where `self` ends.
    pub fn concat(&self, other: &Curve) -> Result<Self> {
        if self.end() != other.start() {
            return Err(LabError::InvalidCurve("curves do not join".into()));
        }
        let mut nodes = self.nodes.clone();
        nodes.extend_from_slice(&other.nodes[1..]);
        Self::new(nodes)
    }
}

/// Length of the straight segment `a -> b` in real coordinates, by a
/// three-point Gauss rule along the segment.
#[inline]
pub(crate) fn segment_length_flat(a: &[f64], b: &[f64]) -> f64 {
    let mut total = 0.0;
    for &(t, wt) in &GL3_UNIT {
        let mut xx = 0.0;
        let mut dd = 0.0;
        let mut re = 0.0;
        let mut im = 0.0;
        for k in (0..a.len()).step_by(2) {
            let (dr, di) = (b[k] - a[k], b[k + 1] - a[k + 1]);
            let (xr, xi) = (a[k] + t * dr, a[k + 1] + t * di);
            xx += xr * xr + xi * xi;
            dd += dr * dr + di * di;
            re += dr * xr + di * xi;
            im += di * xr - dr * xi;
        }
        let g = 1.0 - xx;
        total += wt * (2.0 * (re * re + im * im) / (g * g * g) + dd / (g * g)).sqrt();
    }
    total
}

pub(crate) fn length_flat(flat: &[f64], stride: usize) -> f64 {
    flat.chunks(stride)
        .zip(flat.chunks(stride).skip(1))
        .map(|(a, b)| segment_length_flat(a, b))
        .sum()
}

/// Length of `c` under `h_psi`.
pub fn curve_length(c: &Curve) -> Result<f64> {
    for p in c.nodes() {
        metric::check_guard(p)?;
    }
    Ok(length_flat(&c.to_flat(), 2 * c.dim()))
}

/// Lengths of the individual segments.
pub fn segment_lengths(c: &Curve) -> Vec<f64> {
    let flat = c.to_flat();
    let stride = 2 * c.dim();
    flat.chunks(stride)
        .zip(flat.chunks(stride).skip(1))
        .map(|(a, b)| segment_length_flat(a, b))
        .collect()
}
