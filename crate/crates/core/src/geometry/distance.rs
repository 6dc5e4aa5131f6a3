use crate::error::{LabError, Result};
use crate::linalg::{self, Point};
use crate::metric;
use crate::quadrature::{integrate_adaptive, Tolerance};

use super::curve::{curve_length, Curve};
use super::optimize::{OptimizerSettings, Path};

/// `d_psi(0, z)` for `|z| = t`: the integral of `sqrt(1+s^2)/(1-s^2)^{3/2}` over `[0, t]`.
pub fn radial_distance(t: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&t) {
        return Err(LabError::OutOfRange(format!("radial parameter {t} not in [0, 1)")));
    }
    integrate_adaptive(
        |s| (1.0 + s * s).sqrt() / (1.0 - s * s).powf(1.5),
        0.0,
        t,
        Tolerance::absolute(1e-12),
    )
}

/// Closed-form sandwich `t/sqrt(1-t^2) <= d_psi(0, t e_1) <= t sqrt(1+t^2)/sqrt(1-t^2)`.
pub fn radial_bounds(t: f64) -> (f64, f64) {
    let g = (1.0 - t * t).sqrt();
    (t / g, t * (1.0 + t * t).sqrt() / g)
}

/// Certified interval for `d_psi(z, w)` with the curve realising the upper end.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceBracket {
    pub lower: f64,
    pub upper: f64,
    /// `None` when the endpoints coincide.
    pub witness: Option<Curve>,
}

impl DistanceBracket {
    pub fn zero() -> Self {
        Self { lower: 0.0, upper: 0.0, witness: None }
    }

    pub fn overlaps(&self, other: &DistanceBracket) -> bool {
        self.lower <= other.upper && other.lower <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// `(|phi_z(w)|, 1 - |phi_z(w)|^2)` without forming `phi_z(w)`.
pub fn automorphism_modulus(z: &Point, w: &Point) -> (f64, f64) {
    let den = (num_complex::Complex64::new(1.0, 0.0) - linalg::dot(w, z)).norm_sqr();
    let radial = linalg::norm_sq(&linalg::sub(z, &linalg::proj_p(z, w)));
    let tangent = linalg::norm_sq(&linalg::proj_q(z, w));
    let x = ((radial + z.gap() * tangent) / den).sqrt();
    let q = z.gap() * w.gap() / den;
    (x, q)
}

/// `artanh |phi_z(w)|`, the distance of the metric `|xi|^2/(1-|z|^2) + |<xi,z>|^2/(1-|z|^2)^2`.
pub fn invariant_distance(z: &Point, w: &Point) -> f64 {
    let (x, q) = automorphism_modulus(z, w);
    if x < 0.5 {
        x.atanh()
    } else {
        x.ln_1p() - 0.5 * q.ln()
    }
}

/// `|log(1-|z|^2) - log(1-|w|^2)| / 2`.
pub fn exhaustion_lower(z: &Point, w: &Point) -> f64 {
    0.5 * ((-z.norm_sq()).ln_1p() - (-w.norm_sq()).ln_1p()).abs()
}

/// `|d_psi(0,w) - d_psi(0,z)|`: the radial profile is 1-Lipschitz along any curve.
pub fn radial_profile_lower(z: &Point, w: &Point) -> Result<f64> {
    Ok((radial_distance(w.norm())? - radial_distance(z.norm())?).abs())
}

/// Smallest ratio `h(x)(xi) / h(c)(xi)` over `|x - c| < rho`.
pub fn comparison_factor(c_norm: f64, rho: f64) -> f64 {
    let m = (c_norm - rho).max(0.0);
    let gm = 1.0 - m * m;
    let gc = 1.0 - c_norm * c_norm;
    let (a, b) = (1.0 / (gm * gm), 2.0 / (gm * gm * gm));
    let (c, d) = (1.0 / (gc * gc), 2.0 / (gc * gc * gc));
    let f = |s: f64| {
        let e = (s - rho).max(0.0);
        (a + b * e * e) / (c + d * s * s)
    };
    let mut best = f(0.0).min(f(c_norm)).min(f(rho.min(c_norm)));
    if rho < c_norm {
        // stationary points on (rho, |c|)
        let qa = b * d * rho;
        let qb = b * c - b * d * rho * rho - d * a;
        let qc = -b * c * rho;
        let disc = qb * qb - 4.0 * qa * qc;
        if qa > 0.0 && disc >= 0.0 {
            let sq = disc.sqrt();
            for s in [(-qb + sq) / (2.0 * qa), (-qb - sq) / (2.0 * qa)] {
                if s > rho && s < c_norm {
                    best = best.min(f(s));
                }
            }
        }
    }
    best
}

/// Lower bound from comparing the metric with its frozen value at `c` on
/// Euclidean balls around `c`.
pub fn local_comparison_lower(c: &Point, w: &Point) -> f64 {
    let diff = linalg::sub(w, c);
    let delta = linalg::norm(&diff);
    if delta == 0.0 {
        return 0.0;
    }
    let gc = c.gap();
    let frozen = metric::vec_norm_h_unchecked(c, gc, &diff);
    let edge = 1.0 - c.norm();
    let radii = [1.0, 1.25, 1.5, 2.0, 3.0, 4.0, 6.0]
        .iter()
        .map(|f| f * delta)
        .chain([0.25, 0.5, 0.75, 0.9].iter().map(|f| f * edge));
    let mut best: f64 = 0.0;
    for rho in radii {
        if !(rho > 0.0) {
            continue;
        }
        let kappa = comparison_factor(c.norm(), rho);
        let reach = if delta < rho { frozen.min(rho / gc) } else { rho / gc };
        best = best.max(kappa.sqrt() * reach);
    }
    best
}

/// Lower bound from freezing the metric at `c` on the polycylinder
/// `{|P_c x - c| < rho g^{3/2}, |Q_c x| < rho g}` with `rho` just above the frozen
/// distance `q = |w - c|_{h(c)}`. On that set `h(x) >= kappa h(c)`, and leaving
/// it costs at least `kappa^{1/2} q`, so the distance is at least `kappa^{1/2} q`.
pub fn polycylinder_comparison_lower(c: &Point, w: &Point) -> f64 {
    if c.is_origin() {
        return 0.0;
    }
    let diff = linalg::sub(w, c);
    let gc = c.gap();
    let q = metric::vec_norm_h_unchecked(c, gc, &diff);
    if q == 0.0 {
        return 0.0;
    }
    let s = c.norm();
    let rho = q * (1.0 + 1e-9);
    let a = rho * gc.powf(1.5);
    let b = if c.dim() > 1 { rho * gc } else { 0.0 };
    let g_lo = 1.0 - (s + a).powi(2) - b * b;
    if !(g_lo > 0.0) {
        return 0.0;
    }
    let m = (s - a).max(0.0);
    let g_hi = 1.0 - m * m;
    let e2 = a * a + b * b;
    let mut kappa: f64 = 0.0;
    for t in [1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.3] {
        // h(x) >= 2(1-t)|<xi,c>|^2 / g^3 + |xi|^2 (1/g^2 - k/g^3) with g in [g_lo, g_hi]
        let k = 2.0 * (1.0 / t - 1.0) * e2;
        let phi = |g: f64| 1.0 / (g * g) - k / (g * g * g);
        let alpha = (1.0 - t) * (gc / g_hi).powi(3);
        let beta = gc * gc * phi(g_lo).min(phi(g_hi));
        kappa = kappa.max(alpha.min(beta));
    }
    kappa.sqrt() * q
}

/// Largest of the available lower bounds for `d_psi(z, w)`.
pub fn lower_bound(z: &Point, w: &Point) -> Result<f64> {
    if z.dim() != w.dim() {
        return Err(LabError::DimensionMismatch { expected: z.dim(), got: w.dim() });
    }
    metric::check_guard(z)?;
    metric::check_guard(w)?;
    Ok(exhaustion_lower(z, w)
        .max(invariant_distance(z, w))
        .max(radial_profile_lower(z, w)?)
        .max(local_comparison_lower(z, w))
        .max(local_comparison_lower(w, z))
        .max(polycylinder_comparison_lower(z, w))
        .max(polycylinder_comparison_lower(w, z)))
}

/// Starting curves for the upper bound: chord, two radial legs through the
/// origin, and the corner path through `P_z w`.
pub fn candidate_curves(z: &Point, w: &Point, segments: usize) -> Result<Vec<Curve>> {
    let mut out = vec![Curve::chord(z, w, segments)?];
    let origin = Point::origin(z.dim())?;
    if !z.is_origin() && !w.is_origin() {
        out.push(Curve::polyline(&[z, &origin, w], segments)?);
    }
    if !z.is_origin() {
        let corner = Point::new(linalg::proj_p(z, w))?;
        let far = |p: &Point| linalg::norm(&linalg::sub(p, &corner)) > 1e-12;
        if far(z) && far(w) {
            out.push(Curve::polyline(&[z, &corner, w], segments)?);
        }
    }
    Ok(out)
}

/// Bracket for `d_psi(z, w)` with default optimizer settings.
pub fn distance_bracket(z: &Point, w: &Point, budget: usize) -> Result<DistanceBracket> {
    distance_bracket_with(z, w, budget, &OptimizerSettings::default())
}

pub fn distance_bracket_with(
    z: &Point,
    w: &Point,
    budget: usize,
    settings: &OptimizerSettings,
) -> Result<DistanceBracket> {
    let lower = lower_bound(z, w)?;
    if z == w {
        return Ok(DistanceBracket::zero());
    }
    let (upper, witness) = upper_bound(z, w, budget, settings)?;
    Ok(DistanceBracket { lower: lower.min(upper), upper, witness: Some(witness) })
}

/// Shortest optimised candidate and its length.
pub fn upper_bound(z: &Point, w: &Point, budget: usize, settings: &OptimizerSettings) -> Result<(f64, Curve)> {
    let n = z.dim();
    let mut best: Option<(f64, Curve)> = None;
    for start in candidate_curves(z, w, settings.initial_nodes)? {
        let mut path = Path { flat: start.to_flat(), stride: 2 * n };
        path.minimize(budget, settings);
        let curve = Curve::from_flat(n, &path.flat).unwrap_or(start);
        let len = curve_length(&curve)?;
        if best.as_ref().is_none_or(|(b, _)| len < *b) {
            best = Some((len, curve));
        }
    }
    best.ok_or_else(|| LabError::InvalidCurve("no candidate curve".into()))
}

/// Length of the unoptimised chord: the cheapest valid upper bound.
pub fn chord_upper(z: &Point, w: &Point, segments: usize) -> Result<f64> {
    if z == w {
        return Ok(0.0);
    }
    curve_length(&Curve::chord(z, w, segments)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{task_rng, uniform_in_complex_ball, unit_complex_vector};
    use num_complex::Complex64;

    fn random_point(rng: &mut rand_chacha::ChaCha8Rng, n: usize, radius: f64) -> Point {
        Point::new(uniform_in_complex_ball(rng, n, radius)).unwrap()
    }

    fn trapezoid_oracle(t: f64, panels: usize) -> f64 {
        crate::quadrature::trapezoid(|s| (1.0 + s * s).sqrt() / (1.0 - s * s).powf(1.5), 0.0, t, panels)
    }

    #[test]
    fn radial_distance_examples() {
        assert_eq!(radial_distance(0.0).unwrap(), 0.0);
        let v = radial_distance(0.5).unwrap();
        assert!((0.57735..=0.64550).contains(&v));
        let (lo, hi) = radial_bounds(0.5);
        assert!((lo - 0.577_350_269).abs() < 1e-8 && (hi - 0.645_497_224).abs() < 1e-8);
        assert!(radial_distance(1.0).is_err());
        assert!(radial_distance(-0.1).is_err());
    }

    #[test]
    fn radial_distance_matches_trapezoid_oracle() {
        let v = radial_distance(0.9).unwrap();
        let oracle = trapezoid_oracle(0.9, 10_000_000);
        assert!((v - oracle).abs() < 1e-9, "{v} vs {oracle}");
    }

    #[test]
    fn radial_distance_monotone_and_sandwiched() {
        let mut prev = -1.0;
        for i in 0..50 {
            let t = 0.99 * i as f64 / 49.0;
            let v = radial_distance(t).unwrap();
            let (lo, hi) = radial_bounds(t);
            assert!(v > prev && lo <= v + 1e-14 && v <= hi + 1e-14);
            prev = v;
        }
    }

    #[test]
    fn invariant_metric_is_dominated() {
        let mut rng = task_rng(5, "dominated", 0);
        for _ in 0..10_000 {
            let n = 1 + (rand::Rng::random::<u32>(&mut rng) % 3) as usize;
            let z = random_point(&mut rng, n, 0.999);
            let xi = unit_complex_vector(&mut rng, n);
            let h = metric::vec_norm_h(&z, &xi).unwrap();
            let k = metric::invariant_norm(&z, z.gap(), &xi);
            assert!(k <= h * (1.0 + 1e-14));
            assert!(linalg::norm(&xi) / z.gap() <= h * (1.0 + 1e-14));
        }
    }

    #[test]
    fn invariant_distance_radial_case() {
        let z = Point::origin(2).unwrap();
        let w = Point::on_axis(2, 0.7).unwrap();
        assert!((invariant_distance(&z, &w) - 0.7f64.atanh()).abs() < 1e-15);
        let a = Point::on_axis(1, -0.999_999).unwrap();
        let b = Point::on_axis(1, 0.999_999).unwrap();
        // phi_a(b) = (a - b)/(1 - ab), tanh-addition for opposite points
        let expect = 2.0 * 0.999_999f64.atanh();
        assert!((invariant_distance(&a, &b) - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn comparison_factor_bounds_metric_ratio() {
        let mut rng = task_rng(8, "kappa", 0);
        for _ in 0..2000 {
            let c = random_point(&mut rng, 2, 0.95);
            let rho = rand::Rng::random_range(&mut rng, 1e-4..0.3);
            let kappa = comparison_factor(c.norm(), rho);
            assert!(kappa > 0.0 && kappa <= 1.0 + 1e-12);
            let off = uniform_in_complex_ball(&mut rng, 2, rho);
            let Ok(x) = Point::new(linalg::add(&c, &off)) else { continue };
            let xi = unit_complex_vector(&mut rng, 2);
            let hx = metric::vec_norm_h(&x, &xi).unwrap().powi(2);
            let hc = metric::vec_norm_h(&c, &xi).unwrap().powi(2);
            assert!(hx >= kappa * hc * (1.0 - 1e-12));
        }
    }

    #[test]
    fn bracket_trivial_and_radial() {
        let z = Point::new(vec![Complex64::new(0.3, 0.1), Complex64::new(0.0, -0.2)]).unwrap();
        let b = distance_bracket(&z, &z, 10).unwrap();
        assert_eq!((b.lower, b.upper), (0.0, 0.0));
        assert!(b.witness.is_none());

        let o = Point::origin(1).unwrap();
        let w = Point::on_axis(1, 0.5).unwrap();
        let exact = radial_distance(0.5).unwrap();
        let b = distance_bracket(&o, &w, 20).unwrap();
        assert!((b.upper - exact).abs() < 1e-4 && b.lower <= exact);
        assert!(b.lower >= exact - 1e-9, "radial profile bound is exact at the origin");
    }

    #[test]
    fn bracket_orthogonal_axes() {
        let z = Point::on_axis(2, 0.6).unwrap();
        let w = Point::new(vec![Complex64::new(0.0, 0.0), Complex64::new(0.6, 0.0)]).unwrap();
        let b = distance_bracket(&z, &w, 30).unwrap();
        assert!(b.upper <= 2.0 * radial_distance(0.6).unwrap());
        assert!(b.lower >= invariant_distance(&z, &w));
        assert!(b.lower <= b.upper);
        let wl = curve_length(b.witness.as_ref().unwrap()).unwrap();
        assert!(wl <= b.upper * (1.0 + 1e-9));
    }

    #[test]
    fn optimisation_never_worsens_the_bracket() {
        let mut rng = task_rng(3, "opt", 0);
        for _ in 0..10 {
            let z = random_point(&mut rng, 2, 0.9);
            let w = random_point(&mut rng, 2, 0.9);
            let b0 = distance_bracket(&z, &w, 0).unwrap();
            let b1 = distance_bracket(&z, &w, 40).unwrap();
            assert!(b1.upper <= b0.upper * (1.0 + 1e-12));
            assert_eq!(b0.lower, b1.lower);
            assert!(b0.overlaps(&distance_bracket(&w, &z, 0).unwrap()));
        }
    }
}
