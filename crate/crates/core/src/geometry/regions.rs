use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::linalg::{self, ComplexMatrix, Point};
use crate::rng;

use super::distance::{chord_upper, distance_bracket, lower_bound};

/// `D_psi(z, r)`: radial radius `r(1-|z|^2)^{3/2}`, tangential radius `r(1-|z|^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyCylinder {
    center: Point,
    radius: f64,
}

impl PolyCylinder {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(LabError::OutOfRange(format!("polycylinder radius {radius} must be positive")));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn radial_radius(&self) -> f64 {
        self.radius * self.center.gap().powf(1.5)
    }

    pub fn tangent_radius(&self) -> f64 {
        self.radius * self.center.gap()
    }

    pub fn contains(&self, w: &[Complex64]) -> bool {
        let z = &self.center;
        let radial = linalg::norm(&linalg::sub(z, &linalg::proj_p(z, w)));
        let tangent = linalg::norm(&linalg::proj_q(z, w));
        radial < self.radial_radius() && tangent < self.tangent_radius()
    }

    /// Product of a disk and a `(2n-2)`-ball; the Euclidean `2n`-ball at the origin.
    pub fn closed_form_volume(&self) -> f64 {
        let n = self.center.dim();
        if self.center.is_origin() {
            return unit_ball_volume(2 * n) * self.radius.powi(2 * n as i32);
        }
        let rr = self.radial_radius();
        PI * rr * rr * unit_ball_volume(2 * n - 2) * self.tangent_radius().powi(2 * n as i32 - 2)
    }

    /// Axis frame: the rows of `U_z`, or the identity at the origin.
    pub fn frame(&self) -> ComplexMatrix {
        frame(&self.center)
    }

    /// Uniform sample; `frame` must be [`PolyCylinder::frame`].
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, frame: &ComplexMatrix) -> Vec<Complex64> {
        let n = self.center.dim();
        if self.center.is_origin() {
            return rng::uniform_in_complex_ball(rng, n, self.radius);
        }
        let mut v = Vec::with_capacity(n);
        let d = rng::uniform_in_real_ball(rng, 2, self.radial_radius());
        v.push(Complex64::new(self.center.norm() + d[0], d[1]));
        v.extend(rng::uniform_in_complex_ball(rng, n - 1, self.tangent_radius()));
        frame.adjoint().mul_vec(&v)
    }

    /// Enclosing box in frame coordinates as `(lo, hi)` per real coordinate.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        let n = self.center.dim();
        if self.center.is_origin() {
            return vec![(-self.radius, self.radius); 2 * n];
        }
        let (rr, tr) = (self.radial_radius(), self.tangent_radius());
        let s = self.center.norm();
        let mut b = vec![(s - rr, s + rr), (-rr, rr)];
        b.extend(std::iter::repeat_n((-tr, tr), 2 * n - 2));
        b
    }
}

/// `U_z`, or the identity at the origin.
pub fn frame(z: &Point) -> ComplexMatrix {
    if z.is_origin() {
        ComplexMatrix::identity(z.dim())
    } else {
        linalg::unitary_to_axis(z).expect("nonzero center")
    }
}

/// Volume of the unit ball of `R^k`, `k` even.
pub fn unit_ball_volume(k: usize) -> f64 {
    assert!(k % 2 == 0);
    let m = k / 2;
    (1..=m).fold(1.0, |acc, j| acc * PI / j as f64)
}

/// `B_psi(z, r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicBall {
    center: Point,
    radius: f64,
}

impl GeodesicBall {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(LabError::OutOfRange(format!("ball radius {radius} must be positive")));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `D_psi(z, 2r)`, which contains the ball.
    pub fn envelope(&self) -> PolyCylinder {
        PolyCylinder { center: self.center.clone(), radius: 2.0 * self.radius }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Membership {
    In,
    Out,
    Unknown,
}

/// Strict membership in `D_psi(z, r)`.
pub fn in_polycylinder(d: &PolyCylinder, w: &Point) -> bool {
    d.contains(w)
}

/// Membership of `w` in `B` decided from distance brackets: cheap bounds
/// first, then the optimised bracket with `budget` iterations.
pub fn in_ball_certified(b: &GeodesicBall, w: &Point, budget: usize) -> Result<Membership> {
    let z = &b.center;
    if z == w {
        return Ok(Membership::In);
    }
    let lower = lower_bound(z, w)?;
    if lower > b.radius {
        return Ok(Membership::Out);
    }
    if chord_upper(z, w, 64)? < b.radius {
        return Ok(Membership::In);
    }
    let mut bracket = distance_bracket(z, w, 0)?;
    if bracket.upper >= b.radius && budget > 0 {
        bracket = distance_bracket(z, w, budget)?;
    }
    Ok(if bracket.upper < b.radius { Membership::In } else { Membership::Unknown })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::radial_distance;
    use crate::rng::task_rng;

    #[test]
    fn polycylinder_examples() {
        let o = Point::origin(2).unwrap();
        let d = PolyCylinder::new(o.clone(), 0.1).unwrap();
        assert!(in_polycylinder(&d, &o));
        assert!(in_polycylinder(&d, &Point::on_axis(2, 0.05).unwrap()));
        assert!(!in_polycylinder(&d, &Point::on_axis(2, 0.15).unwrap()));

        let z = Point::on_axis(2, 0.8).unwrap();
        let d = PolyCylinder::new(z.clone(), 0.05).unwrap();
        let step = 0.04 * (1.0 - 0.64);
        let tangent = Point::new(vec![z[0], Complex64::new(step, 0.0)]).unwrap();
        let radial = Point::new(vec![z[0] + step, Complex64::new(0.0, 0.0)]).unwrap();
        assert!(in_polycylinder(&d, &tangent));
        assert!(!in_polycylinder(&d, &radial));
        assert!(PolyCylinder::new(z, 0.0).is_err());
    }

    #[test]
    fn frame_maps_polycylinder_to_axis_product() {
        let mut rng = task_rng(2, "frame", 0);
        let z = Point::new(vec![Complex64::new(0.3, -0.5), Complex64::new(0.2, 0.4)]).unwrap();
        let d = PolyCylinder::new(z.clone(), 0.07).unwrap();
        let u = d.frame();
        let boxes = d.bounding_box();
        for _ in 0..1000 {
            // uniform in the frame box, membership tested both ways
            let v: Vec<f64> = boxes.iter().map(|(lo, hi)| rng.random_range(*lo..*hi)).collect();
            let vc: Vec<Complex64> = v.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
            let w = u.adjoint().mul_vec(&vc);
            let axis = {
                let radial = (vc[0] - Complex64::new(z.norm(), 0.0)).norm();
                radial < d.radial_radius() && vc[1].norm() < d.tangent_radius()
            };
            assert_eq!(d.contains(&w), axis);
        }
    }

    #[test]
    fn samples_land_inside() {
        let mut rng = task_rng(4, "sample", 0);
        for z in [Point::origin(2).unwrap(), Point::on_axis(2, 0.9).unwrap()] {
            let d = PolyCylinder::new(z, 0.05).unwrap();
            let f = d.frame();
            for _ in 0..1000 {
                assert!(d.contains(&d.sample(&mut rng, &f)));
            }
        }
    }

    #[test]
    fn closed_form_volume_examples() {
        let d = PolyCylinder::new(Point::origin(1).unwrap(), 0.05).unwrap();
        assert!((d.closed_form_volume() - PI * 0.0025).abs() < 1e-15);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
        let z = Point::on_axis(2, 0.6).unwrap();
        let d = PolyCylinder::new(z, 0.1).unwrap();
        let g: f64 = 0.64;
        let expect = PI * 0.01 * g.powi(3) * PI * (0.1 * g).powi(2);
        assert!((d.closed_form_volume() - expect).abs() < 1e-15);
    }

    #[test]
    fn certified_membership_examples() {
        let o = Point::origin(2).unwrap();
        let b = GeodesicBall::new(o.clone(), radial_distance(0.5).unwrap()).unwrap();
        assert_eq!(in_ball_certified(&b, &o, 0).unwrap(), Membership::In);
        assert_eq!(in_ball_certified(&b, &Point::on_axis(2, 0.49).unwrap(), 0).unwrap(), Membership::In);
        assert_eq!(in_ball_certified(&b, &Point::on_axis(2, 0.51).unwrap(), 0).unwrap(), Membership::Out);
    }
}
