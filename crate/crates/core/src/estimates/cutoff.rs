use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::geometry::{chord_upper, lower_bound, PolyCylinder};
use crate::linalg::Point;
use crate::metric::{form_norm, FormValue};
use crate::report::{Extrema, VerificationReport};
use crate::rng::task_rng;

/// Default `sigma delta` in `chi_z = eta(sigma u)`; `eta` vanishes once `sigma u >= 2`,
/// so this places the support inside `u < delta`.
pub const CUTOFF_SCALE: f64 = 2.0;

const CHI_FLOOR: f64 = 1e-10;

fn f(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// `eta(x) = f(2-|x|) / (f(|x|-1) + f(2-|x|))` with `f(x) = e^{-1/x}` for `x > 0`.
pub fn bump_eta(x: f64) -> f64 {
    let a = x.abs();
    let num = f(2.0 - a);
    if num == 0.0 {
        return 0.0;
    }
    num / (f(a - 1.0) + num)
}

/// Central difference of [`bump_eta`].
pub fn bump_derivative(x: f64, step: f64) -> f64 {
    (bump_eta(x + step) - bump_eta(x - step)) / (2.0 * step)
}

/// Checks `0 <= eta <= 1`, `eta = 1` on `[-1, 1]`, `eta = 0` off `(-2, 2)` on an
/// evenly spaced grid over `[-3, 3]`, and records `sup (eta')^2 / eta` over
/// `eta > 1e-12`.
pub fn bump_derivative_check(points: usize) -> Result<VerificationReport> {
    if points < 2 {
        return Err(LabError::OutOfRange(format!("{points} grid points")));
    }
    let mut rep = VerificationReport::new("bump_eta", 1).param("grid_points", points as u64).param("fd_step", 1e-6);
    let mut eta_range = Extrema::empty();
    for i in 0..points {
        let x = -3.0 + 6.0 * i as f64 / (points - 1) as f64;
        let e = bump_eta(x);
        eta_range.observe(e);
        let a = x.abs();
        let bad = !(0.0..=1.0).contains(&e) || (a <= 1.0 && e != 1.0) || (a >= 2.0 && e != 0.0);
        if bad {
            rep.violations += 1;
        }
        if e > 1e-12 {
            let d = bump_derivative(x, 1e-6);
            rep.extrema.observe(d * d / e);
        }
    }
    rep.samples = points as u64;
    rep.metric("eta_min", eta_range.min);
    rep.metric("eta_max", eta_range.max);
    rep.metric("c_sup", rep.extrema.max);
    Ok(rep.finish(true, 0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutoffSettings {
    pub z: Point,
    pub delta: f64,
    pub samples: usize,
    /// `sigma delta`; the support lies in `{u < 2 delta / scale}`.
    pub scale: f64,
    pub seed: u64,
}

impl CutoffSettings {
    pub fn new(z: Point, delta: f64, samples: usize, seed: u64) -> Self {
        CutoffSettings { z, delta, samples, scale: CUTOFF_SCALE, seed }
    }
}

struct Cutoff<'a> {
    z: &'a Point,
    sigma: f64,
}

impl Cutoff<'_> {
    fn value(&self, w: &[Complex64]) -> Result<f64> {
        let w = Point::new(w.to_vec())?;
        Ok(bump_eta(self.sigma * chord_upper(self.z, &w, 64)?))
    }

    /// Components `d chi / d conj(w_j)` by central differences.
    fn dbar(&self, w: &Point, h: f64) -> Result<Vec<Complex64>> {
        (0..w.dim())
            .map(|j| {
                let mut partial = [0.0; 2];
                for (p, dir) in partial.iter_mut().zip([Complex64::new(h, 0.0), Complex64::new(0.0, h)]) {
                    let mut a = w.coords().to_vec();
                    let mut b = a.clone();
                    a[j] += dir;
                    b[j] -= dir;
                    *p = (self.value(&a)? - self.value(&b)?) / (2.0 * h);
                }
                Ok(Complex64::new(0.5 * partial[0], 0.5 * partial[1]))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
enum Sample {
    Checked { chi: f64, constant: Option<f64>, violation: bool },
    Inconclusive,
}

/// Cutoff `chi_z = eta(sigma u)` with `u` the chord length from `z`, checked on
/// samples drawn alternately from `D_psi(z, 3 delta)` and `D_psi(z, delta)`:
/// range, `chi = 1` where `u < delta/4`, `chi = 0` where the certified lower
/// bound exceeds `delta`, and `|dbar chi|^2 <= C chi / delta^2` where `chi > 1e-10`.
pub fn cutoff_suite(cfg: &CutoffSettings) -> Result<VerificationReport> {
    let delta = cfg.delta;
    if !(delta > 0.0 && delta < 1.0 / 12.0) {
        return Err(LabError::OutOfRange(format!("delta = {delta} not in (0, 1/12)")));
    }
    if !(cfg.scale > 0.0) {
        return Err(LabError::OutOfRange(format!("scale = {}", cfg.scale)));
    }
    let z = &cfg.z;
    let cut = Cutoff { z, sigma: cfg.scale / delta };
    let outer = PolyCylinder::new(z.clone(), 3.0 * delta)?;
    let inner = PolyCylinder::new(z.clone(), delta)?;
    let frame = outer.frame();
    let h = 1e-5 * inner.radial_radius();
    let outcomes: Vec<Sample> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| -> Result<Sample> {
            let mut rng = task_rng(cfg.seed, "cutoff", i as u64);
            let w = match i {
                0 => z.clone(),
                _ if i % 2 == 0 => Point::new(outer.sample(&mut rng, &frame))?,
                _ => Point::new(inner.sample(&mut rng, &frame))?,
            };
            let u = chord_upper(z, &w, 64)?;
            let chi = bump_eta(cut.sigma * u);
            let lower = lower_bound(z, &w)?;
            let violation = !(0.0..=1.0).contains(&chi) || (u < 0.25 * delta && chi != 1.0) || (lower > delta && chi != 0.0);
            let constant = if chi > CHI_FLOOR {
                match cut.dbar(&w, h) {
                    Ok(a) => Some(form_norm(&w, &FormValue::form01(a))?.powi(2) * delta * delta / chi),
                    Err(_) => return Ok(Sample::Inconclusive),
                }
            } else {
                None
            };
            Ok(Sample::Checked { chi, constant, violation })
        })
        .collect::<Result<_>>()?;

    let mut rep = VerificationReport::new("cutoff", z.dim())
        .param("center_norm", z.norm())
        .param("delta", delta)
        .param("scale", cfg.scale)
        .param("samples", cfg.samples as u64)
        .param("seed", cfg.seed);
    let mut chi_range = Extrema::empty();
    let mut support = 0u64;
    for o in &outcomes {
        rep.samples += 1;
        match *o {
            Sample::Inconclusive => rep.inconclusive += 1,
            Sample::Checked { chi, constant, violation } => {
                chi_range.observe(chi);
                if violation {
                    rep.violations += 1;
                }
                if let Some(c) = constant {
                    support += 1;
                    rep.extrema.observe(c);
                }
            }
        }
    }
    rep.metric("chi_min", chi_range.min);
    rep.metric("chi_max", chi_range.max);
    rep.metric("c_sup", rep.extrema.max);
    rep.metric("support_samples", support as f64);
    Ok(rep.finish(true, 0.01))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::radial_distance;

    #[test]
    fn bump_examples() {
        assert_eq!(bump_eta(0.0), 1.0);
        assert_eq!(bump_eta(2.5), 0.0);
        assert_eq!(bump_eta(-2.5), 0.0);
        let mid = bump_eta(1.5);
        assert!(mid > 0.0 && mid < 1.0);
        assert!((bump_eta(1.5) - 0.5).abs() < 1e-15);
        let rep = bump_derivative_check(10_000).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.metrics["c_sup"].is_finite() && rep.metrics["c_sup"] > 0.0);
    }

    #[test]
    fn cutoff_properties_hold() {
        for (n, t) in [(1, 0.0), (2, 0.6)] {
            let z = Point::on_axis(n, t).unwrap();
            let rep = cutoff_suite(&CutoffSettings::new(z, 0.05, 1500, 2)).unwrap();
            assert!(rep.pass, "{rep:?}");
            assert_eq!(rep.metrics["chi_max"], 1.0);
            assert!(rep.metrics["support_samples"] > 50.0);
        }
    }

    #[test]
    fn constant_stable_when_delta_halves() {
        let z = Point::on_axis(2, 0.5).unwrap();
        let a = cutoff_suite(&CutoffSettings::new(z.clone(), 0.06, 1500, 4)).unwrap();
        let b = cutoff_suite(&CutoffSettings::new(z, 0.03, 1500, 4)).unwrap();
        let q = a.metrics["c_sup"] / b.metrics["c_sup"];
        assert!((0.25..4.0).contains(&q), "{q}");
    }

    #[test]
    fn narrower_scale_breaks_support() {
        // with sigma = 4/(3 delta) the support reaches u < 3 delta / 2
        let delta = 0.05;
        let mut lo = 0.0;
        let mut hi = 0.5;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if radial_distance(mid).unwrap() < 1.1 * delta {
                lo = mid
            } else {
                hi = mid
            }
        }
        let o = Point::origin(1).unwrap();
        let w = Point::on_axis(1, hi).unwrap();
        assert!(lower_bound(&o, &w).unwrap() > delta);
        let literal = Cutoff { z: &o, sigma: 4.0 / (3.0 * delta) };
        assert!(literal.value(w.coords()).unwrap() > 0.0);
        let default = Cutoff { z: &o, sigma: CUTOFF_SCALE / delta };
        assert_eq!(default.value(w.coords()).unwrap(), 0.0);
    }
}
