use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::geometry::PolyCylinder;
use crate::linalg::{self, Point};
use crate::report::{Extrema, VerificationReport};
use crate::rng::task_rng;

/// Sample plan shared by the local-deviation suites: for each `|z|` in the
/// grid, `z = |z| e_1` and `w` uniform in `D_psi(z, r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPlan {
    pub n: usize,
    pub r: f64,
    pub z_grid: Vec<f64>,
    pub samples_per_z: usize,
    pub seed: u64,
}

impl LocalPlan {
    fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r < 0.125) {
            return Err(LabError::OutOfRange(format!("r = {} not in (0, 1/8)", self.r)));
        }
        if self.z_grid.is_empty() || self.samples_per_z == 0 {
            return Err(LabError::OutOfRange("empty sample plan".into()));
        }
        Ok(())
    }

    fn pairs(&self) -> Result<Vec<Vec<(Point, Point)>>> {
        self.validate()?;
        self.z_grid
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let z = Point::on_axis(self.n, t)?;
                let d = PolyCylinder::new(z.clone(), self.r)?;
                let frame = d.frame();
                (0..self.samples_per_z)
                    .into_par_iter()
                    .map(|j| {
                        let idx = (i * self.samples_per_z + j) as u64;
                        let mut rng = task_rng(self.seed, "local_pairs", idx);
                        Ok((z.clone(), Point::new(d.sample(&mut rng, &frame))?))
                    })
                    .collect()
            })
            .collect()
    }

    fn report(&self, name: &str) -> VerificationReport {
        VerificationReport::new(name, self.n)
            .param("r", self.r)
            .param("z_grid", self.z_grid.clone())
            .param("samples_per_z", self.samples_per_z as u64)
            .param("seed", self.seed)
    }
}

/// `|2 Re(1/(1-<w,z>)) - psi(z) - psi(w)|`.
pub fn local_deviation(z: &Point, w: &Point) -> f64 {
    let a = Complex64::new(1.0, 0.0) - linalg::dot(w, z);
    (2.0 * (1.0 / a).re - 1.0 / z.gap() - 1.0 / w.gap()).abs()
}

/// `log(|F_z(w)|^2 e^{-psi(w)})` with `F_z(w) = exp(1/(1-<w,z>) - psi(z)/2)`.
pub fn test_function_log(z: &Point, w: &Point) -> f64 {
    let a = Complex64::new(1.0, 0.0) - linalg::dot(w, z);
    2.0 * ((1.0 / a).re - 0.5 / z.gap()) - 1.0 / w.gap()
}

/// Spearman rank correlation with average ranks for ties.
pub(crate) fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            for &k in &idx[i..=j] {
                r[k] = 0.5 * (i + j) as f64;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}

/// Pass rule shared by both framings: per-`z` maxima within a factor 3 of each other.
fn finish_local(mut rep: VerificationReport, plan: &LocalPlan, values: Vec<Vec<f64>>) -> VerificationReport {
    let maxima: Vec<f64> = values.iter().map(|v| v.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
    for (t, m) in plan.z_grid.iter().zip(&maxima) {
        rep.metric(&format!("max_at_{t}"), *m);
    }
    for v in &values {
        for &x in v {
            rep.extrema.observe(x);
        }
    }
    rep.samples = values.iter().map(|v| v.len() as u64).sum();
    let hi = maxima.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = maxima.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    rep.metric("c_r", hi);
    rep.metric("max_ratio_across_grid", ratio);
    rep.metric("spearman_rho", spearman(&plan.z_grid, &maxima));
    rep.finish(hi.is_finite() && ratio < 3.0, 0.0)
}

/// Bounded deviation of `2 Re(1/(1-<w,z>))` from `psi(z) + psi(w)` on `D_psi(z, r)`.
pub fn imp_ineq_suite(plan: &LocalPlan) -> Result<VerificationReport> {
    let pairs = plan.pairs()?;
    let values = pairs.iter().map(|v| v.iter().map(|(z, w)| local_deviation(z, w)).collect()).collect();
    Ok(finish_local(plan.report("imp_ineq"), plan, values))
}

/// Comparability `|F_z(w)|^2 e^{-psi(w)} ~ 1` on `D_psi(z, r)`, in the log domain.
pub fn test_function_suite(plan: &LocalPlan) -> Result<VerificationReport> {
    let pairs = plan.pairs()?;
    let signed: Vec<Vec<f64>> = pairs.iter().map(|v| v.iter().map(|(z, w)| test_function_log(z, w)).collect()).collect();
    let mut range = Extrema::empty();
    signed.iter().flatten().for_each(|&g| range.observe(g));
    let mut rep = plan.report("test_function");
    rep.metric("signed_min", range.min);
    rep.metric("signed_max", range.max);
    let values = signed.into_iter().map(|v| v.into_iter().map(f64::abs).collect()).collect();
    Ok(finish_local(rep, plan, values))
}
