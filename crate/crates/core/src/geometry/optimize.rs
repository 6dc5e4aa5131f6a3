//! Length minimisation over the interior nodes of a discretised curve.
//!
//! Limited-memory BFGS on central-difference gradients, with the metric at
//! each node as the initial inverse Hessian and a backtracking line search.

use std::collections::VecDeque;

use super::curve::{length_flat, segment_length_flat};

const MEMORY: usize = 8;
const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 40;
/// Nodes are kept inside this radius.
pub const NODE_RADIUS: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct OptimizerSettings {
    pub initial_nodes: usize,
    pub max_nodes: usize,
    pub fd_step: f64,
    /// Stop doubling once a level improves the length by less than this fraction.
    pub level_tol: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self { initial_nodes: 64, max_nodes: 1024, fd_step: 1e-6, level_tol: 1e-6 }
    }
}

pub(crate) struct Path {
    pub flat: Vec<f64>,
    pub stride: usize,
}

impl Path {
    fn count(&self) -> usize {
        self.flat.len() / self.stride
    }

    pub fn length(&self) -> f64 {
        length_flat(&self.flat, self.stride)
    }

    fn node(&self, i: usize) -> &[f64] {
        &self.flat[i * self.stride..(i + 1) * self.stride]
    }

    fn local(&self, flat: &[f64], i: usize) -> f64 {
        let s = self.stride;
        segment_length_flat(&flat[(i - 1) * s..i * s], &flat[i * s..(i + 1) * s])
            + segment_length_flat(&flat[i * s..(i + 1) * s], &flat[(i + 1) * s..(i + 2) * s])
    }

    fn gradient(&self, h: f64) -> Vec<f64> {
        let mut g = vec![0.0; self.flat.len()];
        let mut work = self.flat.clone();
        for i in 1..self.count() - 1 {
            for k in 0..self.stride {
                let idx = i * self.stride + k;
                let x = work[idx];
                work[idx] = x + h;
                let up = self.local(&work, i);
                work[idx] = x - h;
                let down = self.local(&work, i);
                work[idx] = x;
                g[idx] = (up - down) / (2.0 * h);
            }
        }
        g
    }

    /// Applies the inverse metric at each node to `v`.
    fn precondition(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for i in 1..self.count() - 1 {
            let x = self.node(i);
            let range = i * self.stride..(i + 1) * self.stride;
            let g = &v[range.clone()];
            let xx: f64 = x.iter().map(|a| a * a).sum();
            let gap = 1.0 - xx;
            let a = 1.0 / (gap * gap);
            let b = 2.0 / (gap * gap * gap);
            let o = &mut out[range];
            for k in 0..self.stride {
                o[k] = g[k] / a;
            }
            if xx > 0.0 {
                // projection onto the real span of x and i*x
                let mut gx = 0.0;
                let mut gix = 0.0;
                for k in (0..self.stride).step_by(2) {
                    gx += g[k] * x[k] + g[k + 1] * x[k + 1];
                    gix += -g[k] * x[k + 1] + g[k + 1] * x[k];
                }
                let coef = (1.0 / (a + b * xx) - 1.0 / a) / xx;
                for k in (0..self.stride).step_by(2) {
                    o[k] += coef * (gx * x[k] - gix * x[k + 1]);
                    o[k + 1] += coef * (gx * x[k + 1] + gix * x[k]);
                }
            }
        }
        out
    }

    fn stepped(&self, dir: &[f64], alpha: f64) -> Vec<f64> {
        let mut next: Vec<f64> = self.flat.iter().zip(dir).map(|(x, d)| x + alpha * d).collect();
        for node in next.chunks_mut(self.stride) {
            let r = node.iter().map(|a| a * a).sum::<f64>().sqrt();
            if r > NODE_RADIUS {
                let s = NODE_RADIUS / r;
                node.iter_mut().for_each(|a| *a *= s);
            }
        }
        next
    }

    /// Runs at most `budget` descent iterations; returns the number used.
    pub fn descend(&mut self, budget: usize, fd_step: f64) -> usize {
        if self.count() < 3 || budget == 0 {
            return 0;
        }
        let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
        let mut len = self.length();
        let mut grad = self.gradient(fd_step);
        let mut stalls = 0;
        let mut used = 0;
        while used < budget {
            used += 1;
            let mut dir = self.lbfgs_direction(&grad, &history);
            let mut slope = dot(&grad, &dir);
            if slope >= 0.0 {
                history.clear();
                dir = self.precondition(&grad).into_iter().map(|x| -x).collect();
                slope = dot(&grad, &dir);
            }
            if slope >= 0.0 {
                break;
            }
            if history.is_empty() {
                // first step: keep node moves below a quarter of the shortest segment
                let scale = self.first_step_scale(&dir);
                dir.iter_mut().for_each(|d| *d *= scale);
                slope *= scale;
            }
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..MAX_HALVINGS {
                let trial = self.stepped(&dir, alpha);
                let l = length_flat(&trial, self.stride);
                if l.is_finite() && l <= len + ARMIJO * alpha * slope {
                    accepted = Some((trial, l));
                    break;
                }
                alpha *= 0.5;
            }
            let Some((trial, l)) = accepted else { break };
            let old_flat = std::mem::replace(&mut self.flat, trial);
            let new_grad = self.gradient(fd_step);
            let s: Vec<f64> = self.flat.iter().zip(&old_flat).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-14 * norm(&s) * norm(&y) && sy > 0.0 {
                history.push_back((s, y, 1.0 / sy));
                if history.len() > MEMORY {
                    history.pop_front();
                }
            }
            let improvement = len - l;
            len = l;
            grad = new_grad;
            if improvement <= 1e-14 * len {
                stalls += 1;
                if stalls >= 3 {
                    break;
                }
            } else {
                stalls = 0;
            }
        }
        used
    }

    fn first_step_scale(&self, dir: &[f64]) -> f64 {
        let mut min_seg = f64::INFINITY;
        for i in 0..self.count() - 1 {
            let d: f64 = self
                .node(i)
                .iter()
                .zip(self.node(i + 1))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            min_seg = min_seg.min(d);
        }
        let max_move = dir
            .chunks(self.stride)
            .map(|c| c.iter().map(|a| a * a).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        if max_move > 0.0 {
            (0.25 * min_seg / max_move).min(1.0)
        } else {
            1.0
        }
    }

    fn lbfgs_direction(&self, grad: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
        let mut q = grad.to_vec();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let mut r = self.precondition(&q);
        if let Some((s, y, _)) = history.back() {
            let py = self.precondition(y);
            let ypy = dot(y, &py);
            if ypy > 0.0 {
                let gamma = dot(s, y) / ypy;
                r.iter_mut().for_each(|v| *v *= gamma);
            }
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &r);
            r.iter_mut().zip(s).for_each(|(ri, si)| *ri += si * (a - b));
        }
        r.into_iter().map(|v| -v).collect()
    }

    /// Moves nodes to equal `h_psi`-arclength along the polyline; kept only if
    /// the length does not grow.
    pub fn reparametrize(&mut self) {
        let k = self.count() - 1;
        if k < 2 {
            return;
        }
        let segs: Vec<f64> = (0..k).map(|i| segment_length_flat(self.node(i), self.node(i + 1))).collect();
        let total: f64 = segs.iter().sum();
        if !(total > 0.0) {
            return;
        }
        let mut next = Vec::with_capacity(self.flat.len());
        next.extend_from_slice(self.node(0));
        let mut seg = 0;
        let mut acc = 0.0;
        for j in 1..k {
            let target = total * j as f64 / k as f64;
            while seg < k - 1 && acc + segs[seg] < target {
                acc += segs[seg];
                seg += 1;
            }
            let f = if segs[seg] > 0.0 { ((target - acc) / segs[seg]).clamp(0.0, 1.0) } else { 0.0 };
            let (a, b) = (self.node(seg), self.node(seg + 1));
            next.extend(a.iter().zip(b).map(|(x, y)| x + f * (y - x)));
        }
        next.extend_from_slice(self.node(k));
        let distinct = next
            .chunks(self.stride)
            .zip(next.chunks(self.stride).skip(1))
            .all(|(a, b)| a != b);
        if distinct && length_flat(&next, self.stride) <= total {
            self.flat = next;
        }
    }

    /// Inserts the midpoint of every segment.
    pub fn double(&mut self) {
        let k = self.count();
        let mut next = Vec::with_capacity((2 * k - 1) * self.stride);
        for i in 0..k {
            if i > 0 {
                let (a, b) = (self.node(i - 1), self.node(i));
                next.extend(a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)));
            }
            next.extend_from_slice(self.node(i));
        }
        self.flat = next;
    }

    /// Reparametrisation, descent and node doubling within `budget` iterations.
    pub fn minimize(&mut self, budget: usize, settings: &OptimizerSettings) {
        self.reparametrize();
        if budget == 0 {
            return;
        }
        let mut remaining = budget;
        let mut previous = self.length();
        loop {
            remaining -= self.descend(remaining, settings.fd_step).min(remaining);
            self.reparametrize();
            let len = self.length();
            let gain = previous - len;
            previous = len;
            let segments = self.count() - 1;
            if remaining == 0 || 2 * segments > settings.max_nodes {
                break;
            }
            if segments > settings.initial_nodes && gain < settings.level_tol * len {
                break;
            }
            self.double();
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
