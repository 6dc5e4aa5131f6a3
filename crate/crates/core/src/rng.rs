//! Counter-based random streams.
//!
//! Every task draws from ChaCha8 keyed by `(seed, tag)` with the task index as
//! the stream id, so results do not depend on how tasks are scheduled.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Name recorded in report headers.
pub const GENERATOR: &str = "chacha8(key=splitmix64(seed,fnv1a64(tag)),stream=task)";

fn fnv1a64(tag: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Random stream for task `index` of the suite identified by `tag`.
pub fn task_rng(seed: u64, tag: &str, index: u64) -> ChaCha8Rng {
    let mut state = seed ^ fnv1a64(tag).rotate_left(17);
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Uniform point of the real `dim`-ball of the given radius.
pub fn uniform_in_real_ball<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> Vec<f64> {
    if dim == 0 {
        return Vec::new();
    }
    loop {
        let v: Vec<f64> = (0..dim).map(|_| standard_normal(rng)).collect();
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len == 0.0 {
            continue;
        }
        let u: f64 = rng.random();
        let scale = radius * u.powf(1.0 / dim as f64) / len;
        return v.into_iter().map(|x| x * scale).collect();
    }
}

/// Uniform point of the ball of radius `radius` in `C^n`.
pub fn uniform_in_complex_ball<R: Rng + ?Sized>(rng: &mut R, n: usize, radius: f64) -> Vec<Complex64> {
    let v = uniform_in_real_ball(rng, 2 * n, radius);
    v.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect()
}

/// Uniform direction on the unit sphere of `C^n`.
pub fn unit_complex_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> =
            (0..n).map(|_| Complex64::new(standard_normal(rng), standard_normal(rng))).collect();
        let len = crate::linalg::norm(&v);
        if len > 0.0 {
            return v.into_iter().map(|c| c / len).collect();
        }
    }
}
