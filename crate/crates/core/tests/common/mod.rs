#![allow(dead_code)]

use mildrep::DiscreteMeasure;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random probability measure with `count` atoms in `[-scale, scale]^dim`.
pub fn random_measure(rng: &mut ChaCha8Rng, dim: usize, count: usize, scale: f64) -> DiscreteMeasure {
    let points = (0..count)
        .map(|_| (0..dim).map(|_| scale * (2.0 * rng.gen::<f64>() - 1.0)).collect())
        .collect();
    let raw: Vec<f64> = (0..count).map(|_| 0.05 + rng.gen::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    DiscreteMeasure::new(dim, points, raw.iter().map(|w| w / total).collect()).unwrap()
}

/// Random orthogonal matrix (row-major) from Gram-Schmidt on a random matrix.
pub fn random_rotation(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    while rows.len() < dim {
        let mut v: Vec<f64> = (0..dim).map(|_| 2.0 * rng.gen::<f64>() - 1.0).collect();
        for r in &rows {
            let c: f64 = v.iter().zip(r).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(r).for_each(|(a, b)| *a -= c * b);
        }
        let len = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if len > 1e-3 {
            rows.push(v.iter().map(|a| a / len).collect());
        }
    }
    rows.concat()
}

/// Signed double sum `sum_{i,j} s_i s_j |x_i - x_j|^4` over the atoms of
/// `mu0 - mu1`.
pub fn brute_quartic(mu0: &DiscreteMeasure, mu1: &DiscreteMeasure) -> f64 {
    let atoms: Vec<(&Vec<f64>, f64)> = mu0
        .points()
        .iter()
        .zip(mu0.weights().iter().copied())
        .chain(mu1.points().iter().zip(mu1.weights().iter().map(|w| -w)))
        .collect();
    let mut s = 0.0;
    for (x, a) in &atoms {
        for (y, b) in &atoms {
            let d2: f64 = x.iter().zip(y.iter()).map(|(p, q)| (p - q) * (p - q)).sum();
            s += a * b * d2 * d2;
        }
    }
    s
}
