#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rpca_core::{svd, DenseMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = rng(seed);
    DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn uniform(rows: usize, cols: usize, scale: f64, seed: u64) -> DenseMatrix {
    let mut rng = rng(seed);
    DenseMatrix::from_fn(rows, cols, |_, _| scale * rng.gen_range(-1.0..1.0))
}

/// Exact rank-`r` matrix as a product of Gaussian factors.
pub fn low_rank(rows: usize, cols: usize, r: usize, seed: u64) -> DenseMatrix {
    gaussian(rows, r, seed).matmul(&gaussian(r, cols, seed.wrapping_add(0x9e37))).unwrap()
}

/// Orthonormal basis of a random `rows x cols` Gaussian matrix.
pub fn orthonormal(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    svd(&gaussian(rows, cols, seed), 0.0).unwrap().u
}

pub fn rel_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.sub(b).unwrap().frobenius_norm() / b.frobenius_norm().max(f64::MIN_POSITIVE)
}
