//! Synthetic low-rank plus sparse problems with known ground truth, and the
//! recovery metrics used to score them.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::matrix::{frobenius_norm, DenseMatrix};
use crate::rng::{stream, streams};

/// Parameters of a random instance `M = A Bᵀ + sigma_scale * S0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthSpec {
    pub m: usize,
    pub n: usize,
    /// Rank ratio `r / m`; 0 gives an all-zero low-rank part.
    pub rho_r: f64,
    /// Sparsity ratio `p / (m n)`.
    pub rho_s: f64,
    /// Sparse entries are uniform in `[-magnitude, magnitude]`.
    pub magnitude: f64,
    pub sigma_scale: f64,
    pub rng_seed: u64,
}

impl SynthSpec {
    pub fn square(m: usize, rho_r: f64, rho_s: f64, rng_seed: u64) -> Self {
        Self { m, n: m, rho_r, rho_s, magnitude: 500.0, sigma_scale: 1.0, rng_seed }
    }

    /// `round(rho_r * m)`, at least 1 unless `rho_r` is exactly zero.
    pub fn rank(&self) -> usize {
        if self.rho_r == 0.0 {
            0
        } else {
            ((self.rho_r * self.m as f64).round() as usize).max(1)
        }
    }

    /// `round(rho_s * m * n)`.
    pub fn support_size(&self) -> usize {
        (self.rho_s * (self.m * self.n) as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.m == 0 || self.n == 0 {
            return bad(format!("matrix must be nonempty, got {}x{}", self.m, self.n));
        }
        if !(0.0..1.0).contains(&self.rho_r) {
            return bad(format!("rho_r must be in [0, 1), got {}", self.rho_r));
        }
        if !(0.0..1.0).contains(&self.rho_s) {
            return bad(format!("rho_s must be in [0, 1), got {}", self.rho_s));
        }
        if !(self.magnitude > 0.0 && self.magnitude.is_finite()) {
            return bad(format!("magnitude must be positive, got {}", self.magnitude));
        }
        if !(self.sigma_scale >= 0.0 && self.sigma_scale.is_finite()) {
            return bad(format!("sigma_scale must be >= 0, got {}", self.sigma_scale));
        }
        if self.rank() > self.m.min(self.n) {
            return bad(format!("rank {} exceeds {}x{}", self.rank(), self.m, self.n));
        }
        if self.support_size() > self.m * self.n {
            return bad(format!("{} corruptions exceed {} entries", self.support_size(), self.m * self.n));
        }
        Ok(())
    }
}

/// An observed matrix together with the parts it was built from.
#[derive(Clone, Debug)]
pub struct GroundTruth {
    /// `l0 + sigma_scale * s0`, computed entrywise in that order.
    pub m_obs: DenseMatrix,
    pub l0: DenseMatrix,
    pub s0: DenseMatrix,
    pub sigma_scale: f64,
    pub rank: usize,
}

/// Draws a random instance: Gaussian factors for the low-rank part and a
/// uniformly placed, uniformly valued sparse part.
pub fn generate(spec: &SynthSpec) -> Result<GroundTruth> {
    spec.validate()?;
    let (m, n, r) = (spec.m, spec.n, spec.rank());
    let seed = spec.rng_seed;

    let mut left = stream(seed, streams::LEFT_FACTOR);
    let a = DenseMatrix::from_fn(m, r, |_, _| StandardNormal.sample(&mut left));
    let mut right = stream(seed, streams::RIGHT_FACTOR);
    let b = DenseMatrix::from_fn(n, r, |_, _| StandardNormal.sample(&mut right));
    let l0 = if r == 0 { DenseMatrix::zeros(m, n) } else { crate::matrix::gemm(a.as_faer(), b.as_faer().transpose()) };

    let p = spec.support_size();
    let mut support_rng = stream(seed, streams::SUPPORT);
    let support = index::sample(&mut support_rng, m * n, p);
    let mut value_rng = stream(seed, streams::VALUES);
    let values = Uniform::new_inclusive(-spec.magnitude, spec.magnitude);
    let mut s0 = vec![0.0; m * n];
    for pos in support.iter() {
        s0[pos] = value_rng.sample(values);
    }

    let sigma = spec.sigma_scale;
    let obs: Vec<f64> = l0.as_slice().iter().zip(&s0).map(|(l, s)| l + sigma * s).collect();
    Ok(GroundTruth {
        m_obs: DenseMatrix::from_vec_unchecked(m, n, obs),
        l0,
        s0: DenseMatrix::from_vec_unchecked(m, n, s0),
        sigma_scale: sigma,
        rank: r,
    })
}

/// Intensity of the light checkerboard cells.
pub const CHECKER_LIGHT: f64 = 0.8;
/// Intensity of the dark checkerboard cells.
pub const CHECKER_DARK: f64 = 0.2;

/// An `m x m` two-level checkerboard with square cells of side `cell`.
/// The top-left cell is light. Rank 2 whenever `m / cell >= 2`.
pub fn checkerboard(m: usize, cell: usize) -> Result<DenseMatrix> {
    if cell == 0 || m == 0 || !m.is_multiple_of(cell) {
        return Err(Error::InvalidArgument(format!("cell size {cell} must divide image size {m}")));
    }
    Ok(DenseMatrix::from_fn(
        m,
        m,
        |i, j| if (i / cell + j / cell).is_multiple_of(2) { CHECKER_LIGHT } else { CHECKER_DARK },
    ))
}

/// Replaces exactly `round(fraction * size)` uniformly chosen pixels with
/// salt (1.0) or pepper (0.0), chosen by a fair coin.
pub fn corrupt_impulsive(img: &DenseMatrix, fraction: f64, rng_seed: u64) -> Result<GroundTruth> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!("corruption fraction must be in [0, 1], got {fraction}")));
    }
    let total = img.rows() * img.cols();
    let count = (fraction * total as f64).round() as usize;
    let mut rng = stream(rng_seed, streams::IMPULSE);
    let positions = index::sample(&mut rng, total, count);
    let clean = img.as_slice();
    let mut s0 = vec![0.0; total];
    for pos in positions.iter() {
        let level = if rng.gen_bool(0.5) { 1.0 } else { 0.0 };
        s0[pos] = level - clean[pos];
    }
    let obs: Vec<f64> = clean.iter().zip(&s0).map(|(l, s)| l + s).collect();
    Ok(GroundTruth {
        m_obs: DenseMatrix::from_vec_unchecked(img.rows(), img.cols(), obs),
        l0: img.clone(),
        s0: DenseMatrix::from_vec_unchecked(img.rows(), img.cols(), s0),
        sigma_scale: 1.0,
        rank: crate::svd::numerical_rank(img, crate::svd::DEFAULT_RANK_TOL)?,
    })
}

fn check_same(op: &'static str, a: &DenseMatrix, b: &DenseMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::dim(op, format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

/// `‖l_star - l0‖_F / ‖l0‖_F`.
pub fn rel_err(l_star: &DenseMatrix, l0: &DenseMatrix) -> Result<f64> {
    check_same("rel_err", l_star, l0)?;
    let diff = frobenius_norm(&l_star.sub(l0)?);
    let base = frobenius_norm(l0);
    Ok(if base > 0.0 {
        diff / base
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    })
}

/// `max |l_star - l0|`.
pub fn max_dif(l_star: &DenseMatrix, l0: &DenseMatrix) -> Result<f64> {
    check_same("max_dif", l_star, l0)?;
    Ok(l_star.sub(l0)?.linf_norm())
}

/// `Σ |l_star - l0| / (rows * cols)`.
pub fn ave_dif(l_star: &DenseMatrix, l0: &DenseMatrix) -> Result<f64> {
    check_same("ave_dif", l_star, l0)?;
    let count = (l0.rows() * l0.cols()).max(1) as f64;
    Ok(l_star.sub(l0)?.l1_norm() / count)
}
