use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::pcp::{solve_pcp, AdmConfig};
use crate::rng::{stream, streams};
use crate::svd::{svd, SkinnySvd};

/// Row and column index sets drawn from a matrix, with the block they select.
#[derive(Clone, Debug)]
pub struct SeedSample {
    /// Strictly increasing row indices.
    pub row_idx: Vec<usize>,
    /// Strictly increasing column indices.
    pub col_idx: Vec<usize>,
    pub block: DenseMatrix,
}

/// Samples `n_rows` rows and `n_cols` columns uniformly without replacement,
/// using the first seed-sampling stream of `rng_seed`.
pub fn sample_submatrix(m: &DenseMatrix, n_rows: usize, n_cols: usize, rng_seed: u64) -> Result<SeedSample> {
    sample_submatrix_with(m, n_rows, n_cols, &mut stream(rng_seed, streams::SEED_SAMPLING))
}

pub fn sample_submatrix_with<R: Rng + ?Sized>(
    m: &DenseMatrix,
    n_rows: usize,
    n_cols: usize,
    rng: &mut R,
) -> Result<SeedSample> {
    if n_rows > m.rows() || n_cols > m.cols() {
        return Err(Error::dim(
            "sample_submatrix",
            format!("requested {n_rows}x{n_cols} from a {}x{} matrix", m.rows(), m.cols()),
        ));
    }
    let mut row_idx = index::sample(rng, m.rows(), n_rows).into_vec();
    let mut col_idx = index::sample(rng, m.cols(), n_cols).into_vec();
    row_idx.sort_unstable();
    col_idx.sort_unstable();
    let block = m.select(&row_idx, &col_idx)?;
    Ok(SeedSample { row_idx, col_idx, block })
}

/// A recovered seed: the low-rank part of the sampled block and its skinny SVD.
#[derive(Clone, Debug)]
pub struct SeedRecovery {
    pub row_idx: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub seed_svd: SkinnySvd,
    /// `U Σ Vᵀ` of the retained triplets.
    pub seed_l: DenseMatrix,
    /// Sampled block minus `seed_l`.
    pub seed_s: DenseMatrix,
    /// Numerical rank of `seed_l`; equals `seed_svd.rank()`.
    pub r_prime: usize,
    pub iterations: usize,
}

/// Solves PCP on the sampled block and factorizes its low-rank part.
///
/// With `Lambda::Auto` the weight is `1/sqrt(max(m', n'))` of the block itself.
/// Returns [`Error::SeedRankZero`] when nothing survives `rank_tol`.
pub fn recover_seed(sample: &SeedSample, adm: &AdmConfig, rank_tol: f64) -> Result<SeedRecovery> {
    if sample.block.is_empty() {
        return Err(Error::InvalidArgument("seed block is empty".into()));
    }
    let sol = solve_pcp(&sample.block, adm)?;
    if !sol.converged {
        return Err(Error::NotConverged {
            what: "seed recovery",
            iterations: sol.iterations,
            residual: sol.final_residual,
        });
    }
    let seed_svd = svd(&sol.l, rank_tol)?;
    if seed_svd.rank() == 0 {
        return Err(Error::SeedRankZero);
    }
    let seed_l = seed_svd.reconstruct();
    let seed_s = sample.block.sub(&seed_l)?;
    Ok(SeedRecovery {
        row_idx: sample.row_idx.clone(),
        col_idx: sample.col_idx.clone(),
        r_prime: seed_svd.rank(),
        seed_svd,
        seed_l,
        seed_s,
        iterations: sol.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthSpec};

    #[test]
    fn full_sample_is_a_permutation_of_the_input() {
        let m = DenseMatrix::from_fn(6, 5, |i, j| (i * 5 + j) as f64);
        let s = sample_submatrix(&m, 6, 5, 3).unwrap();
        assert_eq!(s.row_idx, (0..6).collect::<Vec<_>>());
        assert_eq!(s.col_idx, (0..5).collect::<Vec<_>>());
        assert_eq!(s.block, m);
    }

    #[test]
    fn sampling_is_deterministic_and_duplicate_free() {
        let m = DenseMatrix::zeros(1000, 1000);
        let a = sample_submatrix(&m, 100, 100, 42).unwrap();
        let b = sample_submatrix(&m, 100, 100, 42).unwrap();
        assert_eq!(a.row_idx, b.row_idx);
        assert_eq!(a.col_idx, b.col_idx);
        assert_eq!(a.block.shape(), (100, 100));
        assert!(a.row_idx.windows(2).all(|w| w[0] < w[1]));
        assert!(a.col_idx.windows(2).all(|w| w[0] < w[1]));
        let c = sample_submatrix(&m, 100, 100, 43).unwrap();
        assert_ne!(a.row_idx, c.row_idx);
    }

    #[test]
    fn oversized_request_rejected() {
        let m = DenseMatrix::zeros(5, 5);
        assert!(sample_submatrix(&m, 6, 2, 0).is_err());
    }

    #[test]
    fn clean_rank_two_block() {
        let gt = generate(&SynthSpec::square(40, 0.05, 0.0, 8)).unwrap();
        let sample = sample_submatrix(&gt.m_obs, 40, 40, 0).unwrap();
        let seed = recover_seed(&sample, &AdmConfig::default(), 1e-8).unwrap();
        assert_eq!(seed.r_prime, 2);
        assert!(seed.seed_s.linf_norm() < 1e-6 * gt.m_obs.linf_norm());
        let recon = seed.seed_svd.reconstruct();
        assert!(recon.sub(&seed.seed_l).unwrap().frobenius_norm() <= 1e-8 * seed.seed_l.frobenius_norm());
    }

    #[test]
    fn zero_block_has_rank_zero() {
        let m = DenseMatrix::zeros(10, 10);
        let sample = sample_submatrix(&m, 5, 5, 0).unwrap();
        assert!(matches!(recover_seed(&sample, &AdmConfig::default(), 1e-8), Err(Error::SeedRankZero)));
    }
}
