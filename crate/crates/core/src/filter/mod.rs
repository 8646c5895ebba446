//! l1 filtering: recover a small sampled seed block by PCP, fit the remaining
//! seed rows and columns onto its singular vectors by l1 regression, and fill
//! in the rest with the generalized Nyström formula.
//!
//! The target rank is estimated on the fly. Starting from the hint (or 1), a
//! seed of `(s_r r) x (s_c r)` is sampled and recovered; if its rank `r'` is too
//! large for the seed (`m'/r' < s_r` or `n'/r' < s_c`), the seed grows to
//! `(s_r r') x (s_c r')` with a fresh sample. If the seed would cover more than
//! `max_seed_fraction` of either dimension, the whole matrix is handed to the
//! full ADM solver instead.

mod complete;
mod seed;

use std::time::Instant;

pub use complete::{
    assemble, assemble_factored, column_block, complement, filter_columns, filter_rows, filter_seed, nystrom_complete,
    nystrom_complete_pinv, row_block, FilterResult, FilteredBlock,
};
pub use seed::{recover_seed, sample_submatrix, sample_submatrix_with, SeedRecovery, SeedSample};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::pcp::{solve_pcp, AdmConfig, FilterStats, Method, PcpSolution};
use crate::rng::{stream, streams};
use crate::svd::DEFAULT_RANK_TOL;

/// Upper bound on seed recoveries before giving up and solving the full problem.
const MAX_ATTEMPTS: usize = 32;

pub const DEFAULT_MIN_SEED_DIM: usize = 100;

#[derive(Clone, Debug)]
pub struct FilterConfig {
    /// Row oversampling rate: seed rows per unit of rank.
    pub s_r: f64,
    /// Column oversampling rate.
    pub s_c: f64,
    pub rank_hint: Option<usize>,
    /// Largest seed share of either dimension before falling back to full PCP.
    pub max_seed_fraction: f64,
    pub rng_seed: u64,
    /// Settings for the seed PCP solve and the l1 filtering subproblems.
    pub adm: AdmConfig,
    /// Recover a second, independent seed and require the same rank.
    pub cross_validate: bool,
    /// Worker threads for filtering; `0` lets the runtime decide.
    pub parallelism: usize,
    /// Relative cutoff for the seed's numerical rank.
    pub rank_tol: f64,
    /// Smallest seed side regardless of rank; tiny PCP problems recover
    /// unreliably even at rank 1 or 2.
    pub min_seed_dim: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            s_r: 10.0,
            s_c: 10.0,
            rank_hint: None,
            max_seed_fraction: 0.5,
            rng_seed: 0,
            adm: AdmConfig::default(),
            cross_validate: false,
            parallelism: 0,
            rank_tol: DEFAULT_RANK_TOL,
            min_seed_dim: DEFAULT_MIN_SEED_DIM,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("s_r", self.s_r), ("s_c", self.s_c)] {
            if !(v.is_finite() && v > 1.0) {
                return Err(Error::InvalidArgument(format!("{name} must be > 1, got {v}")));
            }
        }
        if !(self.max_seed_fraction > 0.0 && self.max_seed_fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "max_seed_fraction must lie in (0, 1], got {}",
                self.max_seed_fraction
            )));
        }
        if !(self.rank_tol.is_finite() && self.rank_tol >= 0.0) {
            return Err(Error::InvalidArgument(format!("rank_tol must be nonnegative, got {}", self.rank_tol)));
        }
        if self.rank_hint == Some(0) {
            return Err(Error::InvalidArgument("rank_hint must be positive".into()));
        }
        self.adm.validate()
    }

    /// Seed dimensions for target rank `r`: `(s_r r) x (s_c r)`, but at least
    /// `min_seed_dim` on each side.
    pub fn seed_shape(&self, r: usize) -> (usize, usize) {
        (
            ((self.s_r * r as f64).ceil() as usize).max(self.min_seed_dim),
            ((self.s_c * r as f64).ceil() as usize).max(self.min_seed_dim),
        )
    }

    /// Whether a `seed_rows x seed_cols` seed is large enough for rank `r_prime`.
    pub fn seed_supports_rank(&self, seed_rows: usize, seed_cols: usize, r_prime: usize) -> bool {
        let r = r_prime as f64;
        seed_rows as f64 >= self.s_r * r && seed_cols as f64 >= self.s_c * r
    }

    /// Whether a seed of this size exceeds `max_seed_fraction` of the matrix.
    pub fn seed_too_large(&self, seed: (usize, usize), shape: (usize, usize)) -> bool {
        let frac = (seed.0 as f64 / shape.0 as f64).max(seed.1 as f64 / shape.1 as f64);
        frac > self.max_seed_fraction
    }
}

enum SeedOutcome {
    Accepted(Box<SeedRecovery>),
    Degenerate,
    Fallback,
}

/// Decomposes `m` by l1 filtering with target-rank estimation.
///
/// Falling back to full PCP is not an error; it shows up as
/// `Method::FullPcpFallback`. A seed whose recovered low-rank part vanishes
/// yields `L = 0, S = M` with `Method::DegenerateSeed`.
pub fn estimate_rank_and_solve(m: &DenseMatrix, cfg: &FilterConfig) -> Result<PcpSolution> {
    cfg.validate()?;
    let (rows, cols) = m.shape();
    if m.is_empty() {
        return Err(Error::InvalidArgument(format!("cannot decompose an empty {rows}x{cols} matrix")));
    }
    let start = Instant::now();
    let mut stats = FilterStats::default();

    let outcome = select_seed(m, cfg, &mut stats)?;
    stats.seed_time = start.elapsed();

    let seed = match outcome {
        SeedOutcome::Accepted(seed) => *seed,
        SeedOutcome::Degenerate => {
            return Ok(PcpSolution {
                l: DenseMatrix::zeros(rows, cols),
                s: m.clone(),
                iterations: 0,
                final_residual: 0.0,
                rank_of_l: 0,
                elapsed: start.elapsed(),
                converged: true,
                method: Method::DegenerateSeed,
                trace: Vec::new(),
                filter: Some(stats),
            });
        }
        SeedOutcome::Fallback => {
            let mut sol = solve_pcp(m, &cfg.adm)?;
            sol.method = Method::FullPcpFallback;
            sol.elapsed = start.elapsed();
            sol.filter = Some(stats);
            return Ok(sol);
        }
    };
    let seed_iterations = seed.iterations;

    let t = Instant::now();
    let fr = filter_seed(m, &seed, &cfg.adm, cfg.parallelism)?;
    stats.filter_time = t.elapsed();
    stats.filter_iterations_max = fr.iterations;
    stats.unconverged_subproblems = fr.failures;

    let t = Instant::now();
    let l = assemble_factored(&seed, &fr, rows, cols)?;
    let s = m.sub(&l)?;
    // S is defined as M - L, so the constraint residual is zero in floating
    // point as well: fl(a - b) - fl(a - b) = 0.
    let residual = 0.0;
    stats.assemble_time = t.elapsed();

    Ok(PcpSolution {
        l,
        s,
        iterations: seed_iterations,
        final_residual: residual,
        rank_of_l: seed.r_prime,
        elapsed: start.elapsed(),
        converged: fr.failures == 0,
        method: Method::L1Filter,
        trace: Vec::new(),
        filter: Some(stats),
    })
}

fn sample_and_recover(
    m: &DenseMatrix,
    shape: (usize, usize),
    cfg: &FilterConfig,
    stream_id: u64,
) -> Result<SeedRecovery> {
    let mut rng = stream(cfg.rng_seed, stream_id);
    let sample = sample_submatrix_with(m, shape.0, shape.1, &mut rng)?;
    recover_seed(&sample, &cfg.adm, cfg.rank_tol)
}

fn select_seed(m: &DenseMatrix, cfg: &FilterConfig, stats: &mut FilterStats) -> Result<SeedOutcome> {
    let shape = m.shape();
    let mut r = cfg.rank_hint.unwrap_or(1);
    for attempt in 0..MAX_ATTEMPTS as u64 {
        let (sr, sc) = cfg.seed_shape(r);
        if cfg.seed_too_large((sr, sc), shape) {
            return Ok(SeedOutcome::Fallback);
        }
        stats.seed_rows = sr;
        stats.seed_cols = sc;
        stats.attempts += 1;
        let seed = match sample_and_recover(m, (sr, sc), cfg, streams::SEED_SAMPLING + attempt) {
            Err(Error::SeedRankZero) => return Ok(SeedOutcome::Degenerate),
            other => other?,
        };
        stats.r_prime = seed.r_prime;
        if !cfg.seed_supports_rank(sr, sc, seed.r_prime) {
            r = seed.r_prime;
            continue;
        }
        if cfg.cross_validate {
            stats.attempts += 1;
            let check = match sample_and_recover(m, (sr, sc), cfg, streams::CROSS_VALIDATION + attempt) {
                Err(Error::SeedRankZero) => 0,
                other => other?.r_prime,
            };
            if check != seed.r_prime {
                r = seed.r_prime.max(check);
                continue;
            }
        }
        return Ok(SeedOutcome::Accepted(Box::new(seed)));
    }
    Ok(SeedOutcome::Fallback)
}
