//! Principal component pursuit by the inexact augmented Lagrangian / alternating
//! direction method:
//!
//! ```text
//! min ‖L‖_* + λ‖S‖_l1   s.t.   M = L + S
//! ```
//!
//! Each iteration updates `S` by entrywise shrinkage, then `L` by singular value
//! thresholding, then the multiplier `Y` and the penalty `β`. The order is fixed
//! so runs are reproducible for a given SVD backend.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::matrix::{frobenius_norm, DenseMatrix};
use crate::prox::{shrink, SvdStrategy, SvtEngine};
use crate::svd::spectral_norm_estimate;

/// Weight on the l1 term.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Lambda {
    /// `1 / sqrt(max(rows, cols))` of the matrix being decomposed.
    #[default]
    Auto,
    Fixed(f64),
}

impl Lambda {
    pub fn resolve(self, rows: usize, cols: usize) -> f64 {
        match self {
            Lambda::Auto => default_lambda(rows, cols),
            Lambda::Fixed(v) => v,
        }
    }
}

/// `1 / sqrt(max(rows, cols))`.
pub fn default_lambda(rows: usize, cols: usize) -> f64 {
    1.0 / (rows.max(cols).max(1) as f64).sqrt()
}

/// Hyperparameters shared by the ADM solvers in this crate.
///
/// `beta0` and `beta_max` left as `None` take solver-specific defaults:
/// `1.25/‖M‖_2` for PCP and `2/‖x‖_∞` per column for l1 regression, with
/// `beta_max = 1e7 * beta0` in both.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmConfig {
    pub lambda: Lambda,
    pub tol: f64,
    pub beta0: Option<f64>,
    pub rho: f64,
    pub beta_max: Option<f64>,
    pub max_iter: usize,
    pub svd: SvdStrategy,
}

impl Default for AdmConfig {
    fn default() -> Self {
        Self {
            lambda: Lambda::Auto,
            tol: 1e-7,
            beta0: None,
            rho: 1.5,
            beta_max: None,
            max_iter: 1000,
            svd: SvdStrategy::Auto,
        }
    }
}

/// Ratio `beta_max / beta0` used when `beta_max` is not given.
pub const DEFAULT_BETA_RANGE: f64 = 1e7;

impl AdmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if !(self.rho > 1.0 && self.rho.is_finite()) {
            return bad(format!("rho must exceed 1, got {}", self.rho));
        }
        if let Lambda::Fixed(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return bad(format!("lambda must be positive, got {l}"));
            }
        }
        if let Some(b) = self.beta0 {
            if !(b > 0.0 && b.is_finite()) {
                return bad(format!("beta0 must be positive, got {b}"));
            }
        }
        if let Some(bm) = self.beta_max {
            if !(bm > 0.0 && bm.is_finite()) {
                return bad(format!("beta_max must be positive, got {bm}"));
            }
            if let Some(b) = self.beta0 {
                if b >= bm {
                    return bad(format!("beta0 ({b}) must be below beta_max ({bm})"));
                }
            }
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1".into());
        }
        Ok(())
    }

    pub(crate) fn penalty_schedule(&self, default_beta0: f64) -> (f64, f64) {
        let beta0 = self.beta0.unwrap_or(default_beta0);
        let beta_max = self.beta_max.unwrap_or(DEFAULT_BETA_RANGE * beta0);
        (beta0, beta_max.max(beta0))
    }
}

/// Which route produced a [`PcpSolution`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Adm,
    L1Filter,
    /// l1 filtering gave up because the seed would exceed the size limit.
    FullPcpFallback,
    /// The recovered seed had rank zero; `L = 0, S = M`.
    DegenerateSeed,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Adm => "adm",
            Method::L1Filter => "l1filter",
            Method::FullPcpFallback => "full-pcp-fallback",
            Method::DegenerateSeed => "degenerate-seed",
        }
    }
}

/// One ADM iteration as recorded in [`PcpSolution::trace`].
#[derive(Clone, Copy, Debug)]
pub struct AdmStep {
    pub beta: f64,
    pub residual: f64,
    pub rank: usize,
}

/// Per-stage bookkeeping of an l1-filtering solve.
#[derive(Clone, Debug, Default)]
pub struct FilterStats {
    pub seed_rows: usize,
    pub seed_cols: usize,
    pub r_prime: usize,
    /// Seed recoveries performed, including growth and cross-validation.
    pub attempts: usize,
    pub seed_time: Duration,
    pub filter_time: Duration,
    pub assemble_time: Duration,
    pub filter_iterations_max: usize,
    /// Column/row subproblems that did not meet the l1 loop guard.
    pub unconverged_subproblems: usize,
}

/// Low-rank and sparse parts of a decomposition with convergence statistics.
#[derive(Clone, Debug)]
pub struct PcpSolution {
    pub l: DenseMatrix,
    pub s: DenseMatrix,
    pub iterations: usize,
    /// `‖M - L - S‖_F / ‖M‖_F` at exit.
    pub final_residual: f64,
    pub rank_of_l: usize,
    pub elapsed: Duration,
    pub converged: bool,
    pub method: Method,
    pub trace: Vec<AdmStep>,
    pub filter: Option<FilterStats>,
}

/// Solves PCP on the whole matrix.
///
/// Non-convergence within `max_iter` is not an error: the last iterate comes
/// back with `converged == false`. A non-finite residual aborts.
pub fn solve_pcp(m: &DenseMatrix, cfg: &AdmConfig) -> Result<PcpSolution> {
    cfg.validate()?;
    let (rows, cols) = m.shape();
    if m.is_empty() {
        return Err(Error::InvalidArgument(format!("cannot decompose an empty {rows}x{cols} matrix")));
    }
    let start = Instant::now();
    let norm_m = frobenius_norm(m);
    if norm_m == 0.0 {
        return Ok(PcpSolution {
            l: DenseMatrix::zeros(rows, cols),
            s: DenseMatrix::zeros(rows, cols),
            iterations: 1,
            final_residual: 0.0,
            rank_of_l: 0,
            elapsed: start.elapsed(),
            converged: true,
            method: Method::Adm,
            trace: Vec::new(),
            filter: None,
        });
    }

    let lambda = cfg.lambda.resolve(rows, cols);
    let (mut beta, beta_max) = cfg.penalty_schedule(1.25 / spectral_norm_estimate(m));
    let mv = m.as_slice();
    let mut l = DenseMatrix::zeros(rows, cols);
    let mut s = vec![0.0; mv.len()];
    let mut y = vec![0.0; mv.len()];
    let mut work = vec![0.0; mv.len()];
    let mut engine = SvtEngine::new(cfg.svd);
    let mut trace = Vec::new();
    let mut residual = 1.0;
    let mut rank = 0;
    let mut converged = false;
    let mut iterations = 0;

    for k in 1..=cfg.max_iter {
        iterations = k;
        let inv = 1.0 / beta;
        let shrink_by = lambda * inv;
        for (i, w) in work.iter_mut().enumerate() {
            let v = mv[i] - l.as_slice()[i] + y[i] * inv;
            s[i] = shrink(v, shrink_by);
            *w = mv[i] - s[i] + y[i] * inv;
        }
        let w = DenseMatrix::from_vec_unchecked(rows, cols, std::mem::take(&mut work));
        let (next_l, kept) = engine.apply(&w, inv)?;
        work = w.into_vec();
        l = next_l;
        rank = kept;

        let mut sq = 0.0;
        for (i, yi) in y.iter_mut().enumerate() {
            let z = mv[i] - l.as_slice()[i] - s[i];
            sq += z * z;
            *yi += beta * z;
        }
        residual = sq.sqrt() / norm_m;
        if !residual.is_finite() {
            return Err(Error::Diverged {
                iteration: k,
                detail: format!("residual became {residual} (beta = {beta:e})"),
            });
        }
        trace.push(AdmStep { beta, residual, rank });
        beta = (cfg.rho * beta).min(beta_max);
        if residual <= cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(PcpSolution {
        l,
        s: DenseMatrix::from_vec_unchecked(rows, cols, s),
        iterations,
        final_residual: residual,
        rank_of_l: rank,
        elapsed: start.elapsed(),
        converged,
        method: Method::Adm,
        trace,
        filter: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lambda_examples() {
        assert!((default_lambda(2000, 2000) - 0.022360679774997897).abs() < 1e-15);
        assert_eq!(default_lambda(1, 1), 1.0);
        assert_eq!(default_lambda(100, 400), 0.05);
        assert_eq!(Lambda::Fixed(0.3).resolve(5, 5), 0.3);
    }

    #[test]
    fn config_validation() {
        assert!(AdmConfig::default().validate().is_ok());
        let bad = [
            AdmConfig { rho: 1.0, ..Default::default() },
            AdmConfig { tol: 0.0, ..Default::default() },
            AdmConfig { beta0: Some(2.0), beta_max: Some(1.0), ..Default::default() },
            AdmConfig { lambda: Lambda::Fixed(-1.0), ..Default::default() },
            AdmConfig { max_iter: 0, ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn zero_matrix_is_immediate() {
        let sol = solve_pcp(&DenseMatrix::zeros(5, 4), &AdmConfig::default()).unwrap();
        assert_eq!(sol.iterations, 1);
        assert!(sol.converged);
        assert_eq!(sol.l.linf_norm(), 0.0);
        assert_eq!(sol.s.linf_norm(), 0.0);
    }

    #[test]
    fn empty_matrix_rejected() {
        assert!(solve_pcp(&DenseMatrix::zeros(0, 3), &AdmConfig::default()).is_err());
    }

    #[test]
    fn clean_rank_one_has_no_sparse_part() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a: Vec<f64> = (0..40).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m = DenseMatrix::from_fn(40, 30, |i, j| a[i] * b[j]);
        let cfg = AdmConfig::default();
        let sol = solve_pcp(&m, &cfg).unwrap();
        assert!(sol.converged);
        assert!(sol.final_residual <= cfg.tol);
        assert_eq!(sol.rank_of_l, 1);
        let err = sol.l.sub(&m).unwrap().frobenius_norm() / m.frobenius_norm();
        assert!(err < 1e-6, "rel err {err}");
        assert!(sol.s.linf_norm() < 1e-6 * m.linf_norm());
    }

    #[test]
    fn penalty_is_monotone_and_capped() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = DenseMatrix::from_fn(30, 30, |_, _| rng.gen_range(-1.0..1.0));
        let cfg = AdmConfig { beta0: Some(0.1), beta_max: Some(5.0), max_iter: 60, ..Default::default() };
        let sol = solve_pcp(&m, &cfg).unwrap();
        for w in sol.trace.windows(2) {
            assert!(w[1].beta >= w[0].beta);
        }
        assert!(sol.trace.iter().all(|s| s.beta <= 5.0));
        assert!((sol.trace.first().unwrap().beta - 0.1).abs() < 1e-15);
    }

    #[test]
    fn max_iter_exhaustion_is_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = DenseMatrix::from_fn(20, 20, |_, _| rng.gen_range(-1.0..1.0));
        let cfg = AdmConfig { max_iter: 2, ..Default::default() };
        let sol = solve_pcp(&m, &cfg).unwrap();
        assert_eq!(sol.iterations, 2);
        assert!(!sol.converged);
        assert!(sol.final_residual > cfg.tol);
    }
}
