//! Least-absolute-deviation fitting onto an orthonormal dictionary:
//!
//! ```text
//! min ‖E‖_l1   s.t.   X = A Z + E,   AᵀA = I
//! ```
//!
//! The problem separates over the columns of `X`, so every column is solved as
//! its own ADM instance with its own penalty schedule and loop guard
//! `‖x - A z - e‖_∞ / ‖x‖_∞ < tol`. Because `AᵀA = I`, the `Z` step is a plain
//! projection `Aᵀ(x - e + y/β)` with no linear solve.
//!
//! Under the growing penalty the loop guard can be met before the support of
//! `e` settles, leaving a feasible but suboptimal column. Every converged
//! column is checked against a dual lower bound and, when the bound leaves a
//! gap above `1e-6 ‖x‖_1`, finished by an exact vertex descent on the l1
//! objective. The descent result replaces the ADM iterate when it is lower by
//! more than that slack; `e` is then `x - A z` exactly.
//!
//! Sequential and parallel
//! execution run the same per-column kernel, so results are bit-identical for
//! any thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::pcp::AdmConfig;
use crate::prox::shrink;
use crate::svd::gram_deviation;

mod vertex;

/// Orthonormality tolerance on `max |AᵀA - I|`.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// Consecutive near-constant residuals at the capped penalty that count as stagnation.
const STAGNATION_WINDOW: usize = 20;
const STAGNATION_REL_CHANGE: f64 = 1e-12;
/// Objective slack, relative to `‖x‖_1`, below which the ADM iterate is kept.
const POLISH_GAIN: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailureKind {
    MaxIter,
    Stagnated,
}

/// A column that exited without meeting the loop guard.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ColumnFailure {
    pub column: usize,
    pub kind: FailureKind,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct L1RegSolution {
    /// Coefficients, `A.cols() x X.cols()`.
    pub z: DenseMatrix,
    /// Sparse residual, same shape as `X`.
    pub e: DenseMatrix,
    /// Largest iteration count over all columns.
    pub iterations: usize,
    /// `‖X - A Z - E‖_∞ / ‖X‖_∞` over the whole matrix (0 when `X = 0`).
    pub final_residual: f64,
    pub column_iterations: Vec<usize>,
    /// Columns whose ADM iterate was replaced by the vertex finish.
    pub polished: Vec<usize>,
    pub failures: Vec<ColumnFailure>,
}

impl L1RegSolution {
    pub fn converged(&self) -> bool {
        self.failures.is_empty()
    }
}

struct ColumnOutcome {
    z: Vec<f64>,
    e: Vec<f64>,
    iterations: usize,
    residual: f64,
    failure: Option<FailureKind>,
    polished: bool,
}

/// Solves every column sequentially.
pub fn solve_l1reg(x: &DenseMatrix, a: &DenseMatrix, cfg: &AdmConfig) -> Result<L1RegSolution> {
    solve_l1reg_columnwise(x, a, cfg, 1)
}

/// Solves the columns of `x` as independent work items on `parallelism`
/// threads (`0` lets the runtime decide). Columns come back in order.
pub fn solve_l1reg_columnwise(
    x: &DenseMatrix,
    a: &DenseMatrix,
    cfg: &AdmConfig,
    parallelism: usize,
) -> Result<L1RegSolution> {
    cfg.validate()?;
    if x.rows() != a.rows() {
        return Err(Error::dim("solve_l1reg", format!("X has {} rows but A has {}", x.rows(), a.rows())));
    }
    let deviation = gram_deviation(a);
    if deviation > ORTHONORMAL_TOL {
        return Err(Error::NotOrthonormal { deviation });
    }

    let xt = x.transpose();
    let at = a.transpose();
    let solve = |j: usize| solve_column(xt.row(j), a, &at, cfg);
    let outcomes: Vec<ColumnOutcome> = run_indexed(x.cols(), parallelism, solve);

    let (m, n, r) = (x.rows(), x.cols(), a.cols());
    let mut z = DenseMatrix::zeros(r, n);
    let mut e = DenseMatrix::zeros(m, n);
    let mut column_iterations = Vec::with_capacity(n);
    let mut failures = Vec::new();
    let mut polished = Vec::new();
    for (j, out) in outcomes.into_iter().enumerate() {
        for (i, &v) in out.z.iter().enumerate() {
            z.set(i, j, v);
        }
        for (i, &v) in out.e.iter().enumerate() {
            e.set(i, j, v);
        }
        column_iterations.push(out.iterations);
        if out.polished {
            polished.push(j);
        }
        if let Some(kind) = out.failure {
            failures.push(ColumnFailure { column: j, kind, residual: out.residual });
        }
    }

    let final_residual = whole_residual(x, a, &z, &e);
    Ok(L1RegSolution {
        z,
        e,
        iterations: column_iterations.iter().copied().max().unwrap_or(0),
        final_residual,
        column_iterations,
        polished,
        failures,
    })
}

fn whole_residual(x: &DenseMatrix, a: &DenseMatrix, z: &DenseMatrix, e: &DenseMatrix) -> f64 {
    let nx = x.linf_norm();
    if nx == 0.0 {
        return 0.0;
    }
    let az = a.matmul(z).expect("shapes checked");
    let worst = x
        .as_slice()
        .iter()
        .zip(az.as_slice())
        .zip(e.as_slice())
        .fold(0.0f64, |acc, ((&xi, &azi), &ei)| acc.max((xi - azi - ei).abs()));
    worst / nx
}

pub(crate) fn run_indexed<T, F>(n: usize, parallelism: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match parallelism {
        1 => (0..n).map(f).collect(),
        0 => (0..n).into_par_iter().map(f).collect(),
        p => match rayon::ThreadPoolBuilder::new().num_threads(p).build() {
            Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
            Err(_) => (0..n).map(f).collect(),
        },
    }
}

/// One column of Algorithm-1 style ADM. `a` is `m x r` row-major, `at` its transpose.
fn solve_column(x: &[f64], a: &DenseMatrix, at: &DenseMatrix, cfg: &AdmConfig) -> ColumnOutcome {
    let m = x.len();
    let r = a.cols();
    let nx = x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if nx == 0.0 {
        return ColumnOutcome {
            z: vec![0.0; r],
            e: vec![0.0; m],
            iterations: 0,
            residual: 0.0,
            failure: None,
            polished: false,
        };
    }
    let (mut beta, beta_max) = cfg.penalty_schedule(2.0 / nx);
    let mut z = vec![0.0; r];
    let mut e = vec![0.0; m];
    let mut y = vec![0.0; m];
    let mut az = vec![0.0; m];
    let mut t = vec![0.0; m];
    let mut residual = 1.0;
    let mut iterations = 0;
    let mut stagnant = 0;
    let mut failure = None;

    while residual >= cfg.tol {
        if iterations == cfg.max_iter {
            failure = Some(FailureKind::MaxIter);
            break;
        }
        let inv = 1.0 / beta;
        for i in 0..m {
            e[i] = shrink(x[i] - az[i] + y[i] * inv, inv);
            t[i] = x[i] - e[i] + y[i] * inv;
        }
        for (k, zk) in z.iter_mut().enumerate() {
            *zk = dot(at.row(k), &t);
        }
        let mut worst = 0.0f64;
        for i in 0..m {
            az[i] = dot(a.row(i), &z);
            let res = x[i] - az[i] - e[i];
            y[i] += beta * res;
            worst = worst.max(res.abs());
        }
        iterations += 1;
        let next = worst / nx;
        // While the penalty still grows, a flat residual is the misfit of the
        // e = 0 phase and not a stall.
        if beta >= beta_max && (next - residual).abs() <= STAGNATION_REL_CHANGE * residual {
            stagnant += 1;
        } else {
            stagnant = 0;
        }
        residual = next;
        beta = (cfg.rho * beta).min(beta_max);
        if stagnant >= STAGNATION_WINDOW && residual >= cfg.tol {
            failure = Some(FailureKind::Stagnated);
            break;
        }
    }

    let mut polished = false;
    if failure.is_none() {
        let slack = POLISH_GAIN * x.iter().map(|v| v.abs()).sum::<f64>();
        let gap = vertex::duality_gap(x, a, &z);
        if gap > slack {
            let current: f64 = (0..m).map(|i| (x[i] - az[i]).abs()).sum();
            if let Some(v) = vertex::descend(x, a, &z).filter(|v| v.objective < current - slack) {
                for i in 0..m {
                    e[i] = x[i] - dot(a.row(i), &v.z);
                }
                z = v.z;
                residual = 0.0;
                polished = true;
            }
        }
    }

    ColumnOutcome { z, e, iterations, residual, failure, polished }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}
