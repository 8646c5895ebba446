//! Robust PCA: decompose a matrix into low-rank and sparse parts.
//!
//! Two solvers share one result type:
//!
//! * [`solve_pcp`] runs the alternating direction method on the whole matrix.
//! * [`estimate_rank_and_solve`] recovers only a small sampled seed by PCP and
//!   extends it to the full matrix by l1 regression and Nyström completion,
//!   which is linear in the matrix size for a fixed rank.
//!
//! ```
//! use rpca_core::{estimate_rank_and_solve, generate, rel_err, FilterConfig, SynthSpec};
//!
//! let truth = generate(&SynthSpec::square(200, 0.01, 0.01, 7)).unwrap();
//! let sol = estimate_rank_and_solve(&truth.m_obs, &FilterConfig::default()).unwrap();
//! assert!(rel_err(&sol.l, &truth.l0).unwrap() < 1e-5);
//! ```

pub mod error;
pub mod filter;
pub mod io;
pub mod l1reg;
pub mod matrix;
pub mod pcp;
pub mod prox;
pub mod rng;
pub mod svd;
pub mod synth;

pub use error::{Error, Result};
pub use filter::{estimate_rank_and_solve, FilterConfig, FilterResult, SeedRecovery};
pub use l1reg::{solve_l1reg, solve_l1reg_columnwise, L1RegSolution};
pub use matrix::{default_l0_threshold, frobenius_norm, l0_count, l1_norm, linf_norm, set_dense_threads, DenseMatrix};
pub use pcp::{default_lambda, solve_pcp, AdmConfig, FilterStats, Lambda, Method, PcpSolution};
pub use prox::{shrink, soft_threshold, svt, SvdStrategy};
pub use svd::{svd, SkinnySvd, DEFAULT_RANK_TOL};
pub use synth::{ave_dif, checkerboard, corrupt_impulsive, generate, max_dif, rel_err, GroundTruth, SynthSpec};
