use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, ValueEnum};
use rpca_core::io::{read_matrix, write_matrix};
use rpca_core::{
    ave_dif, default_l0_threshold, estimate_rank_and_solve, l0_count, max_dif, rel_err, set_dense_threads, solve_pcp,
    AdmConfig, DenseMatrix, FilterConfig, Lambda, PcpSolution,
};
use serde::Serialize;

use crate::Unconverged;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SolverChoice {
    /// Seed recovery plus l1 filtering
    L1filter,
    /// Alternating direction method on the whole matrix
    Adm,
}

#[derive(Args, Debug, Clone)]
pub struct DecomposeArgs {
    /// Input matrix (.csv or .dmat)
    pub input: PathBuf,

    #[arg(long, value_enum, default_value_t = SolverChoice::L1filter)]
    pub method: SolverChoice,

    /// Weight on the sparse term (default 1/sqrt(max(m, n)))
    #[arg(long)]
    pub lambda: Option<f64>,

    /// Relative feasibility tolerance
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,

    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,

    /// Target rank; estimated from the seed when absent
    #[arg(long)]
    pub rank_hint: Option<usize>,

    /// Seed rows per unit of rank
    #[arg(long, default_value_t = 10.0)]
    pub oversample_rows: f64,

    /// Seed columns per unit of rank
    #[arg(long, default_value_t = 10.0)]
    pub oversample_cols: f64,

    /// Recover two independent seeds and require matching ranks
    #[arg(long)]
    pub cross_validate: bool,

    /// Seed for the row and column sampling
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads (0 = all cores)
    #[arg(long, default_value_t = 0)]
    pub threads: usize,

    #[arg(long)]
    pub out_l: Option<PathBuf>,

    #[arg(long)]
    pub out_s: Option<PathBuf>,

    /// Where to write the run statistics; printed to stdout when absent
    #[arg(long)]
    pub stats_json: Option<PathBuf>,

    /// True low-rank matrix, for error metrics in the statistics
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

impl DecomposeArgs {
    pub fn adm_config(&self) -> AdmConfig {
        AdmConfig {
            lambda: self.lambda.map_or(Lambda::Auto, Lambda::Fixed),
            tol: self.tol,
            max_iter: self.max_iter,
            ..Default::default()
        }
    }

    pub fn filter_config(&self) -> FilterConfig {
        FilterConfig {
            s_r: self.oversample_rows,
            s_c: self.oversample_cols,
            rank_hint: self.rank_hint,
            rng_seed: self.seed,
            adm: self.adm_config(),
            cross_validate: self.cross_validate,
            parallelism: self.threads,
            ..Default::default()
        }
    }
}

/// Statistics written by `decompose`. Times are in seconds; `t_total`
/// covers the whole solve and, for l1 filtering, splits into seed recovery,
/// filtering and assembly.
#[derive(Debug, Clone, Serialize)]
pub struct DecomposeStats {
    pub method: &'static str,
    pub rows: usize,
    pub cols: usize,
    pub converged: bool,
    pub residual: f64,
    pub rank: usize,
    pub iterations: usize,
    pub t_total: f64,
    pub t_seed: Option<f64>,
    pub t_filter: Option<f64>,
    pub t_assembly: Option<f64>,
    pub seed_rows: Option<usize>,
    pub seed_cols: Option<usize>,
    pub seed_attempts: Option<usize>,
    pub unconverged_subproblems: Option<usize>,
    pub l0_s: usize,
    pub l1_s: f64,
    pub rel_err: Option<f64>,
    pub max_dif: Option<f64>,
    pub ave_dif: Option<f64>,
}

impl DecomposeStats {
    pub fn from_solution(sol: &PcpSolution, truth: Option<&DenseMatrix>) -> rpca_core::Result<Self> {
        let f = sol.filter.as_ref();
        let (rel, max, ave) = match truth {
            Some(l0) => (Some(rel_err(&sol.l, l0)?), Some(max_dif(&sol.l, l0)?), Some(ave_dif(&sol.l, l0)?)),
            None => (None, None, None),
        };
        Ok(Self {
            method: sol.method.as_str(),
            rows: sol.l.rows(),
            cols: sol.l.cols(),
            converged: sol.converged,
            residual: sol.final_residual,
            rank: sol.rank_of_l,
            iterations: sol.iterations,
            t_total: sol.elapsed.as_secs_f64(),
            t_seed: f.map(|f| f.seed_time.as_secs_f64()),
            t_filter: f.map(|f| f.filter_time.as_secs_f64()),
            t_assembly: f.map(|f| f.assemble_time.as_secs_f64()),
            seed_rows: f.map(|f| f.seed_rows),
            seed_cols: f.map(|f| f.seed_cols),
            seed_attempts: f.map(|f| f.attempts),
            unconverged_subproblems: f.map(|f| f.unconverged_subproblems),
            l0_s: l0_count(&sol.s, default_l0_threshold(&sol.s)),
            l1_s: sol.s.l1_norm(),
            rel_err: rel,
            max_dif: max,
            ave_dif: ave,
        })
    }
}

pub fn solve(m: &DenseMatrix, args: &DecomposeArgs) -> rpca_core::Result<PcpSolution> {
    match args.method {
        SolverChoice::L1filter => estimate_rank_and_solve(m, &args.filter_config()),
        SolverChoice::Adm => solve_pcp(m, &args.adm_config()),
    }
}

/// Runs `decompose`: reads, solves, writes `L`, `S` and the statistics.
/// A solve that misses its tolerance still writes everything, then reports
/// [`Unconverged`].
pub fn run(args: &DecomposeArgs) -> anyhow::Result<DecomposeStats> {
    set_dense_threads(args.threads);
    let m = read_matrix(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let truth = match &args.truth {
        Some(p) => Some(read_matrix(p).with_context(|| format!("reading {}", p.display()))?),
        None => None,
    };
    if let Some(t) = &truth {
        if t.shape() != m.shape() {
            return Err(rpca_core::Error::Dimension {
                op: "truth",
                detail: format!("truth is {:?} but input is {:?}", t.shape(), m.shape()),
            }
            .into());
        }
    }

    let sol = solve(&m, args)?;
    if let Some(p) = &args.out_l {
        write_matrix(p, &sol.l).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(p) = &args.out_s {
        write_matrix(p, &sol.s).with_context(|| format!("writing {}", p.display()))?;
    }
    let stats = DecomposeStats::from_solution(&sol, truth.as_ref())?;
    let json = serde_json::to_string_pretty(&stats)?;
    match &args.stats_json {
        Some(p) => fs::write(p, json + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => println!("{json}"),
    }

    if !sol.converged {
        return Err(Unconverged {
            method: sol.method.as_str(),
            residual: sol.final_residual,
            unconverged_subproblems: stats.unconverged_subproblems.unwrap_or(0),
        }
        .into());
    }
    Ok(stats)
}
