use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use rpca_core::io::{write_matrix, write_pgm};
use rpca_core::svd::numerical_rank;
use rpca_core::{
    checkerboard, corrupt_impulsive, estimate_rank_and_solve, generate, l0_count, max_dif, rel_err, set_dense_threads,
    DenseMatrix, FilterConfig, SynthSpec, DEFAULT_RANK_TOL,
};
use serde_json::json;

#[derive(Args, Debug, Clone)]
pub struct SynthArgs {
    /// Rows
    #[arg(long)]
    pub m: usize,

    /// Columns (default: same as rows)
    #[arg(long)]
    pub n: Option<usize>,

    /// Rank ratio r/m
    #[arg(long, default_value_t = 0.01)]
    pub rho_r: f64,

    /// Fraction of corrupted entries
    #[arg(long, default_value_t = 0.01)]
    pub rho_s: f64,

    /// Sparse values are uniform in [-magnitude, magnitude]
    #[arg(long, default_value_t = 500.0)]
    pub magnitude: f64,

    /// Multiplier on the sparse part
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Observed matrix L0 + sigma * S0
    #[arg(long)]
    pub out_m: PathBuf,

    #[arg(long)]
    pub out_l0: Option<PathBuf>,

    #[arg(long)]
    pub out_s0: Option<PathBuf>,
}

impl SynthArgs {
    pub fn spec(&self) -> SynthSpec {
        SynthSpec {
            m: self.m,
            n: self.n.unwrap_or(self.m),
            rho_r: self.rho_r,
            rho_s: self.rho_s,
            magnitude: self.magnitude,
            sigma_scale: self.sigma,
            rng_seed: self.seed,
        }
    }
}

fn write(path: &Path, m: &DenseMatrix) -> anyhow::Result<()> {
    write_matrix(path, m).with_context(|| format!("writing {}", path.display()))
}

pub fn run_synth(args: &SynthArgs) -> anyhow::Result<()> {
    let gt = generate(&args.spec())?;
    write(&args.out_m, &gt.m_obs)?;
    if let Some(p) = &args.out_l0 {
        write(p, &gt.l0)?;
    }
    if let Some(p) = &args.out_s0 {
        write(p, &gt.s0)?;
    }
    let summary = json!({
        "rows": gt.m_obs.rows(),
        "cols": gt.m_obs.cols(),
        "rank": gt.rank,
        "l0_s0": l0_count(&gt.s0, 0.0),
        "l1_s0": gt.s0.l1_norm(),
        "sigma_scale": gt.sigma_scale,
        "seed": args.seed,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

#[derive(Args, Debug, Clone)]
pub struct CheckerboardArgs {
    /// Image side length
    #[arg(long, default_value_t = 512)]
    pub m: usize,

    /// Cell side length; must divide m
    #[arg(long, default_value_t = 64)]
    pub cell: usize,

    /// Fraction of pixels replaced by impulses
    #[arg(long, default_value_t = 0.1)]
    pub fraction: f64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output prefix; writes <prefix>_clean.pgm, <prefix>_corrupted.pgm and
    /// <prefix>_corrupted.dmat
    #[arg(long)]
    pub out: PathBuf,

    /// Also recover the image by l1 filtering and write <prefix>_recovered.pgm
    #[arg(long)]
    pub recover: bool,

    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

pub fn run_checkerboard(args: &CheckerboardArgs) -> anyhow::Result<()> {
    set_dense_threads(args.threads);
    let clean = checkerboard(args.m, args.cell)?;
    let gt = corrupt_impulsive(&clean, args.fraction, args.seed)?;
    for (suffix, img) in [("_clean.pgm", &clean), ("_corrupted.pgm", &gt.m_obs)] {
        let p = with_suffix(&args.out, suffix);
        write_pgm(&p, img).with_context(|| format!("writing {}", p.display()))?;
    }
    write(&with_suffix(&args.out, "_corrupted.dmat"), &gt.m_obs)?;
    write(&with_suffix(&args.out, "_clean.dmat"), &clean)?;

    let mut summary = json!({
        "m": args.m,
        "cell": args.cell,
        "corrupted": l0_count(&gt.s0, 0.0),
        "seed": args.seed,
    });
    if args.recover {
        let cfg = FilterConfig { rng_seed: args.seed, parallelism: args.threads, ..Default::default() };
        let sol = estimate_rank_and_solve(&gt.m_obs, &cfg)?;
        let p = with_suffix(&args.out, "_recovered.pgm");
        write_pgm(&p, &sol.l).with_context(|| format!("writing {}", p.display()))?;
        summary["method"] = json!(sol.method.as_str());
        summary["seconds"] = json!(sol.elapsed.as_secs_f64());
        summary["rank"] = json!(numerical_rank(&sol.l, DEFAULT_RANK_TOL)?);
        summary["max_dif"] = json!(max_dif(&sol.l, &clean)?);
        summary["rel_err"] = json!(rel_err(&sol.l, &clean)?);
    }
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}
