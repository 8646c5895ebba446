//! Benchmark suites: scaled versions of the synthetic experiments, each
//! producing one [`BenchRecord`] per (instance, solver) pair.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, ValueEnum};
use rpca_core::{
    ave_dif, checkerboard, corrupt_impulsive, default_l0_threshold, estimate_rank_and_solve, generate, l0_count,
    max_dif, rel_err, set_dense_threads, solve_pcp, AdmConfig, FilterConfig, GroundTruth, PcpSolution, SynthSpec,
};

use crate::decompose::SolverChoice;
use crate::report::{BenchRecord, BenchReport, Environment, SCHEMA_VERSION};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// m = 2000 * scale, rho_r = rho_s = 0.01
    Table1,
    /// rho_r from 0.005 to 0.05 at rho_s = 0.02, m = 1000 * scale
    RankSweep,
    /// rho_s from 0.02 to 0.2 at rho_r = 0.005, m = 1000 * scale
    SparsitySweep,
    /// sparse multiplier 1..=10 at rho_r = rho_s = 0.01, m = 1000 * scale
    SigmaSweep,
    /// m in {1000, 2000, 4000} * scale at fixed rank 10, rho_s = 0.01
    SizeSweep,
    /// rank-2 checkerboard with 10% impulses, m from 1000 to 5000 * scale
    Checkerboard,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Table1 => "table1",
            Suite::RankSweep => "rank-sweep",
            Suite::SparsitySweep => "sparsity-sweep",
            Suite::SigmaSweep => "sigma-sweep",
            Suite::SizeSweep => "size-sweep",
            Suite::Checkerboard => "checkerboard",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodSet {
    Both,
    L1filter,
    Adm,
}

impl MethodSet {
    fn solvers(self) -> &'static [SolverChoice] {
        match self {
            MethodSet::Both => &[SolverChoice::L1filter, SolverChoice::Adm],
            MethodSet::L1filter => &[SolverChoice::L1filter],
            MethodSet::Adm => &[SolverChoice::Adm],
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,

    /// Multiplier on the base matrix sizes of each suite
    #[arg(long, default_value_t = 0.5)]
    pub scale: f64,

    /// Random instances per setting; seeds 0..k
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,

    #[arg(long, value_enum, default_value_t = MethodSet::Both)]
    pub methods: MethodSet,

    /// Sparse values are uniform in [-magnitude, magnitude]
    #[arg(long, default_value_t = 500.0)]
    pub magnitude: f64,

    /// Give l1 filtering the true rank instead of estimating it
    #[arg(long)]
    pub oracle_rank: bool,

    #[arg(long, default_value_t = 0)]
    pub threads: usize,

    /// Report path; `.json` writes JSON, anything else CSV. CSV to stdout
    /// when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub scale: f64,
    pub seeds: u64,
    pub methods: MethodSet,
    pub magnitude: f64,
    pub oracle_rank: bool,
    pub threads: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self { scale: 0.5, seeds: 1, methods: MethodSet::Both, magnitude: 500.0, oracle_rank: false, threads: 0 }
    }
}

impl From<&BenchArgs> for BenchOptions {
    fn from(a: &BenchArgs) -> Self {
        Self {
            scale: a.scale,
            seeds: a.seeds,
            methods: a.methods,
            magnitude: a.magnitude,
            oracle_rank: a.oracle_rank,
            threads: a.threads,
        }
    }
}

/// One synthetic setting of a suite, before the seed is chosen.
#[derive(Debug, Clone, Copy)]
enum Setting {
    Random { m: usize, rho_r: f64, rho_s: f64, sigma: f64 },
    Checker { m: usize, cell: usize, fraction: f64 },
}

fn scaled(base: usize, scale: f64) -> usize {
    ((base as f64 * scale).round() as usize).max(1)
}

fn settings(suite: Suite, opts: &BenchOptions) -> Vec<Setting> {
    let s = opts.scale;
    let random = |m: usize, rho_r: f64, rho_s: f64, sigma: f64| Setting::Random { m, rho_r, rho_s, sigma };
    match suite {
        Suite::Table1 => vec![random(scaled(2000, s), 0.01, 0.01, 1.0)],
        Suite::RankSweep => [0.005, 0.01, 0.02, 0.03, 0.04, 0.05]
            .into_iter()
            .map(|rho_r| random(scaled(1000, s), rho_r, 0.02, 1.0))
            .collect(),
        Suite::SparsitySweep => {
            [0.02, 0.05, 0.1, 0.15, 0.2].into_iter().map(|rho_s| random(scaled(1000, s), 0.005, rho_s, 1.0)).collect()
        }
        Suite::SigmaSweep => (1..=10).map(|sigma| random(scaled(1000, s), 0.01, 0.01, sigma as f64)).collect(),
        Suite::SizeSweep => [1000, 2000, 4000]
            .into_iter()
            .map(|base| {
                let m = scaled(base, s);
                random(m, 10.0 / m as f64, 0.01, 1.0)
            })
            .collect(),
        Suite::Checkerboard => (1..=5)
            .map(|k| {
                let m = (scaled(1000 * k, s) / 8).max(1) * 8;
                Setting::Checker { m, cell: m / 8, fraction: 0.1 }
            })
            .collect(),
    }
}

fn instance(setting: Setting, seed: u64, magnitude: f64) -> rpca_core::Result<(GroundTruth, f64)> {
    match setting {
        Setting::Random { m, rho_r, rho_s, sigma } => {
            let spec = SynthSpec { magnitude, sigma_scale: sigma, ..SynthSpec::square(m, rho_r, rho_s, seed) };
            Ok((generate(&spec)?, rho_s))
        }
        Setting::Checker { m, cell, fraction } => {
            Ok((corrupt_impulsive(&checkerboard(m, cell)?, fraction, seed)?, fraction))
        }
    }
}

fn base_record(suite: Suite, method: &str, gt: &GroundTruth, rho_s: f64, seed: u64) -> BenchRecord {
    BenchRecord {
        m: gt.m_obs.rows(),
        n: gt.m_obs.cols(),
        r: gt.rank,
        sigma_scale: gt.sigma_scale,
        ..blank_record(suite, method, rho_s, seed)
    }
}

fn blank_record(suite: Suite, method: &str, rho_s: f64, seed: u64) -> BenchRecord {
    BenchRecord {
        suite: suite.name().to_string(),
        method: method.to_string(),
        m: 0,
        n: 0,
        r: 0,
        rho_s,
        sigma_scale: 1.0,
        seed,
        rel_err: None,
        max_dif: None,
        ave_dif: None,
        rank_l: None,
        l0_s: None,
        l1_s: None,
        iters: None,
        seconds: None,
        status: "ok".to_string(),
    }
}

fn fill(record: &mut BenchRecord, gt: &GroundTruth, sol: &PcpSolution, seconds: f64) -> rpca_core::Result<()> {
    record.rel_err = Some(rel_err(&sol.l, &gt.l0)?);
    record.max_dif = Some(max_dif(&sol.l, &gt.l0)?);
    record.ave_dif = Some(ave_dif(&sol.l, &gt.l0)?);
    record.rank_l = Some(sol.rank_of_l);
    record.l0_s = Some(l0_count(&sol.s, default_l0_threshold(&sol.s)));
    record.l1_s = Some(sol.s.l1_norm());
    record.iters = Some(sol.iterations);
    record.seconds = Some(seconds);
    if !sol.converged {
        record.status = "unconverged".to_string();
    }
    Ok(())
}

/// Runs one solver on one instance. Failures become the record's status.
pub fn run_one(
    suite: Suite,
    solver: SolverChoice,
    gt: &GroundTruth,
    rho_s: f64,
    seed: u64,
    opts: &BenchOptions,
) -> BenchRecord {
    let name = match solver {
        SolverChoice::L1filter => "l1filter",
        SolverChoice::Adm => "adm",
    };
    let mut record = base_record(suite, name, gt, rho_s, seed);
    let start = Instant::now();
    let sol = match solver {
        SolverChoice::L1filter => {
            let cfg = FilterConfig {
                rng_seed: seed,
                parallelism: opts.threads,
                rank_hint: opts.oracle_rank.then_some(gt.rank).filter(|&r| r > 0),
                ..Default::default()
            };
            estimate_rank_and_solve(&gt.m_obs, &cfg)
        }
        SolverChoice::Adm => solve_pcp(&gt.m_obs, &AdmConfig::default()),
    };
    let seconds = start.elapsed().as_secs_f64();
    if let Err(e) = sol.and_then(|sol| fill(&mut record, gt, &sol, seconds)) {
        record.status = e.to_string();
    }
    record
}

/// Runs every setting of `suite` for seeds `0..opts.seeds`, calling
/// `progress` after each record.
pub fn run_suite(suite: Suite, opts: &BenchOptions, mut progress: impl FnMut(&BenchRecord)) -> BenchReport {
    set_dense_threads(opts.threads);
    let mut records = Vec::new();
    for setting in settings(suite, opts) {
        for seed in 0..opts.seeds {
            let (gt, rho_s) = match instance(setting, seed, opts.magnitude) {
                Ok(v) => v,
                Err(e) => {
                    let (m, rho_s, sigma_scale) = match setting {
                        Setting::Random { m, rho_s, sigma, .. } => (m, rho_s, sigma),
                        Setting::Checker { m, fraction, .. } => (m, fraction, 1.0),
                    };
                    let record = BenchRecord {
                        m,
                        n: m,
                        sigma_scale,
                        status: e.to_string(),
                        ..blank_record(suite, "instance", rho_s, seed)
                    };
                    progress(&record);
                    records.push(record);
                    continue;
                }
            };
            if suite == Suite::Table1 {
                let mut truth = base_record(suite, "truth", &gt, rho_s, seed);
                truth.rel_err = Some(0.0);
                truth.max_dif = Some(0.0);
                truth.ave_dif = Some(0.0);
                truth.rank_l = Some(gt.rank);
                truth.l0_s = Some(l0_count(&gt.s0, 0.0));
                truth.l1_s = Some(gt.s0.l1_norm() * gt.sigma_scale);
                progress(&truth);
                records.push(truth);
            }
            for &solver in opts.methods.solvers() {
                let record = run_one(suite, solver, &gt, rho_s, seed, opts);
                progress(&record);
                records.push(record);
            }
        }
    }
    let fits = if suite == Suite::SizeSweep { BenchReport::scaling_fits(&records) } else { Vec::new() };
    BenchReport {
        schema_version: SCHEMA_VERSION,
        suite: suite.name().to_string(),
        scale: opts.scale,
        environment: Environment::capture(opts.threads),
        records,
        fits,
    }
}

fn describe(r: &BenchRecord) -> String {
    let num = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3e}"));
    format!(
        "{} {} m={} r={} rho_s={} sigma={} seed={}: rel_err {} time {} [{}]",
        r.suite,
        r.method,
        r.m,
        r.r,
        r.rho_s,
        r.sigma_scale,
        r.seed,
        num(r.rel_err),
        r.seconds.map_or("-".to_string(), |t| format!("{t:.3}s")),
        r.status
    )
}

pub fn run(args: &BenchArgs) -> anyhow::Result<()> {
    if !(args.scale > 0.0 && args.scale.is_finite()) {
        anyhow::bail!("--scale must be positive, got {}", args.scale);
    }
    let opts = BenchOptions::from(args);
    let report = run_suite(args.suite, &opts, |r| eprintln!("{}", describe(r)));
    for fit in &report.fits {
        eprintln!("{} time exponent {:.3}", fit.method, fit.exponent);
    }
    match &args.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
                report.write_json(&mut w)?;
                writeln!(w)?;
            } else {
                report.write_csv(&mut w)?;
            }
            w.flush()?;
        }
        None => report.write_csv(io::stdout().lock())?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweeps_cover_the_standard_ranges() {
        let opts = BenchOptions { scale: 1.0, ..Default::default() };
        let ranks: Vec<f64> = settings(Suite::RankSweep, &opts)
            .into_iter()
            .map(|s| match s {
                Setting::Random { m: 1000, rho_r, rho_s: 0.02, .. } => rho_r,
                other => panic!("unexpected {other:?}"),
            })
            .collect();
        assert_eq!(ranks.first(), Some(&0.005));
        assert_eq!(ranks.last(), Some(&0.05));

        let sparsity: Vec<f64> = settings(Suite::SparsitySweep, &opts)
            .into_iter()
            .map(|s| match s {
                Setting::Random { rho_r: 0.005, rho_s, .. } => rho_s,
                other => panic!("unexpected {other:?}"),
            })
            .collect();
        assert_eq!((sparsity[0], *sparsity.last().unwrap()), (0.02, 0.2));
        assert_eq!(settings(Suite::SigmaSweep, &opts).len(), 10);
    }

    #[test]
    fn size_sweep_keeps_the_rank_fixed() {
        let opts = BenchOptions { scale: 0.25, ..Default::default() };
        for s in settings(Suite::SizeSweep, &opts) {
            let Setting::Random { m, rho_r, .. } = s else { panic!() };
            let spec = SynthSpec::square(m, rho_r, 0.01, 0);
            assert_eq!(spec.rank(), 10);
        }
    }

    #[test]
    fn checkerboard_sizes_admit_the_cell() {
        for scale in [0.1, 0.37, 1.0] {
            let opts = BenchOptions { scale, ..Default::default() };
            for s in settings(Suite::Checkerboard, &opts) {
                let Setting::Checker { m, cell, .. } = s else { panic!() };
                assert_eq!(m % cell, 0);
                assert_eq!(m / cell, 8);
            }
        }
    }

    #[test]
    fn table1_at_small_scale_records_truth_and_both_solvers() {
        let opts = BenchOptions { scale: 0.1, threads: 1, ..Default::default() };
        let report = run_suite(Suite::Table1, &opts, |_| {});
        let methods: Vec<&str> = report.records.iter().map(|r| r.method.as_str()).collect();
        assert_eq!(methods, ["truth", "l1filter", "adm"]);
        let truth = &report.records[0];
        assert_eq!((truth.m, truth.r, truth.l0_s), (200, 2, Some(400)));
        for r in &report.records {
            assert!(r.ok(), "{r:?}");
            assert!(r.rel_err.unwrap() <= 1e-5, "{r:?}");
        }
    }
}
