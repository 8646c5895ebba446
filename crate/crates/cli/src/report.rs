//! Benchmark report records and their CSV / JSON serializations.
//!
//! The CSV header is frozen per [`SCHEMA_VERSION`]; adding or reordering a
//! column bumps the version.

use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_HEADER: &str =
    "suite,method,m,n,r,rho_s,sigma_scale,seed,rel_err,max_dif,ave_dif,rank_l,l0_s,l1_s,iters,seconds,status";

/// One solver run. Metric fields are empty when the run failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub suite: String,
    /// `l1filter`, `adm`, or `truth` for the ground-truth row.
    pub method: String,
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub rho_s: f64,
    pub sigma_scale: f64,
    /// Generates the instance and the seed sampling; rerunning with it
    /// reproduces the row.
    pub seed: u64,
    pub rel_err: Option<f64>,
    pub max_dif: Option<f64>,
    pub ave_dif: Option<f64>,
    pub rank_l: Option<usize>,
    pub l0_s: Option<usize>,
    pub l1_s: Option<f64>,
    pub iters: Option<usize>,
    pub seconds: Option<f64>,
    /// `ok`, `unconverged`, or the error message.
    pub status: String,
}

impl BenchRecord {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub crate_version: String,
    pub backend: String,
    pub threads: usize,
    pub os: String,
    pub arch: String,
}

impl Environment {
    pub fn capture(threads: usize) -> Self {
        Self {
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            backend: "faer 0.22 (pure Rust dense kernels)".to_string(),
            threads,
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
        }
    }
}

/// Log-log slope of time against size for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub method: String,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub suite: String,
    pub scale: f64,
    pub environment: Environment,
    pub records: Vec<BenchRecord>,
    pub fits: Vec<ScalingFit>,
}

impl BenchReport {
    pub fn write_json<W: Write>(&self, w: W) -> serde_json::Result<()> {
        serde_json::to_writer_pretty(w, self)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        write_records_csv(&self.records, w)
    }

    /// Slope of `ln seconds` against `ln m` for each method, taking the
    /// fastest successful run at each size.
    pub fn scaling_fits(records: &[BenchRecord]) -> Vec<ScalingFit> {
        let mut methods: Vec<&str> = records.iter().filter(|r| r.ok()).map(|r| r.method.as_str()).collect();
        methods.sort_unstable();
        methods.dedup();
        methods
            .into_iter()
            .filter_map(|method| {
                let mut best: Vec<(usize, f64)> = Vec::new();
                for r in records.iter().filter(|r| r.ok() && r.method == method) {
                    let Some(t) = r.seconds else { continue };
                    match best.iter_mut().find(|(m, _)| *m == r.m) {
                        Some(entry) => entry.1 = entry.1.min(t),
                        None => best.push((r.m, t)),
                    }
                }
                let (sizes, times): (Vec<f64>, Vec<f64>) = best.into_iter().map(|(m, t)| (m as f64, t)).unzip();
                fit_exponent(&sizes, &times).map(|exponent| ScalingFit { method: method.to_string(), exponent })
            })
            .collect()
    }
}

pub fn write_records_csv<W: Write>(records: &[BenchRecord], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    if records.is_empty() {
        out.write_record(CSV_HEADER.split(','))?;
    }
    for r in records {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// Least-squares slope of `ln y` against `ln x`. `None` with fewer than two
/// distinct sizes or any nonpositive value.
pub fn fit_exponent(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|v| !(*v > 0.0 && v.is_finite())) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(method: &str, m: usize, seconds: f64) -> BenchRecord {
        BenchRecord {
            suite: "size-sweep".into(),
            method: method.into(),
            m,
            n: m,
            r: 10,
            rho_s: 0.01,
            sigma_scale: 1.0,
            seed: 0,
            rel_err: Some(1e-8),
            max_dif: Some(1e-6),
            ave_dif: Some(1e-9),
            rank_l: Some(10),
            l0_s: Some(100),
            l1_s: Some(2.5e4),
            iters: Some(20),
            seconds: Some(seconds),
            status: "ok".into(),
        }
    }

    #[test]
    fn exponent_of_exact_power_laws() {
        let x = [1000.0, 2000.0, 4000.0];
        for p in [1.0, 2.0, 2.5] {
            let y: Vec<f64> = x.iter().map(|v: &f64| 3e-7 * v.powf(p)).collect();
            assert!((fit_exponent(&x, &y).unwrap() - p).abs() < 1e-12);
        }
        assert_eq!(fit_exponent(&[1.0], &[1.0]), None);
        assert_eq!(fit_exponent(&[1.0, 1.0], &[1.0, 2.0]), None);
        assert_eq!(fit_exponent(&[1.0, 2.0], &[0.0, 2.0]), None);
    }

    #[test]
    fn csv_header_is_the_frozen_one() {
        let mut buf = Vec::new();
        write_records_csv(&[record("adm", 100, 1.0)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);

        let mut empty = Vec::new();
        write_records_csv(&[], &mut empty).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap().trim_end(), CSV_HEADER);
    }

    #[test]
    fn failed_rows_leave_metrics_empty() {
        let mut r = record("l1filter", 100, 1.0);
        r.rel_err = None;
        r.seconds = None;
        r.status = "seed matrix has rank zero".into();
        let mut buf = Vec::new();
        write_records_csv(&[r.clone()], &mut buf).unwrap();
        let mut rd = csv::Reader::from_reader(buf.as_slice());
        let back: BenchRecord = rd.deserialize().next().unwrap().unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn fits_use_the_fastest_run_per_size() {
        let records = vec![
            record("l1filter", 1000, 1.0),
            record("l1filter", 1000, 5.0),
            record("l1filter", 2000, 2.0),
            record("adm", 1000, 1.0),
            record("adm", 2000, 4.0),
            BenchRecord { status: "unconverged".into(), ..record("adm", 4000, 0.1) },
        ];
        let fits = BenchReport::scaling_fits(&records);
        assert_eq!(fits.len(), 2);
        assert_eq!(fits[0].method, "adm");
        assert!((fits[0].exponent - 2.0).abs() < 1e-12);
        assert!((fits[1].exponent - 1.0).abs() < 1e-12);
    }
}
