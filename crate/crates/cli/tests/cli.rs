use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rpca_core::io::{read_matrix, write_matrix};
use rpca_core::{rel_err, DenseMatrix};
use serde_json::Value;

fn rpca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rpca")).args(args).output().expect("binary runs")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

fn json(path: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn synth(dir: &Path, m: usize, seed: u64) -> (String, String) {
    let (obs, l0) = (path(dir, "m.dmat"), path(dir, "l0.dmat"));
    let out = rpca(&[
        "synth",
        "--m",
        &m.to_string(),
        "--rho-r",
        "0.01",
        "--rho-s",
        "0.01",
        "--seed",
        &seed.to_string(),
        "--out-m",
        &obs,
        "--out-l0",
        &l0,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    (obs, l0)
}

#[test]
fn both_methods_recover_a_synthetic_file() {
    let dir = tempfile::tempdir().unwrap();
    let (obs, l0) = synth(dir.path(), 400, 3);
    let mut ls = Vec::new();
    for method in ["l1filter", "adm"] {
        let (l, s, stats) =
            (path(dir.path(), &format!("{method}_l.dmat")), path(dir.path(), "s.csv"), path(dir.path(), "stats.json"));
        let out = rpca(&[
            "decompose",
            &obs,
            "--method",
            method,
            "--truth",
            &l0,
            "--out-l",
            &l,
            "--out-s",
            &s,
            "--stats-json",
            &stats,
            "--threads",
            "1",
        ]);
        assert!(out.status.success(), "{method}: {}", String::from_utf8_lossy(&out.stderr));
        let st = json(&stats);
        assert_eq!(st["method"], method);
        assert_eq!(st["rank"], 4);
        assert!(st["rel_err"].as_f64().unwrap() <= 1e-5, "{st}");
        assert!(st["residual"].as_f64().unwrap() <= 1e-7);
        assert!(st["max_dif"].as_f64().is_some() && st["ave_dif"].as_f64().is_some());
        if method == "l1filter" {
            let parts: f64 = ["t_seed", "t_filter", "t_assembly"].iter().map(|k| st[k].as_f64().unwrap()).sum();
            let total = st["t_total"].as_f64().unwrap();
            assert!(parts <= total * 1.001 + 1e-3 && parts >= 0.9 * total - 1e-2, "{parts} vs {total}");
        } else {
            assert!(st["t_seed"].is_null());
        }
        let lm = read_matrix(&l).unwrap();
        let sm = read_matrix(&s).unwrap();
        let m = read_matrix(&obs).unwrap();
        assert!(m.sub(&lm).unwrap().sub(&sm).unwrap().frobenius_norm() <= 1e-6 * m.frobenius_norm());
        ls.push(lm);
    }
    assert!(rel_err(&ls[0], &ls[1]).unwrap() <= 1e-4);
}

#[test]
fn stats_without_truth_have_null_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (obs, _) = synth(dir.path(), 250, 1);
    let out = rpca(&["decompose", &obs, "--rank-hint", "3", "--threads", "1"]);
    assert!(out.status.success());
    let st: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(st["rel_err"].is_null() && st["max_dif"].is_null() && st["ave_dif"].is_null());
    assert_eq!(st["rank"], 3);
}

#[test]
fn zero_matrix_decomposes_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    let input = path(dir.path(), "zero.csv");
    write_matrix(&input, &DenseMatrix::zeros(60, 40)).unwrap();
    for method in ["l1filter", "adm"] {
        let (l, s) = (path(dir.path(), "l.csv"), path(dir.path(), "s.csv"));
        let out = rpca(&["decompose", &input, "--method", method, "--out-l", &l, "--out-s", &s]);
        assert_eq!(out.status.code(), Some(0), "{method}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(read_matrix(&l).unwrap(), DenseMatrix::zeros(60, 40));
        assert_eq!(read_matrix(&s).unwrap(), DenseMatrix::zeros(60, 40));
    }
}

#[test]
fn decompose_is_deterministic_on_one_thread() {
    let dir = tempfile::tempdir().unwrap();
    let (obs, _) = synth(dir.path(), 300, 8);
    let mut outputs = Vec::new();
    for run in 0..2 {
        let l = path(dir.path(), &format!("l{run}.dmat"));
        let out = rpca(&["decompose", &obs, "--threads", "1", "--seed", "5", "--out-l", &l]);
        assert!(out.status.success());
        outputs.push(fs::read(&l).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn synth_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for run in 0..2 {
        let (m, s0) = (path(dir.path(), &format!("m{run}.dmat")), path(dir.path(), &format!("s{run}.dmat")));
        let out = rpca(&["synth", "--m", "80", "--n", "60", "--seed", "42", "--out-m", &m, "--out-s0", &s0]);
        assert!(out.status.success());
        files.push((fs::read(&m).unwrap(), fs::read(&s0).unwrap()));
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(read_matrix(path(dir.path(), "m0.dmat")).unwrap().shape(), (80, 60));
}

#[test]
fn synth_without_corruption_has_zero_sparse_part() {
    let dir = tempfile::tempdir().unwrap();
    let (m, l0, s0) = (path(dir.path(), "m.csv"), path(dir.path(), "l0.csv"), path(dir.path(), "s0.csv"));
    let out = rpca(&[
        "synth", "--m", "50", "--rho-r", "0.1", "--rho-s", "0", "--out-m", &m, "--out-l0", &l0, "--out-s0", &s0,
    ]);
    assert!(out.status.success());
    assert_eq!(read_matrix(&s0).unwrap().linf_norm(), 0.0);
    assert_eq!(read_matrix(&m).unwrap(), read_matrix(&l0).unwrap());
}

#[test]
fn synth_reports_the_large_benchmark_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let m = path(dir.path(), "m.dmat");
    let out = rpca(&["synth", "--m", "2000", "--rho-r", "0.01", "--rho-s", "0.01", "--out-m", &m]);
    assert!(out.status.success());
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["rank"], 20);
    assert_eq!(summary["l0_s0"], 40_000);
    assert_eq!(fs::metadata(&m).unwrap().len(), 16 + 8 * 2000 * 2000);
}

#[test]
fn exit_codes_follow_the_failure_kind() {
    let dir = tempfile::tempdir().unwrap();
    let missing = path(dir.path(), "missing.dmat");
    assert_eq!(rpca(&["decompose", &missing]).status.code(), Some(1));
    assert_eq!(rpca(&["decompose"]).status.code(), Some(1));
    assert_eq!(rpca(&["decompose", "x.csv", "--method", "svd"]).status.code(), Some(1));
    assert_eq!(rpca(&["--help"]).status.code(), Some(0));

    let garbage = path(dir.path(), "garbage.csv");
    fs::write(&garbage, "1,2\n3\n").unwrap();
    let out = rpca(&["decompose", &garbage]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());

    let (obs, _) = synth(dir.path(), 120, 2);
    let wrong = path(dir.path(), "wrong.csv");
    write_matrix(&wrong, &DenseMatrix::zeros(3, 3)).unwrap();
    let out = rpca(&["decompose", &obs, "--truth", &wrong]);
    assert_eq!(out.status.code(), Some(3));

    let (l, stats) = (path(dir.path(), "l.dmat"), path(dir.path(), "stats.json"));
    let out = rpca(&["decompose", &obs, "--method", "adm", "--max-iter", "2", "--out-l", &l, "--stats-json", &stats]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("did not converge"));
    assert_eq!(read_matrix(&l).unwrap().shape(), (120, 120));
    assert_eq!(json(&stats)["converged"], false);
}

#[test]
fn checkerboard_writes_images_and_recovers() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = path(dir.path(), "board");
    let out = rpca(&["checkerboard", "--m", "256", "--cell", "32", "--out", &prefix, "--recover", "--threads", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["corrupted"], 6554);
    assert_eq!(summary["rank"], 2);
    assert!(summary["max_dif"].as_f64().unwrap() <= 1e-3);
    for suffix in ["_clean.pgm", "_corrupted.pgm", "_recovered.pgm"] {
        let bytes = fs::read(format!("{prefix}{suffix}")).unwrap();
        assert!(bytes.starts_with(b"P5\n256 256\n255\n"));
        assert_eq!(bytes.len(), 15 + 256 * 256);
    }

    let out = rpca(&["checkerboard", "--m", "100", "--cell", "30", "--out", &prefix]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bench_writes_both_report_formats() {
    let dir = tempfile::tempdir().unwrap();
    let (j, c) = (path(dir.path(), "r.json"), path(dir.path(), "r.csv"));
    for out in [&j, &c] {
        let status = rpca(&["bench", "--suite", "table1", "--scale", "0.1", "--threads", "1", "--out", out]).status;
        assert!(status.success());
    }
    let report = json(&j);
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["suite"], "table1");
    assert!(report["environment"]["timestamp"].as_u64().unwrap() > 0);
    let records = report["records"].as_array().unwrap();
    assert_eq!(records.len(), 3);
    for r in records {
        assert!(r["seed"].is_u64());
        assert_eq!(r["status"], "ok");
    }
    let csv = fs::read_to_string(&c).unwrap();
    assert_eq!(csv.lines().next().unwrap(), rpca_cli::CSV_HEADER);
    assert_eq!(csv.lines().count(), 4);

    assert_eq!(rpca(&["bench", "--suite", "nope"]).status.code(), Some(1));
}
