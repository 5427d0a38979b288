use std::path::Path;
use std::process::Command as Process;

use clap::Parser;
use curvlens_cli::artifacts::{read_csv, Checkpoint, SpectrumFile};
use curvlens_cli::commands::{CompareSummary, EvalRow, TraceRow};
use curvlens_cli::{execute, replay, Cli};
use serde::Deserialize;

fn run(args: &[&str], out: &Path) -> serde_json::Value {
    let mut argv = vec!["curvlens".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    argv.extend(["--out".to_string(), out.display().to_string()]);
    let cli = Cli::try_parse_from(&argv).expect("valid flags");
    execute(&cli.global, &cli.command, &argv).expect("command succeeds").0.summary
}

fn binary() -> Process {
    Process::new(env!("CARGO_BIN_EXE_curvlens"))
}

fn dir() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

#[derive(Debug, Deserialize)]
struct Stem {
    value: f64,
    weight: f64,
}

#[derive(Debug, Deserialize)]
struct Cell {
    direction_index: usize,
    eigenvalue: f64,
    t: f64,
    train_loss: f64,
}

#[test]
fn spectrum_file_round_trip_is_byte_identical() {
    let d = dir();
    run(&["rmt", "wishart", "--dim", "300", "--ratio", "1.5", "--seeds", "3"], d.path());
    let path = d.path().join("spectrum.json");
    let original = std::fs::read(&path).unwrap();
    let file = SpectrumFile::read(&path).unwrap();
    let again = d.path().join("again.json");
    file.write(&again).unwrap();
    assert_eq!(original, std::fs::read(&again).unwrap());
    assert_eq!(SpectrumFile::read(&again).unwrap(), file);
    assert_eq!(file.schema_version, 1);
    assert!(file.atoms.windows(2).all(|w| w[0].value <= w[1].value));
    assert!((file.atoms.iter().map(|a| a.weight).sum::<f64>() - 1.0).abs() < 1e-9);

    // the stem CSV carries the same atoms
    let stem: Vec<Stem> = read_csv(&d.path().join("stem.csv")).unwrap();
    assert_eq!(stem.len(), file.atoms.len());
    assert!(stem.iter().zip(&file.atoms).all(|(s, a)| s.value == a.value && s.weight == a.weight));
}

#[test]
fn spectrum_file_rejects_broken_invariants() {
    let d = dir();
    run(&["rmt", "wigner", "--dim", "100"], d.path());
    let path = d.path().join("spectrum.json");
    let mut file = SpectrumFile::read(&path).unwrap();
    file.atoms.reverse();
    assert!(file.validate().is_err());
    file.atoms.reverse();
    file.atoms[0].weight += 1e-6;
    assert!(file.validate().is_err());
    file.atoms[0].weight -= 1e-6;
    file.schema_version = 2;
    assert!(file.write(&d.path().join("bad.json")).is_err());
}

#[test]
fn same_seed_gives_identical_artifacts() {
    let (a, b) = (dir(), dir());
    let flags = ["train", "--variant", "ssgdm", "--steps", "150", "--refresh", "50", "--seed", "4"];
    run(&flags, a.path());
    run(&flags, b.path());
    for name in ["trace.csv", "refreshes.csv", "evals.csv", "checkpoint.json"] {
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let c = dir();
    run(&["train", "--variant", "ssgdm", "--steps", "150", "--refresh", "50", "--seed", "5"], c.path());
    assert_ne!(std::fs::read(a.path().join("trace.csv")).unwrap(), std::fs::read(c.path().join("trace.csv")).unwrap());
}

#[test]
fn manifest_replay_reproduces_numeric_outputs() {
    let (a, b) = (dir(), dir());
    run(&["rmt", "planted", "--steps", "40", "--seeds", "2", "--seed", "9"], a.path());
    let (_, manifest) = replay(&a.path().join("manifest.json"), b.path()).unwrap();
    assert_eq!(manifest.command, "rmt");
    assert_eq!(manifest.seed, 9);
    for name in ["spectrum.json", "stem.csv", "histogram.csv"] {
        assert!(manifest.artifacts.iter().any(|x| x == name));
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn exit_codes_follow_the_contract() {
    let d = dir();
    let status = |args: &[&str]| binary().args(args).arg("--out").arg(d.path()).output().unwrap();

    let ok = status(&["bounds-table", "--format", "csv"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8(ok.stdout).unwrap().starts_with("gap,m,L,R,L_over_R\n"));

    assert_eq!(status(&["rmt", "circular"]).status.code(), Some(2));
    assert_eq!(status(&["rmt", "wigner", "--steps", "many"]).status.code(), Some(2));
    assert_eq!(status(&["bounds-table", "--gaps", "0.9"]).status.code(), Some(2));
    assert_eq!(status(&["compare-diag", "diag"]).status.code(), Some(2));
    assert_eq!(status(&["rmt", "planted", "--spec", "/nonexistent/spec.json"]).status.code(), Some(1));

    let threads = binary().args(["bounds-table", "--out"]).arg(d.path()).env("CURVLENS_THREADS", "zero").output().unwrap();
    assert_eq!(threads.status.code(), Some(2));
    let threads = binary().args(["bounds-table", "--out"]).arg(d.path()).env("CURVLENS_THREADS", "1").output().unwrap();
    assert_eq!(threads.status.code(), Some(0));
}

#[test]
fn abs_hessian_above_oracle_scale_is_a_runtime_error() {
    let d = dir();
    // 20·100 + 100 + 100·3 + 3 = 2403 parameters
    let out = binary()
        .args(["spectrum", "--model", "mlp", "--hidden", "100", "--curvature", "abs_hessian", "--out"])
        .arg(d.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("oracle cap"));
}

#[test]
fn rmt_examples() {
    let d = dir();
    let w = run(&["rmt", "wigner", "--dim", "2000", "--steps", "30", "--seeds", "1"], &d.path().join("w"));
    assert!(w["lambda_min"].as_f64().unwrap() >= -2.1 && w["lambda_max"].as_f64().unwrap() <= 2.1, "{w}");
    assert!(d.path().join("w/histogram.csv").exists());

    let q = run(&["rmt", "wishart", "--dim", "1000", "--ratio", "2.0"], &d.path().join("q"));
    let zero = q["zero_weight"].as_f64().unwrap();
    assert!((0.45..=0.55).contains(&zero), "{zero}");

    let p = run(&["rmt", "planted", "--preset", "three-band"], &d.path().join("p"));
    let stem: Vec<Stem> = read_csv(&d.path().join("p/stem.csv")).unwrap();
    assert!(stem.iter().any(|a| a.value < -0.5), "negative band missing");
    assert!(stem.iter().any(|a| (0.5..15.0).contains(&a.value)), "bulk band missing");
    assert!(stem.iter().any(|a| a.value > 15.0), "outlier band missing");
    assert!(stem.iter().all(|a| (-10.0 - 1e-8..=60.0 + 1e-8).contains(&a.value)));
    assert!(p["outliers"].as_u64().is_some());

    run(&["rmt", "wigner", "--dim", "60", "--no-oracle"], &d.path().join("n"));
    assert!(!d.path().join("n/histogram.csv").exists());
}

#[test]
fn planted_spec_file_is_accepted() {
    let d = dir();
    let spec = d.path().join("synthetic.json");
    std::fs::write(
        &spec,
        r#"{"dim": 300, "seed": 3, "groups": [
            {"count": 150, "dist": "const", "lo": 0.0},
            {"count": 140, "dist": "uniform", "lo": 0.0, "hi": 15.0},
            {"count": 10, "dist": "uniform", "lo": 20.0, "hi": 60.0}]}"#,
    )
    .unwrap();
    let s = run(&["rmt", "planted", "--spec", spec.to_str().unwrap()], &d.path().join("o"));
    assert_eq!(s["dim"], 300);
    assert!(s["lambda_max"].as_f64().unwrap() > 19.0);
}

#[test]
fn compare_diag_examples() {
    let d = dir();
    let w: CompareSummary = serde_json::from_value(run(&["compare-diag", "wigner", "--dim", "500"], &d.path().join("w"))).unwrap();
    assert!(w.diag_ratio < 0.25, "{w:?}");
    let p: CompareSummary = serde_json::from_value(run(&["compare-diag", "planted"], &d.path().join("p"))).unwrap();
    assert!(p.diagonal_max < 0.5 * p.lambda_max, "{p:?}");
    // the diagonal stays near the bulk mean of the trace
    let mean = 0.47 * 7.5 + 0.02 * 30.0 - 0.01 * 5.0;
    assert!(p.diagonal_min > 0.5 * mean && p.diagonal_max < 2.0 * mean, "{p:?}");

    let s = run(&["compare-diag", "diag", "--values", "5,5,5"], &d.path().join("d"));
    assert_eq!(s["diag_ratio"], 1.0);
    let text = std::fs::read_to_string(d.path().join("d/compare_diag.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,oracle_eigenvalue,diagonal_entry,lanczos_value,lanczos_weight"));
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        assert!((cells[1].parse::<f64>().unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(cells[2], "5.0");
    }
}

#[test]
fn spectrum_examples() {
    let d = dir();
    run(&["spectrum", "--curvature", "ggn", "--steps", "40"], &d.path().join("g"));
    let file = SpectrumFile::read(&d.path().join("g/spectrum.json")).unwrap();
    assert!(file.atoms.iter().all(|a| a.value >= -1e-8));
    assert_eq!(file.operator.kind, "logreg-ggn");
    let a = &file.analysis;
    assert!(a.lambda_b.random_vector_weighted.is_some() && a.lambda_b.gradient_median.is_some());
    assert!(a.outliers.is_some());
    assert!(file.ritz_vectors.is_none());

    let l1 = run(&["spectrum", "--probe-seed", "1"], &d.path().join("s1"))["lambda_max"].as_f64().unwrap();
    let l2 = run(&["spectrum", "--probe-seed", "2"], &d.path().join("s2"))["lambda_max"].as_f64().unwrap();
    assert!((l1 - l2).abs() < 0.01 * l1.max(l2));

    // the Hessian of a trained MLP is indefinite in general; only finiteness is required
    run(&["train", "--model", "mlp", "--hidden", "8", "--variant", "sgd_fixed", "--alpha", "0.05", "--steps", "200"], &d.path().join("t"));
    let ck = d.path().join("t/checkpoint.json");
    run(&["spectrum", "--checkpoint", ck.to_str().unwrap(), "--curvature", "hessian"], &d.path().join("h"));
    let h = SpectrumFile::read(&d.path().join("h/spectrum.json")).unwrap();
    assert!(h.atoms.iter().all(|a| a.value.is_finite()));
    assert!(h.analysis.mp_fit.is_none());
}

#[test]
fn train_examples() {
    let d = dir();
    let ssgd = run(&["train", "--variant", "ssgd", "--refresh", "100"], &d.path().join("a"));
    let theory = run(&["train", "--variant", "sgd_theoretical"], &d.path().join("b"));
    let (a, b) = (ssgd["final_train_loss"].as_f64().unwrap(), theory["final_train_loss"].as_f64().unwrap());
    assert!(a < b, "{a} vs {b}");
    assert_eq!(ssgd["refreshes"], 20);

    let fixed = run(&["train", "--variant", "sgdm_fixed", "--alpha", "0.05", "--beta", "0.9", "--steps", "300"], &d.path().join("c"));
    assert_eq!(fixed["diverged"], false);
    let trace: Vec<TraceRow> = read_csv(&d.path().join("c/trace.csv")).unwrap();
    assert_eq!(trace.len(), 300);
    assert!(trace.iter().all(|r| r.alpha == 0.05 && r.beta == 0.9 && r.lambda_max.is_none()));
    let evals: Vec<EvalRow> = read_csv(&d.path().join("c/evals.csv")).unwrap();
    assert_eq!(evals.iter().map(|e| e.step).collect::<Vec<_>>(), [100, 200, 300]);
}

#[test]
fn divergence_is_flagged_with_exit_zero() {
    let d = dir();
    let ck = d.path().join("q.json");
    quadratic_checkpoint(&ck, &[1.0, 13.0]);
    // |1 − αλ| = 12 on the stiff direction
    let out = binary()
        .args(["train", "--variant", "sgd_fixed", "--alpha", "1", "--steps", "400", "--checkpoint"])
        .arg(&ck)
        .arg("--out")
        .arg(d.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["diverged"], true);
}

fn quadratic_checkpoint(path: &Path, eigenvalues: &[f64]) {
    let n = eigenvalues.len();
    let mut curvature = vec![0.0; n * n];
    for (i, &e) in eigenvalues.iter().enumerate() {
        curvature[i * n + i] = e;
    }
    let ck = Checkpoint {
        schema_version: 1,
        kind: "quadratic".into(),
        shape: vec![n],
        weight_decay: 0.0,
        params: (0..n).map(|i| 0.1 * (i as f64 + 1.0)).collect(),
        curvature: Some(curvature),
        centre: Some(vec![0.0; n]),
    };
    ck.write(path).unwrap();
}

#[test]
fn landscape_on_a_quadratic_recovers_curvature() {
    let d = dir();
    let ck = d.path().join("q.json");
    let eigs = [0.5, 1.0, 2.0, 3.0, 5.0, 8.0, 13.0];
    quadratic_checkpoint(&ck, &eigs);
    let ck = ck.to_str().unwrap();
    run(&["spectrum", "--checkpoint", ck, "--keep-vectors", "--steps", "7"], &d.path().join("s"));
    let spectrum = d.path().join("s/spectrum.json");
    run(&["landscape", "--checkpoint", ck, "--spectrum", spectrum.to_str().unwrap(), "--per-side", "3"], &d.path().join("l"));
    let cells: Vec<Cell> = read_csv(&d.path().join("l/landscape.csv")).unwrap();
    assert_eq!(cells.len(), 6 * 21);

    // L(p) = ½ Σ λ_i p_i²
    let p0: Vec<f64> = (0..7).map(|i| 0.1 * (i as f64 + 1.0)).collect();
    let loss0: f64 = 0.5 * eigs.iter().zip(&p0).map(|(e, p)| e * p * p).sum::<f64>();
    for row in cells.chunks(21) {
        let centre = &row[10];
        assert_eq!(centre.t, 0.0);
        assert!((centre.train_loss - loss0).abs() < 1e-12);
        // the symmetric second difference is exact on a quadratic
        let (lo, hi) = (&row[0], &row[20]);
        let curv = (lo.train_loss + hi.train_loss - 2.0 * centre.train_loss) / (hi.t * hi.t);
        assert!((curv - row[0].eigenvalue).abs() < 0.05 * row[0].eigenvalue, "{curv} vs {}", row[0].eigenvalue);
        assert!(row.iter().all(|c| c.direction_index == row[0].direction_index));
        assert!((hi.t - 0.25).abs() < 1e-15 && (lo.t + 0.25).abs() < 1e-15);
    }
}

#[test]
fn landscape_without_vectors_asks_for_a_rerun() {
    let d = dir();
    let ck = d.path().join("q.json");
    quadratic_checkpoint(&ck, &[1.0, 2.0, 3.0]);
    run(&["spectrum", "--checkpoint", ck.to_str().unwrap(), "--steps", "3"], &d.path().join("s"));
    let out = binary()
        .args(["landscape", "--checkpoint"])
        .arg(&ck)
        .arg("--spectrum")
        .arg(d.path().join("s/spectrum.json"))
        .arg("--out")
        .arg(d.path().join("l"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("--keep-vectors"));
}

#[test]
fn bounds_table_shape_and_ordering() {
    let d = dir();
    run(&["bounds-table"], d.path());
    #[derive(Deserialize)]
    struct Row {
        gap: f64,
        m: usize,
        #[serde(rename = "L")]
        l: f64,
        #[serde(rename = "R")]
        r: f64,
        #[serde(rename = "L_over_R")]
        ratio: f64,
    }
    let rows: Vec<Row> = read_csv(&d.path().join("bounds.csv")).unwrap();
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r.l < r.r && (r.ratio - r.l / r.r).abs() <= 1e-15 * r.ratio));
    let first: Vec<&Row> = rows.iter().filter(|r| r.gap == 1.5).collect();
    assert_eq!(first.iter().map(|r| r.m).collect::<Vec<_>>(), [5, 10, 15, 20]);
    assert!(first.windows(2).all(|w| w[1].l < w[0].l && w[1].r < w[0].r));
    // power factor is gap^(-2(m-1)) exactly
    assert!(rows.iter().all(|r| (r.r - r.gap.powi(-2 * (r.m as i32 - 1))).abs() < 1e-14 * r.r));
}

#[test]
fn csv_format_prints_the_main_table() {
    let d = dir();
    let out = binary().args(["rmt", "wigner", "--dim", "80", "--format", "csv", "--out"]).arg(d.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), std::fs::read_to_string(d.path().join("stem.csv")).unwrap());
}
