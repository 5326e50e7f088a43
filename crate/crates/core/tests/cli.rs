mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::config_dir;
use tempfile::TempDir;

fn smilewings(dir: &Path, args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_smilewings"));
    cmd.current_dir(dir).args(args).env_remove("SMILEWINGS_THREADS");
    if let Some(t) = threads {
        cmd.env("SMILEWINGS_THREADS", t);
    }
    cmd.output().expect("spawn smilewings")
}

fn config(name: &str) -> String {
    config_dir().join(name).to_str().unwrap().to_owned()
}

fn golden(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(path).unwrap().trim_end().to_owned()
}

struct Csv {
    raw: String,
    comments: Vec<String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn read(path: &Path) -> Csv {
        let raw = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let mut comments = Vec::new();
        let mut lines = raw.lines();
        let mut header = None;
        for line in lines.by_ref() {
            if let Some(c) = line.strip_prefix('#') {
                comments.push(c.trim().to_owned());
            } else {
                header = Some(line.split(',').map(str::to_owned).collect());
                break;
            }
        }
        let rows = lines.map(|l| l.split(',').map(str::to_owned).collect()).collect();
        Csv { raw, comments, header: header.expect("header row"), rows }
    }

    fn column(&self, name: &str) -> Vec<f64> {
        let j = self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| r[j].parse().unwrap()).collect()
    }

    fn upper_half(&self, name: &str) -> Vec<f64> {
        let c = self.column(name);
        c[c.len() / 2..].to_vec()
    }
}

fn is_number(s: &str) -> bool {
    if matches!(s, "NaN" | "inf" | "-inf") {
        return true;
    }
    let Some((mantissa, exponent)) = s.split_once('e') else { return false };
    let mantissa = mantissa.strip_prefix('-').unwrap_or(mantissa);
    let Some((int, frac)) = mantissa.split_once('.') else { return false };
    int.len() == 1
        && frac.len() == 16
        && (int.bytes().chain(frac.bytes())).all(|b| b.is_ascii_digit())
        && exponent.strip_prefix('-').unwrap_or(exponent).parse::<u32>().is_ok()
}

fn check_schema(csv: &Csv, golden_name: &str, command: &str) {
    assert!(!csv.raw.contains('\r'), "CR in output");
    assert!(csv.raw.ends_with('\n'));
    assert_eq!(csv.header.join(","), golden(golden_name));
    assert_eq!(csv.comments[0], format!("smilewings {} {command}", env!("CARGO_PKG_VERSION")));
    let config: serde_json::Value = serde_json::from_str(csv.comments[1].strip_prefix("config: ").unwrap()).unwrap();
    assert!(config["params"]["b"].is_f64());
    assert!(csv.comments[2].starts_with("b: "));
    assert!(!csv.rows.is_empty());
    for row in &csv.rows {
        assert_eq!(row.len(), csv.header.len());
        let (status, numbers) = row.split_last().unwrap();
        assert!(status == "ok" || status.starts_with("failed:"), "{status}");
        for field in numbers {
            assert!(is_number(field), "{field}");
        }
    }
}

#[test]
fn schemas_match_golden_headers() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    for (cfg, files) in [
        ("fig1_kou.json", [("smile.csv", "kou_smile.csv"), ("call_errors.csv", "kou_call_errors.csv")]),
        ("fig3_merton.json", [("smile.csv", "merton_smile.csv"), ("call_errors.csv", "merton_call_errors.csv")]),
        (
            "fig3_merton_tails.json",
            [("density.csv", "merton_density.csv"), ("tail_exponent.csv", "merton_tail_exponent.csv")],
        ),
    ] {
        let out = smilewings(d, &["run", "--config", &config(cfg), "--out", "o"], None);
        assert_eq!(out.status.code(), Some(0), "{cfg}: {}", String::from_utf8_lossy(&out.stderr));
        for (file, gold) in files {
            check_schema(&Csv::read(&d.join("o").join(file)), gold, "run");
        }
    }
    let out = smilewings(d, &["crossover", "--config", &config("fig3_merton.json"), "--out", "c"], None);
    assert_eq!(out.status.code(), Some(0));
    let csv = Csv::read(&d.join("c/crossover.csv"));
    assert_eq!(csv.header.join(","), golden("crossover.csv"));
    let pairs: Vec<_> = csv.rows.iter().map(|r| format!("{},{}", r[0], r[1])).collect();
    assert_eq!(pairs, ["order1,semi_explicit", "order1,explicit2", "semi_explicit,explicit2"]);
}

#[test]
fn kou_fourth_order_beats_first_order_on_upper_half() {
    let dir = TempDir::new().unwrap();
    for cfg in ["fig1_kou.json", "fig2_kou.json"] {
        let out = smilewings(dir.path(), &["run", "--config", &config(cfg), "--outputs", "smile", "--out", "o"], None);
        assert_eq!(out.status.code(), Some(0));
        let csv = Csv::read(&dir.path().join("o/smile.csv"));
        let mean = |c: &str| {
            let v = csv.upper_half(c);
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!(mean("abs_err_order4") < mean("abs_err_order1"), "{cfg}");
    }
}

#[test]
fn merton_semi_explicit_beats_first_order_on_upper_half() {
    let dir = TempDir::new().unwrap();
    let args = ["run", "--config", &config("fig3_merton.json"), "--methods", "exact,order1,semi_explicit", "--out", "o"];
    let out = smilewings(dir.path(), &args, None);
    assert_eq!(out.status.code(), Some(0));
    let csv = Csv::read(&dir.path().join("o/smile.csv"));
    let semi = csv.upper_half("abs_err_semi_explicit");
    let first = csv.upper_half("abs_err_order1");
    assert!(semi.iter().zip(&first).all(|(s, f)| s < f));
}

#[test]
fn inverted_grid_is_rejected_naming_k_grid() {
    let dir = TempDir::new().unwrap();
    let out = smilewings(dir.path(), &["run", "--config", &config("fig1_kou.json"), "--set", "k_grid.min=5"], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("k_grid"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn config_errors_name_the_field() {
    let dir = TempDir::new().unwrap();
    let cases: [(&[&str], &str); 6] = [
        (&["--methods", "exact,semi_explicit"], "methods"),
        (&["--model", "merton"], "params"),
        (&["--methods", "exact,mc"], "mc"),
        (&["--set", "k_grid.n=1"], "k_grid"),
        (&["--outputs", "tail_exponent"], "outputs"),
        (&["--set", "colour=1"], "colour"),
    ];
    let cfg = config("fig1_kou.json");
    for (extra, field) in cases {
        let mut args = vec!["run", "--config", cfg.as_str()];
        args.extend_from_slice(extra);
        let out = smilewings(dir.path(), &args, None);
        assert_eq!(out.status.code(), Some(2), "{extra:?}");
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert!(stderr.contains(field), "{extra:?}: {stderr}");
    }
    let out = smilewings(dir.path(), &["run", "--config", "missing.json"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn drift_is_echoed_with_its_origin() {
    let dir = TempDir::new().unwrap();
    let cfg = config("fig1_kou.json");
    let out = smilewings(dir.path(), &["run", "--config", &cfg, "--set", "k_grid.n=2", "--out", "a"], None);
    assert_eq!(out.status.code(), Some(0));
    let csv = Csv::read(&dir.path().join("a/smile.csv"));
    assert_eq!(csv.comments[2], "b: 8.6666666666666614e-2 (martingale drift)");
    assert_eq!(csv.rows.len(), 2);

    let out = smilewings(dir.path(), &["run", "--config", &cfg, "--set", "params.b=0", "--set", "k_grid.n=2", "--out", "b"], None);
    assert_eq!(out.status.code(), Some(0));
    let csv = Csv::read(&dir.path().join("b/smile.csv"));
    assert_eq!(csv.comments[2], "b: 0.0000000000000000e0 (from config)");
}

#[test]
fn crossover_is_finite_for_kou_figures() {
    let dir = TempDir::new().unwrap();
    for cfg in ["fig1_kou.json", "fig2_kou.json"] {
        let out = smilewings(dir.path(), &["crossover", "--config", &config(cfg), "--out", "c"], None);
        assert_eq!(out.status.code(), Some(0));
        let csv = Csv::read(&dir.path().join("c/crossover.csv"));
        assert_eq!(csv.rows.len(), 1);
        assert_eq!(&csv.rows[0][..2], ["order1", "order4"]);
        let k: f64 = csv.rows[0][2].parse().unwrap();
        assert!(k.is_finite(), "{cfg}");
    }
}

fn flat_smile_config(dir: &Path) -> String {
    let doc = serde_json::json!({
        "model": "kou",
        "params": {"sigma": 0.2, "lambda": 1e-9, "lambda_plus": 3.0, "lambda_minus": 2.0, "p": 0.2, "T": 1.0},
        "k_grid": {"min": 0.5, "max": 3.0, "n": 11},
        "outputs": ["smile"],
        "methods": ["exact", "order1", "order4"],
        "out_path": "flat"
    });
    let path = dir.join("flat.json");
    std::fs::write(&path, doc.to_string()).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn flat_smile_has_no_crossover_and_reports_failed_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = flat_smile_config(dir.path());

    let out = smilewings(dir.path(), &["crossover", "--config", &cfg], None);
    assert_eq!(out.status.code(), Some(1));
    let csv = Csv::read(&dir.path().join("flat/crossover.csv"));
    assert_eq!(csv.rows, [["order1", "order4", "n/a"]]);

    let out = smilewings(dir.path(), &["run", "--config", &cfg], None);
    assert_eq!(out.status.code(), Some(1));
    let csv = Csv::read(&dir.path().join("flat/smile.csv"));
    check_schema(&csv, "kou_smile.csv", "run");
    assert_eq!(csv.rows.len(), 11);
    assert!(csv.rows.iter().any(|r| r.last().unwrap().starts_with("failed:")));
    // the first-order column does not depend on the exact pricer
    assert!(csv.column("iv_order1").iter().all(|v| v.is_finite()));
}

#[test]
fn output_is_independent_of_thread_count() {
    let dir = TempDir::new().unwrap();
    let cfg = config("fig1_kou.json");
    let mut files = Vec::new();
    for (threads, out_dir) in [("1", "one"), ("3", "three")] {
        let mc = r#"{"n_paths": 200000, "seed": 11}"#;
        let args = ["run", "--config", &cfg, "--methods", "exact,order1,order4,mc", "--mc", mc, "--set", "k_grid.n=10", "--out", "o"];
        let out = smilewings(dir.path(), &args, Some(threads));
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::rename(dir.path().join("o"), dir.path().join(out_dir)).unwrap();
        files.push([
            std::fs::read(dir.path().join(out_dir).join("smile.csv")).unwrap(),
            std::fs::read(dir.path().join(out_dir).join("call_errors.csv")).unwrap(),
        ]);
    }
    assert!(files[0] == files[1]);
    let csv = Csv::read(&dir.path().join("one/call_errors.csv"));
    assert!(csv.column("std_error_mc").iter().all(|s| *s >= 0.0));

    for bad in ["0", "many"] {
        let out = smilewings(dir.path(), &["run", "--config", &cfg], Some(bad));
        assert_eq!(out.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&out.stderr).contains("SMILEWINGS_THREADS"));
    }
}
