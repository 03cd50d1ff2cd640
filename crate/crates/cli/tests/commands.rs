use std::path::Path;
use std::process::{Command, Output};

fn weakhardy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weakhardy"))
        .args(args)
        .env_remove("WEAKHARDY_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = weakhardy(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

/// Header row and data rows of a CSV document, comments skipped.
fn table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap_or_else(|_| panic!("not a number: {s}"))
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| num(&r[i])).collect()
}

fn lookup(rows: &[Vec<String>], key: &str) -> Vec<f64> {
    let r = rows.iter().find(|r| r[0] == key).unwrap_or_else(|| panic!("no row {key}"));
    r[1..].iter().map(|s| num(s)).collect()
}

fn meter(s: f64) -> (f64, f64) {
    (((1.0 + 3.0 * s) / 4.0).sqrt(), ((1.0 - s) / 4.0).sqrt())
}

#[test]
fn hardy_weak_values_table() {
    let (_, rows) = table(&ok(&["weak-values", "--scenario", "hardy"]));
    for (k, want) in [("O1O2", 0.0), ("NO1NO2", -1.0), ("O1NO2", 1.0), ("NO1O2", 1.0), ("O1", 1.0), ("O2", 1.0)] {
        let v = lookup(&rows, k);
        assert!((v[0] - want).abs() < 1e-12 && v[1].abs() < 1e-12, "{k}: {v:?}");
    }
    assert_eq!(lookup(&rows, "zeta")[0], -2.0);
}

#[test]
fn custom_selection_with_post_equal_pre_gives_born_probabilities() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[custom]\npre = [0.6, 0.0, [0.0, 0.48], 0.64]\npost = [0.6, 0.0, [0.0, 0.48], 0.64]\n").unwrap();
    let (_, rows) = table(&ok(&["weak-values", "--scenario", "custom", "--config", cfg.to_str().unwrap()]));
    // Basis index 2k + l: NO1NO2, NO1O2, O1NO2, O1O2.
    for (k, p) in [("NO1NO2", 0.36), ("NO1O2", 0.0), ("O1NO2", 0.2304), ("O1O2", 0.4096)] {
        let v = lookup(&rows, k);
        assert!((v[0] - p).abs() < 1e-9 && v[1].abs() < 1e-9, "{k}: {v:?}");
    }
}

#[test]
fn orthogonal_custom_selection_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "scenario = \"custom\"\n[custom]\npre = [1, 0, 0, 0]\npost = [0, 1, 0, 0]\n").unwrap();
    let o = weakhardy(&["weak-values", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["weak-values", "--scenario", "nope"],
        vec!["readout"],
        vec!["readout", "--strength", "abc"],
        vec!["readout", "--strength", "1.5"],
        vec!["sweep", "--kind", "fig4", "--grid", "0.1:0.9"],
        vec!["sweep", "--kind", "fig3", "--arm", "X1,NO2"],
        vec!["sweep", "--kind", "fig3", "--arm", "O1,O2"],
        vec!["frobnicate"],
    ] {
        assert_eq!(weakhardy(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "strenght = 0.3\n").unwrap();
    let o = weakhardy(&["readout", "--strength", "0.3", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn zero_strength_exits_3() {
    assert_eq!(weakhardy(&["readout", "--strength", "0"]).status.code(), Some(3));
    assert_eq!(weakhardy(&["sweep", "--kind", "fig4", "--grid", "0:0.5:3"]).status.code(), Some(3));
}

#[test]
fn exact_readouts_at_two_strengths() {
    let (_, rows) = table(&ok(&["readout", "--strength", "0.3", "--mode", "exact"]));
    let want = [
        ("O1O2", -0.07464659477547228),
        ("NO1NO2", -0.5201290335862496),
        ("O1NO2", 0.7973878141808609),
        ("NO1O2", 0.7973878141808609),
    ];
    for (k, w) in want {
        let v = lookup(&rows, k);
        assert!((v[0] - w).abs() < 1e-9 && v[1] == 0.0, "{k}: {v:?}");
    }
    let (_, rows) = table(&ok(&["readout", "--strength", "1.0", "--mode", "exact"]));
    for (k, w) in [("O1O2", 0.0), ("NO1NO2", 1.0 / 3.0), ("O1NO2", 1.0 / 3.0), ("NO1O2", 1.0 / 3.0)] {
        assert!((lookup(&rows, k)[0] - w).abs() < 1e-9, "{k}");
    }
}

#[test]
fn monte_carlo_readout_agrees_with_exact() {
    let exact = table(&ok(&["readout", "--strength", "0.3"])).1;
    let mc = table(&ok(&["readout", "--strength", "0.3", "--mode", "mc", "--shots", "4000", "--seed", "7"])).1;
    for (e, m) in exact.iter().zip(&mc) {
        let (x, r, err) = (num(&e[1]), num(&m[1]), num(&m[2]));
        assert!(err > 0.0);
        assert!((r - x).abs() <= 3.0 * err, "{}: {r} ± {err} vs {x}", e[0]);
    }
}

#[test]
fn fig2_visibility_column_matches_formula() {
    let (h, rows) = table(&ok(&["sweep", "--kind", "fig2", "--grid", "0.05:0.95:10", "--mode", "exact"]));
    assert_eq!(h, ["strength", "visibility", "err"]);
    assert_eq!(rows.len(), 10);
    for (s, v) in column(&h, &rows, "strength").into_iter().zip(column(&h, &rows, "visibility")) {
        let (d, e) = meter(s);
        assert!((v - 2.0 * e * (d + e)).abs() < 1e-9, "s={s}: {v}");
    }
}

#[test]
fn fig4_rows_sum_to_one() {
    let (h, rows) = table(&ok(&["sweep", "--kind", "fig4", "--grid", "0.05:0.95:10", "--mode", "exact"]));
    assert_eq!(
        h,
        [
            "strength", "R_O1O2", "R_NO1NO2", "R_O1NO2", "R_NO1O2", "err_O1O2", "err_NO1NO2", "err_O1NO2",
            "err_NO1O2"
        ]
    );
    for r in &rows {
        let sum: f64 = r[1..5].iter().map(|x| num(x)).sum();
        assert!((sum - 1.0).abs() < 1e-8, "{r:?}");
    }
}

#[test]
fn fig3_ideal_pattern() {
    let (h, rows) = table(&ok(&["sweep", "--kind", "fig3", "--arm", "NO1,NO2", "--mode", "exact"]));
    assert_eq!(h[0], "arm");
    assert!(rows.iter().all(|r| r[0] == "NO1,NO2"));
    for name in ["R_O1O2", "R_NO1NO2", "R_O1NO2", "R_NO1O2"] {
        let want = if name == "R_NO1NO2" { 1.0 } else { 0.0 };
        assert!(column(&h, &rows, name).iter().all(|v| (v - want).abs() < 1e-9), "{name}");
    }
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn monte_carlo_sweep_files_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let mut args = vec!["sweep", "--kind", "fig4", "--grid", "0.2:0.8:4", "--mode", "mc", "--seed", seed];
        args.extend_from_slice(extra);
        args.extend_from_slice(&["--output", out.to_str().unwrap()]);
        ok(&args);
        read(&out)
    };
    let a = run("a.csv", "11", &[]);
    let b = run("b.csv", "11", &[]);
    assert_eq!(a, b);
    // Scheduling never changes the counts.
    let c = run("c.csv", "11", &["--sequential"]);
    assert_eq!(table(&a).1, table(&c).1);
    let d = run("d.csv", "12", &[]);
    assert_ne!(table(&a).1, table(&d).1);
}

#[test]
fn metadata_header_records_effective_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "strength = 0.5\nmode = \"mc\"\nshots = 1000\nseed = 5\nhom-visibility = 0.9\n").unwrap();
    let text = ok(&["readout", "--config", cfg.to_str().unwrap(), "--shots", "2000"]);
    let header: Vec<&str> = text.lines().take_while(|l| l.starts_with('#')).collect();
    assert_eq!(header[0], format!("# weakhardy {}", env!("CARGO_PKG_VERSION")));
    assert!(header.contains(&"# seed: 5"));
    let config = header.iter().find_map(|l| l.strip_prefix("# config: ")).unwrap();
    let v: serde_json::Value = serde_json::from_str(config).unwrap();
    assert_eq!(v["strength"], 0.5);
    assert_eq!(v["mode"], "mc");
    assert_eq!(v["sampling"]["shots"], 2000);
    assert_eq!(v["imperfections"]["hom_visibility"], 0.9);
}

#[test]
fn seed_falls_back_to_environment() {
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_weakhardy"));
        cmd.args(["readout", "--strength", "0.4", "--mode", "mc", "--shots", "500"]);
        if let Some(f) = flag {
            cmd.args(["--seed", f]);
        }
        match env {
            Some(e) => cmd.env("WEAKHARDY_SEED", e),
            None => cmd.env_remove("WEAKHARDY_SEED"),
        };
        stdout(&cmd.output().unwrap())
    };
    assert!(run(Some("42"), None).contains("# seed: 42\n"));
    assert!(run(Some("42"), Some("3")).contains("# seed: 3\n"));
    assert!(run(None, None).contains("# seed: 1\n"));
}

#[test]
fn json_output_has_columns_rows_and_meta() {
    let text = ok(&["sweep", "--kind", "fig2", "--grid", "0.5:0.5:1", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["columns"][1], "visibility");
    assert_eq!(v["rows"].as_array().unwrap().len(), 1);
    assert_eq!(v["meta"]["command"], "sweep");
    assert_eq!(v["meta"]["config"]["kind"], "fig2");
}

#[test]
fn records_are_one_jsonl_line_per_basis() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("runs.jsonl");
    ok(&["sweep", "--kind", "fig4", "--grid", "0.2:0.6:3", "--mode", "mc", "--records", rec.to_str().unwrap()]);
    let lines: Vec<serde_json::Value> = read(&rec).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 12);
    for key in ["scenario", "strength", "basis", "shots", "coincidences", "seed"] {
        assert!(lines.iter().all(|l| !l[key].is_null()), "{key}");
    }
    let o = weakhardy(&["readout", "--strength", "0.3", "--records", rec.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "records need mc mode");
}

#[test]
fn unwritable_output_is_reported() {
    let o = weakhardy(&["sweep", "--kind", "fig4", "--output", "/nonexistent-dir/out.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot write"));
}

#[test]
fn selftest_passes_and_negative_control_fails() {
    let o = weakhardy(&["selftest"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!stdout(&o).contains("FAIL"));
    let bad = weakhardy(&["selftest", "--corrupt-splitter"]);
    assert_eq!(bad.status.code(), Some(4));
    assert!(stdout(&bad).lines().any(|l| l.starts_with("FAIL dark_port")));
}

#[test]
fn circuit_json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("circuit.json");
    ok(&["circuit", "--output", p.to_str().unwrap()]);
    assert_eq!(ok(&["circuit", "--input", p.to_str().unwrap()]), read(&p));
    std::fs::write(&p, "{\"not\": \"a circuit\"}").unwrap();
    assert_eq!(weakhardy(&["circuit", "--input", p.to_str().unwrap()]).status.code(), Some(2));
}
