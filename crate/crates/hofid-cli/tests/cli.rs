use serde_json::Value;
use std::process::{Command, Output};

fn hofid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hofid"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn json_run_reports_the_eigenpair() {
    let out = hofid(&["--problem", "sine", "-k", "3"]);
    let doc = stdout_json(&out);
    let lambda = doc["lambda"].as_f64().unwrap();
    assert!((lambda - 16.0).abs() < 1e-6, "lambda = {lambda}");
    assert_eq!(doc["k"], 3);
    assert_eq!(doc["zero_count"], 3);
    assert_eq!(doc["converged"], true);
    assert_eq!(doc["problem"]["name"], "sine");
    assert_eq!(doc["config"]["orders"], serde_json::json!([4, 6, 8]));
    let history = doc["history"].as_array().unwrap();
    assert!(!history.is_empty());
    // stage records carry the per-mesh trace the verbose flag prints
    assert!(history[0]["trace"]
        .as_array()
        .is_some_and(|t| !t.is_empty()));
}

#[test]
fn k_range_yields_an_array_of_runs() {
    let out = hofid(&["--problem", "sine", "--k-range", "0..2"]);
    let doc = stdout_json(&out);
    let runs = doc.as_array().expect("array for a range");
    assert_eq!(runs.len(), 3);
    for (k, run) in runs.iter().enumerate() {
        let lam = run["lambda"].as_f64().unwrap();
        let exact = ((k + 1) * (k + 1)) as f64;
        assert!((lam - exact).abs() < 1e-6, "k={k}: {lam}");
        assert_eq!(run["zero_count"], k);
    }
}

#[test]
fn csv_holds_the_eigenfunction_profile() {
    let out = hofid(&["--problem", "sine", "-k", "2", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,h"));

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 3, "row {i}: {line}");
        if i == 0 {
            assert!(cols[2].is_empty(), "first row has no trailing interval");
        } else {
            assert!(cols[2].parse::<f64>().unwrap() > 0.0);
        }
        xs.push(cols[0].parse::<f64>().unwrap());
        ys.push(cols[1].parse::<f64>().unwrap());
    }
    assert!(xs.len() > 20);
    assert!(xs.windows(2).all(|w| w[1] > w[0]));
    assert!(xs[0].abs() < 1e-15);
    assert!((xs[xs.len() - 1] - std::f64::consts::PI).abs() < 1e-12);

    // the second excited state crosses the axis twice
    let peak = ys.iter().fold(0f64, |a, &v| a.max(v.abs()));
    let signs: Vec<f64> = ys
        .iter()
        .copied()
        .filter(|v| v.abs() > 1e-8 * peak)
        .collect();
    let crossings = signs
        .windows(2)
        .filter(|w| w[0].signum() != w[1].signum())
        .count();
    assert_eq!(crossings, 2);
}

#[test]
fn table_format_lists_one_row_per_index() {
    let out = hofid(&[
        "--problem",
        "sine",
        "--k-range",
        "0..2",
        "--format",
        "table",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].contains("lambda") && lines[0].contains("E_r"));
    for row in &lines[1..] {
        assert!(row.trim_end().ends_with("ok"), "row: {row}");
    }
}

#[test]
fn out_flag_writes_the_file_instead_of_stdout() {
    let path = std::env::temp_dir().join(format!("hofid-cli-test-{}.json", std::process::id()));
    let out = hofid(&[
        "--problem",
        "sine",
        "-k",
        "0",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    std::fs::remove_file(&path).ok();
    assert!((doc["lambda"].as_f64().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn usage_errors_exit_one() {
    // missing --problem
    let out = hofid(&["-k", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--problem"));

    // missing index
    let out = hofid(&["--problem", "sine"]);
    assert_eq!(out.status.code(), Some(1));

    // unknown flag goes through clap
    let out = hofid(&["--problem", "sine", "-k", "0", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));

    // malformed parameter
    let out = hofid(&["--problem", "sine", "-k", "0", "--param", "c"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("NAME=VALUE"));

    // unknown parameter is rejected by the catalog
    let out = hofid(&["--problem", "sine", "-k", "0", "--param", "bogus=1"]);
    assert_eq!(out.status.code(), Some(1));

    // csv cannot hold several eigenfunctions
    let out = hofid(&["--problem", "sine", "--k-range", "0..3", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unconverged_runs_exit_two() {
    // an unsatisfiable tolerance under a mesh cap: the run completes,
    // reports converged = false, and flags the exit status
    let out = Command::new(env!("CARGO_BIN_EXE_hofid"))
        .args([
            "--problem",
            "sine",
            "-k",
            "0",
            "--orders",
            "4",
            "--tols",
            "1e-14",
        ])
        .env("HOFID_MAX_N", "64")
        .output()
        .expect("binary runs");
    assert_eq!(
        out.status.code(),
        Some(2),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["converged"], false);
    assert_eq!(doc["history"][0]["mesh_capped"], true);
}

#[test]
fn json_output_is_deterministic_up_to_the_timestamp() {
    let strip = |out: &Output| -> Value {
        let mut doc = stdout_json(out);
        doc.as_object_mut().unwrap().remove("timestamp");
        doc
    };
    let a = hofid(&["--problem", "sine", "-k", "1"]);
    let b = hofid(&["--problem", "sine", "-k", "1"]);
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn repro_recomputes_a_reference_table() {
    let out = hofid(&["repro", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("all 9 rows within tolerance"), "got:\n{text}");

    let out = hofid(&["repro", "9"]);
    assert_eq!(out.status.code(), Some(1));
}
