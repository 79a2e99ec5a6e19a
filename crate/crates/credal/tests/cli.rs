//! CLI behavior: exit codes, validation messages, file formats, and the
//! worked prediction fixture, exercised through the real binary.

use std::path::Path;
use std::process::{Command, Output};

fn credal(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_credal"))
        .args(args)
        .current_dir(dir)
        .env("CREDAL_THREADS", "2")
        .output()
        .expect("spawn credal")
}

fn write(dir: &Path, name: &str, contents: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path.display().to_string()
}

/// Nine calibration rows engineered so the plausibility scores are
/// 0.25, 0.30, ..., 0.65 (one-hot lambda picks the first model entry).
fn nine_row_dataset() -> String {
    let mut text = String::from("{\"schema\":\"credal-v1\",\"k\":3}\n");
    for i in 0..9 {
        let score = 0.25 + 0.05 * i as f64;
        text.push_str(&format!(
            "{{\"id\":\"c{i}\",\"model_probs\":[{score},{},{}],\"plausibility\":[1.0,0.0,0.0]}}\n",
            (1.0 - score) / 2.0,
            (1.0 - score) / 2.0,
        ));
    }
    text
}

#[test]
fn calibrate_writes_artifact_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "cal.jsonl", &nine_row_dataset());

    let output = credal(&["calibrate", "--input", &input, "--alpha", "0.1", "--out", "art.json"], dir.path());
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    // n=9, alpha=0.1: quantile index 1, tau = smallest score 0.25
    assert!(stdout.contains("\"n\":9"), "stdout: {stdout}");
    assert!(stdout.contains("\"k_index\":1"));
    assert!(stdout.contains("2.5000000000000000e-1"));

    let artifact = std::fs::read_to_string(dir.path().join("art.json")).unwrap();
    assert!(artifact.contains("\"schema\":\"credal-calibration-v1\""));
    assert!(artifact.contains("\"dataset_digest\":"));
}

#[test]
fn calibrate_alpha_zero_gives_vacuous_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "cal.jsonl", &nine_row_dataset());
    let output = credal(&["calibrate", "--input", &input, "--alpha", "0", "--out", "art.json"], dir.path());
    assert!(output.status.success());
    assert!(String::from_utf8_lossy(&output.stdout).contains("\"tau\":null"));
    let artifact = std::fs::read_to_string(dir.path().join("art.json")).unwrap();
    assert!(artifact.contains("\"tau\":null"));
}

#[test]
fn calibrate_missing_plausibility_exits_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "bad.jsonl",
        "{\"schema\":\"credal-v1\",\"k\":3}\n\
         {\"id\":\"ok\",\"model_probs\":[0.5,0.3,0.2],\"plausibility\":[1.0,0.0,0.0]}\n\
         {\"id\":\"nolam\",\"model_probs\":[0.5,0.3,0.2]}\n",
    );
    let output = credal(&["calibrate", "--input", &input, "--alpha", "0.1", "--out", "a.json"], dir.path());
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("line 3"), "stderr: {stderr}");
}

#[test]
fn calibrate_empty_dataset_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "empty.jsonl", "{\"schema\":\"credal-v1\",\"k\":3}\n");
    let output = credal(&["calibrate", "--input", &input, "--alpha", "0.1", "--out", "a.json"], dir.path());
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn calibrate_rejects_out_of_range_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "cal.jsonl", &nine_row_dataset());
    for alpha in ["1.0", "-0.1"] {
        let output = credal(&["calibrate", "--input", &input, "--alpha", alpha, "--out", "a.json"], dir.path());
        assert_eq!(output.status.code(), Some(2), "alpha {alpha}");
    }
}

#[test]
fn garbage_input_exits_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "garbage.jsonl",
        "{\"schema\":\"credal-v1\",\"k\":3}\nnot json at all\n",
    );
    let output = credal(&["calibrate", "--input", &input, "--alpha", "0.1", "--out", "a.json"], dir.path());
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("line 2"));
}

/// Calibration giving exactly tau = 0.25 at alpha = 0.1 (smallest of the
/// nine engineered scores), plus the worked test point.
fn fixture_setup(dir: &Path) -> (String, String) {
    let cal = write(dir, "cal.jsonl", &nine_row_dataset());
    let test = write(
        dir,
        "test.jsonl",
        "{\"schema\":\"credal-v1\",\"k\":3}\n\
         {\"id\":\"fixture\",\"model_probs\":[0.7,0.2,0.1],\"plausibility\":[0.5,0.3,0.2]}\n",
    );
    (cal, test)
}

#[test]
fn predict_reproduces_worked_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let (cal, test) = fixture_setup(dir.path());
    let output = credal(&["calibrate", "--input", &cal, "--alpha", "0.1", "--out", "art.json"], dir.path());
    assert!(output.status.success());

    let output = credal(
        &["predict", "--artifact", "art.json", "--input", &test, "--delta", "0.8", "--resolution", "100", "--out", "pred.jsonl"],
        dir.path(),
    );
    assert!(output.status.success());
    let text = std::fs::read_to_string(dir.path().join("pred.jsonl")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    let row: serde_json::Value = serde_json::from_str(lines[1]).unwrap();
    assert_eq!(row["id"], "fixture");
    assert_eq!(row["ihds"], serde_json::json!([0, 1]));
    assert_eq!(row["prps"], serde_json::json!([0, 1, 2]));
    assert_eq!(row["au"].as_f64().unwrap(), 0.0);
    assert!((row["tu"].as_f64().unwrap() - 3f64.log2()).abs() < 1e-9);
    assert_eq!(row["one_hot_in_region"], serde_json::json!(true));
    assert_eq!(row["uniform_in_region"], serde_json::json!(true));
    let upper: Vec<f64> = row["envelope_upper"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    for (got, want) in upper.iter().zip([1.0, 0.9, 0.75]) {
        assert!((got - want).abs() < 1e-9);
    }
}

#[test]
fn predict_delta_zero_returns_full_sets() {
    let dir = tempfile::tempdir().unwrap();
    let (cal, test) = fixture_setup(dir.path());
    credal(&["calibrate", "--input", &cal, "--alpha", "0.1", "--out", "art.json"], dir.path());
    let output = credal(
        &["predict", "--artifact", "art.json", "--input", &test, "--delta", "0", "--resolution", "50", "--out", "pred.jsonl"],
        dir.path(),
    );
    assert!(output.status.success());
    let text = std::fs::read_to_string(dir.path().join("pred.jsonl")).unwrap();
    let row: serde_json::Value = serde_json::from_str(text.lines().nth(1).unwrap()).unwrap();
    assert_eq!(row["ihds"], serde_json::json!([0, 1, 2]));
}

#[test]
fn predict_empty_input_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let (cal, _) = fixture_setup(dir.path());
    credal(&["calibrate", "--input", &cal, "--alpha", "0.1", "--out", "art.json"], dir.path());
    let empty = write(dir.path(), "none.jsonl", "{\"schema\":\"credal-v1\",\"k\":3}\n");
    let output = credal(
        &["predict", "--artifact", "art.json", "--input", &empty, "--delta", "0.1", "--out", "pred.jsonl"],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("pred.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("{\"schema\":\"credal-predictions-v1\""));
}

#[test]
fn predict_rejects_delta_at_or_above_one() {
    let dir = tempfile::tempdir().unwrap();
    let (cal, test) = fixture_setup(dir.path());
    credal(&["calibrate", "--input", &cal, "--alpha", "0.1", "--out", "art.json"], dir.path());
    let output = credal(
        &["predict", "--artifact", "art.json", "--input", &test, "--delta", "1.0", "--out", "pred.jsonl"],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn tampered_artifact_warns_but_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (cal, test) = fixture_setup(dir.path());
    credal(&["calibrate", "--input", &cal, "--alpha", "0.1", "--out", "art.json"], dir.path());
    let artifact_path = dir.path().join("art.json");
    let tampered = std::fs::read_to_string(&artifact_path)
        .unwrap()
        .replace("\"n_calibration\":9", "\"n_calibration\":10");
    std::fs::write(&artifact_path, tampered).unwrap();

    let output = credal(
        &["predict", "--artifact", "art.json", "--input", &test, "--delta", "0.5", "--out", "pred.jsonl"],
        dir.path(),
    );
    assert!(output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("digest mismatch"));
}

#[test]
fn evaluate_writes_expected_files() {
    let dir = tempfile::tempdir().unwrap();
    credal(&["synth", "--n", "160", "--k", "3", "--seed", "3", "--out", "data.jsonl"], dir.path());
    let output = credal(
        &["evaluate", "--input", "data.jsonl", "--epsilons", "0.1,0.2", "--seeds", "3", "--resolution", "40", "--out", "results"],
        dir.path(),
    );
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let csv = std::fs::read_to_string(dir.path().join("results/metrics.csv")).unwrap();
    // header + 2 epsilons x 3 seeds x 2 methods
    assert_eq!(csv.lines().count(), 1 + 12);
    assert!(csv.starts_with("epsilon,alpha,delta,seed,method,"));
    assert!(dir.path().join("results/metrics.json").exists());
    assert!(dir.path().join("results/timings.json").exists());
    let metrics = std::fs::read_to_string(dir.path().join("results/metrics.json")).unwrap();
    assert!(!metrics.contains("median_point_ms"));
    assert!(!metrics.contains("runtime_per_point_ms"));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("epsilon"), "summary table missing: {stdout}");
}

#[test]
fn evaluate_grid_policy_writes_grid_csv() {
    let dir = tempfile::tempdir().unwrap();
    credal(&["synth", "--n", "120", "--k", "3", "--seed", "4", "--out", "data.jsonl"], dir.path());
    let output = credal(
        &[
            "evaluate", "--input", "data.jsonl", "--epsilons", "0.2", "--alpha-policy", "grid",
            "--grid-steps", "5", "--seeds", "2", "--resolution", "30", "--out", "results",
        ],
        dir.path(),
    );
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let grid = std::fs::read_to_string(dir.path().join("results/grid.csv")).unwrap();
    // header + 4 interior alphas x 2 methods
    assert_eq!(grid.lines().count(), 1 + 8);
}

#[test]
fn evaluate_epsilon_list_matches_protocol() {
    let dir = tempfile::tempdir().unwrap();
    credal(&["synth", "--n", "100", "--k", "3", "--seed", "5", "--out", "data.jsonl"], dir.path());
    let output = credal(
        &["evaluate", "--input", "data.jsonl", "--epsilons", "0.05,0.1,0.15,0.2,0.25,0.3", "--seeds", "2", "--resolution", "25", "--out", "results"],
        dir.path(),
    );
    assert!(output.status.success());
    let csv = std::fs::read_to_string(dir.path().join("results/metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 6 * 2 * 2);
}

#[test]
fn plot_renders_fixture_region() {
    let dir = tempfile::tempdir().unwrap();
    let (cal, test) = fixture_setup(dir.path());
    credal(&["calibrate", "--input", &cal, "--alpha", "0.1", "--out", "art.json"], dir.path());
    let output = credal(
        &["plot", "--artifact", "art.json", "--input", &test, "--point-id", "fixture", "--out", "region.svg"],
        dir.path(),
    );
    assert!(output.status.success());
    let svg = std::fs::read_to_string(dir.path().join("region.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("polygon"));

    let output = credal(
        &["plot", "--artifact", "art.json", "--input", &test, "--point-id", "missing", "--out", "x.svg"],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn plot_rejects_non_ternary_spaces() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "k2.jsonl",
        "{\"schema\":\"credal-v1\",\"k\":2}\n\
         {\"id\":\"p\",\"model_probs\":[0.6,0.4],\"plausibility\":[1.0,0.0]}\n",
    );
    credal(&["calibrate", "--input", &input, "--alpha", "0.3", "--out", "art.json"], dir.path());
    let output = credal(
        &["plot", "--artifact", "art.json", "--input", &input, "--point-id", "p", "--out", "x.svg"],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("K=3"));
}

#[test]
fn predict_rejects_dimension_mismatch_against_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let (cal, _) = fixture_setup(dir.path());
    credal(&["calibrate", "--input", &cal, "--alpha", "0.1", "--out", "art.json"], dir.path());
    let two_class = write(
        dir.path(),
        "k2.jsonl",
        "{\"schema\":\"credal-v1\",\"k\":2}\n\
         {\"id\":\"p\",\"model_probs\":[0.6,0.4]}\n",
    );
    let output = credal(
        &["predict", "--artifact", "art.json", "--input", &two_class, "--delta", "0.1", "--out", "o.jsonl"],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(2));
}
