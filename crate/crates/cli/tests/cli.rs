//! Black-box tests of the `tei` binary: exit codes, table naming, file
//! outputs, and the chart-is-a-view property.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_tei")
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn fixture_cfg() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic_panel.cfg")
}

#[test]
fn missing_input_exits_with_code_one() {
    let out = run(&["fit", "--input", "definitely_not_here.csv"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("not found"), "{stderr}");
}

#[test]
fn usage_errors_exit_with_code_one() {
    let out = run(&["fit", "--definitely-not-a-flag"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn unknown_config_key_exits_with_code_one() {
    let dir = scratch("cli_bad_config");
    let cfg = dir.join("bad.cfg");
    std::fs::write(&cfg, "inpoot = x.csv\n").unwrap();
    let out = run(&["fit", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown config key"));
}

#[test]
fn fit_table_uses_standard_parameter_names() {
    let dir = scratch("cli_fit_names");
    let out = run(&[
        "fit",
        "--config",
        fixture_cfg().to_str().unwrap(),
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    for name in ["Constant", "Ln y", "Ln K", "Ln L", "Ln E", ".5 (Ln y)^2", "t Ln E", "Brexit", "Covid"] {
        assert!(stdout.contains(name), "missing `{name}` in:\n{stdout}");
    }
    let fit_json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("fit.json")).unwrap()).unwrap();
    assert!(fit_json["loglik"].is_number());
    assert!(fit_json["convergence"]["converged"].as_bool().unwrap());
    assert!(dir.join("manifest.json").exists());
}

#[test]
fn noiseless_simulation_recovers_truth_to_four_decimals() {
    let dir = scratch("cli_noiseless");
    let out = run(&[
        "simulate",
        "--seed",
        "3",
        "--sigma",
        "0",
        "--censor-target",
        "0",
        "--no-het",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let fit_dir = dir.join("fit");
    let out = run(&[
        "fit",
        "--config",
        dir.join("dataset.cfg").to_str().unwrap(),
        "--out-dir",
        fit_dir.to_str().unwrap(),
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.code() == Some(0) || out.status.code() == Some(2), "{stdout}");

    let truth: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("truth.json")).unwrap()).unwrap();
    let fitted: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fit_dir.join("fit.json")).unwrap()).unwrap();
    let truth_coefs = truth["coefficients"].as_array().unwrap();
    let fitted_coefs = fitted["coefficients"].as_array().unwrap();
    assert_eq!(truth_coefs.len(), fitted_coefs.len());
    for (t, f) in truth_coefs.iter().zip(fitted_coefs) {
        assert_eq!(t["name"], f["name"]);
        let diff = (t["value"].as_f64().unwrap() - f["estimate"].as_f64().unwrap()).abs();
        assert!(diff < 5e-5, "{}: off by {diff}", t["name"]);
    }
}

#[test]
fn charts_are_views_of_the_csv() {
    let dir = scratch("cli_charts");
    let out = run(&[
        "efficiency",
        "--config",
        fixture_cfg().to_str().unwrap(),
        "--charts",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = std::fs::read_to_string(dir.join("efficiency.csv")).unwrap();
    let svg = std::fs::read_to_string(dir.join("tei_chart.svg")).unwrap();
    let mut checked = 0;
    for line in csv.lines().skip(1) {
        let mut fields = line.split(',');
        let firm = fields.next().unwrap();
        let year = fields.next().unwrap();
        let tei = fields.next().unwrap();
        assert!(
            svg.contains(&format!("firm={firm} year={year} tei={tei}")),
            "missing {firm}/{year} in chart"
        );
        checked += 1;
    }
    assert_eq!(checked, 190);
}

#[test]
fn tfpg_emits_fixed_column_order_and_charts() {
    let dir = scratch("cli_tfpg");
    let out = run(&[
        "tfpg",
        "--config",
        fixture_cfg().to_str().unwrap(),
        "--charts",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("tfpg.csv")).unwrap();
    assert!(csv.starts_with("firm,year,dtc,etc,stc,tc,se,tfpg\n"));
    // first year per firm has empty se/tfpg
    let first = csv.lines().nth(1).unwrap();
    assert!(first.ends_with(",,"), "{first}");
    // one decomposition chart per firm
    let charts = std::fs::read_dir(&dir)
        .unwrap()
        .filter(|e| {
            let name = e.as_ref().unwrap().file_name().to_string_lossy().into_owned();
            name.starts_with("tfpg_") && name.ends_with(".svg")
        })
        .count();
    assert_eq!(charts, 19);
    // with little technical-change variation the scale-economies series
    // dominates TFP growth, so the per-firm correlation is near one
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("tfpg_summary.json")).unwrap())
            .unwrap();
    for firm in summary["per_firm"].as_array().unwrap() {
        let corr = firm["corr_se_tfpg"].as_f64().unwrap();
        assert!(corr > 0.99, "{}: corr {corr}", firm["firm"]);
    }
}

#[test]
fn test_command_reports_three_hypotheses() {
    let dir = scratch("cli_tests");
    let out = run(&[
        "test",
        "--config",
        fixture_cfg().to_str().unwrap(),
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    for name in ["Cobb-Douglas Functional Form", "Constant Returns to Scale", "No Technical Change"] {
        assert!(stdout.contains(name), "{stdout}");
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("tests.json")).unwrap()).unwrap();
    assert_eq!(json["specification_tests"].as_array().unwrap().len(), 3);
}

#[test]
fn flag_overrides_config_value() {
    let dir = scratch("cli_override");
    let out = run(&[
        "fit",
        "--config",
        fixture_cfg().to_str().unwrap(),
        "--no-het",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["model"]["heteroskedastic"], serde_json::json!(false));
}
