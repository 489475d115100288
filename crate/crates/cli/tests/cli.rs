use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn qrs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrs"))
        .args(args)
        .output()
        .expect("qrs runs")
}

fn example(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../docs/examples")
        .join(name)
        .display()
        .to_string()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

fn scratch(name: &str, text: &str) -> String {
    let dir = std::env::temp_dir().join(format!("qrs-cli-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn ki_on_bell_state_has_one_full_block() {
    let out = qrs(&["ki", "--state", &example("bell.json")]);
    assert!(out.status.success());
    let r = json(&out);
    let blocks = r["result"]["blocks"].as_array().unwrap();
    assert_eq!(blocks.len(), 1);
    assert_eq!(blocks[0]["dim_q"], 2);
    assert!((r["result"]["s_cq"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn assisted_rate_of_correlated_bit() {
    let out = qrs(&[
        "rate",
        "assisted",
        "--state",
        &example("corr_bit.json"),
        "--channel",
        &example("id2.json"),
        "--gamma",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert!((r["result"]["value"].as_f64().unwrap() - 0.5).abs() < 0.01);
    assert_eq!(r["result"]["certified"], true);
    assert!(r["result"]["gamma_relaxation"].is_string());
    assert!(r["result"].get("wall_clock_seconds").is_none());
}

#[test]
fn reports_carry_provenance() {
    let state = example("bell.json");
    let out = qrs(&[
        "rate",
        "unassisted",
        "--state",
        &state,
        "--channel",
        &example("depolarizing.json"),
        "--restarts",
        "2",
        "--seed",
        "9",
        "--timing",
    ]);
    assert!(out.status.success());
    let r = json(&out);
    assert_eq!(r["tool"], "qrs");
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(r["seed"], 9);
    let inputs = r["inputs"].as_array().unwrap();
    assert_eq!(inputs.len(), 2);
    assert_eq!(inputs[0]["sha256"].as_str().unwrap().len(), 64);
    assert!(r["tolerances"]
        .as_array()
        .unwrap()
        .iter()
        .any(|t| t["name"] == "certify_slack"));
    assert!(r["result"]["wall_clock_seconds"].is_number());
    assert!(r["result"]["value"].as_f64().unwrap() <= 0.01);
}

#[test]
fn out_flag_writes_the_same_bytes() {
    let args = [
        "fidelity",
        "--state",
        &example("bell.json"),
        "--other",
        &example("corr_bit.json"),
    ];
    let stdout = qrs(&args).stdout;
    let target = scratch("fidelity.json", "");
    let mut with_out: Vec<&str> = args.to_vec();
    with_out.extend(["--out", &target]);
    assert!(qrs(&with_out).status.success());
    assert_eq!(std::fs::read(&target).unwrap(), stdout);
    let r: Value = serde_json::from_slice(&stdout).unwrap();
    assert!((r["result"]["fidelity"].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
}

#[test]
fn malformed_inputs_exit_with_one_and_a_diagnostic() {
    let truncated = scratch("truncated.json", "{\"layout\": [[\"A\", 2]],\n \"matrix\": [[[1, 0]");
    let out = qrs(&["entropy", "--state", &truncated]);
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("truncated.json") && msg.contains("line 2"), "{msg}");

    let ragged = scratch(
        "ragged.json",
        r#"{"layout": [["A", 2]], "matrix": [[[1, 0], [0, 0]], [[0, 0]]]}"#,
    );
    let msg = String::from_utf8_lossy(&qrs(&["entropy", "--state", &ragged]).stderr).to_string();
    assert!(msg.contains("matrix: row 1"), "{msg}");

    let not_tp = scratch(
        "not_tp.json",
        r#"{"in": [["A", 2]], "out": [["B", 2]], "kraus": [[[[2, 0], [0, 0]], [[0, 0], [2, 0]]]]}"#,
    );
    let out = qrs(&[
        "rate",
        "assisted",
        "--state",
        &example("bell.json"),
        "--channel",
        &not_tp,
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kraus"));

    let out = qrs(&[
        "rate",
        "assisted",
        "--state",
        &example("bell.json"),
        "--channel",
        &example("id2.json"),
        "--gamma",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let out = qrs(&["ki", "--state", "/nonexistent/state.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn decoupling_report_lists_every_instance() {
    let out = qrs(&["verify", "decoupling", "--instances", "4", "--seed", "1"]);
    assert!(out.status.success());
    let r = json(&out);
    let rows = r["result"]["instances"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for row in rows {
        let (lhs, rhs) = (row["lhs"].as_f64().unwrap(), row["rhs"].as_f64().unwrap());
        assert_eq!(row["holds"].as_bool().unwrap(), lhs <= rhs + 1e-9);
    }
}

#[test]
fn eop_of_correlated_bit() {
    let out = qrs(&[
        "eop",
        "--state",
        &example("corr_bit.json"),
        "--x",
        "A",
        "--ancilla",
        "2",
        "--restarts",
        "4",
    ]);
    assert!(out.status.success());
    assert!((json(&out)["result"]["value"].as_f64().unwrap() - 1.0).abs() < 0.01);
}

#[test]
fn quick_selftest_passes() {
    let out = qrs(&["selftest", "--quick", "--only", "1,6,10,11"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_eq!(r["result"]["criteria"].as_array().unwrap().len(), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("PASS"));
}

#[test]
fn help_lists_the_rate_flags() {
    let text = String::from_utf8(qrs(&["rate", "assisted", "--help"]).stdout).unwrap();
    for flag in [
        "--state",
        "--channel",
        "--gamma",
        "--copies",
        "--restarts",
        "--seed",
        "--dim-e",
        "--dim-eprime",
        "--tol",
        "--out",
    ] {
        assert!(text.contains(flag), "missing {flag}");
    }
}
