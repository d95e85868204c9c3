use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BANK: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures/assessment_bank.json");

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psybench"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_spec(dir: &Path, takers: &str) -> PathBuf {
    let spec = path(dir, "spec.json");
    fs::write(&spec, format!(r#"{{ "seed": 7, "takers": {takers}, "missingness": 0.02 }}"#)).unwrap();
    spec
}

#[test]
fn full_workflow_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let config = path(d, "config.toml");
    fs::write(
        &config,
        "execution = \"parallel\"\n[calibration]\nmax_cycles = 300\n[simulate]\nvariants = 3\n[report]\npopulation_separator = \":\"\n",
    )
    .unwrap();

    let spec = write_spec(d, r#"{ "kind": "normal", "n": 1500, "mean": 0, "sd": 1 }"#);
    let matrix = path(d, "matrix.csv");
    let out = run(&["simulate", "--config", s(&config), "--spec", s(&spec), "--bank", BANK, "--matrix", s(&matrix)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let calibrated = path(d, "calibrated.json");
    let out = run(&["calibrate", "-c", s(&config), "--bank", BANK, "--matrix", s(&matrix), "--out", s(&calibrated)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fs::read_to_string(&calibrated).unwrap().contains("log_marginal_likelihood"));

    let takers = r#"{ "kind": "populations", "populations": [
        { "id": "east", "n": 40, "mean": 0.5, "sd": 1 }, { "id": "west", "n": 40, "mean": -0.5, "sd": 1 } ] }"#;
    let spec = write_spec(d, takers);
    let records = path(d, "records.csv");
    let thetas = path(d, "thetas.csv");
    let out = run(&[
        "simulate", "-c", s(&config), "--spec", s(&spec), "--bank", s(&calibrated),
        "--matrix", s(&path(d, "m2.csv")), "--records", s(&records), "--thetas", s(&thetas),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_to_string(&thetas).unwrap().lines().count(), 81);

    let out = run(&["validate", "--bank", s(&calibrated), "--responses", s(&records)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let pipeline = path(d, "pipeline.json");
    let out = run(&["estimate", "-c", s(&config), "--bank", s(&calibrated), "--responses", s(&records), "--out", s(&pipeline)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let human = path(d, "human.json");
    fs::write(
        &human,
        r#"[{"population_id": "north", "method": "irt", "mean": 0.1, "ci_low": 0.0, "ci_high": 0.2,
             "p5": -1.5, "p25": -0.6, "p50": 0.1, "p75": 0.8, "p95": 1.7, "n": 4000},
            {"population_id": "north", "method": "percent_correct", "mean": 52.0, "ci_low": 51.0, "ci_high": 53.0,
             "p5": 20.0, "p25": 38.0, "p50": 52.0, "p75": 66.0, "p95": 84.0, "n": 4000}]"#,
    )
    .unwrap();
    let plots = path(d, "plots");
    let out = run(&["report", "-c", s(&config), "--pipeline", s(&pipeline), "--populations", s(&human), "--out-dir", s(&plots)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let irt = fs::read_to_string(plots.join("irt.csv")).unwrap();
    assert_eq!(irt.lines().count(), 4);
    assert!(irt.starts_with("population_id,mean,ci_low,ci_high,p5,p25,p50,p75,p95,n\neast,"));
    assert!(plots.join("percent_correct.csv").exists() && plots.join("manifest.json").exists());
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let bad_bank = path(d, "bank.json");
    fs::write(&bad_bank, fs::read_to_string(BANK).unwrap().replacen("\"3PL\"", "\"4PL\"", 1)).unwrap();
    let out = run(&["validate", "--bank", s(&bad_bank)]);
    assert_eq!(code(&out), 2);

    let config = path(d, "config.toml");
    fs::write(&config, "[calibration]\nmax_cylces = 3\n").unwrap();
    assert_eq!(code(&run(&["validate", "-c", s(&config), "--bank", BANK])), 2);

    let spec = path(d, "spec.json");
    fs::write(&spec, r#"{ "seed": 1, "takers": { "kind": "normal", "n": 5, "mean": 0, "sd": 1 }, "missingness": 1.5 }"#).unwrap();
    assert_eq!(code(&run(&["validate", "--spec", s(&spec)])), 2);

    let records = path(d, "records.csv");
    fs::write(&records, "taker_id,variant_id,item_id,extracted_answer,human_score\nm,base,NOPE,[A],\n").unwrap();
    assert_eq!(code(&run(&["validate", "--bank", BANK, "--responses", s(&records)])), 2);
}

#[test]
fn unusable_taker_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let records = path(d, "records.csv");
    // One correct open-ended answer: the only variant sits on the upper clamp.
    fs::write(&records, "taker_id,variant_id,item_id,extracted_answer,human_score\nm,base,O001,,1\n").unwrap();
    let pipeline = path(d, "pipeline.json");
    let out = run(&["estimate", "--bank", BANK, "--responses", s(&records), "--out", s(&pipeline)]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(pipeline.exists());
}

#[test]
fn missing_input_is_a_plain_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["calibrate", "--bank", BANK, "--matrix", s(&dir.path().join("none.csv")), "--out", s(&dir.path().join("o.json"))]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("none.csv"));
}
