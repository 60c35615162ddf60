use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ringstar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ringstar"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("stderr is not empty");
    serde_json::from_str(line).expect("stderr ends with a JSON error")
}

fn data_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

const QUENCH: &str = r#"
experiment = "quench_entropy"
seed = 7

[model]
L = 4

[t_grid]
t_max = 2.0
n_points = 11
"#;

#[test]
fn empty_sweep_runs_once_and_manifest_lists_every_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", QUENCH);
    let out_dir = dir.path().join("out");
    let out = ringstar(&["experiment", "--config", &cfg, "--output", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let manifest: Value = serde_json::from_slice(&std::fs::read(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 7);
    let files = manifest["files"].as_array().unwrap();
    let listed: Vec<&str> = files.iter().map(|f| f["path"].as_str().unwrap()).collect();
    let on_disk = data_files(&out_dir);
    assert_eq!(listed.len(), on_disk.len());
    for (name, bytes) in &on_disk {
        let entry = files.iter().find(|f| f["path"] == name.as_str()).expect("file is listed");
        assert_eq!(entry["sha256"], ringstar::experiment::content_hash(bytes).as_str());
        assert_eq!(entry["bytes"], bytes.len());
    }
    let series: Vec<_> = on_disk.iter().filter(|(n, _)| n.starts_with("series_")).collect();
    assert_eq!(series.len(), 1);
}

#[test]
fn unknown_key_exits_2_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &format!("{QUENCH}\n[options]\nbogus = 1\n"));
    let out = ringstar(&["experiment", "--config", &cfg, "--output", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["exit_code"], 2);
    assert!(err["message"].as_str().unwrap().contains("bogus"));
}

#[test]
fn unknown_sweep_parameter_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &format!("{QUENCH}\n[sweep]\nmu = [1.0]\n"));
    let out = ringstar(&["experiment", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "invalid_input");
}

#[test]
fn oversized_model_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let body = QUENCH.replace("L = 4", "L = 40");
    let cfg = write_config(dir.path(), "big.toml", &body);
    let out = ringstar(&["experiment", "--config", &cfg, "--output", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["exit_code"], 3);
}

#[test]
fn unknown_figure_exits_2() {
    let out = ringstar(&["reproduce", "fig99"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn haar_runs_reproduce_bytes_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
experiment = "otoc_curve"
seed = 11
seeds = [0, 1]

[model]
L = 5

[sweep]
lambda = [0.0, 1.0, 2.0]

[t_grid]
t_max = 3.0
n_points = 7

[options]
v = "Z0"
w = "Z2"
samples = 2
"#;
    let cfg = write_config(dir.path(), "otoc.toml", body);
    let mut runs = Vec::new();
    for workers in ["1", "4", "1"] {
        let out_dir = dir.path().join(format!("w{workers}_{}", runs.len()));
        let out = ringstar(&[
            "experiment",
            "--config",
            &cfg,
            "--workers",
            workers,
            "--output",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        runs.push(data_files(&out_dir));
    }
    assert_eq!(runs[0].len(), 3 * 2 + 1);
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);

    let other = dir.path().join("seed12");
    let out = ringstar(&["experiment", "--config", &cfg, "--seed", "12", "--output", other.to_str().unwrap()]);
    assert!(out.status.success());
    assert_ne!(data_files(&other), runs[0]);
}

#[test]
fn reproduce_config_file_matches_positional_form() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let out = ringstar(&["reproduce", "figS1", "--workers", "2", "--output", a.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let b = dir.path().join("b");
    let cfg = write_config(
        dir.path(),
        "fig.toml",
        &format!("figure = \"figS1\"\nworkers = 1\noutput_dir = {:?}\n", b.to_str().unwrap()),
    );
    let out = ringstar(&["reproduce", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (fa, fb) = (data_files(&a), data_files(&b));
    assert!(fa.iter().any(|(n, _)| n == "early_time_law.csv"));
    assert_eq!(fa, fb);
}
