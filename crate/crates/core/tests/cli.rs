//! The `wavesim` binary end to end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_wavesim"));
    c.env_remove("WAVESIM_THREADS");
    c
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

const ROD: &str = r#"{ "mesh": { "element": "bswi-rod", "epw": 0.45 }, "grid": { "spp": 2 } }"#;
const BEAM: &str = r#"{
  "mesh": { "element": "bswi-beam", "elements": 36 },
  "grid": { "duration": 0.0006 },
  "cracks": [ { "position": 0.75, "depth_ratio": 0.2 } ]
}"#;

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    if !out.status.success() {
        eprintln!("stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

#[test]
fn simulate_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "rod.json", ROD);
    let out = dir.path().join("out");
    let o = run(bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(&out));
    assert_eq!(o.status.code(), Some(0));
    for f in ["waveforms.csv", "waveforms.svg", "run.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    let v = meta["summary"]["group_velocity"].as_f64().unwrap();
    assert!((v - 5063.0).abs() < 0.01 * 5063.0, "{v}");
    assert_eq!(meta["summary"]["no_crack"], serde_json::Value::Bool(true));
    assert!(meta["resolved"]["sigma_per_s"].as_f64().unwrap() > 0.0);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("no crack"));
}

#[test]
fn run_json_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "rod.json", ROD);
    let a = dir.path().join("a");
    assert_eq!(run(bin().args(["simulate", "--spp", "3", "--config"]).arg(&cfg).arg("--out").arg(&a)).status.code(), Some(0));
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("run.json")).unwrap()).unwrap();
    let replay = write_config(dir.path(), "replay.json", &meta["config"].to_string());
    let b = dir.path().join("b");
    assert_eq!(run(bin().args(["simulate", "--config"]).arg(&replay).arg("--out").arg(&b)).status.code(), Some(0));
    assert_eq!(fs::read(a.join("waveforms.csv")).unwrap(), fs::read(b.join("waveforms.csv")).unwrap());
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "beam.json", BEAM);
    let mut csvs = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(format!("t{threads}"));
        let o = run(bin().args(["simulate", "--threads", threads, "--config"]).arg(&cfg).arg("--out").arg(&out));
        assert_eq!(o.status.code(), Some(0));
        csvs.push(fs::read(out.join("waveforms.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn thread_count_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "rod.json", ROD);
    let out = dir.path().join("out");
    let o = run(bin().env("WAVESIM_THREADS", "3").args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(&out));
    assert_eq!(o.status.code(), Some(0));
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(meta["threads"], 3);
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "rod.json", ROD);
    let out = dir.path().join("out");
    let cases: Vec<Vec<String>> = vec![
        vec!["simulate".into(), "--config".into(), dir.path().join("missing.json").display().to_string()],
        vec!["simulate".into(), "--config".into(), cfg.display().to_string(), "--set".into(), "mesh.epw=-1".into()],
        vec!["simulate".into(), "--config".into(), cfg.display().to_string(), "--set".into(), "bogus=1".into()],
        vec!["simulate".into(), "--config".into(), cfg.display().to_string(), "--threads".into(), "0".into()],
        vec!["convergence".into(), "--config".into(), cfg.display().to_string(), "--axis".into(), "epw".into(), "--values".into(), "0.45".into()],
        vec!["crack-sweep".into(), "--config".into(), cfg.display().to_string(), "--depths".into(), "0.1".into()],
        vec!["no-such-command".into()],
    ];
    for args in cases {
        let o = run(bin().args(&args).arg("--out").arg(&out));
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
    let bad = write_config(dir.path(), "bad.json", "{ not json");
    assert_eq!(run(bin().args(["simulate", "--config"]).arg(&bad)).status.code(), Some(2));
}

#[test]
fn analysis_failures_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "beam.json", BEAM);
    let o = run(bin()
        .args(["crack-sweep", "--depths", "0.2", "--set", "excitation.amplitude=0", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out")));
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn crack_sweep_and_dispersion_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "beam.json", BEAM);
    let out = dir.path().join("sweep");
    let o = run(bin().args(["crack-sweep", "--depths", "0,0.2", "--config"]).arg(&cfg).arg("--out").arg(&out));
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(out.join("crack_metrics.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("position_m,depth_ratio,direct_amplitude"));
    // zero depth takes the no-crack path
    assert!(rows[1].ends_with(",0,true"), "{}", rows[1]);
    assert!(out.join("crack_sweep.svg").exists());

    let out = dir.path().join("disp");
    let o = run(bin().args(["dispersion", "--duration", "0.0004", "--config"]).arg(&cfg).arg("--out").arg(&out));
    assert_eq!(o.status.code(), Some(0));
    for f in ["waveforms.csv", "cwt.csv", "dispersion_packets.csv", "run.json", "waveforms.svg"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["mesh"]["elements"], 36);
    assert_eq!(meta["config"]["excitation"]["kind"], "dual");
}

#[test]
fn convergence_and_compare_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "rod.json", ROD);
    let out = dir.path().join("conv");
    let o = run(bin()
        .args(["convergence", "--axis", "spp", "--values", "2,4", "--duration", "0.0004", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out));
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().last().unwrap().ends_with(",0.00000000e0"));

    let out = dir.path().join("cmp");
    let o = run(bin().args(["compare", "--duration", "0.0004", "--config"]).arg(&cfg).arg("--out").arg(&out));
    assert_eq!(o.status.code(), Some(0));
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    assert!(meta["runtime_s"]["primary"].as_f64().unwrap() >= 0.0);
    assert_eq!(meta["deviations"].as_array().unwrap().len(), 2);
    let header = fs::read_to_string(out.join("compare.csv")).unwrap();
    assert!(header.starts_with("t_s,lwfem:mid,newmark-reference:mid"));
}

#[test]
fn identical_solvers_compare_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "fem.json",
        r#"{ "mesh": { "element": "fem-rod", "epw": 10 }, "grid": { "spp": 10, "duration": 0.0003 }, "solver": "newmark",
             "baseline": { "element": "fem-rod", "epw": 10, "spp": 10 } }"#,
    );
    let out = dir.path().join("cmp");
    assert_eq!(run(bin().args(["compare", "--config"]).arg(&cfg).arg("--out").arg(&out)).status.code(), Some(0));
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    for d in meta["deviations"].as_array().unwrap() {
        assert_eq!(d["relative_l2"].as_f64().unwrap(), 0.0);
    }
}
