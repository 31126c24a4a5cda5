use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_spoofguard"));
    c.env_remove("SPOOFGUARD_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_json(p: impl AsRef<Path>) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn simulate(dir: &Path, chunks: &str) -> PathBuf {
    let data = dir.join("data");
    let o = run(&[
        "simulate",
        "--out",
        data.to_str().unwrap(),
        "--chunks",
        chunks,
        "--chunk-size",
        "1000",
        "--seed",
        "3",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    data
}

fn train(dir: &Path, data: &Path) -> PathBuf {
    let stem = dir.join("det");
    let o = run(&[
        "train",
        "--data",
        data.to_str().unwrap(),
        "--out",
        stem.to_str().unwrap(),
        "--grid",
        "16",
        "--epochs",
        "60",
        "--chunk-size",
        "1000",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    stem.with_extension("json")
}

#[test]
fn simulate_writes_labelled_captures_and_config() {
    let tmp = tempfile::tempdir().unwrap();
    let data = simulate(tmp.path(), "4");
    let iq = fs::read_dir(&data)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "iq"))
        .count();
    assert_eq!(iq, 8);
    let meta = fs::read_to_string(data.join("spoof_00002.meta")).unwrap();
    assert!(meta.contains("label=spoofed"));
    let cfg = read_json(data.join("run_config.json"));
    assert_eq!(cfg["config"]["chunks"], 4);
    assert_eq!(cfg["config"]["seed"], 3);
    assert_eq!(fs::metadata(data.join("legit_00000.iq")).unwrap().len(), 8000);
}

#[test]
fn zero_chunks_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["simulate", "--out", tmp.path().to_str().unwrap(), "--chunks", "0"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("chunks"));
}

#[test]
fn single_fold_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().to_str().unwrap();
    assert_eq!(code(&run(&["eval", "--data", p, "--out", p, "--k", "1"])), 2);
}

#[test]
fn unwritable_output_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("plain-file");
    fs::write(&file, b"x").unwrap();
    let out = file.join("sub");
    assert_eq!(code(&run(&["simulate", "--out", out.to_str().unwrap(), "--chunks", "2"])), 2);
}

#[test]
fn seed_precedence_flag_env_file() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = tmp.path().join("run.conf");
    fs::write(&conf, "seed=11\nchunk_size=300\nchunks=2\n").unwrap();
    let seed_of = |dir: &str, env: Option<&str>, flag: Option<&str>| {
        let out = tmp.path().join(dir);
        let mut c = bin();
        c.args(["simulate", "--out", out.to_str().unwrap(), "--config", conf.to_str().unwrap()]);
        if let Some(e) = env {
            c.env("SPOOFGUARD_SEED", e);
        }
        if let Some(f) = flag {
            c.args(["--seed", f]);
        }
        let o = c.output().unwrap();
        assert_eq!(code(&o), 0);
        let cfg = read_json(out.join("run_config.json"));
        assert_eq!(cfg["config"]["chunk_size"], 300);
        cfg["config"]["seed"].as_u64().unwrap()
    };
    assert_eq!(seed_of("a", None, None), 11);
    assert_eq!(seed_of("b", Some("5"), None), 5);
    assert_eq!(seed_of("c", Some("5"), Some("7")), 7);
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = tmp.path().join("run.conf");
    fs::write(&conf, "chunk_size=300\nchunks=2\n").unwrap();
    let out = tmp.path().join("d");
    let o = run(&[
        "simulate",
        "--config",
        conf.to_str().unwrap(),
        "--chunk-size",
        "200",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(read_json(out.join("run_config.json"))["config"]["chunk_size"], 200);
    fs::write(&conf, "no_such_key=1\n").unwrap();
    assert_eq!(code(&run(&["simulate", "--config", conf.to_str().unwrap(), "--out", out.to_str().unwrap()])), 2);
}

#[test]
fn train_then_detect() {
    let tmp = tempfile::tempdir().unwrap();
    let data = simulate(tmp.path(), "30");
    let sidecar = train(tmp.path(), &data);
    let side = read_json(&sidecar);
    assert_eq!(side["run_config"]["config"]["grid"], 16);
    assert_eq!(side["run_config"]["train_images"], 24);
    assert_eq!(side["run_config"]["holdout_images"], 6);

    let spoofed: Vec<String> = (0..5)
        .map(|k| data.join(format!("spoof_{k:05}.iq")).to_string_lossy().into_owned())
        .collect();
    let report = tmp.path().join("detect.json");
    let mut args = vec!["detect", "--model", sidecar.to_str().unwrap(), "--report", report.to_str().unwrap()];
    args.extend(spoofed.iter().map(String::as_str));
    let o = run(&args);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.ends_with("\tspoofed")).count(), 5);
    assert!(text.contains("5 chunks: 0 legitimate, 5 spoofed"));
    let r = read_json(&report);
    assert_eq!(r["chunks"].as_array().unwrap().len(), 5);
    assert_eq!(r["config"]["chunk_size"], 1000);
}

#[test]
fn detect_error_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let data = simulate(tmp.path(), "6");
    let sidecar = train(tmp.path(), &data);
    let side = sidecar.to_str().unwrap();
    let capture = data.join("legit_00000.iq");
    let cap = capture.to_str().unwrap();

    // chunk size that disagrees with the trained detector
    assert_eq!(code(&run(&["detect", "--model", side, "--chunk-size", "500", cap])), 4);

    // truncated capture
    let short = tmp.path().join("short.iq");
    fs::write(&short, &fs::read(&capture).unwrap()[..8 * 999 + 3]).unwrap();
    assert_eq!(code(&run(&["detect", "--model", side, short.to_str().unwrap()])), 3);

    // too few samples for one chunk
    fs::write(&short, &fs::read(&capture).unwrap()[..8 * 999]).unwrap();
    assert_eq!(code(&run(&["detect", "--model", side, short.to_str().unwrap()])), 3);

    // corrupted model file
    let model = sidecar.with_extension("aemd");
    let mut bytes = fs::read(&model).unwrap();
    bytes[200] ^= 0xff;
    fs::write(&model, bytes).unwrap();
    assert_eq!(code(&run(&["detect", "--model", side, cap])), 4);

    // missing model
    let missing = tmp.path().join("nope.json");
    assert_eq!(code(&run(&["detect", "--model", missing.to_str().unwrap(), cap])), 3);
}

#[test]
fn eval_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let data = simulate(tmp.path(), "12");
    let out = tmp.path().join("report");
    let o = run(&[
        "eval",
        "--data",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--k",
        "3",
        "--grid",
        "16",
        "--epochs",
        "30",
        "--timing-reps",
        "20",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(out.join("report.json"));
    assert_eq!(r["fold_aucs"].as_array().unwrap().len(), 3);
    assert_eq!(r["config"]["config"]["k"], 3);
    assert!(r["timing"]["model_bytes"].as_u64().unwrap() > 0);
    assert!(r["snr_overlap"]["inside_fraction"].as_f64().is_some());
    assert_eq!(fs::read_to_string(out.join("folds.csv")).unwrap().lines().count(), 4);
    assert!(stdout(&o).contains("ROC AUC quantiles"));
}

#[test]
fn export_images_writes_pgms() {
    let tmp = tempfile::tempdir().unwrap();
    let data = simulate(tmp.path(), "2");
    let out = tmp.path().join("img");
    let o = run(&["export-images", "--data", data.to_str().unwrap(), "--out", out.to_str().unwrap(), "--grid", "32"]);
    assert_eq!(code(&o), 0);
    let pgm = fs::read(out.join("legit_00001_0000.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n32 32\n255\n"));
    assert_eq!(pgm.len(), 13 + 32 * 32);
    assert_eq!(read_json(out.join("run_config.json"))["images"], 4);
}
