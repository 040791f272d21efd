use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hetnet_lb::fixtures;
use hetnet_lb::output::{SAMPLES_HEADER, SUMMARY_HEADER, SWEEP_HEADER};
use hetnet_lb::scenario::ScenarioConfig;

fn hetnet(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hetnet-lb"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("HETNET_LB_WORKERS")
        .output()
        .unwrap()
}

fn small_config(dir: &Path) -> String {
    let mut s = ScenarioConfig::reference();
    s.region_side_km = 3.0;
    let path = dir.join("small.cfg");
    fs::write(&path, s.to_config_string()).unwrap();
    path.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let args = [
        "run",
        "--config",
        &cfg,
        "--seed",
        "7",
        "--realizations",
        "3",
        "--policy",
        "max-power,load-aware",
    ];
    let (a, b, c) = (
        dir.path().join("a"),
        dir.path().join("b"),
        dir.path().join("c"),
    );
    assert!(hetnet(&args, &a).status.success());
    assert!(hetnet(&args, &b).status.success());
    let mut serial = args.to_vec();
    serial.extend(["--workers", "1"]);
    assert!(hetnet(&serial, &c).status.success());

    let samples = fs::read(a.join("samples.csv")).unwrap();
    assert_eq!(samples, fs::read(b.join("samples.csv")).unwrap());
    assert_eq!(samples, fs::read(c.join("samples.csv")).unwrap());
    let text = String::from_utf8(samples).unwrap();
    assert_eq!(text.lines().next(), Some(SAMPLES_HEADER));
    assert!(text.lines().skip(1).all(|l| l.split(',').count() == 7));
    let summary = fs::read_to_string(a.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().next(), Some(SUMMARY_HEADER));
    assert_eq!(summary.lines().count(), 1 + 2 * 3);
}

#[test]
fn seed_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let run = |seed: &str, sub: &str| {
        let out = dir.path().join(sub);
        assert!(hetnet(
            &[
                "run",
                "--config",
                &cfg,
                "--seed",
                seed,
                "--realizations",
                "1"
            ],
            &out
        )
        .status
        .success());
        fs::read(out.join("samples.csv")).unwrap()
    };
    assert_ne!(run("1", "s1"), run("2", "s2"));
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = hetnet(&["preset", "fig9"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown preset"));

    let bad = dir.path().join("bad.cfg");
    let text = ScenarioConfig::reference()
        .to_config_string()
        .replace("[users]\ndensity", "[users]\ndensty");
    fs::write(&bad, text).unwrap();
    let o = hetnet(&["run", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("users.densty"), "{}", stderr(&o));

    let o = hetnet(&["sweep-bias", "--objective", "pct7"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let empty = fixtures::default_dir().join(fixtures::EMPTY_TIER);
    let o = hetnet(
        &[
            "run",
            "--config",
            empty.to_str().unwrap(),
            "--realizations",
            "1",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn workers_env_is_a_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("env");
    let o = Command::new(env!("CARGO_BIN_EXE_hetnet-lb"))
        .args(["run", "--config", &cfg, "--realizations", "2", "--out"])
        .arg(&out)
        .env("HETNET_LB_WORKERS", "2")
        .output()
        .unwrap();
    assert!(o.status.success());
    let plain = dir.path().join("plain");
    assert!(
        hetnet(&["run", "--config", &cfg, "--realizations", "2"], &plain)
            .status
            .success()
    );
    assert_eq!(
        fs::read(out.join("samples.csv")).unwrap(),
        fs::read(plain.join("samples.csv")).unwrap()
    );
}

#[test]
fn zero_eta_blanking_sweep_matches_bias_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let common = [
        "--config",
        &cfg,
        "--realizations",
        "2",
        "--biases",
        "0:20:4",
    ];
    let bias = dir.path().join("bias");
    let blank = dir.path().join("blank");
    let mut a = vec!["sweep-bias"];
    a.extend(common);
    let mut b = vec![
        "sweep-blanking",
        "--etas",
        "0",
        "--variant",
        "all-subframes",
    ];
    b.extend(common);
    assert!(hetnet(&a, &bias).status.success());
    let o = hetnet(&b, &blank);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("sweep-blanking: max pct50"));
    let sweep = fs::read_to_string(bias.join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().next(), Some(SWEEP_HEADER));
    assert_eq!(sweep.lines().count(), 7);
    assert_eq!(sweep, fs::read_to_string(blank.join("sweep.csv")).unwrap());
}

#[test]
fn table1_preset_has_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = hetnet(
        &["preset", "table1", "--seed", "7", "--realizations", "1"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 3);
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let rows: Vec<Vec<&str>> = summary
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    let experiments: Vec<&str> = rows.iter().map(|r| r[0]).collect();
    assert_eq!(experiments, ["in-band", "in-band+blank", "out-of-band"]);
    assert!(rows.iter().all(|r| r[6] == "true"));
    for r in &rows {
        let bias: f64 = r[2].parse().unwrap();
        assert!((0.0..=30.0).contains(&bias));
    }
}
