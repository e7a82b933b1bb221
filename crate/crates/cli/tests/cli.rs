use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_gossip-bandit");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn golden(name: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    fs::read_to_string(p).unwrap()
}

const TINY: &[&str] = &[
    "--agents", "3", "--arms", "4", "--delta", "0.2", "--preset", "custom", "--m", "2", "--l",
    "5", "--t0", "20", "--horizon", "60", "--runs", "2", "--seed", "7", "--regime", "gossip",
    "--regime", "nocomm", "--regime", "full",
];

#[test]
fn simulate_matches_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let mut args = vec!["simulate"];
    args.extend_from_slice(TINY);
    args.extend_from_slice(&["--out", out.to_str().unwrap()]);
    let res = run(&args);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    for name in ["summary.csv", "comms.csv", "good_events.csv", "instance.txt"] {
        let got = fs::read_to_string(out.join(name)).unwrap();
        assert_eq!(got, golden(name), "{name}");
    }
    let run0 = fs::read_to_string(out.join("runs/gossip_run000.csv")).unwrap();
    assert_eq!(run0, golden("gossip_run000.csv"));
    assert!(out.join("regret.svg").exists());
    assert!(out.join("effective_config.toml").exists());
}

#[test]
fn output_headers() {
    let s = golden("summary.csv");
    assert_eq!(s.lines().next(), Some("regime,checkpoint_epoch,mean,ci_half_width"));
    let r = golden("gossip_run000.csv");
    assert_eq!(r.lines().next(), Some("regime,run,checkpoint_epoch,agent,cum_regret"));
}

#[test]
fn effective_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a");
    let mut args = vec!["simulate"];
    args.extend_from_slice(TINY);
    args.extend_from_slice(&["--out", out.to_str().unwrap()]);
    assert!(run(&args).status.success());
    // rerunning from the echoed config reproduces the outputs
    let cfg = out.join("effective_config.toml");
    let out2 = dir.path().join("b");
    let res = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out2.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(
        fs::read(out.join("summary.csv")).unwrap(),
        fs::read(out2.join("summary.csv")).unwrap()
    );
}

#[test]
fn params_prints_practice_constants() {
    let res = run(&["params", "--agents", "20", "--arms", "50", "--epsilon", "0.2"]);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    assert!(text.contains("M = 9\n"));
    assert!(text.contains("L = 2537\n"));
    assert!(text.contains("T0 = 100590\n"));
}

#[test]
fn invalid_probability_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(run(&["bounds", "--p", "1.2", "--out", out]).status.code(), Some(2));
    assert_eq!(run(&["rumor", "--p", "1.2", "--out", out]).status.code(), Some(2));
}

#[test]
fn bad_flags_and_files_are_config_errors() {
    assert_eq!(run(&["simulate", "--regime", "bogus"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.txt");
    fs::write(&inst, "3 2 0.1\n0.5\n").unwrap();
    let res = run(&["params", "--instance", inst.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = blocker.join("sub");
    let mut args = vec!["simulate"];
    args.extend_from_slice(TINY);
    args.extend_from_slice(&["--out", out.to_str().unwrap()]);
    assert_eq!(run(&args).status.code(), Some(3));
}

#[test]
fn horizon_beyond_cap_is_refused() {
    let res = run(&[
        "simulate", "--preset", "custom", "--m", "2", "--l", "10", "--t0", "4", "--phase-cap",
        "1", "--horizon", "100", "--runs", "1", "--regime", "gossip",
    ]);
    assert_eq!(res.status.code(), Some(4));
}

#[test]
fn rumor_and_bounds_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = run(&["rumor", "--pop", "16", "--pop", "32", "--trials", "5", "--out", out]);
    assert!(res.status.success());
    let csv = fs::read_to_string(dir.path().join("rumor.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("n,p,variant,trial,S"));
    assert_eq!(csv.lines().count(), 11);

    let res = run(&["bounds", "--out", out]);
    assert!(res.status.success());
    let stdout = String::from_utf8(res.stdout).unwrap();
    for name in ["rumor_V", "rumor_eta", "rumor_D", "rumor_C", "ucb_regret", "gossip_regret_total"] {
        assert!(stdout.contains(name), "{name}");
    }
    assert!(dir.path().join("bounds.csv").exists());
}

#[test]
fn couple_check_writes_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = run(&[
        "couple-check", "--agents", "6", "--arms", "10", "--preset", "custom", "--m", "3", "--l",
        "30", "--t0", "100", "--runs", "4", "--out", out,
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = fs::read_to_string(dir.path().join("coupling.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with("run,seed,e1,e2,e3,in_sync,coupled,"));
}
