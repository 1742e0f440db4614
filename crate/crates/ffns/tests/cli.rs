//! Command-line behaviour: subcommands, flag and environment overrides,
//! exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
[scenario]
name = "small"
dimension = 2

[grid]
half_width = 16.0
points = 64

[time]
horizon = 1.0
slices_per_unit = 16

[force]
kind = "gaussian"
width = 1.2
amplitude = [2.9e-4, 0.0]

[checks]
run = ["kernel", "mild"]
refine = false
"#;

fn ffns(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ffns"));
    c.args(args);
    for k in ["FFNS_CONFIG", "FFNS_OUT", "FFNS_THREADS", "FFNS_ONLY"] {
        c.env_remove(k);
    }
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn staged_subcommands_match_all() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let staged = dir.path().join("staged");
    let whole = dir.path().join("whole");
    let s = staged.to_str().unwrap();
    for sub in ["kernel-check", "simulate", "verify", "report"] {
        let o = ffns(&[sub, "--config", &cfg, "--out", s], &[]);
        assert_eq!(code(&o), 0, "{sub}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = ffns(
        &["all", "--config", &cfg, "--out", whole.to_str().unwrap()],
        &[],
    );
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("mild"));
    let summary = |d: &Path| {
        let p = fs::read_dir(d)
            .unwrap()
            .map(|e| e.unwrap().path())
            .find(|p| p.to_string_lossy().ends_with("_summary.json"))
            .expect("summary written");
        fs::read(p).unwrap()
    };
    assert_eq!(summary(&staged), summary(&whole));
    assert!(staged.join("trajectory/manifest.txt").exists());
}

#[test]
fn environment_supplies_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let out = dir.path().join("env-out");
    let o = ffns(
        &["kernel-check"],
        &[
            ("FFNS_CONFIG", &cfg),
            ("FFNS_OUT", out.to_str().unwrap()),
            ("FFNS_THREADS", "1"),
            ("FFNS_ONLY", "kernel"),
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let files: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(files.iter().any(|f| f.ends_with("_kernel.json")));
    assert!(!files.iter().any(|f| f.ends_with("_mild.json")));
}

#[test]
fn flag_overrides_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let o = ffns(
        &[
            "kernel-check",
            "--config",
            &cfg,
            "--only",
            "kernel",
            "--out",
            dir.path().join("flag").to_str().unwrap(),
        ],
        &[
            ("FFNS_CONFIG", "/nonexistent.toml"),
            ("FFNS_OUT", dir.path().join("env").to_str().unwrap()),
        ],
    );
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("flag").exists());
    assert!(!dir.path().join("env").exists());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad_syntax = write(dir.path(), "a.toml", "[scenario\nname = 1\n");
    let o = ffns(&["all", "--config", &bad_syntax], &[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));

    let unknown = write(
        dir.path(),
        "b.toml",
        &SMALL.replace("points = 64", "points = 64\nspacing = 2"),
    );
    assert_eq!(code(&ffns(&["all", "--config", &unknown], &[])), 2);

    let truncated = write(
        dir.path(),
        "c.toml",
        &SMALL.replace("horizon = 1.0", "horizon = 9.0"),
    );
    assert_eq!(code(&ffns(&["all", "--config", &truncated], &[])), 2);

    let cfg = write(dir.path(), "d.toml", SMALL);
    assert_eq!(
        code(&ffns(&["all", "--config", &cfg, "--only", "nonsense"], &[])),
        2
    );
    assert_eq!(code(&ffns(&["all"], &[])), 2);
}

#[test]
fn admission_violation_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "big.toml", &SMALL.replace("2.9e-4", "0.5"));
    let o = ffns(
        &[
            "simulate",
            "--config",
            &cfg,
            "--out",
            dir.path().join("o").to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unconverged_solve_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("[checks]", "[solver]\nmax_sweeps = 1\n\n[checks]");
    let cfg = write(dir.path(), "one.toml", &text);
    let o = ffns(
        &[
            "all",
            "--config",
            &cfg,
            "--out",
            dir.path().join("o").to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(code(&o), 3, "{}", stdout(&o));
    assert!(stdout(&o).contains("did not reach tol"));
}

#[test]
fn failed_verdict_exits_1() {
    // a zero field has no logarithmic divergence to find
    let text = SMALL
        .replace(
            "kind = \"gaussian\"\nwidth = 1.2\namplitude = [2.9e-4, 0.0]",
            "kind = \"zero\"",
        )
        .replace("run = [\"kernel\", \"mild\"]", "run = [\"divergence\"]");
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "z.toml", &text);
    let out = dir.path().join("o");
    let o = ffns(
        &["all", "--config", &cfg, "--out", out.to_str().unwrap()],
        &[],
    );
    assert_eq!(
        code(&o),
        1,
        "{}{}",
        stdout(&o),
        String::from_utf8_lossy(&o.stderr)
    );
    // report rereads the stored record, NaN metrics included
    assert_eq!(
        code(&ffns(
            &["report", "--config", &cfg, "--out", out.to_str().unwrap()],
            &[]
        )),
        1
    );
}

#[test]
fn verify_without_trajectory_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let o = ffns(
        &[
            "verify",
            "--config",
            &cfg,
            "--out",
            dir.path().join("empty").to_str().unwrap(),
        ],
        &[],
    );
    assert_ne!(code(&o), 0);
}
