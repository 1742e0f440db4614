//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs the canonical, control and dipole scenarios from `configs/` into a
//! temporary directory, plus the synthetic oracles.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use ffns::checks::norms::{divergence_check, sweep_check, DivergenceParams, NormPair, SweepParams};
use ffns::checks::{log_space, CheckResult, Status};
use ffns::config::load_config;
use ffns::io::{decode_snapshot, encode_snapshot, read_snapshot, Endian};
use ffns::probe::SyntheticProbe;
use ffns::runner::{Runner, Summary, TIMING_FILE, TRAJECTORY_DIR};
use ffns::solver::Trajectory;
use ffns_core::grid::BoxGrid;
use ffns_core::Dim;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(format!("{name}.toml"))
}

struct Run {
    summary: Summary,
    seconds: BTreeMap<String, f64>,
    out: PathBuf,
}

impl Run {
    fn check(&self, name: &str) -> Option<&CheckResult> {
        self.summary.checks.iter().find(|c| c.name == name)
    }
}

fn run_scenario(name: &str, out: &Path) -> anyhow::Result<Run> {
    let cfg = load_config(&config_path(name))?;
    let mut runner = Runner::new(cfg, out.to_path_buf(), None)?;
    let summary = runner.all()?;
    let seconds = runner.timing.seconds.iter().cloned().collect();
    Ok(Run {
        summary,
        seconds,
        out: out.to_path_buf(),
    })
}

fn describe(r: Option<&CheckResult>) -> String {
    let Some(r) = r else {
        return "missing".into();
    };
    let mut s = r.status.label().to_string();
    if let Some(e) = &r.error {
        s += &format!(" ({})", e.message);
    }
    for f in &r.fits {
        s += &format!("; {} {:.4} vs {:.4}", f.quantity, f.fitted, f.predicted);
    }
    for n in r.notes.iter().filter(|n| n.starts_with("failed")) {
        s += &format!("; {n}");
    }
    s
}

fn passed(r: Option<&CheckResult>) -> bool {
    r.is_some_and(|r| r.status == Status::Pass)
}

fn single(
    run: &anyhow::Result<Run>,
    name: &str,
    extra: impl FnOnce(&Run) -> (bool, String),
) -> Outcome {
    match run {
        Ok(run) => {
            let (ok, more) = extra(run);
            let c = run.check(name);
            Outcome::new(passed(c) && ok, format!("{name}: {}{more}", describe(c)))
        }
        Err(e) => Outcome::new(false, format!("scenario failed: {e:#}")),
    }
}

fn runtime_under(run: &Run, name: &str, limit: f64) -> (bool, String) {
    let s = run.seconds.get(name).copied().unwrap_or(f64::INFINITY);
    (s < limit, format!("; {s:.1} s (limit {limit} s)"))
}

fn scaling_oracle() -> CheckResult {
    let probe = SyntheticProbe::new(
        Dim::Two,
        |x, t| {
            let xi2 = (x[0] * x[0] + x[1] * x[1]) / t;
            [1.0 / (t * (1.0 + xi2)), 0.0, 0.0]
        },
        |t| BoxGrid::new(Dim::Two, 16.0 * t.sqrt(), 256).ok(),
    );
    let p = SweepParams {
        pairs: vec![
            NormPair::new(0.0, f64::INFINITY),
            NormPair::new(1.0, f64::INFINITY),
            NormPair::new(0.0, 2.0),
        ],
        times: log_space(1e4, 1e6, 5),
        tail_directions: 8,
        tol: 0.02,
        span_decade: true,
    };
    sweep_check(&probe, &p)
}

fn fast_tail_control() -> CheckResult {
    let probe = SyntheticProbe::steady(
        Dim::Two,
        |x| {
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            [r.powi(-3), 0.0, 0.0]
        },
        None,
    );
    let p = DivergenceParams {
        pair: NormPair::new(0.0, 1.0),
        t: 1.0,
        radii: vec![32.0, 64.0, 128.0, 256.0, 512.0],
        directions: 16,
        nodes: 4,
    };
    divergence_check(&probe, &p)
}

/// Every file under `dir`, relative path to bytes, skipping the timing record.
fn tree(dir: &Path) -> anyhow::Result<BTreeMap<PathBuf, Vec<u8>>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d)? {
            let p = entry?.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().is_some_and(|n| n != TIMING_FILE) {
                files.insert(p.strip_prefix(dir)?.to_path_buf(), fs::read(&p)?);
            }
        }
    }
    Ok(files)
}

fn compare_trees(a: &Path, b: &Path) -> anyhow::Result<(usize, Vec<PathBuf>)> {
    let (ta, tb) = (tree(a)?, tree(b)?);
    let mut differing: Vec<PathBuf> = ta
        .iter()
        .filter(|(k, v)| tb.get(*k) != Some(*v))
        .map(|(k, _)| k.clone())
        .collect();
    differing.extend(tb.keys().filter(|k| !ta.contains_key(*k)).cloned());
    Ok((ta.len(), differing))
}

fn bits_equal(a: &[Vec<f64>], b: &[Vec<f64>]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            x.len() == y.len() && x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits())
        })
}

fn snapshot_roundtrip(traj_dir: &Path, traj: &Trajectory) -> anyhow::Result<(bool, String)> {
    let mut ok = true;
    for (m, (snap, &t)) in traj.snapshots.iter().zip(&traj.times).enumerate() {
        let path = traj_dir.join(format!("slice_{m:05}.snap"));
        let back = read_snapshot(&path)?;
        ok &= back.time.to_bits() == t.to_bits()
            && bits_equal(back.field.components(), snap.components());
        ok &= fs::read(&path)? == encode_snapshot(snap, t, Endian::Little)
            || fs::read(&path)? == encode_snapshot(snap, t, Endian::Big);
        if m == 0 {
            for e in [Endian::Little, Endian::Big] {
                let d = decode_snapshot(&path, &encode_snapshot(snap, t, e))?;
                ok &= bits_equal(d.field.components(), snap.components());
            }
        }
    }
    Ok((
        ok,
        format!(
            "{} snapshots bitwise equal after write/read",
            traj.snapshots.len()
        ),
    ))
}

fn determinism(canonical: &anyhow::Result<Run>, scratch: &Path) -> anyhow::Result<Outcome> {
    let first = scratch.join("dipole-a");
    let second = scratch.join("dipole-b");
    run_scenario("dipole", &first)?;
    run_scenario("dipole", &second)?;
    let (n, diff) = compare_trees(&first, &second)?;
    let mut ok = diff.is_empty() && n > 0;
    let mut detail = format!("dipole rerun: {n} files, {} differ", diff.len());

    let Ok(canon) = canonical else {
        return Ok(Outcome::new(
            false,
            format!("{detail}; canonical run unavailable"),
        ));
    };
    let cfg = load_config(&config_path("canonical"))?;
    let mut runner = Runner::new(cfg, scratch.join("canonical-b"), None)?;
    let traj = runner.simulate()?;
    let (n, diff) = compare_trees(
        &canon.out.join(TRAJECTORY_DIR),
        &scratch.join("canonical-b").join(TRAJECTORY_DIR),
    )?;
    ok &= diff.is_empty() && n > 0;
    detail += &format!(
        "; canonical re-solve: {n} trajectory files, {} differ",
        diff.len()
    );

    let (rt, more) = snapshot_roundtrip(&canon.out.join(TRAJECTORY_DIR), &traj)?;
    ok &= rt;
    detail += &format!("; {more}: {rt}");
    Ok(Outcome::new(ok, detail))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let scratch = tempfile::tempdir().expect("temporary directory");
    let canonical = run_scenario("canonical", &scratch.path().join("canonical"));
    let control = run_scenario("control", &scratch.path().join("control"));
    let dipole = run_scenario("dipole", &scratch.path().join("dipole"));

    let mut lines: Vec<(&str, Outcome)> = Vec::new();
    lines.push((
        "kernel exactness",
        single(&canonical, "kernel", |r| runtime_under(r, "kernel", 30.0)),
    ));
    lines.push((
        "decomposition",
        single(&canonical, "decomposition", |_| (true, String::new())),
    ));
    lines.push((
        "logarithmic kernel bound",
        single(&canonical, "log-bound", |_| (true, String::new())),
    ));
    lines.push((
        "mild solver contract",
        single(&canonical, "mild", |_| (true, String::new())),
    ));
    lines.push((
        "leading profile",
        single(&canonical, "profile", |r| {
            runtime_under(r, "profile", 600.0)
        }),
    ));
    lines.push((
        "two-sided window",
        single(&canonical, "window", |_| match &control {
            Ok(c) => (
                passed(c.check("free-decay")),
                format!("; control {}", describe(c.check("free-decay"))),
            ),
            Err(e) => (false, format!("; control failed: {e:#}")),
        }),
    ));
    lines.push((
        "weighted norm exponents",
        single(&canonical, "sweep", |_| {
            let o = scaling_oracle();
            let fitted: Vec<String> = o
                .fits
                .iter()
                .map(|f| format!("{:.4}/{:.4}", f.fitted, f.predicted))
                .collect();
            (
                o.status == Status::Pass,
                format!(
                    "; synthetic oracle {} [{}]",
                    o.status.label(),
                    fitted.join(", ")
                ),
            )
        }),
    ));
    lines.push((
        "weighted norm divergence",
        single(&canonical, "divergence", |r| {
            let verdict = r
                .check("divergence")
                .and_then(|c| c.labels.get("verdict"))
                .cloned()
                .unwrap_or_default();
            let c = fast_tail_control();
            let tail = c.labels.get("verdict").cloned().unwrap_or_default();
            (
                tail == "convergent",
                format!("; canonical verdict {verdict}; r^-3 tail verdict {tail}"),
            )
        }),
    ));
    lines.push((
        "next-order term",
        single(&dipole, "next-order", |_| (true, String::new())),
    ));
    lines.push((
        "determinism and formats",
        determinism(&canonical, scratch.path())
            .unwrap_or_else(|e| Outcome::new(false, format!("error: {e:#}"))),
    ));

    let mut failures = 0;
    for (i, (name, o)) in lines.iter().enumerate() {
        let mark = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {:<26} {mark}  {}", i + 1, name, o.detail);
        failures += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} of {} criteria pass ({:.0} s)",
        lines.len() - failures,
        lines.len(),
        start.elapsed().as_secs_f64()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
