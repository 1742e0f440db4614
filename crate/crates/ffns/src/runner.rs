//! Scenario orchestration behind the CLI subcommands.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ffns_core::forcing::ForceModel;
use ffns_core::initial::InitialData;
use serde::{Deserialize, Serialize};

use crate::checks::kernel::{decomposition_check, kernel_check, log_bound};
use crate::checks::mild::{mild_check, scale_inputs, MildInputs, Solved, Variant};
use crate::checks::norms::{divergence_check, sweep_check, DivergenceParams, SweepParams};
use crate::checks::pointwise::{
    free_decay_check, next_order_check, profile_check, window_check, RadialSample, WindowParams,
};
use crate::checks::{CheckResult, Status};
use crate::config::ScenarioConfig;
use crate::error::{FfnsError, Result, EXIT_CHECK_FAILURE, EXIT_PASS};
use crate::farfield::FarField;
use crate::io;
use crate::probe::SolutionProbe;
use crate::solver::{picard_solve, Duhamel, Trajectory};

pub const TRAJECTORY_DIR: &str = "trajectory";
pub const TIMING_FILE: &str = "timing.json";

/// Checks that need no trajectory.
pub const KERNEL_CHECKS: [&str; 3] = ["kernel", "decomposition", "log-bound"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: String,
    pub scenario_hash: String,
    pub verdict: String,
    pub exit_code: i32,
    pub checks: Vec<CheckResult>,
}

/// Wall-clock times, written apart from the hashed outputs.
#[derive(Debug, Default, Clone, Serialize)]
pub struct Timing {
    pub seconds: Vec<(String, f64)>,
}

/// Overall exit status: the largest error code, else 1 on any failure.
pub fn exit_code(results: &[CheckResult]) -> i32 {
    let err = results
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| e.exit_code))
        .max();
    match err {
        Some(c) => c,
        None if results.iter().any(|r| r.status == Status::Fail) => EXIT_CHECK_FAILURE,
        None => EXIT_PASS,
    }
}

pub struct Runner {
    pub cfg: ScenarioConfig,
    pub out: PathBuf,
    /// Restricts the configured checks.
    pub only: Option<Vec<String>>,
    pub timing: Timing,
}

impl Runner {
    pub fn new(cfg: ScenarioConfig, out: PathBuf, only: Option<Vec<String>>) -> Result<Self> {
        if let Some(list) = &only {
            let bad: Vec<String> = list
                .iter()
                .filter(|n| !crate::config::CHECK_NAMES.contains(&n.as_str()))
                .map(|n| format!("--only: unknown check {n:?}"))
                .collect();
            if !bad.is_empty() {
                return Err(FfnsError::ConfigInvalid(bad));
            }
        }
        Ok(Runner {
            cfg,
            out,
            only,
            timing: Timing::default(),
        })
    }

    /// Configured checks, narrowed by `--only`.
    pub fn selected(&self) -> Vec<&'static str> {
        self.cfg
            .checks()
            .into_iter()
            .filter(|n| self.only.as_ref().is_none_or(|o| o.iter().any(|x| x == n)))
            .collect()
    }

    fn clock<T>(&mut self, what: &str, f: impl FnOnce(&mut Self) -> T) -> T {
        let start = Instant::now();
        let v = f(self);
        self.timing
            .seconds
            .push((what.into(), start.elapsed().as_secs_f64()));
        v
    }

    fn ensure_out(&self) -> Result<()> {
        fs::create_dir_all(&self.out).map_err(|e| FfnsError::io(&self.out, e))
    }

    fn inputs(&self) -> Result<(InitialData, ForceModel)> {
        Ok((self.cfg.initial_data(&self.cfg.grid())?, self.cfg.force()?))
    }

    pub fn kernel_checks(&mut self) -> Result<Vec<CheckResult>> {
        let dim = self.cfg.dim();
        let seed = self.cfg.raw.scenario.seed;
        let mut out = Vec::new();
        for name in self.selected() {
            let r = match name {
                "kernel" => self.clock(name, |_| kernel_check(dim, seed)),
                "decomposition" => self.clock(name, |_| decomposition_check(dim, seed)),
                "log-bound" => self.clock(name, |_| log_bound(dim)),
                _ => continue,
            };
            self.persist(&r)?;
            out.push(r);
        }
        Ok(out)
    }

    fn solve_inputs(
        &self,
        a: &InitialData,
        f: &ForceModel,
        grid_points: usize,
        spu: usize,
    ) -> Result<Trajectory> {
        let mut settings = self.cfg.settings();
        settings.slices_per_unit = spu;
        let grid = ffns_core::grid::BoxGrid::new(
            self.cfg.dim(),
            self.cfg.raw.grid.half_width,
            grid_points,
        )?;
        let duh = Duhamel::new(grid, settings.horizon, spu)?;
        // the finer grids resample the datum
        let a = if grid_points == self.cfg.raw.grid.points {
            a.clone()
        } else {
            self.cfg.initial_data(&grid)?
        };
        picard_solve(&duh, &a, f, &settings, &self.cfg.hash)
    }

    /// Solves the scenario and stores the trajectory.
    pub fn simulate(&mut self) -> Result<Trajectory> {
        self.ensure_out()?;
        let (a, f) = self.inputs()?;
        let (n, spu) = (self.cfg.raw.grid.points, self.cfg.raw.time.slices_per_unit);
        let traj = self.clock("simulate", |s| s.solve_inputs(&a, &f, n, spu))?;
        io::write_trajectory(&self.out.join(TRAJECTORY_DIR), &traj)?;
        Ok(traj)
    }

    /// Reloads the stored trajectory, refusing one from another scenario.
    pub fn load_trajectory(&self) -> Result<Trajectory> {
        let traj = io::read_trajectory(&self.out.join(TRAJECTORY_DIR))?;
        if traj.scenario_hash != self.cfg.hash {
            return Err(FfnsError::State(format!(
                "stored trajectory belongs to scenario {}, config hashes to {}",
                io::hash_prefix(&traj.scenario_hash),
                io::hash_prefix(&self.cfg.hash)
            )));
        }
        Ok(traj)
    }

    fn variant(&self, v: Variant, a: &InitialData, f: &ForceModel) -> Result<Solved> {
        let (n, spu) = (self.cfg.raw.grid.points, self.cfg.raw.time.slices_per_unit);
        let panels = self.cfg.raw.solver.panels;
        match v {
            Variant::Scaled(s) => {
                let (a, f) = scale_inputs(a, f, s)?;
                let traj = self.solve_inputs(&a, &f, n, spu)?;
                Ok(Solved { traj, a, f, panels })
            }
            Variant::FinerGrid => {
                let traj = self.solve_inputs(a, f, 2 * n, spu)?;
                let grid = traj.grid;
                let a = self.cfg.initial_data(&grid)?;
                Ok(Solved {
                    traj,
                    a,
                    f: f.clone(),
                    panels,
                })
            }
            Variant::FinerTime => {
                let traj = self.solve_inputs(a, f, n, 2 * spu)?;
                Ok(Solved {
                    traj,
                    a: a.clone(),
                    f: f.clone(),
                    panels: 2 * panels,
                })
            }
        }
    }

    /// Runs every selected trajectory check.
    pub fn verify(&mut self, traj: &Trajectory) -> Result<Vec<CheckResult>> {
        self.ensure_out()?;
        let (a, f) = self.inputs()?;
        let k = self.cfg.raw.checks.clone();
        let panels = self.cfg.raw.solver.panels;
        let far = FarField::new(traj, &a, &f)?.with_panels(panels);
        let probe = SolutionProbe::new(traj, far);
        let profile_sample = RadialSample {
            t: k.profile_time,
            r_min: k.profile_radii[0],
            r_max: k.profile_radii[1],
            radii: k.profile_count,
            directions: k.directions,
        };
        let mut out = Vec::new();
        for name in self.selected() {
            let r = match name {
                "mild" => self.clock(name, |s| {
                    let solve = |v: Variant| s.variant(v, &a, &f);
                    mild_check(&MildInputs {
                        traj,
                        a: &a,
                        f: &f,
                        tol: s.cfg.raw.solver.tol,
                        refine: k.refine,
                        panels: s.cfg.raw.solver.panels,
                        solve: &solve,
                    })
                }),
                "profile" => self.clock(name, |_| profile_check(&probe, &a, &f, &profile_sample)),
                "window" => self.clock(name, |_| {
                    window_check(
                        &probe,
                        &f,
                        &WindowParams {
                            sample: RadialSample {
                                r_min: k.window_radii[0],
                                r_max: k.window_radii[1],
                                radii: k.window_count,
                                ..profile_sample.clone()
                            },
                            short_time: k.short_time,
                            short_time_directions: k.short_time_directions,
                        },
                    )
                }),
                "free-decay" => self.clock(name, |_| free_decay_check(&probe, &f, &profile_sample)),
                "next-order" => self.clock(name, |_| next_order_check(&probe, &f, &profile_sample)),
                "sweep" => self.clock(name, |s| {
                    sweep_check(
                        &probe,
                        &SweepParams {
                            pairs: s.cfg.decay_pairs(),
                            times: s.cfg.sweep_times(),
                            tail_directions: k.tail_directions,
                            tol: k.sweep_tol,
                            span_decade: false,
                        },
                    )
                }),
                "divergence" => self.clock(name, |s| {
                    let t = k.divergence_time.unwrap_or(s.cfg.raw.time.horizon);
                    let parts: Vec<(String, CheckResult)> = s
                        .cfg
                        .divergence_pairs()
                        .into_iter()
                        .map(|pair| {
                            let p = DivergenceParams {
                                pair,
                                t,
                                radii: k.divergence_radii.clone(),
                                directions: k.divergence_directions,
                                nodes: k.divergence_nodes,
                            };
                            (pair.label(), divergence_check(&probe, &p))
                        })
                        .collect();
                    merge("divergence", parts)
                }),
                _ => continue,
            };
            self.persist(&r)?;
            out.push(r);
        }
        Ok(out)
    }

    fn check_path(&self, name: &str) -> PathBuf {
        self.out
            .join(format!("{}_{name}.json", io::hash_prefix(&self.cfg.hash)))
    }

    /// Writes a check's JSON record and CSV tables.
    pub fn persist(&self, r: &CheckResult) -> Result<()> {
        self.ensure_out()?;
        io::write_json(&self.check_path(&r.name), r)?;
        io::write_check_tables(&self.out, &self.cfg.hash, r)?;
        Ok(())
    }

    /// Collects the stored check records into the summary.
    pub fn report(&mut self) -> Result<Summary> {
        self.ensure_out()?;
        let mut checks = Vec::new();
        for name in self.selected() {
            let path = self.check_path(name);
            if !path.exists() {
                let e = FfnsError::State(format!(
                    "no stored result for check {name}; run verify first"
                ));
                checks.push(CheckResult::from_error(name, &e));
                continue;
            }
            let text = fs::read_to_string(&path).map_err(|e| FfnsError::io(&path, e))?;
            let r: CheckResult = serde_json::from_str(&text).map_err(|e| FfnsError::Format {
                path: path.clone(),
                message: e.to_string(),
            })?;
            checks.push(r);
        }
        let code = exit_code(&checks);
        let summary = Summary {
            scenario: self.cfg.raw.scenario.name.clone(),
            scenario_hash: self.cfg.hash.clone(),
            verdict: match code {
                0 => "pass",
                1 => "fail",
                _ => "error",
            }
            .into(),
            exit_code: code,
            checks,
        };
        io::write_json(&self.out.join(io::summary_name(&self.cfg.hash)), &summary)?;
        io::write_json(&self.out.join(TIMING_FILE), &self.timing)?;
        Ok(summary)
    }

    /// Kernel checks, solve, verification and report.
    pub fn all(&mut self) -> Result<Summary> {
        self.kernel_checks()?;
        let needs_traj = self.selected().iter().any(|n| !KERNEL_CHECKS.contains(n));
        if needs_traj {
            match self.simulate() {
                Ok(traj) => {
                    self.verify(&traj)?;
                }
                Err(e) => {
                    // the solve failure is recorded against every dependent check
                    for name in self.selected() {
                        if !KERNEL_CHECKS.contains(&name) {
                            self.persist(&CheckResult::from_error(name, &e))?;
                        }
                    }
                }
            }
        }
        self.report()
    }
}

/// Combines per-pair results into one check; metrics, labels and tables
/// are prefixed with the part key.
pub fn merge(name: &str, parts: Vec<(String, CheckResult)>) -> CheckResult {
    let mut r = CheckResult::new(name);
    let mut worst_error: Option<crate::checks::ErrorInfo> = None;
    let mut any_fail = false;
    let single = parts.len() == 1;
    for (key, p) in parts {
        let pre = |s: &str| {
            if single {
                s.to_string()
            } else if s.is_empty() {
                key.clone()
            } else {
                format!("{key}.{s}")
            }
        };
        for (k, v) in p.metrics {
            r.metrics.insert(pre(&k), v);
        }
        for (k, v) in p.labels {
            r.labels.insert(pre(&k), v);
        }
        for n in p.notes {
            r.notes.push(if single { n } else { format!("{key}: {n}") });
        }
        r.fits.extend(p.fits);
        for mut t in p.tables {
            t.suffix = pre(&t.suffix);
            r.tables.push(t);
        }
        match p.status {
            Status::Error => {
                if worst_error
                    .as_ref()
                    .is_none_or(|e| p.error.as_ref().is_some_and(|n| n.exit_code > e.exit_code))
                {
                    worst_error = p.error;
                }
            }
            Status::Fail => any_fail = true,
            _ => {}
        }
    }
    if let Some(e) = worst_error {
        r.status = Status::Error;
        r.error = Some(e);
        return r;
    }
    r.require(!any_fail, "every pair meets its verdict");
    r.finish()
}

/// The output directory: flag, then config, then `out/<name>`.
pub fn resolve_out(flag: Option<&Path>, cfg: &ScenarioConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.output_dir())
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.raw.scenario.name))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::FfnsError;

    #[test]
    fn exit_code_prefers_errors_then_failures() {
        let pass = CheckResult::new("a").finish();
        let mut fail = CheckResult::new("b");
        fail.require(false, "x");
        let fail = fail.finish();
        let err = CheckResult::from_error("c", &FfnsError::State("s".into()));
        let mut declined = CheckResult::new("d");
        declined.decline("degenerate");
        assert_eq!(exit_code(&[pass.clone(), declined.clone()]), 0);
        assert_eq!(exit_code(&[pass.clone(), fail.clone()]), 1);
        assert_eq!(exit_code(&[fail, err, pass]), 3);
    }

    #[test]
    fn merge_prefixes_multiple_parts() {
        let mut a = CheckResult::new("x");
        a.metric("m", 1.0);
        let mut b = CheckResult::new("x");
        b.metric("m", 2.0);
        b.require(false, "no");
        let r = merge(
            "x",
            vec![("p1".into(), a.finish()), ("p2".into(), b.finish())],
        );
        assert_eq!(r.metrics["p1.m"], 1.0);
        assert_eq!(r.metrics["p2.m"], 2.0);
        assert_eq!(r.status, Status::Fail);
    }
}
