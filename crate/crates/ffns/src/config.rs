//! Scenario configuration: a flat, sectioned key-value file (TOML syntax,
//! one level of `[section]` headers, no nesting).
//!
//! ```toml
//! [scenario]
//! name = "canonical"
//! dimension = 2
//! seed = 7
//!
//! [grid]
//! half_width = 32.0
//! points = 256
//!
//! [time]
//! horizon = 2.0
//! slices_per_unit = 64
//!
//! [initial]
//! kind = "zero"            # zero | curl | bump
//!
//! [force]
//! kind = "gaussian"        # zero | gaussian | dipole | sampled
//! width = 1.2
//! amplitude = [2.9e-4, 0.0]
//! profile = "ramp"         # indicator | ramp | bump
//! window = [0.0, 1.0]
//!
//! [solver]
//! tol = 1e-10
//! max_sweeps = 20
//!
//! [checks]
//! run = ["kernel", "profile", "window"]
//! decay_pairs = [[0, "inf"], [1, "inf"], [0, 2]]
//! divergence_pairs = [[0, 1]]
//!
//! [output]
//! dir = "out/canonical"
//! threads = 1
//! ```
//!
//! Every key not given takes the default documented on its field. The
//! scenario hash is the SHA-256 of the normalized configuration without the
//! `[output]` section.

use std::path::{Path, PathBuf};

use ffns_core::forcing::{ForceModel, SampledForce, SpatialProfile, TemporalKind, TemporalProfile};
use ffns_core::grid::{BoxGrid, VectorFieldGrid};
use ffns_core::initial::{CurlBump, InitialData};
use ffns_core::{Dim, Vector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::checks::norms::NormPair;
use crate::error::{FfnsError, Result};
use crate::solver::{SolverSettings, DIVERGENCE_TOL};
use crate::spectral::{leray_project, verify_divergence_free, Transform};

/// Names accepted in `checks.run` and `--only`, in execution order.
pub const CHECK_NAMES: [&str; 10] = [
    "kernel",
    "decomposition",
    "log-bound",
    "mild",
    "profile",
    "window",
    "free-decay",
    "next-order",
    "sweep",
    "divergence",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub scenario: ScenarioSection,
    pub grid: GridSection,
    pub time: TimeSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub force: ForceSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub checks: ChecksSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    pub dimension: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub half_width: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub horizon: f64,
    #[serde(default = "default_slices")]
    pub slices_per_unit: usize,
}

fn default_slices() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    /// `zero`, `curl` (sum of Gaussian stream functions) or `bump`
    /// (Leray-projected vector Gaussian).
    #[serde(default = "default_zero")]
    pub kind: String,
    /// Stream-function amplitudes, one per centre (`curl`).
    #[serde(default)]
    pub amplitudes: Vec<f64>,
    /// Bump vector (`bump`).
    #[serde(default)]
    pub vector: Vec<f64>,
    #[serde(default)]
    pub centers: Vec<Vec<f64>>,
    #[serde(default = "one")]
    pub width: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection {
            kind: default_zero(),
            amplitudes: Vec::new(),
            vector: Vec::new(),
            centers: Vec::new(),
            width: 1.0,
        }
    }
}

fn default_zero() -> String {
    "zero".into()
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForceSection {
    #[serde(default = "default_zero")]
    pub kind: String,
    #[serde(default = "one")]
    pub width: f64,
    #[serde(default)]
    pub amplitude: Vec<f64>,
    #[serde(default = "default_profile")]
    pub profile: String,
    #[serde(default = "default_window")]
    pub window: Vec<f64>,
    /// Half-separation of the two dipole lobes.
    #[serde(default = "default_offset")]
    pub offset: f64,
    #[serde(default)]
    pub axis: usize,
    /// Directory of `.snap` slices (`sampled`).
    #[serde(default)]
    pub path: Option<String>,
}

impl Default for ForceSection {
    fn default() -> Self {
        ForceSection {
            kind: default_zero(),
            width: 1.0,
            amplitude: Vec::new(),
            profile: default_profile(),
            window: default_window(),
            offset: default_offset(),
            axis: 0,
            path: None,
        }
    }
}

fn default_profile() -> String {
    "ramp".into()
}

fn default_window() -> Vec<f64> {
    vec![0.0, 1.0]
}

fn default_offset() -> f64 {
    1.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_sweeps")]
    pub max_sweeps: usize,
    /// Time panels per slice in far-field bilinear quadrature.
    #[serde(default = "default_panels")]
    pub panels: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            tol: default_tol(),
            max_sweeps: default_sweeps(),
            panels: default_panels(),
        }
    }
}

fn default_tol() -> f64 {
    1e-10
}

fn default_sweeps() -> usize {
    20
}

fn default_panels() -> usize {
    1
}

/// An integrability exponent: a number or `"inf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Exponent {
    Finite(f64),
    Word(String),
}

impl Exponent {
    pub fn value(&self) -> Option<f64> {
        match self {
            Exponent::Finite(p) => Some(*p),
            Exponent::Word(w) if w == "inf" => Some(f64::INFINITY),
            Exponent::Word(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksSection {
    /// Checks to run; all of [`CHECK_NAMES`] when absent.
    #[serde(default)]
    pub run: Option<Vec<String>>,
    #[serde(default = "default_profile_time")]
    pub profile_time: f64,
    #[serde(default = "default_profile_radii")]
    pub profile_radii: Vec<f64>,
    #[serde(default = "default_profile_count")]
    pub profile_count: usize,
    #[serde(default = "default_directions")]
    pub directions: usize,
    #[serde(default = "default_window_radii")]
    pub window_radii: Vec<f64>,
    #[serde(default = "default_window_count")]
    pub window_count: usize,
    #[serde(default = "yes")]
    pub short_time: bool,
    #[serde(default = "default_short_dirs")]
    pub short_time_directions: usize,
    #[serde(default = "default_decay_pairs")]
    pub decay_pairs: Vec<(f64, Exponent)>,
    /// First and last sweep time; `[T/2, T]` when absent.
    #[serde(default)]
    pub sweep_times: Option<Vec<f64>>,
    #[serde(default = "default_sweep_step")]
    pub sweep_step: f64,
    #[serde(default = "default_sweep_tol")]
    pub sweep_tol: f64,
    #[serde(default = "default_tail_dirs")]
    pub tail_directions: usize,
    #[serde(default = "default_divergence_pairs")]
    pub divergence_pairs: Vec<(f64, Exponent)>,
    /// Time of the divergence check; the horizon when absent.
    #[serde(default)]
    pub divergence_time: Option<f64>,
    #[serde(default = "default_divergence_radii")]
    pub divergence_radii: Vec<f64>,
    #[serde(default = "default_directions")]
    pub divergence_directions: usize,
    #[serde(default = "default_nodes")]
    pub divergence_nodes: usize,
    /// Re-solve on refined grids inside the mild check.
    #[serde(default = "yes")]
    pub refine: bool,
}

impl Default for ChecksSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults deserialize")
    }
}

fn yes() -> bool {
    true
}
fn default_profile_time() -> f64 {
    1.0
}
fn default_profile_radii() -> Vec<f64> {
    vec![16.0, 128.0]
}
fn default_profile_count() -> usize {
    8
}
fn default_directions() -> usize {
    16
}
fn default_window_radii() -> Vec<f64> {
    vec![32.0, 128.0]
}
fn default_window_count() -> usize {
    5
}
fn default_short_dirs() -> usize {
    8
}
fn default_decay_pairs() -> Vec<(f64, Exponent)> {
    vec![
        (0.0, Exponent::Word("inf".into())),
        (1.0, Exponent::Word("inf".into())),
        (0.0, Exponent::Finite(2.0)),
    ]
}
fn default_sweep_step() -> f64 {
    0.125
}
fn default_sweep_tol() -> f64 {
    0.15
}
fn default_tail_dirs() -> usize {
    8
}
fn default_divergence_pairs() -> Vec<(f64, Exponent)> {
    vec![(0.0, Exponent::Finite(1.0))]
}
fn default_divergence_radii() -> Vec<f64> {
    vec![32.0, 64.0, 128.0, 256.0, 512.0]
}
fn default_nodes() -> usize {
    4
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default)]
    pub threads: Option<usize>,
}

/// A validated scenario with its hash.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub raw: RawConfig,
    pub hash: String,
    /// Directory the config was read from; relative paths resolve here.
    pub base: PathBuf,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

/// Parses and validates; every violation is reported at once.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
        FfnsError::ConfigParse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    let problems = validate(&raw);
    if !problems.is_empty() {
        return Err(FfnsError::ConfigInvalid(problems));
    }
    let hash = scenario_hash(&raw);
    Ok(ScenarioConfig {
        raw,
        hash,
        base: PathBuf::from("."),
    })
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| FfnsError::io(path, e))?;
    let mut cfg = parse_config(&text)?;
    cfg.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(cfg)
}

/// SHA-256 over the canonical JSON of everything but `[output]`.
pub fn scenario_hash(raw: &RawConfig) -> String {
    let mut r = raw.clone();
    r.output = OutputSection::default();
    let json = serde_json::to_vec(&r).expect("config serializes");
    hex::encode(Sha256::digest(&json))
}

fn pairs(list: &[(f64, Exponent)]) -> Vec<Option<NormPair>> {
    list.iter()
        .map(|(a, p)| p.value().map(|p| NormPair::new(*a, p)))
        .collect()
}

fn validate(c: &RawConfig) -> Vec<String> {
    let mut v = Vec::new();
    let dim = match Dim::new(c.scenario.dimension) {
        Ok(d) => Some(d),
        Err(_) => {
            v.push(format!(
                "scenario.dimension must be 2 or 3, got {}",
                c.scenario.dimension
            ));
            None
        }
    };
    let d = c.scenario.dimension;
    let l = c.grid.half_width;
    if !(l > 0.0 && l.is_finite()) {
        v.push(format!("grid.half_width must be positive, got {l}"));
    }
    let n = c.grid.points;
    if !(n.is_power_of_two() && n >= 16) {
        v.push(format!("grid.points must be a power of two ≥ 16, got {n}"));
    }
    let t = c.time.horizon;
    if !(t > 0.0 && t.is_finite()) {
        v.push(format!("time.horizon must be positive, got {t}"));
    } else if t.sqrt() > l / 8.0 {
        v.push(format!("truncation guard √T ≤ L/8 violated: √{t} > {l}/8"));
    }
    if c.time.slices_per_unit == 0 {
        v.push("time.slices_per_unit must be ≥ 1".into());
    } else if (t * c.time.slices_per_unit as f64 - (t * c.time.slices_per_unit as f64).round())
        .abs()
        > 1e-9
    {
        v.push("time.horizon × time.slices_per_unit must be an integer".into());
    }

    let ini = &c.initial;
    match ini.kind.as_str() {
        "zero" => {}
        "curl" => {
            if ini.amplitudes.is_empty() || ini.amplitudes.len() != ini.centers.len() {
                v.push("initial.curl needs one amplitude per centre".into());
            }
            if d == 3 {
                v.push("initial.curl is implemented for dimension 2".into());
            }
        }
        "bump" => {
            if ini.vector.len() != d {
                v.push(format!("initial.vector must have {d} components"));
            }
            if ini.centers.len() > 1 {
                v.push("initial.bump takes at most one centre".into());
            }
        }
        k => v.push(format!(
            "initial.kind must be zero, curl or bump, got {k:?}"
        )),
    }
    if ini.centers.iter().any(|c| c.len() != d) {
        v.push(format!("initial.centers entries must have {d} coordinates"));
    }
    if !(ini.width > 0.0) {
        v.push("initial.width must be positive".into());
    }

    let f = &c.force;
    match f.kind.as_str() {
        "zero" => {}
        "gaussian" | "dipole" => {
            if f.amplitude.len() != d {
                v.push(format!("force.amplitude must have {d} components"));
            }
            if !(f.width > 0.0) {
                v.push("force.width must be positive".into());
            }
            if temporal_kind(&f.profile).is_none() {
                v.push(format!(
                    "force.profile must be indicator, ramp or bump, got {:?}",
                    f.profile
                ));
            }
            if f.window.len() != 2 || !(f.window[0] >= 0.0 && f.window[1] > f.window[0]) {
                v.push("force.window must be [start, end] with 0 ≤ start < end".into());
            }
            if f.kind == "dipole" && (f.axis >= d || !(f.offset > 0.0)) {
                v.push("force.axis must be < dimension and force.offset positive".into());
            }
        }
        "sampled" => {
            if f.path.is_none() {
                v.push("force.sampled needs force.path".into());
            }
        }
        k => v.push(format!(
            "force.kind must be zero, gaussian, dipole or sampled, got {k:?}"
        )),
    }

    if !(c.solver.tol > 0.0) {
        v.push("solver.tol must be positive".into());
    }
    if c.solver.max_sweeps == 0 {
        v.push("solver.max_sweeps must be ≥ 1".into());
    }
    if c.solver.panels == 0 {
        v.push("solver.panels must be ≥ 1".into());
    }

    let k = &c.checks;
    if let Some(run) = &k.run {
        for name in run {
            if !CHECK_NAMES.contains(&name.as_str()) {
                v.push(format!("checks.run: unknown check {name:?}"));
            }
        }
    }
    for (key, r) in [
        ("profile_radii", &k.profile_radii),
        ("window_radii", &k.window_radii),
    ] {
        if r.len() != 2 || !(r[0] > 0.0 && r[1] > r[0]) {
            v.push(format!(
                "checks.{key} must be [low, high] with 0 < low < high"
            ));
        }
    }
    if k.divergence_radii.len() < 3
        || k.divergence_radii.windows(2).any(|w| !(w[1] > w[0]))
        || k.divergence_radii[0] <= 0.0
    {
        v.push("checks.divergence_radii must be at least three increasing positive radii".into());
    }
    if !(k.sweep_step > 0.0) {
        v.push("checks.sweep_step must be positive".into());
    }
    if let Some(st) = &k.sweep_times {
        if st.len() != 2 || !(st[0] > 0.0 && st[1] > st[0]) {
            v.push("checks.sweep_times must be [low, high] with 0 < low < high".into());
        } else if st[1] > t + 1e-12 {
            v.push(format!(
                "checks.sweep_times end {} exceeds the horizon {t}",
                st[1]
            ));
        }
    }
    if k.profile_time > t + 1e-12 {
        v.push(format!(
            "checks.profile_time {} exceeds the horizon {t}",
            k.profile_time
        ));
    }
    if let Some(td) = k.divergence_time {
        if !(td > 0.0 && td <= t + 1e-12) {
            v.push(format!("checks.divergence_time {td} must lie in (0, {t}]"));
        }
    }
    if k.profile_count < 5 || k.window_count < 5 {
        v.push("checks.profile_count and checks.window_count must be ≥ 5".into());
    }
    if k.directions == 0
        || k.tail_directions == 0
        || k.divergence_directions == 0
        || k.short_time_directions == 0
    {
        v.push("direction counts must be ≥ 1".into());
    }
    if k.divergence_nodes == 0 {
        v.push("checks.divergence_nodes must be ≥ 1".into());
    }
    if let Some(dim) = dim {
        for (i, p) in pairs(&k.decay_pairs).iter().enumerate() {
            match p {
                None => v.push(format!("checks.decay_pairs[{i}]: p must be a number ≥ 1 or \"inf\"")),
                Some(p) if !(p.alpha >= 0.0 && p.p >= 1.0) => {
                    v.push(format!("checks.decay_pairs[{i}]: need α ≥ 0 and p ≥ 1"))
                }
                Some(p) if !p.decays(dim) && !p.is_limit(dim) => v.push(format!(
                    "checks.decay_pairs[{i}]: (α, p) = ({}, {}) has α + d/p = {} ≥ {d}, the divergence regime",
                    p.alpha,
                    p.p,
                    p.index(dim)
                )),
                _ => {}
            }
        }
        for (i, p) in pairs(&k.divergence_pairs).iter().enumerate() {
            match p {
                None => v.push(format!("checks.divergence_pairs[{i}]: p must be a number ≥ 1 or \"inf\"")),
                Some(p) if !(p.alpha >= 0.0 && p.p >= 1.0) => {
                    v.push(format!("checks.divergence_pairs[{i}]: need α ≥ 0 and p ≥ 1"))
                }
                Some(p) if p.decays(dim) || p.is_limit(dim) => v.push(format!(
                    "checks.divergence_pairs[{i}]: (α, p) = ({}, {}) has α + d/p = {} < {d}, the decay regime",
                    p.alpha,
                    p.p,
                    p.index(dim)
                )),
                _ => {}
            }
        }
    }
    if c.output.threads == Some(0) {
        v.push("output.threads must be ≥ 1".into());
    }
    v
}

fn temporal_kind(name: &str) -> Option<TemporalKind> {
    match name {
        "indicator" => Some(TemporalKind::Indicator),
        "ramp" => Some(TemporalKind::Ramp),
        "bump" => Some(TemporalKind::Bump),
        _ => None,
    }
}

fn padded(v: &[f64]) -> [f64; 3] {
    let mut out = [0.0; 3];
    out[..v.len()].copy_from_slice(v);
    out
}

impl ScenarioConfig {
    pub fn dim(&self) -> Dim {
        Dim::new(self.raw.scenario.dimension).expect("validated")
    }

    pub fn grid(&self) -> BoxGrid {
        BoxGrid::new(self.dim(), self.raw.grid.half_width, self.raw.grid.points).expect("validated")
    }

    /// The grid with twice the points per axis.
    pub fn finer_grid(&self) -> BoxGrid {
        BoxGrid::new(
            self.dim(),
            self.raw.grid.half_width,
            2 * self.raw.grid.points,
        )
        .expect("validated")
    }

    pub fn settings(&self) -> SolverSettings {
        SolverSettings {
            horizon: self.raw.time.horizon,
            slices_per_unit: self.raw.time.slices_per_unit,
            tol: self.raw.solver.tol,
            max_sweeps: self.raw.solver.max_sweeps,
        }
    }

    /// Checks to run, in canonical order.
    pub fn checks(&self) -> Vec<&'static str> {
        match &self.raw.checks.run {
            None => CHECK_NAMES.to_vec(),
            Some(run) => CHECK_NAMES
                .iter()
                .copied()
                .filter(|n| run.iter().any(|r| r == n))
                .collect(),
        }
    }

    pub fn decay_pairs(&self) -> Vec<NormPair> {
        pairs(&self.raw.checks.decay_pairs)
            .into_iter()
            .flatten()
            .collect()
    }

    pub fn divergence_pairs(&self) -> Vec<NormPair> {
        pairs(&self.raw.checks.divergence_pairs)
            .into_iter()
            .flatten()
            .collect()
    }

    pub fn sweep_times(&self) -> Vec<f64> {
        let k = &self.raw.checks;
        let t = self.raw.time.horizon;
        let (a, b) = k
            .sweep_times
            .as_ref()
            .map_or((t / 2.0, t), |s| (s[0], s[1]));
        let n = ((b - a) / k.sweep_step + 1e-9).floor() as usize;
        (0..=n).map(|i| a + i as f64 * k.sweep_step).collect()
    }

    /// The datum on `grid`, projected and flagged divergence-free.
    pub fn initial_data(&self, grid: &BoxGrid) -> Result<InitialData> {
        let ini = &self.raw.initial;
        let dim = self.dim();
        let field = match ini.kind.as_str() {
            "zero" => return Ok(InitialData::Zero(dim)),
            "curl" => {
                let bumps: Vec<CurlBump> = ini
                    .amplitudes
                    .iter()
                    .zip(&ini.centers)
                    .map(|(&amplitude, c)| CurlBump {
                        amplitude,
                        center: padded(c),
                        width: ini.width,
                        axis: 2,
                    })
                    .collect();
                VectorFieldGrid::from_fn(*grid, |x| {
                    let mut v = [0.0; 3];
                    for b in &bumps {
                        let u = b.velocity(dim, x);
                        for a in 0..3 {
                            v[a] += u[a];
                        }
                    }
                    v
                })
            }
            _ => {
                let c = ini.centers.first().map(|c| padded(c)).unwrap_or([0.0; 3]);
                let amp = padded(&ini.vector);
                let w2 = ini.width * ini.width;
                VectorFieldGrid::from_fn(*grid, |x| {
                    let r2: f64 = (0..dim.n()).map(|a| (x[a] - c[a]).powi(2)).sum();
                    let g = (-r2 / w2).exp();
                    [amp[0] * g, amp[1] * g, amp[2] * g]
                })
            }
        };
        let tr = Transform::new(*grid);
        let (field, residual) =
            verify_divergence_free(&tr, leray_project(&tr, &field), DIVERGENCE_TOL);
        if !field.is_divergence_free() {
            return Err(FfnsError::Core(ffns_core::Error::Validation(format!(
                "initial datum divergence residual {residual:e} after projection"
            ))));
        }
        Ok(InitialData::from_field(field)?)
    }

    pub fn force(&self) -> Result<ForceModel> {
        let f = &self.raw.force;
        let dim = self.dim();
        let temporal = || -> Result<TemporalProfile> {
            Ok(TemporalProfile::new(
                temporal_kind(&f.profile).expect("validated"),
                f.window[0],
                f.window[1],
            )?)
        };
        let amp = || Vector::from_array(dim, padded(&f.amplitude));
        Ok(match f.kind.as_str() {
            "zero" => ForceModel::zero(dim),
            "gaussian" => {
                ForceModel::separable(SpatialProfile::gaussian(dim, f.width)?, temporal()?, amp())?
            }
            "dipole" => ForceModel::separable(
                SpatialProfile::dipole(dim, f.width, f.offset, f.axis)?,
                temporal()?,
                amp(),
            )?,
            _ => {
                let dir = self.base.join(f.path.as_deref().expect("validated"));
                let snaps = crate::io::read_snapshot_series(&dir)?;
                if snaps.is_empty() {
                    return Err(FfnsError::ConfigInvalid(vec![format!(
                        "no .snap files in {}",
                        dir.display()
                    )]));
                }
                if snaps[0].field.dim() != dim {
                    return Err(FfnsError::ConfigInvalid(vec![
                        "sampled force dimension differs from scenario".into(),
                    ]));
                }
                let times = snaps.iter().map(|s| s.time).collect();
                ForceModel::Sampled(SampledForce::new(
                    times,
                    snaps.into_iter().map(|s| s.field).collect(),
                )?)
            }
        })
    }

    pub fn output_dir(&self) -> Option<PathBuf> {
        self.raw.output.dir.as_ref().map(|d| self.base.join(d))
    }

    pub fn threads(&self) -> Option<usize> {
        self.raw.output.threads
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[scenario]\nname = \"m\"\ndimension = 2\n[grid]\nhalf_width = 32.0\npoints = 64\n[time]\nhorizon = 1.0\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.raw.time.slices_per_unit, 64);
        assert_eq!(c.raw.solver.tol, 1e-10);
        assert_eq!(c.raw.force.kind, "zero");
        assert_eq!(c.checks().len(), CHECK_NAMES.len());
        assert_eq!(c.decay_pairs().len(), 3);
        assert_eq!(c.hash.len(), 64);
    }

    #[test]
    fn truncation_guard_and_regime_are_named() {
        let text = MINIMAL.replace("horizon = 1.0", "horizon = 32.0")
            + "[checks]\ndecay_pairs = [[1, 1]]\n";
        match parse_config(&text) {
            Err(FfnsError::ConfigInvalid(v)) => {
                assert_eq!(v.len(), 2, "{v:?}");
                assert!(v[0].contains("truncation guard"));
                assert!(v[1].contains("divergence regime"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_has_position() {
        match parse_config("[scenario]\nname = \n") {
            Err(FfnsError::ConfigParse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn output_section_does_not_change_hash() {
        let a = parse_config(MINIMAL).unwrap();
        let b =
            parse_config(&(MINIMAL.to_string() + "[output]\ndir = \"x\"\nthreads = 3\n")).unwrap();
        let c = parse_config(&MINIMAL.replace("points = 64", "points = 128")).unwrap();
        assert_eq!(a.hash, b.hash);
        assert_ne!(a.hash, c.hash);
    }

    #[test]
    fn sweep_times_are_inclusive() {
        let c = parse_config(&MINIMAL.replace("horizon = 1.0", "horizon = 2.0")).unwrap();
        let t = c.sweep_times();
        assert_eq!(t.len(), 9);
        assert_eq!(t[8], 2.0);
    }
}
