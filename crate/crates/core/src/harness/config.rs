//! JSON configuration documents. Unknown keys are rejected and validation
//! reports every offending field at once.

use std::path::{Path, PathBuf};

use serde::de::{DeserializeOwned, Error as _};
use serde::{Deserialize, Deserializer, Serialize};

use crate::analysis::Envelope;
use crate::damping::DampingKind;
use crate::error::{Error, Result};
use crate::harness::fit::WindowPolicy;
use crate::resolvent::{ConstantKind, DEFAULT_DENSE_BUDGET};
use crate::simulator::{max_phase_per_step, InitialData, TimeStepping};
use crate::spectral::{Band, Grid, GridSpec};

/// Accept either a single value or a list.
fn one_or_many<'de, D, T>(d: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: DeserializeOwned,
{
    match serde_json::Value::deserialize(d)? {
        serde_json::Value::Array(items) => items
            .into_iter()
            .enumerate()
            .map(|(i, v)| serde_json::from_value(v).map_err(|e| D::Error::custom(format!("[{i}]: {e}"))))
            .collect(),
        other => serde_json::from_value(other).map(|v| vec![v]).map_err(D::Error::custom),
    }
}

/// Validation of a parsed document; one message per offending field.
pub trait Validate {
    fn problems(&self) -> Vec<String>;
}

/// Parse a configuration document and validate it.
pub fn parse_config<T: DeserializeOwned + Validate>(text: &str) -> Result<T> {
    let value: T = serde_json::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))?;
    let problems = value.problems();
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    Ok(value)
}

pub fn read_config<T: DeserializeOwned + Validate>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

fn grid_problems(field: &str, spec: &GridSpec) -> Vec<String> {
    match Grid::from_spec(*spec) {
        Ok(_) => Vec::new(),
        Err(e) => vec![format!("{field}: {e}")],
    }
}

fn prefixed(field: &str, problems: Vec<String>) -> impl Iterator<Item = String> + '_ {
    problems.into_iter().map(move |p| format!("{field}: {p}"))
}

fn s_problems(field: &str, values: &[f64]) -> Vec<String> {
    let mut out = Vec::new();
    if values.is_empty() {
        out.push(format!("{field}: list is empty"));
    }
    for (i, s) in values.iter().enumerate() {
        if !(s.is_finite() && *s > 0.0) {
            out.push(format!("{field}[{i}]: s must be positive, got {s}"));
        }
    }
    out
}

fn damping_problems(field: &str, grid: &GridSpec, kinds: &[DampingKind]) -> Vec<String> {
    let mut out = Vec::new();
    if kinds.is_empty() {
        out.push(format!("{field}: list is empty"));
    }
    if let Ok(g) = Grid::from_spec(*grid) {
        for (i, k) in kinds.iter().enumerate() {
            out.extend(prefixed(&format!("{field}[{i}]"), k.problems(&g)));
        }
    }
    out
}

/// Optional resolvent scan attached to every sweep member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventSection {
    /// Coarser grid for the dense generator; defaults to the simulation grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    pub lambda_max: f64,
    pub count: usize,
    #[serde(default = "default_budget")]
    pub max_points: usize,
}

fn default_budget() -> usize {
    DEFAULT_DENSE_BUDGET
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridSpec,
    #[serde(deserialize_with = "one_or_many")]
    pub s: Vec<f64>,
    #[serde(deserialize_with = "one_or_many")]
    pub damping: Vec<DampingKind>,
    pub initial: InitialData,
    pub stepping: TimeStepping,
    #[serde(default)]
    pub window: WindowPolicy,
    /// When set, each member halves `grid.num_points` until `omega_max dt <= phase_budget`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_budget: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolvent: Option<ResolventSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl Validate for ExperimentConfig {
    fn problems(&self) -> Vec<String> {
        let mut out = grid_problems("grid", &self.grid);
        out.extend(s_problems("s", &self.s));
        out.extend(damping_problems("damping", &self.grid, &self.damping));
        if let Ok(g) = Grid::from_spec(self.grid) {
            out.extend(prefixed("initial", self.initial.problems(&g)));
        }
        out.extend(prefixed("stepping", self.stepping.problems()));
        out.extend(prefixed("window", self.window.problems()));
        if let Some(b) = self.phase_budget {
            if !(b.is_finite() && b > 0.0) {
                out.push(format!("phase_budget: must be positive, got {b}"));
            }
        }
        if let Some(r) = &self.resolvent {
            if let Some(g) = &r.grid {
                out.extend(grid_problems("resolvent.grid", g));
            }
            if !(r.lambda_max.is_finite() && r.lambda_max > 0.0) {
                out.push(format!("resolvent.lambda_max: must be positive, got {}", r.lambda_max));
            }
            if r.count < 2 {
                out.push(format!("resolvent.count: need at least 2 points, got {}", r.count));
            }
        }
        out
    }
}

impl ExperimentConfig {
    /// Replace every seed: seeded initial data and random damping profiles.
    pub fn with_seed(mut self, seed: u64) -> Self {
        if let InitialData::BandLimitedRandom { seed: ref mut old, .. } = self.initial {
            *old = seed;
        }
        self.damping = self.damping.into_iter().map(|d| d.with_seed(seed)).collect();
        self
    }

    /// Simulation grid for one `s`, after the optional phase budget.
    pub fn grid_for(&self, s: f64) -> GridSpec {
        let mut spec = self.grid;
        if let Some(budget) = self.phase_budget {
            while spec.num_points > 16 {
                let phase = match Grid::from_spec(spec) {
                    Ok(g) => max_phase_per_step(&g, s, self.stepping.dt),
                    Err(_) => break,
                };
                if phase <= budget {
                    break;
                }
                spec.num_points /= 2;
            }
        }
        spec
    }
}

fn default_grid() -> GridSpec {
    GridSpec {
        half_length: 8.0,
        num_points: 128,
    }
}

fn default_damping() -> DampingKind {
    DampingKind::RandomDense {
        cell_width: 1.0,
        bump_fraction: 0.5,
        level: 4.0,
        seed: 1,
    }
}

/// `resolvent-scan` parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventScanConfig {
    #[serde(default = "default_grid")]
    pub grid: GridSpec,
    #[serde(default = "default_s_list", deserialize_with = "one_or_many")]
    pub s: Vec<f64>,
    #[serde(default = "default_damping")]
    pub damping: DampingKind,
    /// Defaults to half the largest `omega` on the grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_max: Option<f64>,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_budget")]
    pub max_points: usize,
    /// Also scan best constants of the observation inequalities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<ConstantsSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    pub kind: ConstantKind,
    /// Observation set `{gamma >= eps}`; defaults to a tenth of the sup norm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
}

fn default_s_list() -> Vec<f64> {
    vec![1.0, 2.0, 3.0]
}

fn default_count() -> usize {
    20
}

impl Validate for ResolventScanConfig {
    fn problems(&self) -> Vec<String> {
        let mut out = grid_problems("grid", &self.grid);
        out.extend(s_problems("s", &self.s));
        out.extend(damping_problems("damping", &self.grid, std::slice::from_ref(&self.damping)));
        if let Some(l) = self.lambda_max {
            if !(l.is_finite() && l > 0.0) {
                out.push(format!("lambda_max: must be positive, got {l}"));
            }
        }
        if self.count < 2 {
            out.push(format!("count: need at least 2 points, got {}", self.count));
        }
        if self.grid.num_points > self.max_points {
            out.push(format!(
                "grid.num_points: {} exceeds max_points = {}",
                self.grid.num_points, self.max_points
            ));
        }
        if let Some(ConstantsSection { eps: Some(e), .. }) = &self.constants {
            if !(*e > 0.0) {
                out.push(format!("constants.eps: must be positive, got {e}"));
            }
        }
        out
    }
}

/// `ls-constant` parameters. The set is `{gamma >= eps}` for the given profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LsConstantConfig {
    #[serde(default = "default_grid")]
    pub grid: GridSpec,
    #[serde(default = "default_ls_set")]
    pub set: DampingKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default = "default_bands")]
    pub bands: Vec<Band>,
    /// Shifts of the set, in grid points, for the placement check.
    #[serde(default)]
    pub shifts: Vec<usize>,
}

fn default_ls_set() -> DampingKind {
    DampingKind::PeriodicBumps {
        period: 2.0,
        duty: 0.5,
        level: 1.0,
    }
}

fn default_bands() -> Vec<Band> {
    vec![Band { lo: -6.0, hi: -2.0 }, Band { lo: 2.0, hi: 6.0 }]
}

impl Validate for LsConstantConfig {
    fn problems(&self) -> Vec<String> {
        let mut out = grid_problems("grid", &self.grid);
        out.extend(damping_problems("set", &self.grid, std::slice::from_ref(&self.set)));
        if let Some(e) = self.eps {
            if !(e > 0.0) {
                out.push(format!("eps: must be positive, got {e}"));
            }
        }
        if self.bands.is_empty() {
            out.push("bands: list is empty".into());
        }
        for (i, b) in self.bands.iter().enumerate() {
            if let Err(e) = b.validate() {
                out.push(format!("bands[{i}]: {e}"));
            }
        }
        if self.grid.num_points > DEFAULT_DENSE_BUDGET {
            out.push(format!(
                "grid.num_points: {} exceeds the dense budget of {DEFAULT_DENSE_BUDGET}",
                self.grid.num_points
            ));
        }
        out
    }
}

/// `check-damping` parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckDampingConfig {
    #[serde(default = "default_check_grid")]
    pub grid: GridSpec,
    #[serde(default = "default_catalog", deserialize_with = "one_or_many")]
    pub damping: Vec<DampingKind>,
    #[serde(default = "default_radii", deserialize_with = "one_or_many")]
    pub radii: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
}

fn default_check_grid() -> GridSpec {
    GridSpec {
        half_length: 16.0,
        num_points: 1024,
    }
}

fn default_radii() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 4.0]
}

/// One profile of every kind.
pub fn damping_catalog() -> Vec<DampingKind> {
    vec![
        DampingKind::Constant { level: 1.0 },
        DampingKind::PeriodicBumps {
            period: 2.0,
            duty: 0.25,
            level: 1.0,
        },
        default_damping(),
        DampingKind::Gap {
            start: -2.0,
            end: 2.0,
            level: 1.0,
        },
        DampingKind::CompactSupport {
            start: -1.0,
            end: 1.0,
            level: 1.0,
        },
    ]
}

fn default_catalog() -> Vec<DampingKind> {
    damping_catalog()
}

impl Validate for CheckDampingConfig {
    fn problems(&self) -> Vec<String> {
        let mut out = grid_problems("grid", &self.grid);
        out.extend(damping_problems("damping", &self.grid, &self.damping));
        if self.radii.is_empty() {
            out.push("radii: list is empty".into());
        }
        for (i, r) in self.radii.iter().enumerate() {
            if !(*r > 0.0 && *r <= self.grid.half_length) {
                out.push(format!("radii[{i}]: must lie in (0, L], got {r}"));
            }
        }
        if let Some(e) = self.eps {
            if !(e > 0.0) {
                out.push(format!("eps: must be positive, got {e}"));
            }
        }
        out
    }
}

/// `lemma-verify` parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaConfig {
    #[serde(default = "default_lemma_s", deserialize_with = "one_or_many")]
    pub s: Vec<f64>,
    #[serde(default = "default_lambda_max")]
    pub lambda_max: f64,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
}

fn default_lemma_s() -> Vec<f64> {
    vec![0.5, 1.0, 1.5, 2.0, 3.0]
}

fn default_lambda_max() -> f64 {
    100.0
}

fn default_resolution() -> usize {
    1000
}

impl Validate for LemmaConfig {
    fn problems(&self) -> Vec<String> {
        let mut out = s_problems("s", &self.s);
        if !(self.lambda_max.is_finite() && self.lambda_max > 0.0) {
            out.push(format!("lambda_max: must be positive, got {}", self.lambda_max));
        }
        if self.resolution < crate::analysis::MIN_RESOLUTION {
            out.push(format!(
                "resolution: must be at least {}, got {}",
                crate::analysis::MIN_RESOLUTION,
                self.resolution
            ));
        }
        out
    }
}

/// `intervals` parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalsConfig {
    #[serde(default = "default_interval_s", deserialize_with = "one_or_many")]
    pub s: Vec<f64>,
    #[serde(default = "default_k")]
    pub k: f64,
    #[serde(default = "default_lambda_lo")]
    pub lambda_min: f64,
    #[serde(default = "default_lambda_hi")]
    pub lambda_max: f64,
    #[serde(default = "default_count")]
    pub count: usize,
}

fn default_interval_s() -> Vec<f64> {
    vec![1.0, 1.5, 2.0, 4.0]
}

fn default_k() -> f64 {
    0.5
}

fn default_lambda_lo() -> f64 {
    10.0
}

fn default_lambda_hi() -> f64 {
    1000.0
}

impl Validate for IntervalsConfig {
    fn problems(&self) -> Vec<String> {
        let mut out = s_problems("s", &self.s);
        if !(self.k > 0.0) {
            out.push(format!("k: must be positive, got {}", self.k));
        }
        if !(self.lambda_min > 0.0 && self.lambda_max >= 100.0 * self.lambda_min * (1.0 - 1e-9)) {
            out.push(format!(
                "lambda_min, lambda_max: need 0 < lambda_min and two decades of range, got [{}, {}]",
                self.lambda_min, self.lambda_max
            ));
        }
        if self.count < 2 {
            out.push(format!("count: need at least 2 points, got {}", self.count));
        }
        out
    }
}

/// `theorem2-demo` parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Theorem2Config {
    #[serde(default = "default_t2_grid")]
    pub grid: GridSpec,
    #[serde(default = "default_gap")]
    pub damping: DampingKind,
    #[serde(default)]
    pub envelope: Envelope,
    #[serde(default = "default_ratio_count")]
    pub count: usize,
    /// Sinc bandwidth `D`, window radius and modulation for the translate averages.
    #[serde(default = "default_sinc_d")]
    pub sinc_bandwidth: f64,
    #[serde(default = "default_sinc_radius")]
    pub sinc_radius: f64,
    #[serde(default)]
    pub modulation: f64,
}

fn default_t2_grid() -> GridSpec {
    GridSpec {
        half_length: 16.0,
        num_points: 2048,
    }
}

fn default_gap() -> DampingKind {
    DampingKind::Gap {
        start: -2.0,
        end: 2.0,
        level: 1.0,
    }
}

fn default_ratio_count() -> usize {
    24
}

fn default_sinc_d() -> f64 {
    1.0
}

fn default_sinc_radius() -> f64 {
    4.0
}

impl Validate for Theorem2Config {
    fn problems(&self) -> Vec<String> {
        let mut out = grid_problems("grid", &self.grid);
        out.extend(damping_problems("damping", &self.grid, std::slice::from_ref(&self.damping)));
        let Envelope::Gaussian { width, .. } = self.envelope;
        if !(width > 0.0) {
            out.push(format!("envelope.width: must be positive, got {width}"));
        }
        if self.count < 2 {
            out.push(format!("count: need at least 2 points, got {}", self.count));
        }
        if !(self.sinc_bandwidth > 0.0) {
            out.push(format!("sinc_bandwidth: must be positive, got {}", self.sinc_bandwidth));
        }
        if !(self.sinc_radius > 0.0 && self.sinc_radius <= self.grid.half_length) {
            out.push(format!("sinc_radius: must lie in (0, L], got {}", self.sinc_radius));
        }
        out
    }
}

/// `fit-decay` parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    #[serde(default)]
    pub window: WindowPolicy,
}

impl Validate for FitConfig {
    fn problems(&self) -> Vec<String> {
        prefixed("window", self.window.problems()).collect()
    }
}
