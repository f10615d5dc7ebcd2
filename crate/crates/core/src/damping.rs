//! Damping profiles `gamma >= 0` and the two density checkers: the
//! window-average infimum and the relative density of the level sets
//! `{gamma >= eps}`. Windows wrap periodically and are centred on grid points.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::Grid;

/// Generator kind and parameters of a damping profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DampingKind {
    Constant {
        level: f64,
    },
    /// `level` on the first `duty * period` of every period, measured from `-L`.
    PeriodicBumps {
        period: f64,
        duty: f64,
        level: f64,
    },
    /// One bump of width `bump_fraction * cell_width` at a random offset inside
    /// every cell of the tiling of `[-L, L)`.
    RandomDense {
        cell_width: f64,
        bump_fraction: f64,
        level: f64,
        seed: u64,
    },
    /// Zero on `[start, end]`, `level` elsewhere.
    Gap {
        start: f64,
        end: f64,
        level: f64,
    },
    /// `level` on `[start, end]`, zero elsewhere.
    CompactSupport {
        start: f64,
        end: f64,
        level: f64,
    },
}

impl DampingKind {
    pub fn name(&self) -> &'static str {
        match self {
            DampingKind::Constant { .. } => "constant",
            DampingKind::PeriodicBumps { .. } => "periodic_bumps",
            DampingKind::RandomDense { .. } => "random_dense",
            DampingKind::Gap { .. } => "gap",
            DampingKind::CompactSupport { .. } => "compact_support",
        }
    }

    pub fn level(&self) -> f64 {
        match *self {
            DampingKind::Constant { level }
            | DampingKind::PeriodicBumps { level, .. }
            | DampingKind::RandomDense { level, .. }
            | DampingKind::Gap { level, .. }
            | DampingKind::CompactSupport { level, .. } => level,
        }
    }

    /// Same descriptor with the random seed replaced; other kinds are unchanged.
    pub fn with_seed(mut self, new_seed: u64) -> Self {
        if let DampingKind::RandomDense { ref mut seed, .. } = self {
            *seed = new_seed;
        }
        self
    }

    /// Every parameter problem, empty when the descriptor is valid on `grid`.
    pub fn problems(&self, grid: &Grid) -> Vec<String> {
        let mut out = Vec::new();
        let level = self.level();
        if !(level.is_finite() && level >= 0.0) {
            out.push(format!("level must be finite and >= 0, got {level}"));
        }
        let l = grid.half_length();
        match *self {
            DampingKind::Constant { .. } => {}
            DampingKind::PeriodicBumps { period, duty, .. } => {
                if !(period.is_finite() && period > 0.0) {
                    out.push(format!("period must be positive, got {period}"));
                }
                if !(duty > 0.0 && duty <= 1.0) {
                    out.push(format!("duty must lie in (0, 1], got {duty}"));
                }
            }
            DampingKind::RandomDense {
                cell_width,
                bump_fraction,
                ..
            } => {
                if !(cell_width.is_finite() && cell_width > 0.0 && cell_width <= 2.0 * l) {
                    out.push(format!("cell_width must lie in (0, 2L], got {cell_width}"));
                }
                if !(bump_fraction > 0.0 && bump_fraction <= 1.0) {
                    out.push(format!("bump_fraction must lie in (0, 1], got {bump_fraction}"));
                }
            }
            DampingKind::Gap { start, end, .. } | DampingKind::CompactSupport { start, end, .. } => {
                if !(start <= end && start >= -l && end < l) {
                    out.push(format!("interval [{start}, {end}] must satisfy -L <= start <= end < L"));
                }
            }
        }
        out
    }
}

/// Nonnegative damping samples on a grid plus the descriptor that produced them.
#[derive(Debug, Clone)]
pub struct DampingProfile {
    grid: Arc<Grid>,
    samples: Vec<f64>,
    descriptor: DampingKind,
    sup_norm: f64,
}

impl DampingProfile {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn descriptor(&self) -> &DampingKind {
        &self.descriptor
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn is_zero(&self) -> bool {
        self.sup_norm == 0.0
    }

    /// Grid indices of `{gamma >= eps}`.
    pub fn level_set(&self, eps: f64) -> Vec<usize> {
        (0..self.samples.len()).filter(|&j| self.samples[j] >= eps).collect()
    }

    /// Grid indices of `{gamma = 0}`.
    pub fn zero_set(&self) -> Vec<usize> {
        (0..self.samples.len()).filter(|&j| self.samples[j] == 0.0).collect()
    }

    /// Default threshold for level sets, one tenth of the sup norm.
    pub fn default_epsilon(&self) -> f64 {
        self.sup_norm / 10.0
    }

    /// CSV with header `x,gamma`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,gamma\n");
        for (j, g) in self.samples.iter().enumerate() {
            let _ = writeln!(out, "{:.17e},{:.17e}", self.grid.x(j), g);
        }
        out
    }

    pub fn descriptor_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.descriptor)?)
    }

    pub fn from_descriptor_json(json: &str, grid: Arc<Grid>) -> Result<Self> {
        let kind: DampingKind = serde_json::from_str(json)?;
        make_profile(&kind, grid)
    }
}

/// Sample a damping profile of the given kind on `grid`. Deterministic given the descriptor.
pub fn make_profile(kind: &DampingKind, grid: Arc<Grid>) -> Result<DampingProfile> {
    if grid.is_empty() {
        return Err(Error::Parameter("empty grid".into()));
    }
    let problems = kind.problems(&grid);
    if !problems.is_empty() {
        return Err(Error::Parameter(format!("{}: {}", kind.name(), problems.join("; "))));
    }
    let n = grid.len();
    let l = grid.half_length();
    let samples: Vec<f64> = match *kind {
        DampingKind::Constant { level } => vec![level; n],
        DampingKind::PeriodicBumps { period, duty, level } => (0..n)
            .map(|j| {
                let phase = (grid.x(j) + l).rem_euclid(period);
                if phase < duty * period - 1e-12 * period {
                    level
                } else {
                    0.0
                }
            })
            .collect(),
        DampingKind::RandomDense {
            cell_width,
            bump_fraction,
            level,
            seed,
        } => random_dense_samples(&grid, cell_width, bump_fraction, level, seed),
        DampingKind::Gap { start, end, level } => (0..n)
            .map(|j| {
                let x = grid.x(j);
                if x >= start && x <= end {
                    0.0
                } else {
                    level
                }
            })
            .collect(),
        DampingKind::CompactSupport { start, end, level } => (0..n)
            .map(|j| {
                let x = grid.x(j);
                if x >= start && x <= end {
                    level
                } else {
                    0.0
                }
            })
            .collect(),
    };
    let sup_norm = samples.iter().cloned().fold(0.0, f64::max);
    Ok(DampingProfile {
        grid,
        samples,
        descriptor: kind.clone(),
        sup_norm,
    })
}

fn random_dense_samples(grid: &Grid, cell_width: f64, bump_fraction: f64, level: f64, seed: u64) -> Vec<f64> {
    let n = grid.len();
    let l = grid.half_length();
    let dx = grid.dx();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = vec![0.0; n];
    let num_cells = ((2.0 * l) / cell_width).floor().max(1.0) as usize;
    // the last cell absorbs the remainder of the torus
    let bump = bump_fraction * cell_width;
    for cell in 0..num_cells {
        let lo = -l + cell as f64 * cell_width;
        let hi = if cell + 1 == num_cells { l } else { lo + cell_width };
        let slack = (hi - lo - bump).max(0.0);
        let start = lo + rng.random::<f64>() * slack;
        let end = start + bump;
        let mut hit = false;
        for (j, g) in samples.iter_mut().enumerate() {
            let x = grid.x(j);
            if x >= start && x < end {
                *g = level;
                hit = true;
            }
        }
        if !hit {
            // bump narrower than dx: mark the sample nearest its centre
            let centre = 0.5 * (start + end);
            let j = (((centre + l) / dx).round() as usize) % n;
            samples[j] = level;
        }
    }
    samples
}

fn check_radius(grid: &Grid, radius: f64) -> Result<()> {
    if !(radius > 0.0 && radius <= grid.half_length()) {
        return Err(Error::Parameter(format!(
            "window radius must lie in (0, L = {}], got {radius}",
            grid.half_length()
        )));
    }
    Ok(())
}

/// Number of grid offsets `m` with `|m dx| <= R`, capped at the torus size.
fn window_len(grid: &Grid, radius: f64) -> usize {
    let half = (radius / grid.dx() + 1e-9).floor() as usize;
    (2 * half + 1).min(grid.len())
}

/// Minimum over grid-point centres of the periodic window sums `sum values_j`
/// over `|x_j - a| <= R`.
fn min_window_sum(values: &[f64], width: usize) -> f64 {
    let n = values.len();
    let half = width / 2;
    let mut sum: f64 = (0..width).map(|m| values[(m + n - half) % n]).sum();
    let mut best = sum;
    for centre in 1..n {
        let leaving = (centre + n - half - 1) % n;
        let entering = (centre + width - half - 1) % n;
        sum += values[entering] - values[leaving];
        best = best.min(sum);
    }
    best.max(0.0)
}

/// `min_a sum_{|x_j - a| <= R} gamma(x_j) dx` over grid-point centres, periodic.
pub fn window_average_infimum(gamma: &DampingProfile, radius: f64) -> Result<f64> {
    check_radius(&gamma.grid, radius)?;
    let width = window_len(&gamma.grid, radius);
    let exact_zero = has_empty_window(&gamma.samples, width, |g| g > 0.0);
    if exact_zero {
        return Ok(0.0);
    }
    Ok(min_window_sum(&gamma.samples, width) * gamma.grid.dx())
}

/// `min_a m({gamma >= eps} n [a - R, a + R])` over grid-point centres, periodic.
pub fn level_set_density(gamma: &DampingProfile, eps: f64, radius: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("eps must be positive, got {eps}")));
    }
    check_radius(&gamma.grid, radius)?;
    let width = window_len(&gamma.grid, radius);
    let indicator: Vec<f64> = gamma
        .samples
        .iter()
        .map(|&g| if g >= eps { 1.0 } else { 0.0 })
        .collect();
    let count = min_window_sum(&indicator, width).round();
    Ok(count * gamma.grid.dx())
}

/// Both density checkers at one `(eps, R)` and the two inequalities linking them:
/// `W <= sup * D + 2 R eps` and `eps * D <= W`, each with slack `2 dx sup`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityCheck {
    pub radius: f64,
    pub eps: f64,
    pub window_average_infimum: f64,
    pub level_set_density: f64,
    /// `sup * D + 2 R eps - W`; nonnegative up to the tolerance.
    pub upper_margin: f64,
    /// `W - eps * D`; nonnegative up to the tolerance.
    pub lower_margin: f64,
    pub tolerance: f64,
}

impl DensityCheck {
    pub fn holds(&self) -> bool {
        self.upper_margin >= -self.tolerance && self.lower_margin >= -self.tolerance
    }
}

pub fn density_check(gamma: &DampingProfile, eps: f64, radius: f64) -> Result<DensityCheck> {
    let w = window_average_infimum(gamma, radius)?;
    let d = level_set_density(gamma, eps, radius)?;
    Ok(DensityCheck {
        radius,
        eps,
        window_average_infimum: w,
        level_set_density: d,
        upper_margin: gamma.sup_norm * d + 2.0 * radius * eps - w,
        lower_margin: w - eps * d,
        tolerance: 2.0 * gamma.grid.dx() * gamma.sup_norm,
    })
}

/// Whether some window of `width` samples has no sample satisfying `pred`.
/// Counting avoids the rounding drift of the running float sum.
fn has_empty_window(values: &[f64], width: usize, pred: impl Fn(f64) -> bool) -> bool {
    let n = values.len();
    let half = width / 2;
    let hits: Vec<usize> = values.iter().map(|&v| pred(v) as usize).collect();
    let mut count: usize = (0..width).map(|m| hits[(m + n - half) % n]).sum();
    if count == 0 {
        return true;
    }
    for centre in 1..n {
        let leaving = (centre + n - half - 1) % n;
        let entering = (centre + width - half - 1) % n;
        count = count + hits[entering] - hits[leaving];
        if count == 0 {
            return true;
        }
    }
    false
}
