//! Numerical probes of the scalar ingredients behind the decay estimates:
//! the symbol-gap infimum `inf |tau^s - lambda| / (1 + lambda)^{1 - 1/s}`,
//! the power-difference constant, Logvinenko-Sereda sampling constants, the
//! growth of the near-resonant frequency sets `A_lambda(K)`, and the two
//! mechanisms that rule out exponential decay when `gamma` vanishes on a set
//! of positive measure.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::damping::DampingProfile;
use crate::dense::{min_hermitian_eigenvalue, multiplication_matrix};
use crate::error::{Error, Result};
use crate::par;
use crate::regression::fit_line;
use crate::spectral::{band_project, band_slots, Band, Field, Grid};

/// Minimum points per axis accepted by the grid searches.
pub const MIN_RESOLUTION: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Result {
    pub value: f64,
    pub tau: f64,
    pub lambda: f64,
}

#[inline]
fn symbol_gap(s: f64, tau: f64, lambda: f64) -> f64 {
    (tau.powf(s) - lambda).abs() / (1.0 + lambda).powf(1.0 - 1.0 / s)
}

fn better(a: Lemma1Result, b: Lemma1Result) -> Lemma1Result {
    if b.value < a.value {
        b
    } else {
        a
    }
}

/// Grid-search infimum of `|tau^s - lambda| / (1 + lambda)^{1 - 1/s}` over
/// `0 <= tau <= tau_max`, `0 <= lambda <= lambda_max`, `|tau - lambda^{1/s}| > 1`.
///
/// The function is continuous, so the infimum over the open region equals the
/// minimum over its closure; the two boundary curves `tau = lambda^{1/s} +- 1`
/// are swept explicitly with `resolution` points alongside the
/// `resolution x resolution` interior grid.
pub fn lemma1_infimum(s: f64, tau_max: f64, lambda_max: f64, resolution: usize) -> Result<Lemma1Result> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Parameter(format!("s must be positive, got {s}")));
    }
    if !(tau_max > 0.0 && lambda_max > 0.0) {
        return Err(Error::Parameter("search bounds must be positive".into()));
    }
    if resolution < MIN_RESOLUTION {
        return Err(Error::Parameter(format!(
            "resolution {resolution} is below the minimum of {MIN_RESOLUTION}"
        )));
    }
    let steps = (resolution - 1) as f64;
    let none = Lemma1Result {
        value: f64::INFINITY,
        tau: f64::NAN,
        lambda: f64::NAN,
    };
    let rows = par::map_range(resolution, |j| {
        let lambda = lambda_max * j as f64 / steps;
        let root = lambda.powf(1.0 / s);
        let mut best = none;
        for i in 0..resolution {
            let tau = tau_max * i as f64 / steps;
            if (tau - root).abs() > 1.0 {
                best = better(
                    best,
                    Lemma1Result {
                        value: symbol_gap(s, tau, lambda),
                        tau,
                        lambda,
                    },
                );
            }
        }
        best
    });
    let mut best = rows.into_iter().fold(none, better);

    let root_max = lambda_max.powf(1.0 / s);
    for i in 0..resolution {
        let mu = root_max * i as f64 / steps;
        let lambda = mu.powf(s).min(lambda_max);
        for tau in [mu + 1.0, mu - 1.0] {
            if (0.0..=tau_max).contains(&tau) {
                best = better(
                    best,
                    Lemma1Result {
                        value: symbol_gap(s, tau, lambda),
                        tau,
                        lambda,
                    },
                );
            }
        }
    }
    if !best.value.is_finite() {
        return Err(Error::Degenerate("search region is empty".into()));
    }
    Ok(best)
}

/// Base search plus the two stability checks: resolution doubled, bounds doubled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub s: f64,
    pub base: Lemma1Result,
    pub refined: Lemma1Result,
    pub enlarged: Lemma1Result,
}

impl Lemma1Report {
    /// Largest relative change of the infimum across the two checks.
    pub fn relative_drift(&self) -> f64 {
        let b = self.base.value;
        ((self.refined.value - b).abs() / b).max((self.enlarged.value - b).abs() / b)
    }
}

pub fn lemma1_report(s: f64, tau_max: f64, lambda_max: f64, resolution: usize) -> Result<Lemma1Report> {
    Ok(Lemma1Report {
        s,
        base: lemma1_infimum(s, tau_max, lambda_max, resolution)?,
        refined: lemma1_infimum(s, tau_max, lambda_max, 2 * resolution)?,
        enlarged: lemma1_infimum(s, 2.0 * tau_max, 2.0 * lambda_max, resolution)?,
    })
}

/// Search box that contains the boundary curves for `lambda <= lambda_max`.
pub fn lemma1_default_bounds(s: f64, lambda_max: f64) -> (f64, f64) {
    (lambda_max.powf(1.0 / s) + 2.0, lambda_max)
}

/// Best `d_s` with `d_s max(x, y)^{s-1} |x - y| <= |x^s - y^s|`.
///
/// By homogeneity `x = 1` and `y` ranges over `[0, 1)`: a uniform grid of
/// `resolution` points plus the dyadic sequence `1 - 2^{-j}` that resolves the
/// limit `y -> 1`.
pub fn power_difference_constant(s: f64, resolution: usize) -> Result<f64> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Parameter(format!("s must be positive, got {s}")));
    }
    if resolution < MIN_RESOLUTION {
        return Err(Error::Parameter(format!(
            "resolution {resolution} is below the minimum of {MIN_RESOLUTION}"
        )));
    }
    // ratio as a function of the gap d = 1 - y
    let ratio = |d: f64| -> f64 {
        if d >= 1.0 || s == 1.0 {
            1.0
        } else {
            -(s * (-d).ln_1p()).exp_m1() / d
        }
    };
    let uniform = (0..resolution).map(|i| 1.0 - i as f64 / resolution as f64);
    let dyadic = (1..=52).map(|j| 0.5f64.powi(j));
    Ok(uniform.chain(dyadic).map(ratio).fold(f64::INFINITY, f64::min))
}

/// Sampling constant: best `c` with `||f||_{L^2(E)} >= c ||f||` for all `f` whose
/// spectrum lies in `bands`, from the concentration eigenproblem `P_B M_E P_B`.
pub fn ls_constant(set: &[usize], bands: &[Band], grid: &Arc<Grid>) -> Result<f64> {
    if bands.is_empty() {
        return Err(Error::Degenerate("no frequency bands given".into()));
    }
    let slots = band_slots(grid, bands)?;
    if slots.is_empty() {
        return Err(Error::Degenerate("no grid frequency lies in the bands".into()));
    }
    let mut weights = vec![0.0; grid.len()];
    for &j in set {
        if j >= grid.len() {
            return Err(Error::Parameter(format!("index {j} outside the grid")));
        }
        weights[j] = 1.0;
    }
    let c = multiplication_matrix(grid, &weights, &slots);
    let min = min_hermitian_eigenvalue(c)?;
    Ok(min.clamp(0.0, 1.0).sqrt())
}

/// `A_lambda(K) = +-[lo, hi]`, possibly degenerate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalPair {
    pub lo: f64,
    pub hi: f64,
}

impl IntervalPair {
    pub fn positive(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn negative(&self) -> (f64, f64) {
        (-self.hi, -self.lo)
    }

    /// Length of each branch.
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn bands(&self) -> [Band; 2] {
        [Band { lo: -self.hi, hi: -self.lo }, Band { lo: self.lo, hi: self.hi }]
    }
}

/// `{xi : |(xi^2 + 1)^{s/4} - lambda| <= K}` as `+-[sqrt((lambda-K)^{4/s} - 1), sqrt((lambda+K)^{4/s} - 1)]`,
/// with negative radicands clamped to zero.
pub fn a_lambda_intervals(lambda: f64, s: f64, k: f64) -> Result<IntervalPair> {
    if !(s > 0.0) || !(k > 0.0) || !(lambda >= 0.0) {
        return Err(Error::Parameter(format!(
            "need lambda >= 0, s > 0, K > 0; got lambda = {lambda}, s = {s}, K = {k}"
        )));
    }
    let p = 4.0 / s;
    let lower = (lambda - k).max(0.0).powf(p) - 1.0;
    let upper = (lambda + k).max(0.0).powf(p) - 1.0;
    if upper <= 0.0 {
        return Ok(IntervalPair { lo: 0.0, hi: 0.0 });
    }
    let hi = upper.sqrt();
    let lo = lower.max(0.0).sqrt();
    // hi - lo without cancellation
    let length = (upper - lower.max(0.0)) / (hi + lo);
    Ok(IntervalPair { lo, hi: lo + length })
}

/// `K (4/s) lambda^{2/s - 1}`, the large-`lambda` branch length.
pub fn a_lambda_asymptote(lambda: f64, s: f64, k: f64) -> f64 {
    k * (4.0 / s) * lambda.powf(2.0 / s - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthClass {
    Divergent,
    Bounded,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntervalGrowth {
    pub class: GrowthClass,
    pub lambdas: Vec<f64>,
    pub lengths: Vec<f64>,
    /// Log-log slope of length against `lambda`.
    pub slope: f64,
    pub terminal_length: f64,
}

/// Slope above which the branch length counts as divergent.
pub const DIVERGENCE_SLOPE: f64 = 0.1;

pub fn interval_growth_classification(s: f64, k: f64, lambdas: &[f64]) -> Result<IntervalGrowth> {
    if lambdas.len() < 2 || lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter("lambda values must be increasing (at least two)".into()));
    }
    let first = lambdas[0];
    let last = lambdas[lambdas.len() - 1];
    if !(first > 0.0 && last / first >= 100.0 * (1.0 - 1e-9)) {
        return Err(Error::Parameter("lambda values must be positive and span two decades".into()));
    }
    let lengths = lambdas
        .iter()
        .map(|&l| a_lambda_intervals(l, s, k).map(|p| p.length()))
        .collect::<Result<Vec<f64>>>()?;
    let (x, y): (Vec<f64>, Vec<f64>) = lambdas
        .iter()
        .zip(&lengths)
        .filter(|(_, &len)| len > 0.0)
        .map(|(&l, &len)| (l.ln(), len.ln()))
        .unzip();
    let slope = fit_line(&x, &y)?.slope;
    Ok(IntervalGrowth {
        class: if slope > DIVERGENCE_SLOPE {
            GrowthClass::Divergent
        } else {
            GrowthClass::Bounded
        },
        lambdas: lambdas.to_vec(),
        terminal_length: *lengths.last().unwrap_or(&0.0),
        lengths,
        slope,
    })
}

/// Logarithmically spaced values `lo .. hi` inclusive.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Positive envelope multiplying the indicator of `{gamma = 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Envelope {
    Gaussian { center: f64, width: f64 },
}

impl Default for Envelope {
    fn default() -> Self {
        Envelope::Gaussian {
            center: 0.0,
            width: 1.0,
        }
    }
}

impl Envelope {
    fn eval(&self, grid: &Grid, x: f64) -> f64 {
        match *self {
            Envelope::Gaussian { center, width } => {
                let d = grid.periodic_offset(x, center) / width;
                (-0.5 * d * d).exp()
            }
        }
    }
}

/// `||gamma g_R|| / ||g_R||` with `g_R` the band truncation to `[-R, R]` of
/// `f = 1_{gamma = 0} phi`. Tends to zero as `R` grows although no band-limited
/// function is annihilated by `gamma`.
pub fn vanishing_damping_ratio(gamma: &DampingProfile, radii: &[f64], envelope: Envelope) -> Result<Vec<(f64, f64)>> {
    let grid = gamma.grid().clone();
    let Envelope::Gaussian { width, .. } = envelope;
    if !(width > 0.0) {
        return Err(Error::Parameter(format!("envelope width must be positive, got {width}")));
    }
    if gamma.zero_set().is_empty() {
        return Err(Error::Parameter("gamma has no zeros on the grid".into()));
    }
    if radii.iter().any(|&r| !(r >= 0.0)) {
        return Err(Error::Parameter("radii must be nonnegative".into()));
    }
    let samples: Vec<Complex64> = (0..grid.len())
        .map(|j| {
            if gamma.samples()[j] == 0.0 {
                Complex64::new(envelope.eval(&grid, grid.x(j)), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let f = Field::new(grid.clone(), samples)?;
    let f_hat = f.to_spectrum();
    let ratios = par::map_collect(radii, |&r| -> Result<f64> {
        let g = band_project(&f_hat, &[Band { lo: -r, hi: r }])?.to_field();
        let norm = g.l2_norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        Ok(g.multiply_real(gamma.samples())?.l2_norm() / norm)
    });
    radii.iter().zip(ratios).map(|(&r, q)| q.map(|q| (r, q))).collect()
}

/// `e^{i mu (x - a)} sin(D (x - a)) / (D (x - a))` with `x - a` taken periodically.
pub fn modulated_sinc(grid: &Arc<Grid>, d: f64, mu: f64, a: f64) -> Field {
    Field::from_fn(grid.clone(), |x| {
        let y = grid.periodic_offset(x, a);
        let z = d * y;
        let sinc = if z == 0.0 { 1.0 } else { z.sin() / z };
        Complex64::from_polar(sinc, mu * y)
    })
}

/// Split of `||gamma f_a||^2` over the window `|x - a| <= R` and its complement,
/// with the bounds used in the necessity argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SincSplit {
    pub inside: f64,
    pub outside: f64,
    /// `sup gamma * sum_{window} gamma dx`.
    pub inside_bound: f64,
    /// `sup gamma^2 * sum_{outside} |f_a|^2 dx`.
    pub outside_bound: f64,
    /// `||f_a||^2`.
    pub sinc_norm_sqr: f64,
}

pub fn sinc_translate_average(gamma: &DampingProfile, d: f64, a: f64, radius: f64) -> Result<SincSplit> {
    sinc_translate_average_modulated(gamma, d, 0.0, a, radius)
}

pub fn sinc_translate_average_modulated(
    gamma: &DampingProfile,
    d: f64,
    mu: f64,
    a: f64,
    radius: f64,
) -> Result<SincSplit> {
    let grid = gamma.grid();
    if !(d > 0.0) {
        return Err(Error::Parameter(format!("D must be positive, got {d}")));
    }
    if !(radius > 0.0 && radius <= grid.half_length()) {
        return Err(Error::Parameter(format!("window radius must lie in (0, L], got {radius}")));
    }
    let f = modulated_sinc(grid, d, mu, a);
    let sup = gamma.sup_norm();
    let dx = grid.dx();
    let mut split = SincSplit {
        inside: 0.0,
        outside: 0.0,
        inside_bound: 0.0,
        outside_bound: 0.0,
        sinc_norm_sqr: 0.0,
    };
    for (j, (&g, c)) in gamma.samples().iter().zip(f.samples()).enumerate() {
        let mass = c.norm_sqr();
        let term = g * g * mass * dx;
        split.sinc_norm_sqr += mass * dx;
        if grid.periodic_offset(grid.x(j), a).abs() <= radius + 1e-12 {
            split.inside += term;
            split.inside_bound += sup * g * dx;
        } else {
            split.outside += term;
            split.outside_bound += sup * sup * mass * dx;
        }
    }
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::damping::{make_profile, DampingKind};
    use std::f64::consts::PI;

    #[test]
    fn lemma1_s1_is_one() {
        let r = lemma1_infimum(1.0, 50.0, 50.0, 1000).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn lemma1_rejects_bad_input() {
        assert!(lemma1_infimum(0.0, 1.0, 1.0, 1000).is_err());
        assert!(lemma1_infimum(1.0, 1.0, 1.0, 10).is_err());
        assert!(lemma1_infimum(1.0, -1.0, 1.0, 1000).is_err());
    }

    #[test]
    fn power_difference_examples() {
        assert_eq!(power_difference_constant(1.0, 1000).unwrap(), 1.0);
        assert!((power_difference_constant(2.0, 1000).unwrap() - 1.0).abs() < 1e-15);
        let d = power_difference_constant(0.5, 1000).unwrap();
        assert!((d - 0.5).abs() < 0.01 * 0.5);
        assert!(power_difference_constant(-1.0, 1000).is_err());
    }

    #[test]
    fn a_lambda_examples() {
        let p = a_lambda_intervals(5.0, 2.0, 0.5).unwrap();
        assert!((p.lo - 19.25f64.sqrt()).abs() < 1e-12);
        assert!((p.hi - 29.25f64.sqrt()).abs() < 1e-12);
        assert_eq!(p.negative(), (-p.hi, -p.lo));

        let d = a_lambda_intervals(0.4, 1.0, 0.5).unwrap();
        assert_eq!(d.length(), 0.0);

        let big = a_lambda_intervals(100.0, 1.0, 0.5).unwrap();
        let asym = a_lambda_asymptote(100.0, 1.0, 0.5);
        assert!((asym - 200.0).abs() < 1e-12);
        assert!((big.length() - asym).abs() < 0.01 * asym);
    }

    #[test]
    fn growth_classes() {
        let lambdas = log_space(10.0, 1e4, 25);
        let g1 = interval_growth_classification(1.0, 0.5, &lambdas).unwrap();
        assert_eq!(g1.class, GrowthClass::Divergent);
        assert!((g1.slope - 1.0).abs() < 0.05);
        let g2 = interval_growth_classification(2.0, 0.5, &lambdas).unwrap();
        assert_eq!(g2.class, GrowthClass::Bounded);
        assert!((g2.terminal_length - 1.0).abs() < 0.01);
        let g4 = interval_growth_classification(4.0, 0.5, &lambdas).unwrap();
        assert_eq!(g4.class, GrowthClass::Bounded);
        assert!(g4.lengths.windows(2).all(|w| w[1] < w[0]));
        assert!(interval_growth_classification(1.0, 0.5, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn ls_constant_examples() {
        let g = Grid::new(8.0, 128).unwrap();
        let all: Vec<usize> = (0..128).collect();
        let bands = [Band::new(-3.0, -1.0).unwrap(), Band::new(1.0, 3.0).unwrap()];
        assert!((ls_constant(&all, &bands, &g).unwrap() - 1.0).abs() < 1e-10);
        assert_eq!(ls_constant(&[], &bands, &g).unwrap(), 0.0);
        assert!(matches!(ls_constant(&all, &[], &g), Err(Error::Degenerate(_))));
        let tiny = [Band::new(0.01, 0.02).unwrap()];
        assert!(matches!(ls_constant(&all, &tiny, &g), Err(Error::Degenerate(_))));
    }

    #[test]
    fn vanishing_ratio_basics() {
        let g = Grid::new(8.0, 256).unwrap();
        let zero = make_profile(&DampingKind::Constant { level: 0.0 }, g.clone()).unwrap();
        let radii = [1.0, 4.0, 16.0];
        for (_, q) in vanishing_damping_ratio(&zero, &radii, Envelope::default()).unwrap() {
            assert_eq!(q, 0.0);
        }
        let full = make_profile(&DampingKind::Constant { level: 1.0 }, g.clone()).unwrap();
        assert!(vanishing_damping_ratio(&full, &radii, Envelope::default()).is_err());
        let gap = make_profile(
            &DampingKind::Gap {
                start: -1.0,
                end: 1.0,
                level: 2.0,
            },
            g,
        )
        .unwrap();
        for (_, q) in vanishing_damping_ratio(&gap, &radii, Envelope::default()).unwrap() {
            assert!(q <= gap.sup_norm() + 1e-12);
        }
    }

    #[test]
    fn sinc_split_examples() {
        let g = Grid::new(20.0, 512).unwrap();
        let zero = make_profile(&DampingKind::Constant { level: 0.0 }, g.clone()).unwrap();
        let s = sinc_translate_average(&zero, 1.0, 0.0, 5.0).unwrap();
        assert_eq!((s.inside, s.outside), (0.0, 0.0));

        let one = make_profile(&DampingKind::Constant { level: 1.0 }, g.clone()).unwrap();
        let base = sinc_translate_average(&one, 1.3, g.x(100), 4.0).unwrap();
        for j in [0, 37, 256, 511] {
            let s = sinc_translate_average(&one, 1.3, g.x(j), 4.0).unwrap();
            assert!((s.inside + s.outside - base.sinc_norm_sqr).abs() < 1e-10);
            assert!((s.sinc_norm_sqr - base.sinc_norm_sqr).abs() < 1e-10);
        }
        assert!(base.inside <= base.inside_bound + 1e-12);
        assert!(base.outside <= base.outside_bound + 1e-12);
    }

    #[test]
    fn modulated_sinc_is_concentrated_near_mu() {
        let g = Grid::new(40.0, 1024).unwrap();
        let (d, mu) = (1.0, 5.0);
        let f = modulated_sinc(&g, d, mu, 0.0);
        let spec = f.to_spectrum();
        let total: f64 = spec.coefficients().iter().map(|c| c.norm_sqr()).sum();
        let near: f64 = spec
            .coefficients()
            .iter()
            .zip(g.frequencies())
            .filter(|(_, &xi)| (xi - mu).abs() <= d + 2.0 * PI / 40.0)
            .map(|(c, _)| c.norm_sqr())
            .sum();
        assert!(near / total > 0.95, "{}", near / total);
    }
}
