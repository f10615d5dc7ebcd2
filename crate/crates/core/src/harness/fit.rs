//! Exponential and power-law fits of energy traces, and the decay classifier.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regression::{fit_line, LineFit};
use crate::simulator::EnergyTrace;

/// Fewest samples a fit window may hold.
pub const MIN_WINDOW_SAMPLES: usize = 10;

/// A model wins only if its log-residual is below this fraction of the other's.
pub const CLASSIFICATION_MARGIN: f64 = 0.9;

/// Energy ratio `E(t1) / E(0)` above which a trace counts as not decaying.
pub const NO_DECAY_RATIO: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayModel {
    Exponential,
    Polynomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub start: f64,
    pub end: f64,
}

/// How the fit window is chosen from a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WindowPolicy {
    /// `[0.1 T, t*]` with `t* = min(0.9 T, first t with E(t) < 1e3 eps E(0))`.
    #[default]
    Default,
    /// Fractions of the final time.
    Fraction { start: f64, end: f64 },
    /// Absolute times.
    Fixed { start: f64, end: f64 },
}

impl WindowPolicy {
    pub fn problems(&self) -> Vec<String> {
        match *self {
            WindowPolicy::Default => Vec::new(),
            WindowPolicy::Fraction { start, end } => {
                if !(0.0 <= start && start < end && end <= 1.0) {
                    vec![format!("fraction window needs 0 <= start < end <= 1, got [{start}, {end}]")]
                } else {
                    Vec::new()
                }
            }
            WindowPolicy::Fixed { start, end } => {
                if !(start.is_finite() && end.is_finite() && start < end) {
                    vec![format!("fixed window needs start < end, got [{start}, {end}]")]
                } else {
                    Vec::new()
                }
            }
        }
    }

    pub fn resolve(&self, trace: &EnergyTrace) -> Result<FitWindow> {
        if trace.is_empty() {
            return Err(Error::Degenerate("empty trace".into()));
        }
        let t_first = trace.times[0];
        let t_last = trace.final_time();
        let span = t_last - t_first;
        let window = match *self {
            WindowPolicy::Default => {
                let floor = 1e3 * f64::EPSILON * trace.initial_energy();
                let underflow = trace
                    .times
                    .iter()
                    .zip(&trace.energies)
                    .find(|(_, &e)| e < floor)
                    .map(|(&t, _)| t)
                    .unwrap_or(f64::INFINITY);
                FitWindow {
                    start: t_first + 0.1 * span,
                    end: (t_first + 0.9 * span).min(underflow),
                }
            }
            WindowPolicy::Fraction { start, end } => FitWindow {
                start: t_first + start * span,
                end: t_first + end * span,
            },
            WindowPolicy::Fixed { start, end } => FitWindow { start, end },
        };
        if !(window.start < window.end) {
            return Err(Error::Degenerate(format!(
                "empty fit window [{}, {}]",
                window.start, window.end
            )));
        }
        Ok(window)
    }
}

/// One fitted decay model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub model: DecayModel,
    /// `C` in `C E(0) e^{-omega t}` or `C E(0) (1 + t)^{-p}`.
    pub constant: f64,
    /// `omega` or `p`.
    pub rate: f64,
    pub window: FitWindow,
    pub samples: usize,
    /// RMS of the log-residuals.
    pub residual: f64,
    /// RMS log-residual of the other model on the same window.
    pub alternative_residual: f64,
}

fn window_samples(trace: &EnergyTrace, window: FitWindow) -> Result<(Vec<f64>, Vec<f64>)> {
    let slack = 1e-9 * (1.0 + window.end.abs());
    let (t, e): (Vec<f64>, Vec<f64>) = trace
        .times
        .iter()
        .zip(&trace.energies)
        .filter(|(&t, _)| t >= window.start - slack && t <= window.end + slack)
        .map(|(&t, &e)| (t, e))
        .unzip();
    if t.len() < MIN_WINDOW_SAMPLES {
        return Err(Error::Degenerate(format!(
            "{} samples in window [{}, {}], need {MIN_WINDOW_SAMPLES}",
            t.len(),
            window.start,
            window.end
        )));
    }
    if e.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::Degenerate("non-positive energy in fit window".into()));
    }
    if !(trace.initial_energy() > 0.0) {
        return Err(Error::Degenerate("initial energy is zero".into()));
    }
    Ok((t, e))
}

fn both_lines(trace: &EnergyTrace, window: FitWindow) -> Result<(LineFit, LineFit, usize)> {
    let (t, e) = window_samples(trace, window)?;
    let log_e: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let log_t: Vec<f64> = t.iter().map(|v| v.ln_1p()).collect();
    Ok((fit_line(&t, &log_e)?, fit_line(&log_t, &log_e)?, t.len()))
}

fn make_fit(model: DecayModel, line: LineFit, other: LineFit, e0: f64, window: FitWindow, samples: usize) -> DecayFit {
    DecayFit {
        model,
        constant: line.intercept.exp() / e0,
        rate: -line.slope,
        window,
        samples,
        residual: line.rms_residual,
        alternative_residual: other.rms_residual,
    }
}

/// Least squares on `(t, log E)`.
pub fn fit_exponential(trace: &EnergyTrace, window: FitWindow) -> Result<DecayFit> {
    let (exp, poly, n) = both_lines(trace, window)?;
    Ok(make_fit(DecayModel::Exponential, exp, poly, trace.initial_energy(), window, n))
}

/// Least squares on `(log(1 + t), log E)`.
pub fn fit_polynomial(trace: &EnergyTrace, window: FitWindow) -> Result<DecayFit> {
    let (exp, poly, n) = both_lines(trace, window)?;
    Ok(make_fit(DecayModel::Polynomial, poly, exp, trace.initial_energy(), window, n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum DecayClass {
    Exponential { rate: f64 },
    Polynomial { exponent: f64 },
    None,
}

impl DecayClass {
    pub fn name(&self) -> &'static str {
        match self {
            DecayClass::Exponential { .. } => "exponential",
            DecayClass::Polynomial { .. } => "polynomial",
            DecayClass::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: DecayClass,
    pub window: FitWindow,
    /// `E(t1) / E(0)`.
    pub energy_ratio: f64,
    pub exponential: DecayFit,
    pub polynomial: DecayFit,
}

/// Fit both models on the policy window. Power-law decay is reported only when
/// its log-residual is below `CLASSIFICATION_MARGIN` times the exponential one;
/// every finite-torus run is eventually exponential, so ties go that way.
pub fn classify_decay(trace: &EnergyTrace, policy: WindowPolicy) -> Result<Classification> {
    if trace.len() < 2 {
        return Err(Error::Degenerate("trace needs at least two samples".into()));
    }
    let window = policy.resolve(trace)?;
    let exponential = fit_exponential(trace, window)?;
    let polynomial = fit_polynomial(trace, window)?;
    let last = trace
        .times
        .iter()
        .zip(&trace.energies)
        .filter(|(&t, _)| t <= window.end + 1e-9 * (1.0 + window.end.abs()))
        .map(|(_, &e)| e)
        .last()
        .unwrap_or(trace.initial_energy());
    let energy_ratio = last / trace.initial_energy();
    let class = if energy_ratio > NO_DECAY_RATIO {
        DecayClass::None
    } else if polynomial.residual < CLASSIFICATION_MARGIN * exponential.residual {
        DecayClass::Polynomial {
            exponent: polynomial.rate,
        }
    } else {
        DecayClass::Exponential {
            rate: exponential.rate,
        }
    };
    Ok(Classification {
        class,
        window,
        energy_ratio,
        exponential,
        polynomial,
    })
}
