//! Time integration of `w_tt + gamma(x) w_t + D^s w = 0` by Strang splitting.
//!
//! One step is a half damping kick `v <- v exp(-gamma dt / 2)` in physical
//! space, an exact undamped rotation of every Fourier mode with frequency
//! `omega_k = (xi_k^2 + 1)^{s/4}`, and a second half kick. Both substeps are
//! nonexpansive in the energy norm `H^{s/2} x L^2`.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::damping::{DampingKind, DampingProfile};
use crate::error::{Error, Result};
use crate::spectral::{same_grid, sobolev_norm, Field, Grid, GridSpec};

/// `(w, w_t)` at time `t`.
#[derive(Debug, Clone)]
pub struct WaveState {
    pub w: Field,
    pub v: Field,
    pub time: f64,
}

impl WaveState {
    pub fn new(w: Field, v: Field, time: f64) -> Result<Self> {
        same_grid(w.grid(), v.grid())?;
        Ok(WaveState { w, v, time })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.w.grid()
    }

    pub fn scale(&self, factor: f64) -> WaveState {
        let f = Complex64::new(factor, 0.0);
        WaveState {
            w: self.w.scale(f),
            v: self.v.scale(f),
            time: self.time,
        }
    }
}

/// `E = ( ||D^{s/2} w||^2 + ||w_t||^2 )^{1/2}`.
pub fn energy(state: &WaveState, s: f64) -> Result<f64> {
    same_grid(state.w.grid(), state.v.grid())?;
    if !(s > 0.0) {
        return Err(Error::Parameter(format!("s must be positive, got {s}")));
    }
    Ok(energy_unchecked(state, s))
}

fn energy_unchecked(state: &WaveState, s: f64) -> f64 {
    let a = sobolev_norm(&state.w, s / 2.0);
    let b = state.v.l2_norm();
    (a * a + b * b).sqrt()
}

/// `( ||w||_{H^{s/2}}^2 + ||v||^2 )^{1/2}` and `( ||w||_{H^s}^2 + ||v||_{H^{s/2}}^2 )^{1/2}`.
pub fn norm_pair(state: &WaveState, s: f64) -> (f64, f64) {
    let low = energy_unchecked(state, s);
    let a = sobolev_norm(&state.w, s);
    let b = sobolev_norm(&state.v, s / 2.0);
    (low, (a * a + b * b).sqrt())
}

/// Precomputed Strang stepper for fixed `(grid, gamma, s, dt)`.
#[derive(Debug, Clone)]
pub struct StrangStepper {
    grid: Arc<Grid>,
    dt: f64,
    half_kick: Vec<f64>,
    cos: Vec<f64>,
    sin_over_omega: Vec<f64>,
    omega_sin: Vec<f64>,
    scratch_w: Vec<Complex64>,
    scratch_v: Vec<Complex64>,
}

impl StrangStepper {
    pub fn new(gamma: &DampingProfile, s: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
        }
        if !(s > 0.0) {
            return Err(Error::Parameter(format!("s must be positive, got {s}")));
        }
        let grid = gamma.grid().clone();
        let half_kick = gamma.samples().iter().map(|&g| (-0.5 * g * dt).exp()).collect();
        let mut cos = Vec::with_capacity(grid.len());
        let mut sin_over_omega = Vec::with_capacity(grid.len());
        let mut omega_sin = Vec::with_capacity(grid.len());
        for &xi in grid.frequencies() {
            // omega >= 1, no zero division
            let omega = (xi * xi + 1.0).powf(s / 4.0);
            let (sn, cs) = (omega * dt).sin_cos();
            cos.push(cs);
            sin_over_omega.push(sn / omega);
            omega_sin.push(omega * sn);
        }
        let n = grid.len();
        Ok(StrangStepper {
            grid,
            dt,
            half_kick,
            cos,
            sin_over_omega,
            omega_sin,
            scratch_w: vec![Complex64::new(0.0, 0.0); n],
            scratch_v: vec![Complex64::new(0.0, 0.0); n],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advance `state` by one step in place.
    pub fn step(&mut self, state: &mut WaveState) -> Result<()> {
        same_grid(&self.grid, state.grid())?;
        let v = state.v.samples_mut();
        for (x, k) in v.iter_mut().zip(&self.half_kick) {
            *x *= *k;
        }
        self.scratch_w.copy_from_slice(state.w.samples());
        self.scratch_v.copy_from_slice(state.v.samples());
        self.grid.forward_in_place(&mut self.scratch_w);
        self.grid.forward_in_place(&mut self.scratch_v);
        for i in 0..self.scratch_w.len() {
            let w = self.scratch_w[i];
            let v = self.scratch_v[i];
            self.scratch_w[i] = w * self.cos[i] + v * self.sin_over_omega[i];
            self.scratch_v[i] = -w * self.omega_sin[i] + v * self.cos[i];
        }
        self.grid.inverse_in_place(&mut self.scratch_w);
        self.grid.inverse_in_place(&mut self.scratch_v);
        state.w.samples_mut().copy_from_slice(&self.scratch_w);
        let v = state.v.samples_mut();
        for ((x, k), y) in v.iter_mut().zip(&self.half_kick).zip(&self.scratch_v) {
            *x = *y * *k;
        }
        state.time += self.dt;
        Ok(())
    }
}

/// One Strang step from `state`.
pub fn step_strang(state: &WaveState, dt: f64, gamma: &DampingProfile, s: f64) -> Result<WaveState> {
    same_grid(gamma.grid(), state.grid())?;
    let mut stepper = StrangStepper::new(gamma, s, dt)?;
    let mut next = state.clone();
    stepper.step(&mut next)?;
    Ok(next)
}

/// Sampled energy history of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub s: f64,
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    /// `(||(w0, v0)||_{H^{s/2} x L^2}, ||(w0, v0)||_{H^s x H^{s/2}})`.
    pub initial_norms: (f64, f64),
    pub damping: Option<DampingKind>,
}

impl EnergyTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn initial_energy(&self) -> f64 {
        self.energies[0]
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    /// Build a trace from explicit samples (synthetic data, CSV input).
    pub fn from_samples(s: f64, times: Vec<f64>, energies: Vec<f64>) -> Result<Self> {
        if times.len() != energies.len() {
            return Err(Error::Structural(format!(
                "{} times but {} energies",
                times.len(),
                energies.len()
            )));
        }
        if times.is_empty() {
            return Err(Error::Degenerate("empty trace".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Structural("sample times must be increasing".into()));
        }
        let e0 = energies[0];
        Ok(EnergyTrace {
            s,
            times,
            energies,
            initial_norms: (e0, f64::NAN),
            damping: None,
        })
    }

    /// CSV with header `t,E`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,E\n");
        for (t, e) in self.times.iter().zip(&self.energies) {
            let _ = writeln!(out, "{t:.17e},{e:.17e}");
        }
        out
    }

    pub fn from_csv(text: &str, s: f64) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next().map(str::trim) {
            Some("t,E") => {}
            other => {
                return Err(Error::Structural(format!("expected header `t,E`, found {other:?}")));
            }
        }
        let mut times = Vec::new();
        let mut energies = Vec::new();
        for (i, line) in lines.enumerate() {
            let mut parts = line.split(',');
            let parse = |p: Option<&str>| -> Result<f64> {
                p.and_then(|v| v.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::Structural(format!("bad CSV row {}: {line:?}", i + 2)))
            };
            times.push(parse(parts.next())?);
            energies.push(parse(parts.next())?);
        }
        Self::from_samples(s, times, energies)
    }
}

/// Catalog of initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// `w = amplitude e^{i xi_k x}`, `v = 0`.
    SingleMode { mode: i64, amplitude: f64 },
    /// Real Gaussian displacement at rest.
    Gaussian {
        center: f64,
        width: f64,
        amplitude: f64,
    },
    /// Real `w, v` with seeded random spectra supported in `|xi| <= max_frequency`,
    /// coefficients weighted by `(1 + xi^2)^{-spectral_decay / 2}`.
    BandLimitedRandom {
        max_frequency: f64,
        amplitude: f64,
        seed: u64,
        #[serde(default)]
        spectral_decay: f64,
    },
}

impl InitialData {
    pub fn problems(&self, grid: &Grid) -> Vec<String> {
        let mut out = Vec::new();
        match *self {
            InitialData::SingleMode { mode, amplitude } => {
                if grid.slot_of_mode(mode).is_none() {
                    out.push(format!("mode {mode} is outside the frequency ladder"));
                }
                if !amplitude.is_finite() {
                    out.push("amplitude must be finite".into());
                }
            }
            InitialData::Gaussian { width, amplitude, .. } => {
                if !(width > 0.0) {
                    out.push(format!("width must be positive, got {width}"));
                }
                if !amplitude.is_finite() {
                    out.push("amplitude must be finite".into());
                }
            }
            InitialData::BandLimitedRandom {
                max_frequency,
                amplitude,
                spectral_decay,
                ..
            } => {
                if !(max_frequency >= 0.0) {
                    out.push(format!("max_frequency must be >= 0, got {max_frequency}"));
                }
                if !(spectral_decay.is_finite() && spectral_decay >= 0.0) {
                    out.push(format!("spectral_decay must be finite and >= 0, got {spectral_decay}"));
                }
                if !amplitude.is_finite() {
                    out.push("amplitude must be finite".into());
                }
            }
        }
        out
    }

    pub fn build(&self, grid: Arc<Grid>) -> Result<WaveState> {
        let problems = self.problems(&grid);
        if !problems.is_empty() {
            return Err(Error::Parameter(problems.join("; ")));
        }
        let zero = Field::zeros(grid.clone());
        let (w, v) = match *self {
            InitialData::SingleMode { mode, amplitude } => (
                Field::plane_wave(grid, mode, Complex64::new(amplitude, 0.0))?,
                zero,
            ),
            InitialData::Gaussian {
                center,
                width,
                amplitude,
            } => {
                let w = Field::from_fn(grid.clone(), |x| {
                    let d = grid.periodic_offset(x, center) / width;
                    Complex64::new(amplitude * (-0.5 * d * d).exp(), 0.0)
                });
                (w, zero)
            }
            InitialData::BandLimitedRandom {
                max_frequency,
                amplitude,
                seed,
                spectral_decay,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut draw = |grid: &Arc<Grid>| {
                    let coeffs: Vec<Complex64> = grid
                        .frequencies()
                        .iter()
                        .map(|&xi| {
                            let re = rng.random_range(-1.0..1.0);
                            let im = rng.random_range(-1.0..1.0);
                            if xi.abs() <= max_frequency {
                                Complex64::new(re, im) * (1.0 + xi * xi).powf(-0.5 * spectral_decay)
                            } else {
                                Complex64::new(0.0, 0.0)
                            }
                        })
                        .collect();
                    let mut buf = coeffs;
                    grid.inverse_in_place(&mut buf);
                    // real part keeps the band and makes the data physical
                    let real: Vec<Complex64> = buf.iter().map(|c| Complex64::new(c.re, 0.0)).collect();
                    Field::new(grid.clone(), real)
                };
                let w = draw(&grid)?;
                let v = draw(&grid)?;
                let scale = amplitude / w.l2_norm().max(v.l2_norm()).max(f64::MIN_POSITIVE);
                (w.scale(scale.into()), v.scale(scale.into()))
            }
        };
        WaveState::new(w, v, 0.0)
    }
}

/// Run parameters for [`simulate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeStepping {
    pub final_time: f64,
    pub dt: f64,
    pub sample_every: usize,
}

impl TimeStepping {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            out.push(format!("final_time must be positive, got {}", self.final_time));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            out.push(format!("dt must be positive, got {}", self.dt));
        }
        if self.sample_every == 0 {
            out.push("sample_every must be >= 1".into());
        }
        out
    }

    /// `floor(T / (dt sample_every)) + 1`.
    pub fn num_samples(&self) -> usize {
        (self.final_time / (self.dt * self.sample_every as f64) + 1e-9).floor() as usize + 1
    }
}

/// Integrate from `initial` and record the energy every `sample_every` steps.
pub fn simulate(initial: &WaveState, gamma: &DampingProfile, s: f64, stepping: TimeStepping) -> Result<EnergyTrace> {
    let problems = stepping.problems();
    if !problems.is_empty() {
        return Err(Error::Parameter(problems.join("; ")));
    }
    same_grid(gamma.grid(), initial.grid())?;
    let mut stepper = StrangStepper::new(gamma, s, stepping.dt)?;
    let mut state = initial.clone();
    let samples = stepping.num_samples();
    let mut times = Vec::with_capacity(samples);
    let mut energies = Vec::with_capacity(samples);
    let t0 = initial.time;
    times.push(t0);
    energies.push(energy(&state, s)?);
    for n in 1..samples {
        for _ in 0..stepping.sample_every {
            stepper.step(&mut state)?;
        }
        let e = energy_unchecked(&state, s);
        if !e.is_finite() || !state.w.is_finite() || !state.v.is_finite() {
            return Err(Error::Blowup { time: state.time });
        }
        times.push(t0 + (n * stepping.sample_every) as f64 * stepping.dt);
        energies.push(e);
    }
    Ok(EnergyTrace {
        s,
        times,
        energies,
        initial_norms: norm_pair(initial, s),
        damping: Some(gamma.descriptor().clone()),
    })
}

/// Exact solution of `w'' + gamma0 w' + m w = 0`, `m = (xi^2 + 1)^{s/2}`, at time `t`.
///
/// With `kappa = sqrt(gamma0^2 - 4m) / 2` (complex) the characteristic roots are
/// `-gamma0/2 +- kappa` and the solution is
/// `e^{-gamma0 t/2} [ w0 cosh(kappa t) + (v0 + gamma0 w0 / 2) sinh(kappa t) / kappa ]`,
/// which reduces to `(w0 + (v0 + gamma0 w0 / 2) t) e^{-gamma0 t / 2}` at critical damping.
pub fn constant_damping_oracle(
    xi: f64,
    gamma0: f64,
    w0: Complex64,
    v0: Complex64,
    t: f64,
    s: f64,
) -> (Complex64, Complex64) {
    let m = (xi * xi + 1.0).powf(s / 2.0);
    let q = 0.25 * gamma0 * gamma0 - m; // kappa^2
    let b = v0 + 0.5 * gamma0 * w0;
    let (c, sh) = if q == 0.0 {
        (1.0, t)
    } else if q > 0.0 {
        let kappa = q.sqrt();
        let x = kappa * t;
        let sinhc = if x.abs() < 1e-4 { t * (1.0 + x * x / 6.0) } else { x.sinh() / kappa };
        (x.cosh(), sinhc)
    } else {
        let beta = (-q).sqrt();
        let x = beta * t;
        let sinc = if x.abs() < 1e-4 { t * (1.0 - x * x / 6.0) } else { x.sin() / beta };
        (x.cos(), sinc)
    };
    let decay = (-0.5 * gamma0 * t).exp();
    let w = decay * (w0 * c + b * sh);
    // d/dt: C' = q S, S' = C
    let v = decay * (w0 * (q * sh) + b * c - 0.5 * gamma0 * (w0 * c + b * sh));
    (w, v)
}

/// Per-mode constant-damping oracle applied to a whole state.
pub fn constant_damping_state(initial: &WaveState, gamma0: f64, t: f64, s: f64) -> WaveState {
    let grid = initial.grid().clone();
    let w_hat = initial.w.to_spectrum();
    let v_hat = initial.v.to_spectrum();
    let mut w = w_hat.coefficients().to_vec();
    let mut v = v_hat.coefficients().to_vec();
    for (i, &xi) in grid.frequencies().iter().enumerate() {
        let (a, b) = constant_damping_oracle(xi, gamma0, w[i], v[i], t, s);
        w[i] = a;
        v[i] = b;
    }
    grid.inverse_in_place(&mut w);
    grid.inverse_in_place(&mut v);
    WaveState {
        w: Field::new(grid.clone(), w).expect("grid length"),
        v: Field::new(grid, v).expect("grid length"),
        time: initial.time + t,
    }
}

/// Metadata written next to a trace CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub s: f64,
    pub grid: GridSpec,
    pub damping: Option<DampingKind>,
    pub initial: Option<InitialData>,
    pub stepping: Option<TimeStepping>,
    pub energy_norm: f64,
    pub data_norm: f64,
    /// `omega_max dt`; modes near `omega dt = pi` are barely damped by the splitting.
    pub max_phase_per_step: Option<f64>,
}

impl TraceMetadata {
    pub fn new(trace: &EnergyTrace, grid: &Grid, initial: Option<&InitialData>, stepping: Option<TimeStepping>) -> Self {
        TraceMetadata {
            s: trace.s,
            grid: grid.spec(),
            damping: trace.damping.clone(),
            initial: initial.cloned(),
            stepping,
            energy_norm: trace.initial_norms.0,
            data_norm: trace.initial_norms.1,
            max_phase_per_step: stepping.map(|st| max_phase_per_step(grid, trace.s, st.dt)),
        }
    }
}

/// `omega_k = (xi_k^2 + 1)^{s/4}` at slot `slot`.
pub fn mode_frequency(grid: &Grid, slot: usize, s: f64) -> f64 {
    let xi = grid.frequencies()[slot];
    (xi * xi + 1.0).powf(s / 4.0)
}

/// Largest rotation angle of one step, `omega(xi_max) dt`.
///
/// The damping kick only acts on `v`; a mode rotated by nearly `pi` per step
/// never moves its displacement energy into `v` and is left almost undamped,
/// so decay measurements want this well below `pi`.
pub fn max_phase_per_step(grid: &Grid, s: f64, dt: f64) -> f64 {
    let xi = grid.max_frequency();
    (xi * xi + 1.0).powf(s / 4.0) * dt
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::damping::make_profile;
    use std::f64::consts::PI;

    fn zero_damping(grid: &Arc<Grid>) -> DampingProfile {
        make_profile(&DampingKind::Constant { level: 0.0 }, grid.clone()).unwrap()
    }

    #[test]
    fn energy_examples() {
        let g = Grid::new(4.0, 64).unwrap();
        let zero = WaveState::new(Field::zeros(g.clone()), Field::zeros(g.clone()), 0.0).unwrap();
        assert_eq!(energy(&zero, 1.0).unwrap(), 0.0);

        let amp = 1.5;
        let mode = 3;
        let xi0 = PI * mode as f64 / 4.0;
        let w = Field::plane_wave(g.clone(), mode, Complex64::new(amp, 0.0)).unwrap();
        let st = WaveState::new(w, Field::zeros(g.clone()), 0.0).unwrap();
        for s in [0.5, 1.0, 2.0, 3.0] {
            let expected = (xi0 * xi0 + 1.0).powf(s / 4.0) * amp * 8f64.sqrt();
            assert!((energy(&st, s).unwrap() - expected).abs() < 1e-11 * expected);
        }

        let v = Field::from_fn(g.clone(), |x| Complex64::new(x.sin(), x.cos() * 0.3));
        let st = WaveState::new(Field::zeros(g.clone()), v.clone(), 0.0).unwrap();
        assert!((energy(&st, 1.3).unwrap() - v.l2_norm()).abs() < 1e-12);
        assert!(energy(&st, 0.0).is_err());
    }

    #[test]
    fn grid_mismatch_is_structural() {
        let a = Grid::new(4.0, 64).unwrap();
        let b = Grid::new(4.0, 32).unwrap();
        assert!(matches!(
            WaveState::new(Field::zeros(a), Field::zeros(b), 0.0),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn undamped_step_is_exact_rotation() {
        let g = Grid::new(5.0, 64).unwrap();
        let init = InitialData::BandLimitedRandom {
            max_frequency: 6.0,
            amplitude: 1.0,
            seed: 3,
            spectral_decay: 0.0,
        }
        .build(g.clone())
        .unwrap();
        let s = 1.5;
        let dt = 0.37;
        let next = step_strang(&init, dt, &zero_damping(&g), s).unwrap();
        let exact = constant_damping_state(&init, 0.0, dt, s);
        let err = next.w.sub(&exact.w).unwrap().l2_norm() + next.v.sub(&exact.v).unwrap().l2_norm();
        assert!(err < 1e-12 * energy(&init, s).unwrap().max(1.0), "err {err}");
        assert!((next.time - dt).abs() < 1e-15);
    }

    #[test]
    fn oracle_closed_forms() {
        let w0 = Complex64::new(0.8, -0.1);
        let v0 = Complex64::new(-0.3, 0.4);
        // undamped
        for &(xi, s, t) in &[(0.0, 1.0, 0.7), (2.0, 1.5, 3.1), (5.0, 3.0, 0.2)] {
            let omega: f64 = (xi * xi + 1.0f64).powf(s / 4.0);
            let (w, v) = constant_damping_oracle(xi, 0.0, w0, v0, t, s);
            let we = w0 * (omega * t).cos() + v0 * (omega * t).sin() / omega;
            let ve = -w0 * omega * (omega * t).sin() + v0 * (omega * t).cos();
            assert!((w - we).norm() < 1e-13 && (v - ve).norm() < 1e-13);
        }
        // critical: gamma0 = 2, m = 1 (xi = 0)
        for t in [0.0, 0.5, 2.0, 7.0] {
            let (w, v) = constant_damping_oracle(0.0, 2.0, w0, v0, t, 1.0);
            let we = (w0 + (v0 + w0) * t) * (-t as f64).exp();
            let ve = ((v0 + w0) - (w0 + (v0 + w0) * t)) * (-t as f64).exp();
            assert!((w - we).norm() < 1e-14, "t={t}");
            assert!((v - ve).norm() < 1e-14);
        }
        // underdamped envelope e^{-t/2} for gamma0 = 1, m = 1
        let (w1, v1) = constant_damping_oracle(0.0, 1.0, w0, v0, 10.0, 2.0);
        let (w2, v2) = constant_damping_oracle(0.0, 1.0, w0, v0, 10.0 + 4.0 * PI / 3f64.sqrt(), 2.0);
        // after one full period of the beta = sqrt(3)/2 oscillation, only the envelope changes
        let ratio = (-2.0 * PI / 3f64.sqrt()).exp();
        assert!((w2 - w1 * ratio).norm() < 1e-12);
        assert!((v2 - v1 * ratio).norm() < 1e-12);
    }

    #[test]
    fn oracle_satisfies_ode_by_finite_differences() {
        let w0 = Complex64::new(1.0, 0.2);
        let v0 = Complex64::new(0.1, -0.5);
        for &(xi, g0, s) in &[(0.3, 0.4, 1.0), (0.0, 5.0, 2.0), (1.0, 2.0 * 2f64.sqrt(), 2.0)] {
            let m = (xi * xi + 1.0f64).powf(s / 2.0);
            let t = 1.3;
            let h = 1e-4;
            let f = |t| constant_damping_oracle(xi, g0, w0, v0, t, s).0;
            let d2 = (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h);
            let d1 = (f(t + h) - f(t - h)) / (2.0 * h);
            let res = d2 + g0 * d1 + m * f(t);
            assert!(res.norm() < 1e-5, "residual {res}");
            let (_, v) = constant_damping_oracle(xi, g0, w0, v0, t, s);
            assert!((v - d1).norm() < 1e-7);
        }
    }

    #[test]
    fn trace_counting_and_csv() {
        let g = Grid::new(4.0, 32).unwrap();
        let init = InitialData::Gaussian {
            center: 0.0,
            width: 0.5,
            amplitude: 1.0,
        }
        .build(g.clone())
        .unwrap();
        let gamma = make_profile(&DampingKind::Constant { level: 0.3 }, g.clone()).unwrap();
        let stepping = TimeStepping {
            final_time: 1.0,
            dt: 0.03,
            sample_every: 4,
        };
        let trace = simulate(&init, &gamma, 1.0, stepping).unwrap();
        assert_eq!(trace.len(), (1.0f64 / (0.03 * 4.0)).floor() as usize + 1);
        assert_eq!(trace.energies[0], energy(&init, 1.0).unwrap());
        let csv = trace.to_csv();
        let back = EnergyTrace::from_csv(&csv, 1.0).unwrap();
        assert_eq!(back.times, trace.times);
        assert_eq!(back.energies, trace.energies);
        assert!(EnergyTrace::from_csv("a,b\n1,2\n", 1.0).is_err());
    }

    #[test]
    fn simulate_rejects_bad_stepping() {
        let g = Grid::new(4.0, 32).unwrap();
        let init = InitialData::SingleMode { mode: 1, amplitude: 1.0 }.build(g.clone()).unwrap();
        let gamma = zero_damping(&g);
        for stepping in [
            TimeStepping { final_time: 0.0, dt: 0.1, sample_every: 1 },
            TimeStepping { final_time: 1.0, dt: -0.1, sample_every: 1 },
            TimeStepping { final_time: 1.0, dt: 0.1, sample_every: 0 },
        ] {
            assert!(matches!(simulate(&init, &gamma, 1.0, stepping), Err(Error::Parameter(_))));
        }
        assert!(InitialData::SingleMode { mode: 99, amplitude: 1.0 }.build(g).is_err());
    }

    #[test]
    fn band_limited_data_is_real_and_band_limited() {
        let g = Grid::new(10.0, 128).unwrap();
        let st = InitialData::BandLimitedRandom {
            max_frequency: 3.0,
            amplitude: 2.0,
            seed: 5,
            spectral_decay: 1.0,
        }
        .build(g.clone())
        .unwrap();
        assert!(st.w.samples().iter().all(|c| c.im == 0.0));
        let spec = st.w.to_spectrum();
        for (c, &xi) in spec.coefficients().iter().zip(g.frequencies()) {
            if xi.abs() > 3.0 + 1e-9 {
                assert!(c.norm() < 1e-12);
            }
        }
        assert!((st.w.l2_norm().max(st.v.l2_norm()) - 2.0).abs() < 1e-12);
    }
}
