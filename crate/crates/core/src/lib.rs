//! Numerical lab for the damped fractional wave equation
//! `w_tt + gamma(x) w_t + (1 - d_xx)^{s/2} w = 0` on a periodic interval.

pub mod analysis;
pub mod damping;
pub mod dense;
pub mod error;
pub mod harness;
pub mod par;
pub mod regression;
pub mod resolvent;
pub mod simulator;
pub mod spectral;

pub use damping::{make_profile, DampingKind, DampingProfile};
pub use error::{Error, Result};
pub use simulator::{simulate, EnergyTrace, InitialData, TimeStepping, WaveState};
pub use spectral::{Band, Field, Grid, GridSpec, Spectrum};
