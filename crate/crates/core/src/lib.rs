//! Fisher-information bounds for estimating the intensity and orientation of a
//! magnetic field from a spin in thermal equilibrium.
//!
//! The crate is organised bottom-up:
//!
//! - [`spin`]: spin operators, rotations, Gibbs states and closed-form moments.
//! - [`fisher`]: symmetric logarithmic derivatives, quantum Fisher information
//!   (spectral, Bloch and closed-form routes) and precision functionals.
//! - [`coarsen`]: the Gaussian-jitter channel that models an imperfect
//!   measurement reference about a fixed axis.
//! - [`measurement`]: POVMs, outcome probabilities, classical Fisher
//!   information, multinomial sampling and maximum-likelihood fitting.
//! - [`experiment`]: working points, η-sweeps, bound reports and Monte Carlo
//!   validation used by the command-line front end.
//!
//! Units: ħ = k_B = 1. The field intensity ω and the temperature T share one
//! energy unit and δ = ω/T.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coarsen;
mod error;
pub mod experiment;
pub mod fisher;
pub mod linalg;
pub mod measurement;
pub mod spin;

pub use error::{Error, Result};
pub use linalg::CMatrix;

pub use coarsen::{Axis, BlochVector, CoarseningModel};
pub use fisher::{FisherMatrix, ParamChart, SldOperator};
pub use measurement::{OutcomeDistribution, Povm};
pub use spin::{FieldParams, Moments, Spin, SpinSystem, ThermalSpinState};
