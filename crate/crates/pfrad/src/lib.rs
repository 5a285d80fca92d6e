//! Exact radiation theory for a harmonically bound charge in the point limit.
//!
//! The crate computes the runaway eigenvalue and resonance poles of the
//! dressed oscillator, survival amplitudes of bound states, photon emission
//! amplitudes, and a finite-dimensional model of the wave-equation
//! quantization scheme. Every closed form has an independent numerical
//! oracle in [`oracle`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amplitudes;
pub mod cli;
pub mod error;
pub mod model;
pub mod oracle;
pub mod quad;
pub mod resolvent;
pub mod special;
pub mod wavetoy;

pub use error::{Error, Result};
pub use model::{PhysicalParams, Setup, SpectralData};
pub use num_complex::Complex64;
