//! Shallow ReLU networks on the unit sphere S², their spherical-harmonic
//! spectra, and diagnostics for the frequency principle.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: points, directions, rotations and sampling on S².
//! * [`harmonics`]: associated Legendre functions, complex spherical
//!   harmonics, product quadrature and spectral projection.
//! * [`relu_spectral`]: the exact harmonic expansion of a single ReLU cap,
//!   its rotation to arbitrary directions and the gradient of the rotated
//!   spectrum.
//! * [`network`]: the network itself, its loss, gradients, initialisation
//!   and the gradient-descent training loop.
//! * [`diagnostics`]: error spectra, evolution terms, decay fits and the
//!   trajectory-level frequency-principle classifier.
//! * [`experiment`]: the experiment registry, configuration files and CSV
//!   artifacts consumed by the command-line tool.

// `!(x >= y)` is used deliberately so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod csvfmt;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod harmonics;
pub mod network;
pub mod relu_spectral;

pub use error::{Error, Result};
pub use geometry::{Direction, Rotation3, SpherePoint};
pub use harmonics::{HarmonicIndex, HarmonicSpectrum, SphereGrid};
pub use network::{
    BatchMode, DirectionMode, ErrorTrace, InitScheme, NetworkParams, TargetFunction,
    TrainingConfig,
};
pub use nalgebra::Vector3;
pub use num_complex::Complex64;
