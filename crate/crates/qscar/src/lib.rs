//! Quantum wavepacket propagation in the chaotic coupled quartic oscillator,
//! a complex-valued reservoir-computing surrogate for it, and extraction of
//! eigenfunctions and scarred wavefunctions from the propagated series.

pub mod classical;
pub mod domain;
pub mod error;
pub mod io;
pub mod oracle;
pub mod potential;
pub mod linalg;
pub mod propagator;
pub mod reservoir;
pub mod spectral;
pub mod wavepacket;

pub use error::{Error, Result};
