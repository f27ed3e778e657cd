//! Floquet spectra and topology of a spin-1/2 coupled double kicked top.
//!
//! The composite basis orders states as `2(m + j) + s` with `s = 0` for ↑ and
//! `s = 1` for ↓; quasienergies use λ = e^{−iε} on the branch (−π, π].

pub mod dynamics;
pub mod error;
pub mod floquet;
pub mod io;
pub mod linalg;
pub mod meanfield;
pub mod spectral;
pub mod spin_ops;
pub mod topology;
pub mod verify;

pub use error::{Error, Result};
pub use floquet::{KickParams, Timeframe};
pub use spectral::FloquetSpectrum;
pub use spin_ops::SpinSpace;
