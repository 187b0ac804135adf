//! Online independent vector analysis for microphone arrays.
//!
//! [`separators`] holds the frame-by-frame AuxIVA, OverIVA and
//! Kronecker-factored OverIVA engines. [`stft`], [`roomsim`], [`metrics`]
//! and [`io`] supply the signal chain around them, and [`harness`] ties the
//! pieces into the simulate / separate / evaluate / benchmark commands.

pub mod error;
pub mod fftconv;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod numerics;
pub mod roomsim;
pub mod separators;
pub mod stft;

pub use error::{Error, Result};
