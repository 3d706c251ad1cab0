//! One-bit MIMO-OFDM detection.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the double-precision instantiation the harness uses.

pub mod dataset;
pub mod dense;
pub mod diem;
pub mod error;
pub mod fft;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod objective;
pub mod scalar;
pub mod solvers;
pub mod stats;

pub use error::{Error, Result};
pub use model::{MultipathChannel, OneBitObservation, SymbolBlock, SystemConfig};
pub use objective::{Penalty, ProblemInstance, SpectralInfo};
pub use scalar::{Complex, Real};

pub type C64 = Complex<f64>;
pub type MultipathChannel64 = MultipathChannel<f64>;
pub type ProblemInstance64 = ProblemInstance<f64>;
pub type Penalty64 = Penalty<f64>;
