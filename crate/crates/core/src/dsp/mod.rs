//! Signal-processing building blocks shared by the channel, estimator and
//! radar code.

pub mod czt;
pub mod fft;
pub mod noise;
pub mod window;

pub use czt::ChirpZ;
pub use noise::{derive_seed, NoiseSource};
pub use window::WindowKind;
