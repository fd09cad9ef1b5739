//! Small neural-network toolkit on top of candle's CPU tensors.
//!
//! Everything random (weight init, latent draws, dropout, instance noise)
//! flows through explicitly seeded generators, so training runs are
//! reproducible bit for bit.

pub mod adam;
pub mod checkpoint;
pub mod layers;
pub mod params;

pub use adam::Adam;
pub use checkpoint::Checkpoint;
pub use params::{NoiseSource, ParamStore};
