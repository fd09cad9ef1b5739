//! Synthesizes new crop instances — silhouettes from an unconditional
//! convolutional GAN, textures from a mask-conditioned GAN with a variational
//! style encoder — and splices them into real multispectral field scenes to
//! rebalance crop/weed segmentation datasets. A compact segmentation harness
//! measures the downstream effect of each augmentation strategy.
//!
//! The `examples/` directory has one runnable program per capability; the
//! `cropforge` binary drives the same pipeline from a config file.

pub mod composer;
pub mod dataset;
pub mod error;
pub mod nn;
pub mod pipeline;
pub mod seg;
pub mod shape_gan;
pub mod style_gan;

pub use error::{Error, Result};
