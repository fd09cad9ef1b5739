//! Unconditional convolutional GAN over blurred crop silhouettes: noise in,
//! 256x256 soft masks out, with thresholding to binary shapes.

pub mod config;
pub mod model;
pub mod train;

use ndarray::Array2;

use crate::dataset::preprocess::SoftMask;

pub use config::ShapeGanConfig;
pub use model::{ShapeDiscriminator, ShapeGan, ShapeGenerator};
pub use train::{train_shape_gan, ShapeLossHistory};

/// A thresholded crop silhouette: 1 marks crop pixels. The pre-threshold
/// raster is retained for feathered blending.
#[derive(Clone, Debug)]
pub struct BinaryShape {
    pub values: Array2<u8>,
    pub soft_source: Option<SoftMask>,
}

impl BinaryShape {
    pub fn from_binary(values: Array2<u8>) -> Self {
        BinaryShape {
            values: values.mapv(|v| u8::from(v > 0)),
            soft_source: None,
        }
    }

    pub fn size(&self) -> usize {
        self.values.dim().0
    }

    pub fn support_count(&self) -> usize {
        self.values.iter().filter(|v| **v == 1).count()
    }
}
