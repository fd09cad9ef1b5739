//! Mask-conditioned texture synthesis: a SPADE-normalized generator emitting
//! joint RGB+NIR patches, a variational style encoder for guided soil
//! generation, a multiscale patch discriminator, and the four training
//! losses (hinge adversarial, feature matching, perceptual, KL).

pub mod config;
pub mod discriminator;
pub mod encoder;
pub mod generator;
pub mod losses;
pub mod perceptual;
pub mod train;

use candle_core::{DType, Device, Tensor};
use ndarray::{Array2, Array3};

use crate::dataset::preprocess::normalize_u8;
use crate::dataset::scene::{Patch, CLASS_CROP};
use crate::error::{Error, Result};

pub use config::StyleGanConfig;
pub use discriminator::{FeatureStack, MultiscaleDiscriminator};
pub use encoder::StyleEncoder;
pub use generator::SpadeGenerator;
pub use losses::{
    loss_adversarial, loss_feature_matching, loss_kl, loss_vgg, reparameterize, GanSide,
};
pub use perceptual::{Perceptual, VggPerceptual};
pub use train::{train_style_gan, StyleGan, StyleLossHistory};

/// Jointly generated RGB+NIR raster, channel-first (4, H, W), values in
/// [-1, 1]. Channel order: R, G, B, NIR.
#[derive(Clone, Debug)]
pub struct FourChannelImage {
    values: Array3<f32>,
}

impl FourChannelImage {
    pub fn new(values: Array3<f32>) -> Result<Self> {
        let (c, _h, _w) = values.dim();
        if c != 4 {
            return Err(Error::Argument(format!(
                "four-channel image has {c} channels"
            )));
        }
        if let Some(bad) = values.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            return Err(Error::Argument(format!(
                "four-channel image value {bad} outside [-1, 1]"
            )));
        }
        Ok(FourChannelImage { values })
    }

    /// Normalize a dataset patch into tanh range.
    pub fn from_patch(patch: &Patch) -> Self {
        let (h, w) = patch.nir.dim();
        let mut values = Array3::zeros((4, h, w));
        for r in 0..h {
            for c in 0..w {
                for ch in 0..3 {
                    values[[ch, r, c]] = normalize_u8(patch.rgb[[r, c, ch]]);
                }
                values[[3, r, c]] = normalize_u8(patch.nir[[r, c]]);
            }
        }
        FourChannelImage { values }
    }

    pub fn values(&self) -> &Array3<f32> {
        &self.values
    }

    pub fn resolution(&self) -> (usize, usize) {
        let (_, h, w) = self.values.dim();
        (h, w)
    }

    /// (1, 4, H, W) tensor.
    pub fn to_tensor(&self, dtype: DType) -> Result<Tensor> {
        let (c, h, w) = self.values.dim();
        let data: Vec<f32> = self.values.iter().copied().collect();
        Ok(Tensor::from_vec(data, (1, c, h, w), &Device::Cpu)?.to_dtype(dtype)?)
    }

    /// Back from a (1, 4, H, W) tensor, clamping float spill just outside
    /// the tanh range.
    pub fn from_tensor(t: &Tensor) -> Result<Self> {
        let (n, c, h, w) = t.dims4()?;
        if n != 1 || c != 4 {
            return Err(Error::Argument(format!(
                "expected a (1, 4, H, W) tensor, got ({n}, {c}, {h}, {w})"
            )));
        }
        let flat = t
            .to_dtype(DType::F32)?
            .flatten_all()?
            .to_vec1::<f32>()?;
        let values = Array3::from_shape_vec((c, h, w), flat)
            .expect("tensor layout matches dims")
            .mapv(|v| v.clamp(-1.0, 1.0));
        Ok(FourChannelImage { values })
    }

    /// Mean absolute difference against another image of the same size.
    pub fn mean_abs_diff(&self, other: &FourChannelImage) -> f64 {
        let n = self.values.len() as f64;
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).abs() as f64)
            .sum::<f64>()
            / n
    }
}

/// One-hot semantic layout over {background, crop}: plane 0 is background,
/// plane 1 is crop; the planes sum to exactly 1 at every pixel.
#[derive(Clone, Debug)]
pub struct ConditionMask {
    planes: Array3<f32>,
}

impl ConditionMask {
    pub fn new(planes: Array3<f32>) -> Result<Self> {
        let (c, h, w) = planes.dim();
        if c != 2 {
            return Err(Error::Argument(format!("condition mask has {c} planes")));
        }
        for r in 0..h {
            for co in 0..w {
                let sum = planes[[0, r, co]] + planes[[1, r, co]];
                if (sum - 1.0).abs() > 1e-6 {
                    return Err(Error::Argument(format!(
                        "condition planes sum to {sum} at ({r}, {co})"
                    )));
                }
            }
        }
        Ok(ConditionMask { planes })
    }

    /// Crop plane = nonzero entries of a binary raster.
    pub fn from_binary(mask: &Array2<u8>) -> Self {
        let (h, w) = mask.dim();
        let mut planes = Array3::zeros((2, h, w));
        for r in 0..h {
            for c in 0..w {
                let is_crop = mask[[r, c]] > 0;
                planes[[0, r, c]] = if is_crop { 0.0 } else { 1.0 };
                planes[[1, r, c]] = if is_crop { 1.0 } else { 0.0 };
            }
        }
        ConditionMask { planes }
    }

    /// Crop plane = pixels of one class in a {0,1,2} class raster.
    pub fn from_class_mask(mask: &Array2<u8>) -> Self {
        Self::from_binary(&mask.mapv(|v| u8::from(v == CLASS_CROP)))
    }

    /// Swapped planes; used to probe mask sensitivity.
    pub fn permuted(&self) -> Self {
        let (_, h, w) = self.planes.dim();
        let mut planes = Array3::zeros((2, h, w));
        for r in 0..h {
            for c in 0..w {
                planes[[0, r, c]] = self.planes[[1, r, c]];
                planes[[1, r, c]] = self.planes[[0, r, c]];
            }
        }
        ConditionMask { planes }
    }

    pub fn planes(&self) -> &Array3<f32> {
        &self.planes
    }

    pub fn resolution(&self) -> (usize, usize) {
        let (_, h, w) = self.planes.dim();
        (h, w)
    }

    pub fn to_tensor(&self, dtype: DType) -> Result<Tensor> {
        let (c, h, w) = self.planes.dim();
        let data: Vec<f32> = self.planes.iter().copied().collect();
        Ok(Tensor::from_vec(data, (1, c, h, w), &Device::Cpu)?.to_dtype(dtype)?)
    }
}

/// Variational posterior of a patch's appearance: mean and log-variance
/// (sigma^2 = exp(logvar)).
#[derive(Clone, Debug, PartialEq)]
pub struct StyleCode {
    pub mu: Vec<f32>,
    pub logvar: Vec<f32>,
}

impl StyleCode {
    pub fn new(mu: Vec<f32>, logvar: Vec<f32>) -> Result<Self> {
        if mu.len() != logvar.len() {
            return Err(Error::Argument(format!(
                "mu length {} != logvar length {}",
                mu.len(),
                logvar.len()
            )));
        }
        Ok(StyleCode { mu, logvar })
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// z = mu + exp(logvar / 2) * epsilon, element-wise.
    pub fn reparameterize(&self, epsilon: &[f32]) -> Result<Vec<f32>> {
        if epsilon.len() != self.mu.len() {
            return Err(Error::Argument(format!(
                "epsilon length {} != style dimension {}",
                epsilon.len(),
                self.mu.len()
            )));
        }
        Ok(self
            .mu
            .iter()
            .zip(&self.logvar)
            .zip(epsilon)
            .map(|((m, lv), e)| m + (lv / 2.0).exp() * e)
            .collect())
    }
}
