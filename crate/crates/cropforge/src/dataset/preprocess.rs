use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// A crop silhouette softened by Gaussian blur; values stay in [0, 1].
#[derive(Clone, Debug)]
pub struct SoftMask {
    values: Array2<f32>,
}

impl SoftMask {
    pub fn new(values: Array2<f32>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Argument(format!(
                "soft mask value {bad} outside [0, 1]"
            )));
        }
        Ok(SoftMask { values })
    }

    pub fn values(&self) -> &Array2<f32> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f32> {
        self.values
    }
}

/// Normalized 1d Gaussian weights for an odd kernel size, sigma = size / 6.
fn gaussian_kernel(size: usize) -> Vec<f64> {
    let sigma = size as f64 / 6.0;
    let half = (size / 2) as i64;
    let mut weights: Vec<f64> = (-half..=half)
        .map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= sum;
    }
    weights
}

/// Separable Gaussian pass over one axis with clamp-to-edge padding, so
/// constant rasters are fixed points.
fn blur_axis(src: &Array2<f64>, weights: &[f64], axis: usize) -> Array2<f64> {
    let (h, w) = src.dim();
    let half = (weights.len() / 2) as i64;
    let mut out = Array2::zeros((h, w));
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for (i, wt) in weights.iter().enumerate() {
                let d = i as i64 - half;
                let (sr, sc) = if axis == 0 {
                    ((r as i64 + d).clamp(0, h as i64 - 1) as usize, c)
                } else {
                    (r, (c as i64 + d).clamp(0, w as i64 - 1) as usize)
                };
                acc += wt * src[[sr, sc]];
            }
            out[[r, c]] = acc;
        }
    }
    out
}

/// Gaussian-blur a binary {0, 1} mask into a soft one. `kernel_size` must be
/// odd; size 1 is the identity.
pub fn blur_mask(mask: ArrayView2<'_, u8>, kernel_size: usize) -> Result<SoftMask> {
    if kernel_size % 2 == 0 || kernel_size == 0 {
        return Err(Error::Argument(format!(
            "blur kernel size must be odd and >= 1, got {kernel_size}"
        )));
    }
    let as_f64 = mask.mapv(|v| if v > 0 { 1.0f64 } else { 0.0 });
    if kernel_size == 1 {
        return SoftMask::new(as_f64.mapv(|v| v as f32));
    }
    let weights = gaussian_kernel(kernel_size);
    let blurred = blur_axis(&blur_axis(&as_f64, &weights, 0), &weights, 1);
    SoftMask::new(blurred.mapv(|v| (v as f32).clamp(0.0, 1.0)))
}

/// Affine map from 8-bit pixel values onto [-1, 1]: v/127.5 - 1.
pub fn normalize_u8(v: u8) -> f32 {
    v as f32 / 127.5 - 1.0
}

/// Inverse of `normalize_u8` with round-half-up quantization.
pub fn denormalize_f32(v: f32) -> u8 {
    (((v + 1.0) * 127.5) + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Normalize a whole raster to [-1, 1].
pub fn normalize_raster(values: ArrayView2<'_, u8>) -> Array2<f32> {
    values.mapv(normalize_u8)
}
