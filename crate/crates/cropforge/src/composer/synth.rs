use crate::composer::{mix_seed, ShapeSource, TextureSource};
use crate::error::Result;
use crate::shape_gan::{BinaryShape, ShapeGan};
use crate::style_gan::{FourChannelImage, StyleGan};

/// Checkpoint-backed silhouette source.
pub struct GanShapeSource {
    model: ShapeGan,
}

impl GanShapeSource {
    pub fn new(model: ShapeGan) -> Self {
        GanShapeSource { model }
    }
}

impl ShapeSource for GanShapeSource {
    fn sample(&self, seed: u64) -> Result<BinaryShape> {
        let mut shapes = self.model.sample_shapes(1, self.model.config.threshold, seed)?;
        Ok(shapes.remove(0))
    }

    fn resolution(&self) -> usize {
        self.model.config.target_resolution
    }
}

/// Checkpoint-backed texture source: crop texture from a free style draw,
/// soil texture guided by the window background through the style encoder.
pub struct GanTextureSource {
    model: StyleGan,
}

impl GanTextureSource {
    pub fn new(model: StyleGan) -> Self {
        GanTextureSource { model }
    }

    fn epsilon(&self, seed: u64) -> Result<Vec<f32>> {
        use rand::SeedableRng;
        use rand_distr::Distribution;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        Ok((0..self.model.config.style_dim)
            .map(|_| {
                let x: f64 = rand_distr::StandardNormal.sample(&mut rng);
                x as f32
            })
            .collect())
    }
}

impl TextureSource for GanTextureSource {
    fn crop_texture(&self, shape: &BinaryShape, seed: u64) -> Result<FourChannelImage> {
        self.model.generate_crop_style(shape, mix_seed(seed, 1))
    }

    fn soil_texture(
        &self,
        shape: &BinaryShape,
        background: &FourChannelImage,
        seed: u64,
    ) -> Result<FourChannelImage> {
        let eps = self.epsilon(mix_seed(seed, 2))?;
        self.model.generate_soil_guided(shape, background, &eps)
    }
}
