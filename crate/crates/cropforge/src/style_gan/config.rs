use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters of the mask-conditioned texture GAN.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StyleGanConfig {
    /// Square resolution of masks and patches.
    pub resolution: usize,
    /// Dimension of the variational style latent.
    pub style_dim: usize,
    /// Generator channels at the 4x4 grid; halved per block, floored at
    /// `min_channels`.
    pub gen_base_channels: usize,
    pub min_channels: usize,
    /// Hidden width of the mask-modulation convolutions inside each SPADE
    /// normalization.
    pub spade_hidden: usize,
    /// Encoder channels after the first stride-2 convolution; doubled per
    /// stage, capped at 512.
    pub enc_base_channels: usize,
    /// The encoder consumes the full RGB+NIR patch.
    pub encoder_in_channels: usize,
    /// Discriminator channels after the first tap; doubled per tap, capped
    /// at 512.
    pub disc_base_channels: usize,
    /// Number of discriminator scales (image pyramid depth).
    pub disc_scales: usize,
    /// Feature taps per scale.
    pub disc_taps: usize,
    pub leaky_slope: f64,
    pub lr_generator: f64,
    pub lr_discriminator: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub lambda_fm: f64,
    pub lambda_vgg: f64,
    pub lambda_kl: f64,
    pub batch_size: usize,
    /// First-block width of the frozen perceptual network.
    pub perceptual_width: usize,
    /// Seed of the frozen perceptual weights; part of the config so a
    /// checkpoint reconstructs the identical network.
    pub perceptual_seed: u64,
    /// Log a deterministic (epsilon = 0) reconstruction error per step;
    /// costs one extra generator pass.
    pub log_reconstruction: bool,
}

impl Default for StyleGanConfig {
    fn default() -> Self {
        StyleGanConfig {
            resolution: 256,
            style_dim: 256,
            gen_base_channels: 512,
            min_channels: 16,
            spade_hidden: 128,
            enc_base_channels: 32,
            encoder_in_channels: 4,
            disc_base_channels: 64,
            disc_scales: 2,
            disc_taps: 4,
            leaky_slope: 0.2,
            lr_generator: 1e-4,
            lr_discriminator: 4e-4,
            adam_beta1: 0.0,
            adam_beta2: 0.999,
            lambda_fm: 10.0,
            lambda_vgg: 10.0,
            lambda_kl: 0.05,
            batch_size: 4,
            perceptual_width: 64,
            perceptual_seed: 0x5647_4731,
            log_reconstruction: false,
        }
    }
}

impl StyleGanConfig {
    /// Scaled-down preset for smoke runs and demos.
    pub fn small(resolution: usize) -> Self {
        StyleGanConfig {
            resolution,
            style_dim: 64,
            gen_base_channels: 96,
            min_channels: 8,
            spade_hidden: 24,
            enc_base_channels: 12,
            disc_base_channels: 12,
            perceptual_width: 8,
            batch_size: 4,
            ..Default::default()
        }
    }

    pub fn up_blocks(&self) -> Result<usize> {
        let mut n = 0usize;
        let mut r = 4usize;
        while r < self.resolution {
            r *= 2;
            n += 1;
        }
        if r != self.resolution || n == 0 {
            return Err(Error::Argument(format!(
                "resolution {} must be 4 * 2^n with n >= 1",
                self.resolution
            )));
        }
        Ok(n)
    }

    /// Encoder stride-2 stages down to a 4x4 grid.
    pub fn down_stages(&self) -> Result<usize> {
        self.up_blocks()
    }

    pub fn gen_channels(&self, block: usize) -> usize {
        (self.gen_base_channels >> block).max(self.min_channels)
    }

    pub fn enc_channels(&self, stage: usize) -> usize {
        (self.enc_base_channels << stage).min(512)
    }

    pub fn disc_channels(&self, tap: usize) -> usize {
        (self.disc_base_channels << tap).min(512)
    }

    pub fn validate(&self) -> Result<()> {
        self.up_blocks()?;
        if self.style_dim == 0 {
            return Err(Error::Argument("style_dim must be >= 1".into()));
        }
        if self.encoder_in_channels != 3 && self.encoder_in_channels != 4 {
            return Err(Error::Argument(format!(
                "encoder_in_channels must be 3 or 4, got {}",
                self.encoder_in_channels
            )));
        }
        if self.disc_scales == 0 || self.disc_taps == 0 {
            return Err(Error::Argument(
                "disc_scales and disc_taps must be >= 1".into(),
            ));
        }
        // Every scale must keep a positive spatial extent through the taps.
        let min_input = self.resolution >> (self.disc_scales - 1);
        let after_taps = min_input >> (self.disc_taps - 1);
        if after_taps < 4 {
            return Err(Error::Argument(format!(
                "resolution {} too small for {} scales with {} taps",
                self.resolution, self.disc_scales, self.disc_taps
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Argument("batch_size must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(Error::Argument("adam betas outside [0, 1)".into()));
        }
        Ok(())
    }
}
