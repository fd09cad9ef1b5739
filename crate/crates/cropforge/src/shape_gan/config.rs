use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters of the unconditional silhouette GAN.
///
/// The generator starts at `base_resolution` and doubles until
/// `target_resolution`; the two must be consistent (base * 2^n == target),
/// which is asserted rather than silently patched because the obvious
/// "8 to 256 in six doublings" reading does not add up.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShapeGanConfig {
    pub latent_size: usize,
    pub base_resolution: usize,
    pub target_resolution: usize,
    /// Generator channels at the base resolution; halved after every
    /// up-sampling block, floored at 8.
    pub gen_base_channels: usize,
    /// Discriminator channels after the first convolution; doubled per
    /// down-sampling block, capped at 512.
    pub disc_base_channels: usize,
    /// Sigma of the instance noise added to both real and fake
    /// discriminator inputs.
    pub input_noise_sigma: f64,
    pub dropout_rate: f64,
    pub leaky_slope: f64,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub batch_size: usize,
    /// Binarization threshold on the tanh output when sampling.
    pub threshold: f64,
}

impl Default for ShapeGanConfig {
    fn default() -> Self {
        ShapeGanConfig {
            latent_size: 100,
            base_resolution: 4,
            target_resolution: 256,
            gen_base_channels: 512,
            disc_base_channels: 64,
            input_noise_sigma: 0.1,
            dropout_rate: 0.25,
            leaky_slope: 0.2,
            learning_rate: 2e-4,
            adam_beta1: 0.5,
            adam_beta2: 0.999,
            batch_size: 16,
            threshold: 0.0,
        }
    }
}

impl ShapeGanConfig {
    /// Scaled-down preset for smoke runs and demos.
    pub fn small(target_resolution: usize) -> Self {
        ShapeGanConfig {
            target_resolution,
            gen_base_channels: 128,
            disc_base_channels: 16,
            batch_size: 8,
            ..Default::default()
        }
    }

    /// Number of up-sampling blocks; errors unless
    /// base * 2^n == target for some integer n >= 1.
    pub fn up_blocks(&self) -> Result<usize> {
        let (base, target) = (self.base_resolution, self.target_resolution);
        if base < 2 || target <= base {
            return Err(Error::Argument(format!(
                "invalid resolutions: base {base}, target {target}"
            )));
        }
        let mut n = 0usize;
        let mut r = base;
        while r < target {
            r *= 2;
            n += 1;
        }
        if r != target {
            return Err(Error::Argument(format!(
                "base resolution {base} cannot reach target {target} by doubling \
                 ({base} * 2^{n} = {r})"
            )));
        }
        Ok(n)
    }

    /// Total stride-2 stages in the discriminator: from target down to 4x4.
    pub fn down_stages(&self) -> Result<usize> {
        let target = self.target_resolution;
        if target < 8 {
            return Err(Error::Argument(format!(
                "target resolution {target} is too small for the discriminator"
            )));
        }
        let mut n = 0usize;
        let mut r = target;
        while r > 4 {
            if r % 2 != 0 {
                return Err(Error::Argument(format!(
                    "target resolution {target} must be 4 * 2^n"
                )));
            }
            r /= 2;
            n += 1;
        }
        Ok(n)
    }

    pub fn gen_channels(&self, block: usize) -> usize {
        (self.gen_base_channels >> block).max(8)
    }

    pub fn disc_channels(&self, stage: usize) -> usize {
        (self.disc_base_channels << stage).min(512)
    }

    pub fn validate(&self) -> Result<()> {
        self.up_blocks()?;
        self.down_stages()?;
        if self.latent_size == 0 {
            return Err(Error::Argument("latent_size must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Argument(format!(
                "dropout_rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Argument("batch_size must be >= 1".into()));
        }
        Ok(())
    }
}
