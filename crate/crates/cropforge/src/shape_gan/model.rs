use candle_core::{DType, Tensor};

use crate::error::{Error, Result};
use crate::nn::layers::{
    expect_dims4, leaky_relu, sigmoid, upsample2x, BatchNorm2d, Conv2d, Dense,
};
use crate::nn::params::{NoiseSource, ParamStore};
use crate::shape_gan::config::ShapeGanConfig;

/// Latent-to-silhouette generator: dense projection to the base grid, then
/// repeated (upsample, conv, batch norm, relu) blocks, two refinement
/// convolutions and a tanh head.
pub struct ShapeGenerator {
    fc: Dense,
    input_norm: BatchNorm2d,
    blocks: Vec<(Conv2d, BatchNorm2d)>,
    refine: (Conv2d, BatchNorm2d),
    head: Conv2d,
    config: ShapeGanConfig,
}

impl ShapeGenerator {
    pub fn new(store: &mut ParamStore, config: &ShapeGanConfig) -> Result<Self> {
        let n_up = config.up_blocks()?;
        let base = config.base_resolution;
        let ch0 = config.gen_channels(0);
        let fc = Dense::new(store, "fc", config.latent_size, ch0 * base * base)?;
        let input_norm = BatchNorm2d::new(store, "input_norm", ch0)?;
        let mut blocks = Vec::with_capacity(n_up);
        for i in 0..n_up {
            let (cin, cout) = (config.gen_channels(i), config.gen_channels(i + 1));
            blocks.push((
                Conv2d::new(store, &format!("up{i}.conv"), cin, cout, 3, 1, 1)?,
                BatchNorm2d::new(store, &format!("up{i}.norm"), cout)?,
            ));
        }
        let last = config.gen_channels(n_up);
        let refine = (
            Conv2d::new(store, "refine.conv", last, last, 3, 1, 1)?,
            BatchNorm2d::new(store, "refine.norm", last)?,
        );
        let head = Conv2d::new(store, "head", last, 1, 3, 1, 1)?;
        Ok(ShapeGenerator {
            fc,
            input_norm,
            blocks,
            refine,
            head,
            config: config.clone(),
        })
    }

    /// (N, latent) -> (N, 1, target, target) in [-1, 1].
    pub fn forward(&self, z: &Tensor) -> Result<Tensor> {
        let (n, d) = z
            .dims2()
            .map_err(|_| Error::Argument("latent batch must be rank 2".into()))?;
        if d != self.config.latent_size {
            return Err(Error::Argument(format!(
                "latent vector length {d} does not match configured latent_size {}",
                self.config.latent_size
            )));
        }
        let base = self.config.base_resolution;
        let ch0 = self.config.gen_channels(0);
        let mut x = self.fc.forward(z)?.reshape((n, ch0, base, base))?;
        x = self.input_norm.forward(&x)?;
        for (conv, norm) in &self.blocks {
            x = upsample2x(&x)?;
            x = norm.forward(&conv.forward(&x)?)?.relu()?;
        }
        x = self.refine.1.forward(&self.refine.0.forward(&x)?)?.relu()?;
        Ok(self.head.forward(&x)?.tanh()?)
    }
}

/// Patch-to-scalar critic: strided convolutions with leaky relu, dropout and
/// batch norm down to 4x4, then a dense sigmoid head. Instance noise is added
/// to its inputs by the caller via `noise_sigma`.
pub struct ShapeDiscriminator {
    stem: Conv2d,
    blocks: Vec<(Conv2d, BatchNorm2d)>,
    fc: Dense,
    config: ShapeGanConfig,
}

impl ShapeDiscriminator {
    pub fn new(store: &mut ParamStore, config: &ShapeGanConfig) -> Result<Self> {
        let stages = config.down_stages()?;
        let stem = Conv2d::new(store, "stem", 1, config.disc_channels(0), 3, 2, 1)?;
        let mut blocks = Vec::with_capacity(stages - 1);
        for i in 1..stages {
            let (cin, cout) = (config.disc_channels(i - 1), config.disc_channels(i));
            blocks.push((
                Conv2d::new(store, &format!("down{i}.conv"), cin, cout, 3, 2, 1)?,
                BatchNorm2d::new(store, &format!("down{i}.norm"), cout)?,
            ));
        }
        let last = config.disc_channels(stages - 1);
        let fc = Dense::new(store, "fc", last * 4 * 4, 1)?;
        Ok(ShapeDiscriminator {
            stem,
            blocks,
            fc,
            config: config.clone(),
        })
    }

    /// Pre-sigmoid logit, (N, 1). With `noise` and `dropout` both None the
    /// pass is deterministic (evaluation mode).
    pub fn forward_logits(
        &self,
        x: &Tensor,
        noise_sigma: f64,
        rng: Option<&mut NoiseSource>,
    ) -> Result<Tensor> {
        let r = self.config.target_resolution;
        expect_dims4(x, (None, Some(1), Some(r), Some(r)), "discriminator input")?;
        let train = rng.is_some();
        let mut rng = rng;
        let mut x = x.clone();
        if noise_sigma > 0.0 {
            let rng = rng
                .as_deref_mut()
                .ok_or_else(|| Error::Argument("instance noise requires a noise source".into()))?;
            let noise = rng.normal(x.dims(), x.dtype())?;
            x = (x + (noise * noise_sigma)?)?;
        }
        let slope = self.config.leaky_slope;
        let p = self.config.dropout_rate;
        let mut h = leaky_relu(&self.stem.forward(&x)?, slope)?;
        if train && p > 0.0 {
            let mask = rng.as_deref_mut().unwrap().dropout_mask(h.dims(), p, h.dtype())?;
            h = (h * mask)?;
        }
        for (conv, norm) in &self.blocks {
            h = leaky_relu(&conv.forward(&h)?, slope)?;
            if train && p > 0.0 {
                let mask = rng.as_deref_mut().unwrap().dropout_mask(h.dims(), p, h.dtype())?;
                h = (h * mask)?;
            }
            h = norm.forward(&h)?;
        }
        let n = h.dims4()?.0;
        self.fc.forward(&h.reshape((n, ()))?)
    }

    /// Probability that the input comes from the real distribution,
    /// strictly inside (0, 1).
    pub fn forward(
        &self,
        x: &Tensor,
        noise_sigma: f64,
        rng: Option<&mut NoiseSource>,
    ) -> Result<Tensor> {
        sigmoid(&self.forward_logits(x, noise_sigma, rng)?)
    }
}

/// Generator/discriminator pair with their parameter stores and training
/// provenance.
pub struct ShapeGan {
    pub config: ShapeGanConfig,
    pub generator: ShapeGenerator,
    pub discriminator: ShapeDiscriminator,
    pub(crate) gen_store: ParamStore,
    pub(crate) disc_store: ParamStore,
    pub seed: u64,
    pub step: u64,
}

impl ShapeGan {
    pub fn new(config: ShapeGanConfig, seed: u64) -> Result<Self> {
        Self::with_dtype(config, seed, DType::F32)
    }

    pub fn with_dtype(config: ShapeGanConfig, seed: u64, dtype: DType) -> Result<Self> {
        config.validate()?;
        let mut gen_store = ParamStore::new(seed, dtype);
        let generator = ShapeGenerator::new(&mut gen_store, &config)?;
        let mut disc_store = ParamStore::new(seed.wrapping_add(1), dtype);
        let discriminator = ShapeDiscriminator::new(&mut disc_store, &config)?;
        Ok(ShapeGan {
            config,
            generator,
            discriminator,
            gen_store,
            disc_store,
            seed,
            step: 0,
        })
    }

    pub fn generator_fingerprint(&self) -> Result<u64> {
        self.gen_store.fingerprint()
    }

    pub fn discriminator_fingerprint(&self) -> Result<u64> {
        self.disc_store.fingerprint()
    }
}
