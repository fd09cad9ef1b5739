use candle_core::Tensor;

use crate::error::{Error, Result};
use crate::nn::layers::{
    expect_dims4, leaky_relu, normalize_batch, resize_nearest, upsample2x, Conv2d, Dense,
};
use crate::nn::params::ParamStore;
use crate::style_gan::config::StyleGanConfig;

/// Spatially-adaptive normalization: parameter-free batch normalization
/// followed by a per-pixel scale and bias predicted from the semantic mask.
struct SpadeNorm {
    shared: Conv2d,
    gamma: Conv2d,
    beta: Conv2d,
    leaky_slope: f64,
}

impl SpadeNorm {
    fn new(store: &mut ParamStore, name: &str, channels: usize, hidden: usize) -> Result<Self> {
        Ok(SpadeNorm {
            shared: Conv2d::new(store, &format!("{name}.shared"), 2, hidden, 3, 1, 1)?,
            gamma: Conv2d::new(store, &format!("{name}.gamma"), hidden, channels, 3, 1, 1)?,
            beta: Conv2d::new(store, &format!("{name}.beta"), hidden, channels, 3, 1, 1)?,
            leaky_slope: 0.2,
        })
    }

    /// `mask` must already be resized to x's resolution.
    fn forward(&self, x: &Tensor, mask: &Tensor) -> Result<Tensor> {
        let xhat = normalize_batch(x)?;
        let hidden = leaky_relu(&self.shared.forward(mask)?, self.leaky_slope)?;
        let gamma = self.gamma.forward(&hidden)?;
        let beta = self.beta.forward(&hidden)?;
        Ok(xhat.mul(&(gamma + 1.0)?)?.add(&beta)?)
    }
}

/// Residual block whose normalization layers are all mask-conditioned.
struct SpadeResBlock {
    norm1: SpadeNorm,
    conv1: Conv2d,
    norm2: SpadeNorm,
    conv2: Conv2d,
    skip: Option<(SpadeNorm, Conv2d)>,
    leaky_slope: f64,
}

impl SpadeResBlock {
    fn new(
        store: &mut ParamStore,
        name: &str,
        cin: usize,
        cout: usize,
        hidden: usize,
        leaky_slope: f64,
    ) -> Result<Self> {
        let cmid = cin.min(cout);
        let skip = if cin != cout {
            Some((
                SpadeNorm::new(store, &format!("{name}.norm_s"), cin, hidden)?,
                Conv2d::new(store, &format!("{name}.conv_s"), cin, cout, 1, 1, 0)?,
            ))
        } else {
            None
        };
        Ok(SpadeResBlock {
            norm1: SpadeNorm::new(store, &format!("{name}.norm1"), cin, hidden)?,
            conv1: Conv2d::new(store, &format!("{name}.conv1"), cin, cmid, 3, 1, 1)?,
            norm2: SpadeNorm::new(store, &format!("{name}.norm2"), cmid, hidden)?,
            conv2: Conv2d::new(store, &format!("{name}.conv2"), cmid, cout, 3, 1, 1)?,
            skip,
            leaky_slope,
        })
    }

    fn forward(&self, x: &Tensor, mask: &Tensor) -> Result<Tensor> {
        let h = leaky_relu(&self.norm1.forward(x, mask)?, self.leaky_slope)?;
        let h = self.conv1.forward(&h)?;
        let h = leaky_relu(&self.norm2.forward(&h, mask)?, self.leaky_slope)?;
        let h = self.conv2.forward(&h)?;
        let s = match &self.skip {
            Some((norm, conv)) => conv.forward(&norm.forward(x, mask)?)?,
            None => x.clone(),
        };
        Ok((h + s)?)
    }
}

/// Mask-conditioned generator: a dense projection of the style latent to a
/// 4x4 grid, SPADE residual blocks interleaved with nearest upsampling, and
/// a tanh head emitting the four output planes (R, G, B, NIR).
pub struct SpadeGenerator {
    fc: Dense,
    blocks: Vec<SpadeResBlock>,
    head: Conv2d,
    config: StyleGanConfig,
}

impl SpadeGenerator {
    pub fn new(store: &mut ParamStore, config: &StyleGanConfig) -> Result<Self> {
        let n_up = config.up_blocks()?;
        let ch0 = config.gen_channels(0);
        let fc = Dense::new(store, "fc", config.style_dim, ch0 * 4 * 4)?;
        let mut blocks = Vec::with_capacity(n_up);
        for i in 0..n_up {
            blocks.push(SpadeResBlock::new(
                store,
                &format!("block{i}"),
                config.gen_channels(i),
                config.gen_channels(i + 1),
                config.spade_hidden,
                config.leaky_slope,
            )?);
        }
        let head = Conv2d::new(store, "head", config.gen_channels(n_up), 4, 3, 1, 1)?;
        Ok(SpadeGenerator {
            fc,
            blocks,
            head,
            config: config.clone(),
        })
    }

    /// (N, 2, R, R) one-hot mask plus (N, D) latent -> (N, 4, R, R) in
    /// [-1, 1].
    pub fn forward(&self, mask: &Tensor, z: &Tensor) -> Result<Tensor> {
        let r = self.config.resolution;
        expect_dims4(mask, (None, Some(2), Some(r), Some(r)), "condition mask")?;
        let (n, d) = z
            .dims2()
            .map_err(|_| Error::Argument("style latent must be rank 2".into()))?;
        if d != self.config.style_dim {
            return Err(Error::Argument(format!(
                "style latent length {d} does not match configured style_dim {}",
                self.config.style_dim
            )));
        }
        if mask.dims4()?.0 != n {
            return Err(Error::Argument(format!(
                "batch mismatch: mask {} vs latent {n}",
                mask.dims4()?.0
            )));
        }
        let ch0 = self.config.gen_channels(0);
        let mut x = self.fc.forward(z)?.reshape((n, ch0, 4, 4))?;
        let mut res = 4usize;
        for block in &self.blocks {
            let mask_at = resize_nearest(mask, res, res)?;
            x = block.forward(&x, &mask_at)?;
            x = upsample2x(&x)?;
            res *= 2;
        }
        let x = leaky_relu(&x, self.config.leaky_slope)?;
        Ok(self.head.forward(&x)?.tanh()?)
    }
}
