use candle_core::Tensor;

use crate::error::{Error, Result};
use crate::nn::layers::{downsample2x, expect_dims4, leaky_relu, Conv2d};
use crate::nn::params::ParamStore;
use crate::style_gan::config::StyleGanConfig;

/// Intermediate discriminator activations, indexed by [scale][tap]. Real and
/// fake stacks being compared must agree in shape at every position.
#[derive(Clone)]
pub struct FeatureStack {
    pub scales: Vec<Vec<Tensor>>,
}

impl FeatureStack {
    pub fn check_compatible(&self, other: &FeatureStack) -> Result<()> {
        if self.scales.len() != other.scales.len() {
            return Err(Error::Argument(format!(
                "feature stacks have {} vs {} scales",
                self.scales.len(),
                other.scales.len()
            )));
        }
        for (k, (a, b)) in self.scales.iter().zip(&other.scales).enumerate() {
            if a.len() != b.len() {
                return Err(Error::Argument(format!(
                    "scale {k} has {} vs {} taps",
                    a.len(),
                    b.len()
                )));
            }
            for (i, (ta, tb)) in a.iter().zip(b).enumerate() {
                if ta.dims() != tb.dims() {
                    return Err(Error::Argument(format!(
                        "feature map ({k}, {i}) shape mismatch: {:?} vs {:?}",
                        ta.dims(),
                        tb.dims()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// PatchGAN critic for one scale: stride-2 convolutions with leaky relu
/// (each activation is a feature tap), then a one-channel logit map.
struct PatchDiscriminator {
    taps: Vec<Conv2d>,
    head: Conv2d,
    leaky_slope: f64,
}

impl PatchDiscriminator {
    fn new(store: &mut ParamStore, name: &str, config: &StyleGanConfig) -> Result<Self> {
        let t = config.disc_taps;
        let mut taps = Vec::with_capacity(t);
        let mut cin = 2 + 4; // condition planes + image planes
        for i in 0..t {
            let cout = config.disc_channels(i);
            // Final tap runs at stride 1, like the deepest pix2pixHD layer.
            let stride = if i + 1 == t { 1 } else { 2 };
            taps.push(Conv2d::new(
                store,
                &format!("{name}.tap{i}"),
                cin,
                cout,
                4,
                stride,
                1,
            )?);
            cin = cout;
        }
        let head = Conv2d::new(store, &format!("{name}.head"), cin, 1, 4, 1, 1)?;
        Ok(PatchDiscriminator {
            taps,
            head,
            leaky_slope: config.leaky_slope,
        })
    }

    fn forward(&self, x: &Tensor) -> Result<(Tensor, Vec<Tensor>)> {
        let mut h = x.clone();
        let mut features = Vec::with_capacity(self.taps.len());
        for conv in &self.taps {
            h = leaky_relu(&conv.forward(&h)?, self.leaky_slope)?;
            features.push(h.clone());
        }
        Ok((self.head.forward(&h)?, features))
    }
}

/// Discriminator pyramid: scale 0 sees the full-resolution (mask, image)
/// pair, each further scale a 2x average-pooled copy. Every scale has its
/// own parameters.
pub struct MultiscaleDiscriminator {
    scales: Vec<PatchDiscriminator>,
    config: StyleGanConfig,
}

impl MultiscaleDiscriminator {
    pub fn new(store: &mut ParamStore, config: &StyleGanConfig) -> Result<Self> {
        if config.disc_scales == 0 {
            return Err(Error::Argument("discriminator needs at least one scale".into()));
        }
        let mut scales = Vec::with_capacity(config.disc_scales);
        for k in 0..config.disc_scales {
            scales.push(PatchDiscriminator::new(store, &format!("scale{k}"), config)?);
        }
        Ok(MultiscaleDiscriminator {
            scales,
            config: config.clone(),
        })
    }

    /// Per-scale patch logits plus the feature stack.
    pub fn forward(&self, mask: &Tensor, image: &Tensor) -> Result<(Vec<Tensor>, FeatureStack)> {
        let r = self.config.resolution;
        expect_dims4(mask, (None, Some(2), Some(r), Some(r)), "condition mask")?;
        expect_dims4(image, (None, Some(4), Some(r), Some(r)), "discriminator image")?;
        if mask.dims4()?.0 != image.dims4()?.0 {
            return Err(Error::Argument("mask/image batch mismatch".into()));
        }
        let mut input = Tensor::cat(&[mask, image], 1)?;
        let mut logits = Vec::with_capacity(self.scales.len());
        let mut stacks = Vec::with_capacity(self.scales.len());
        for (k, disc) in self.scales.iter().enumerate() {
            if k > 0 {
                input = downsample2x(&input)?;
            }
            let (l, features) = disc.forward(&input)?;
            logits.push(l);
            stacks.push(features);
        }
        Ok((logits, FeatureStack { scales: stacks }))
    }
}
