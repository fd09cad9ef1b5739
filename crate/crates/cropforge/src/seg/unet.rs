use candle_core::{DType, Tensor};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::layers::{expect_dims4, leaky_relu, upsample2x, BatchNorm2d, Conv2d};
use crate::nn::params::ParamStore;
use crate::seg::confusion::ChannelMode;

/// Compact encoder-decoder segmentation network standing in for the paper's
/// reference CNN; the augmentation comparison only needs one fixed
/// architecture across dataset variants.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SegConfig {
    pub channels: ChannelMode,
    pub num_classes: usize,
    /// Stem width; doubled per encoder stage, capped at 256.
    pub base_channels: usize,
    /// Encoder/decoder depth (stride-2 stages).
    pub depth: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub batch_size: usize,
    /// Square crop sampled from scenes during training; must be divisible by
    /// 2^depth.
    pub crop_size: usize,
    pub steps: u64,
    /// Validation cadence (steps) for early stopping.
    pub eval_every: u64,
    /// Evaluations without improvement before stopping.
    pub patience: u64,
    /// Class-weight clip range for the inverse-frequency loss weights.
    pub weight_clip: (f64, f64),
}

impl Default for SegConfig {
    fn default() -> Self {
        SegConfig {
            channels: ChannelMode::RgbNir,
            num_classes: 3,
            base_channels: 16,
            depth: 4,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            batch_size: 4,
            crop_size: 64,
            steps: 400,
            eval_every: 50,
            patience: 10,
            weight_clip: (0.2, 5.0),
        }
    }
}

impl SegConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::Argument("need at least two classes".into()));
        }
        if self.depth == 0 || self.depth > 6 {
            return Err(Error::Argument(format!("depth {} outside 1..=6", self.depth)));
        }
        if self.crop_size % (1 << self.depth) != 0 || self.crop_size == 0 {
            return Err(Error::Argument(format!(
                "crop_size {} must be a positive multiple of {}",
                self.crop_size,
                1 << self.depth
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Argument("batch_size must be >= 1".into()));
        }
        Ok(())
    }

    fn ch(&self, stage: usize) -> usize {
        (self.base_channels << stage).min(256)
    }
}

struct ConvBlock {
    conv: Conv2d,
    norm: BatchNorm2d,
}

impl ConvBlock {
    fn new(
        store: &mut ParamStore,
        name: &str,
        cin: usize,
        cout: usize,
        stride: usize,
    ) -> Result<Self> {
        Ok(ConvBlock {
            conv: Conv2d::new(store, &format!("{name}.conv"), cin, cout, 3, stride, 1)?,
            norm: BatchNorm2d::new(store, &format!("{name}.norm"), cout)?,
        })
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        leaky_relu(&self.norm.forward(&self.conv.forward(x)?)?, 0.1)
    }
}

/// U-shaped network: stride-2 encoder stages with skip connections into a
/// nearest-upsampling decoder, and a 1x1 logit head.
pub struct SegNet {
    stem: ConvBlock,
    down: Vec<(ConvBlock, ConvBlock)>,
    up: Vec<ConvBlock>,
    head: Conv2d,
    pub config: SegConfig,
}

impl SegNet {
    pub fn new(store: &mut ParamStore, config: &SegConfig) -> Result<Self> {
        config.validate()?;
        let cin = config.channels.channels();
        let stem = ConvBlock::new(store, "stem", cin, config.ch(0), 1)?;
        let mut down = Vec::with_capacity(config.depth);
        for i in 0..config.depth {
            down.push((
                ConvBlock::new(store, &format!("down{i}.a"), config.ch(i), config.ch(i + 1), 2)?,
                ConvBlock::new(store, &format!("down{i}.b"), config.ch(i + 1), config.ch(i + 1), 1)?,
            ));
        }
        let mut up = Vec::with_capacity(config.depth);
        for i in (0..config.depth).rev() {
            // Upsampled features concatenated with the skip at stage i.
            up.push(ConvBlock::new(
                store,
                &format!("up{i}"),
                config.ch(i + 1) + config.ch(i),
                config.ch(i),
                1,
            )?);
        }
        let head = Conv2d::new(store, "head", config.ch(0), config.num_classes, 1, 1, 0)?;
        Ok(SegNet {
            stem,
            down,
            up,
            head,
            config: config.clone(),
        })
    }

    /// (N, C, H, W) -> (N, classes, H, W) logits. H and W must be divisible
    /// by 2^depth; the channel count must match the configured input head.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let cin = self.config.channels.channels();
        expect_dims4(x, (None, Some(cin), None, None), "segmentation input")?;
        let (_n, _c, h, w) = x.dims4()?;
        let f = 1 << self.config.depth;
        if h % f != 0 || w % f != 0 {
            return Err(Error::Argument(format!(
                "input {h}x{w} not divisible by {f}"
            )));
        }
        let mut skips = Vec::with_capacity(self.config.depth + 1);
        let mut h = self.stem.forward(x)?;
        for (a, b) in &self.down {
            skips.push(h.clone());
            h = b.forward(&a.forward(&h)?)?;
        }
        for up in &self.up {
            let skip = skips.pop().expect("one skip per decoder stage");
            h = upsample2x(&h)?;
            h = up.forward(&Tensor::cat(&[&h, &skip], 1)?)?;
        }
        Ok(self.head.forward(&h)?)
    }
}

/// Weighted per-pixel cross entropy from logits. `targets` is (N, H, W) u8;
/// `class_weights` has one entry per class.
pub fn cross_entropy_loss(
    logits: &Tensor,
    targets: &[Vec<u8>],
    class_weights: &[f64],
) -> Result<Tensor> {
    let (n, c, h, w) = logits.dims4()?;
    if targets.len() != n {
        return Err(Error::Argument("batch size mismatch".into()));
    }
    let logp = candle_nn::ops::log_softmax(logits, 1)?;
    // One-hot weighted selection of the target log-probabilities.
    let mut onehot = vec![0f32; n * c * h * w];
    let mut weights = vec![0f32; n * c * h * w];
    let mut weight_sum = 0f64;
    for (b, target) in targets.iter().enumerate() {
        if target.len() != h * w {
            return Err(Error::Argument("target size mismatch".into()));
        }
        for (i, &cls) in target.iter().enumerate() {
            if cls as usize >= c {
                return Err(Error::Argument(format!("class {cls} out of range")));
            }
            let idx = b * c * h * w + (cls as usize) * h * w + i;
            onehot[idx] = 1.0;
            let wgt = class_weights[cls as usize];
            weights[idx] = wgt as f32;
            weight_sum += wgt;
        }
    }
    let dev = candle_core::Device::Cpu;
    let onehot = Tensor::from_vec(onehot, (n, c, h, w), &dev)?.to_dtype(logits.dtype())?;
    let weights = Tensor::from_vec(weights, (n, c, h, w), &dev)?.to_dtype(logits.dtype())?;
    let picked = logp.mul(&onehot)?.mul(&weights)?.sum_all()?;
    Ok((picked.neg()? / weight_sum)?)
}

/// Class predictions from logits: argmax over the class dimension.
pub fn predict_classes(logits: &Tensor) -> Result<Vec<Vec<u8>>> {
    let (n, c, h, w) = logits.dims4()?;
    let flat = logits
        .to_dtype(DType::F32)?
        .flatten_all()?
        .to_vec1::<f32>()?;
    let mut out = Vec::with_capacity(n);
    for b in 0..n {
        let mut pred = vec![0u8; h * w];
        for i in 0..h * w {
            let mut best = 0usize;
            let mut best_v = f32::NEG_INFINITY;
            for cls in 0..c {
                let v = flat[b * c * h * w + cls * h * w + i];
                if v > best_v {
                    best_v = v;
                    best = cls;
                }
            }
            pred[i] = best as u8;
        }
        out.push(pred);
    }
    Ok(out)
}
