use candle_core::{DType, Device, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// A fixed feature extractor producing five maps of increasing abstraction.
/// Implementations must be frozen: training never updates them.
pub trait Perceptual: Send + Sync {
    /// Five feature maps from a (N, 3, H, W) input.
    fn features(&self, rgb: &Tensor) -> Result<Vec<Tensor>>;
    /// Hash over the parameter bytes, for bit-identity checks.
    fn fingerprint(&self) -> Result<u64>;
}

/// VGG19-topology feature pyramid with frozen, seed-initialized weights.
///
/// Layer arrangement follows VGG19 up to the fifth block's first
/// convolution; the five taps sit after the activations of conv1_1, conv2_1,
/// conv3_1, conv4_1 and conv5_1. `width` is the first block's channel count
/// (64 gives the standard widths 64/128/256/512/512). Weights are plain
/// tensors, not trainable variables, so no optimizer can ever touch them.
pub struct VggPerceptual {
    convs: Vec<(Tensor, Tensor)>,
    pool_after: Vec<usize>,
    tap_after: Vec<usize>,
    dtype: DType,
}

impl VggPerceptual {
    pub fn new(width: usize, seed: u64, dtype: DType) -> Result<Self> {
        if width == 0 {
            return Err(Error::Argument("perceptual width must be >= 1".into()));
        }
        let w = width;
        // Channel plan for the 13 convolutions up to conv5_1.
        let plan: Vec<(usize, usize)> = vec![
            (3, w),
            (w, w),
            (w, 2 * w),
            (2 * w, 2 * w),
            (2 * w, 4 * w),
            (4 * w, 4 * w),
            (4 * w, 4 * w),
            (4 * w, 4 * w),
            (4 * w, 8 * w),
            (8 * w, 8 * w),
            (8 * w, 8 * w),
            (8 * w, 8 * w),
            (8 * w, 8 * w),
        ];
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let dev = Device::Cpu;
        let mut convs = Vec::with_capacity(plan.len());
        for (cin, cout) in plan {
            // He initialization keeps activation magnitudes stable through
            // the stack.
            let std = (2.0 / (cin * 9) as f64).sqrt();
            let n = cout * cin * 9;
            let data: Vec<f64> = (0..n)
                .map(|_| {
                    let x: f64 = StandardNormal.sample(&mut rng);
                    x * std
                })
                .collect();
            let weight = Tensor::from_vec(data, (cout, cin, 3, 3), &dev)?.to_dtype(dtype)?;
            let bias = Tensor::zeros(cout, dtype, &dev)?;
            convs.push((weight, bias));
        }
        Ok(VggPerceptual {
            convs,
            pool_after: vec![1, 3, 7, 11],
            tap_after: vec![0, 2, 4, 8, 12],
            dtype,
        })
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }
}

impl Perceptual for VggPerceptual {
    fn features(&self, rgb: &Tensor) -> Result<Vec<Tensor>> {
        let (_n, c, _h, _w) = rgb.dims4()?;
        if c != 3 {
            return Err(Error::Argument(format!(
                "perceptual network expects 3 channels, got {c}"
            )));
        }
        let mut x = rgb.clone();
        let mut taps = Vec::with_capacity(5);
        for (i, (weight, bias)) in self.convs.iter().enumerate() {
            let cout = weight.dims4()?.0;
            x = x
                .conv2d(weight, 1, 1, 1, 1)?
                .broadcast_add(&bias.reshape((1, cout, 1, 1))?)?
                .relu()?;
            if self.tap_after.contains(&i) {
                taps.push(x.clone());
            }
            if self.pool_after.contains(&i) {
                x = x.max_pool2d(2)?;
            }
        }
        Ok(taps)
    }

    fn fingerprint(&self) -> Result<u64> {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for (weight, bias) in &self.convs {
            for t in [weight, bias] {
                let data = t.to_dtype(DType::F32)?.flatten_all()?.to_vec1::<f32>()?;
                for v in data {
                    for b in v.to_le_bytes() {
                        h = (h ^ b as u64).wrapping_mul(0x100_0000_01b3);
                    }
                }
            }
        }
        Ok(h)
    }
}
