use candle_core::Tensor;

use crate::error::{Error, Result};
use crate::nn::params::ParamStore;

const BN_EPS: f64 = 1e-5;

/// 2d convolution with same-style integer padding.
pub struct Conv2d {
    weight: candle_core::Var,
    bias: Option<candle_core::Var>,
    stride: usize,
    padding: usize,
}

impl Conv2d {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    ) -> Result<Self> {
        // DCGAN-style init.
        let std = 0.02;
        let weight = store.normal(&format!("{name}.weight"), &[out_ch, in_ch, kernel, kernel], std)?;
        let bias = Some(store.constant(&format!("{name}.bias"), &[out_ch], 0.0)?);
        Ok(Conv2d {
            weight,
            bias,
            stride,
            padding,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let y = x.conv2d(self.weight.as_tensor(), self.padding, self.stride, 1, 1)?;
        match &self.bias {
            Some(b) => {
                let out_ch = b.dims()[0];
                Ok(y.broadcast_add(&b.as_tensor().reshape((1, out_ch, 1, 1))?)?)
            }
            None => Ok(y),
        }
    }
}

/// Fully connected layer; weight is (out, in).
pub struct Dense {
    weight: candle_core::Var,
    bias: candle_core::Var,
}

impl Dense {
    pub fn new(store: &mut ParamStore, name: &str, in_dim: usize, out_dim: usize) -> Result<Self> {
        let std = 0.02;
        let weight = store.normal(&format!("{name}.weight"), &[out_dim, in_dim], std)?;
        let bias = store.constant(&format!("{name}.bias"), &[out_dim], 0.0)?;
        Ok(Dense { weight, bias })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        Ok(x.matmul(&self.weight.as_tensor().t()?)?
            .broadcast_add(self.bias.as_tensor())?)
    }
}

/// Batch normalization over (N, H, W) per channel with learned scale/shift.
///
/// Batch statistics are used in both training and inference; no running
/// averages are kept, so a forward pass is a pure function of its input.
pub struct BatchNorm2d {
    gamma: candle_core::Var,
    beta: candle_core::Var,
}

impl BatchNorm2d {
    pub fn new(store: &mut ParamStore, name: &str, channels: usize) -> Result<Self> {
        let gamma = store.constant(&format!("{name}.gamma"), &[channels], 1.0)?;
        let beta = store.constant(&format!("{name}.beta"), &[channels], 0.0)?;
        Ok(BatchNorm2d { gamma, beta })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let c = x.dims4()?.1;
        let xhat = normalize_batch(x)?;
        let g = self.gamma.as_tensor().reshape((1, c, 1, 1))?;
        let b = self.beta.as_tensor().reshape((1, c, 1, 1))?;
        Ok(xhat.broadcast_mul(&g)?.broadcast_add(&b)?)
    }
}

/// Parameter-free part of batch normalization: center and scale each channel
/// by statistics taken over (N, H, W).
pub fn normalize_batch(x: &Tensor) -> Result<Tensor> {
    let (_n, _c, _h, _w) = x.dims4()?;
    let mean = x.mean_keepdim(0)?.mean_keepdim(2)?.mean_keepdim(3)?;
    let centered = x.broadcast_sub(&mean)?;
    let var = centered
        .sqr()?
        .mean_keepdim(0)?
        .mean_keepdim(2)?
        .mean_keepdim(3)?;
    let denom = (var + BN_EPS)?.sqrt()?;
    Ok(centered.broadcast_div(&denom)?)
}

pub fn leaky_relu(x: &Tensor, slope: f64) -> Result<Tensor> {
    Ok(candle_nn::ops::leaky_relu(x, slope)?)
}

pub fn sigmoid(x: &Tensor) -> Result<Tensor> {
    Ok(candle_nn::ops::sigmoid(x)?)
}

/// Doubles the spatial resolution with nearest-neighbor interpolation.
pub fn upsample2x(x: &Tensor) -> Result<Tensor> {
    let (_n, _c, h, w) = x.dims4()?;
    Ok(x.upsample_nearest2d(h * 2, w * 2)?)
}

/// Halves the spatial resolution by 2x2 average pooling.
pub fn downsample2x(x: &Tensor) -> Result<Tensor> {
    Ok(x.avg_pool2d(2)?)
}

/// Nearest-neighbor resize to an arbitrary square resolution (used to bring
/// the condition mask to each generator block's scale).
pub fn resize_nearest(x: &Tensor, h: usize, w: usize) -> Result<Tensor> {
    Ok(x.upsample_nearest2d(h, w)?)
}

/// Numerically stable binary cross entropy on logits against a constant
/// target (1.0 for "valid", 0.0 for "fake"), averaged over all elements.
pub fn bce_with_logits_scalar_target(logits: &Tensor, target: f64) -> Result<Tensor> {
    // max(l, 0) - l*t + log(1 + exp(-|l|))
    let pos = logits.relu()?;
    let lt = (logits * target)?;
    let softplus = (logits.abs()?.neg()?.exp()? + 1.0)?.log()?;
    Ok(((pos - lt)? + softplus)?.mean_all()?)
}

pub fn expect_dims4(
    x: &Tensor,
    expect: (Option<usize>, Option<usize>, Option<usize>, Option<usize>),
    what: &str,
) -> Result<()> {
    let (n, c, h, w) = x.dims4()?;
    let ok = expect.0.is_none_or(|e| e == n)
        && expect.1.is_none_or(|e| e == c)
        && expect.2.is_none_or(|e| e == h)
        && expect.3.is_none_or(|e| e == w);
    if !ok {
        return Err(Error::Argument(format!(
            "{what}: got shape ({n}, {c}, {h}, {w}), expected {expect:?}"
        )));
    }
    Ok(())
}
