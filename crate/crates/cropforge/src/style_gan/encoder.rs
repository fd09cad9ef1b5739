use candle_core::Tensor;

use crate::error::{Error, Result};
use crate::nn::layers::{expect_dims4, leaky_relu, Conv2d, Dense};
use crate::nn::params::ParamStore;
use crate::style_gan::config::StyleGanConfig;

/// Variational style encoder: stride-2 convolutions down to 4x4, then two
/// linear heads producing the posterior mean and log-variance.
pub struct StyleEncoder {
    convs: Vec<Conv2d>,
    fc_mu: Dense,
    fc_logvar: Dense,
    leaky_slope: f64,
    resolution: usize,
    in_channels: usize,
}

impl StyleEncoder {
    pub fn new(store: &mut ParamStore, config: &StyleGanConfig) -> Result<Self> {
        let stages = config.down_stages()?;
        let mut convs = Vec::with_capacity(stages);
        let mut cin = config.encoder_in_channels;
        for i in 0..stages {
            let cout = config.enc_channels(i);
            convs.push(Conv2d::new(store, &format!("down{i}"), cin, cout, 3, 2, 1)?);
            cin = cout;
        }
        let flat = cin * 4 * 4;
        let fc_mu = Dense::new(store, "fc_mu", flat, config.style_dim)?;
        let fc_logvar = Dense::new(store, "fc_logvar", flat, config.style_dim)?;
        Ok(StyleEncoder {
            convs,
            fc_mu,
            fc_logvar,
            leaky_slope: config.leaky_slope,
            resolution: config.resolution,
            in_channels: config.encoder_in_channels,
        })
    }

    /// (N, 4, R, R) -> ((N, D), (N, D)) posterior parameters.
    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, Tensor)> {
        let r = self.resolution;
        expect_dims4(
            x,
            (None, Some(self.in_channels), Some(r), Some(r)),
            "style encoder input",
        )?;
        let mut h = x.clone();
        for conv in &self.convs {
            h = leaky_relu(&conv.forward(&h)?, self.leaky_slope)?;
        }
        let n = h.dims4()?.0;
        let flat = h.reshape((n, ()))?;
        Ok((self.fc_mu.forward(&flat)?, self.fc_logvar.forward(&flat)?))
    }
}
