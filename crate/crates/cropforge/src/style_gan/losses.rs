//! Training objectives: multiscale hinge adversarial loss, discriminator
//! feature matching, perceptual (VGG-topology) loss and the KL regularizer
//! of the variational style encoder.

use candle_core::Tensor;

use crate::error::{Error, Result};
use crate::style_gan::discriminator::FeatureStack;
use crate::style_gan::perceptual::Perceptual;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GanSide {
    Discriminator,
    Generator,
}

/// Hinge adversarial loss, averaged over logit-map elements within a scale
/// and then over scales.
///
/// Discriminator: E[relu(1 - D(x))] + E[relu(1 + D(G))], i.e.
/// -E[min(0, -1 + D(x))] - E[min(0, -1 - D(G))].
/// Generator: -E[D(G)].
pub fn loss_adversarial(
    real_logits: Option<&[Tensor]>,
    fake_logits: &[Tensor],
    side: GanSide,
) -> Result<Tensor> {
    if fake_logits.is_empty() {
        return Err(Error::Argument("adversarial loss needs fake logits".into()));
    }
    let k = fake_logits.len() as f64;
    match side {
        GanSide::Discriminator => {
            let real_logits = real_logits.ok_or_else(|| {
                Error::Argument("discriminator-side loss needs real logits".into())
            })?;
            if real_logits.len() != fake_logits.len() {
                return Err(Error::Argument(format!(
                    "scale count mismatch: {} real vs {} fake logit maps",
                    real_logits.len(),
                    fake_logits.len()
                )));
            }
            let mut acc: Option<Tensor> = None;
            for (r, f) in real_logits.iter().zip(fake_logits) {
                let real_term = (1.0 - r)?.relu()?.mean_all()?;
                let fake_term = (1.0 + f)?.relu()?.mean_all()?;
                let term = (real_term + fake_term)?;
                acc = Some(match acc {
                    None => term,
                    Some(a) => (a + term)?,
                });
            }
            Ok((acc.expect("nonempty scales") / k)?)
        }
        GanSide::Generator => {
            if real_logits.is_some() {
                return Err(Error::Argument(
                    "generator-side loss takes fake logits only".into(),
                ));
            }
            let mut acc: Option<Tensor> = None;
            for f in fake_logits {
                let term = f.mean_all()?.neg()?;
                acc = Some(match acc {
                    None => term,
                    Some(a) => (a + term)?,
                });
            }
            Ok((acc.expect("nonempty scales") / k)?)
        }
    }
}

/// Sum over scales and taps of the per-map mean L1 distance between real and
/// fake discriminator features. The real stack is treated as a constant:
/// gradients flow to the fake stack only.
pub fn loss_feature_matching(real: &FeatureStack, fake: &FeatureStack) -> Result<Tensor> {
    real.check_compatible(fake)?;
    let mut acc: Option<Tensor> = None;
    for (real_scale, fake_scale) in real.scales.iter().zip(&fake.scales) {
        for (r, f) in real_scale.iter().zip(fake_scale) {
            let term = f.sub(&r.detach())?.abs()?.mean_all()?;
            acc = Some(match acc {
                None => term,
                Some(a) => (a + term)?,
            });
        }
    }
    acc.ok_or_else(|| Error::Argument("feature stacks are empty".into()))
}

/// Perceptual loss: sum over the five tap maps of 1/2^i times the mean L1
/// feature distance, computed on the RGB planes only. The real branch is
/// detached; the perceptual network itself is frozen by construction.
pub fn loss_vgg(net: &dyn Perceptual, real: &Tensor, fake: &Tensor) -> Result<Tensor> {
    if real.dims() != fake.dims() {
        return Err(Error::Argument(format!(
            "image shapes differ: {:?} vs {:?}",
            real.dims(),
            fake.dims()
        )));
    }
    let rgb = |t: &Tensor| -> Result<Tensor> {
        let c = t.dims4()?.1;
        if c < 3 {
            return Err(Error::Argument(format!("need >= 3 channels, got {c}")));
        }
        Ok(t.narrow(1, 0, 3)?)
    };
    let real_feats = net.features(&rgb(real)?.detach())?;
    let fake_feats = net.features(&rgb(fake)?)?;
    if real_feats.len() != 5 || fake_feats.len() != 5 {
        return Err(Error::Argument(format!(
            "perceptual network must produce 5 maps, got {} and {}",
            real_feats.len(),
            fake_feats.len()
        )));
    }
    let mut acc: Option<Tensor> = None;
    for (i, (r, f)) in real_feats.iter().zip(&fake_feats).enumerate() {
        let weight = 1.0 / 2f64.powi(i as i32 + 1);
        let term = (f.sub(&r.detach())?.abs()?.mean_all()? * weight)?;
        acc = Some(match acc {
            None => term,
            Some(a) => (a + term)?,
        });
    }
    Ok(acc.expect("five maps"))
}

/// KL divergence of the variational posterior from the standard normal
/// prior: 1/2 sum_j (mu_j^2 + exp(logvar_j) - 1 - logvar_j), averaged over
/// the batch dimension.
pub fn loss_kl(mu: &Tensor, logvar: &Tensor) -> Result<Tensor> {
    if mu.dims() != logvar.dims() {
        return Err(Error::Argument(format!(
            "mu shape {:?} != logvar shape {:?}",
            mu.dims(),
            logvar.dims()
        )));
    }
    let per_sample = ((mu.sqr()? + logvar.exp()?)? - 1.0)?
        .sub(logvar)?
        .sum_keepdim(candle_core::D::Minus1)?;
    Ok((per_sample.mean_all()? * 0.5)?)
}

/// z = mu + exp(logvar/2) * epsilon on tensors (batched version of
/// [`crate::style_gan::StyleCode::reparameterize`]).
pub fn reparameterize(mu: &Tensor, logvar: &Tensor, epsilon: &Tensor) -> Result<Tensor> {
    if mu.dims() != logvar.dims() || mu.dims() != epsilon.dims() {
        return Err(Error::Argument(format!(
            "shape mismatch: mu {:?}, logvar {:?}, epsilon {:?}",
            mu.dims(),
            logvar.dims(),
            epsilon.dims()
        )));
    }
    let sigma = (logvar * 0.5)?.exp()?;
    Ok((mu + sigma.mul(epsilon)?)?)
}
