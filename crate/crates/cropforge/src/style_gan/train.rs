use std::fs;
use std::path::Path;

use candle_core::{DType, Tensor};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::nn::params::NoiseSource;
use crate::nn::{Adam, Checkpoint, ParamStore};
use crate::shape_gan::BinaryShape;
use crate::style_gan::config::StyleGanConfig;
use crate::style_gan::discriminator::MultiscaleDiscriminator;
use crate::style_gan::encoder::StyleEncoder;
use crate::style_gan::generator::SpadeGenerator;
use crate::style_gan::losses::{
    loss_adversarial, loss_feature_matching, loss_kl, loss_vgg, reparameterize, GanSide,
};
use crate::style_gan::perceptual::{Perceptual, VggPerceptual};
use crate::style_gan::{ConditionMask, FourChannelImage, StyleCode};

/// Per-step loss components. `recon_mae` is filled only when the config
/// enables reconstruction logging.
#[derive(Clone, Debug, Default)]
pub struct StyleLossHistory {
    pub rows: Vec<StyleLossRow>,
}

#[derive(Clone, Debug)]
pub struct StyleLossRow {
    pub step: u64,
    pub d_loss: f64,
    pub g_adv: f64,
    pub g_fm: f64,
    pub g_vgg: f64,
    pub g_kld: f64,
    pub recon_mae: Option<f64>,
}

impl StyleLossHistory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,d_loss,g_adv,g_fm,g_vgg,g_kld\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.step, r.d_loss, r.g_adv, r.g_fm, r.g_vgg, r.g_kld
            ));
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Generator, style encoder, multiscale discriminator and the frozen
/// perceptual network, with the training provenance needed to checkpoint.
pub struct StyleGan {
    pub config: StyleGanConfig,
    pub generator: SpadeGenerator,
    pub encoder: StyleEncoder,
    pub discriminator: MultiscaleDiscriminator,
    pub perceptual: VggPerceptual,
    pub(crate) gen_store: ParamStore,
    pub(crate) enc_store: ParamStore,
    pub(crate) disc_store: ParamStore,
    pub seed: u64,
    pub step: u64,
}

impl StyleGan {
    pub fn new(config: StyleGanConfig, seed: u64) -> Result<Self> {
        Self::with_dtype(config, seed, DType::F32)
    }

    pub fn with_dtype(config: StyleGanConfig, seed: u64, dtype: DType) -> Result<Self> {
        config.validate()?;
        let mut gen_store = ParamStore::new(seed, dtype);
        let generator = SpadeGenerator::new(&mut gen_store, &config)?;
        let mut enc_store = ParamStore::new(seed.wrapping_add(1), dtype);
        let encoder = StyleEncoder::new(&mut enc_store, &config)?;
        let mut disc_store = ParamStore::new(seed.wrapping_add(2), dtype);
        let discriminator = MultiscaleDiscriminator::new(&mut disc_store, &config)?;
        let perceptual = VggPerceptual::new(config.perceptual_width, config.perceptual_seed, dtype)?;
        Ok(StyleGan {
            config,
            generator,
            encoder,
            discriminator,
            perceptual,
            gen_store,
            enc_store,
            disc_store,
            seed,
            step: 0,
        })
    }

    pub fn generator_fingerprint(&self) -> Result<u64> {
        self.gen_store.fingerprint()
    }

    pub fn encoder_fingerprint(&self) -> Result<u64> {
        self.enc_store.fingerprint()
    }

    pub fn discriminator_fingerprint(&self) -> Result<u64> {
        self.disc_store.fingerprint()
    }

    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        Checkpoint::new(
            "style_gan",
            self.seed,
            self.step,
            &self.config,
            &[
                ("generator", &self.gen_store),
                ("encoder", &self.enc_store),
                ("discriminator", &self.disc_store),
            ],
        )
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        if ckpt.kind != "style_gan" {
            return Err(Error::Format(format!(
                "expected a style_gan checkpoint, found {}",
                ckpt.kind
            )));
        }
        let config: StyleGanConfig = ckpt.config_as()?;
        let mut model = StyleGan::new(config, ckpt.seed)?;
        ckpt.restore("generator", &mut model.gen_store)?;
        ckpt.restore("encoder", &mut model.enc_store)?;
        ckpt.restore("discriminator", &mut model.disc_store)?;
        model.step = ckpt.step;
        Ok(model)
    }

    pub fn checkpoint_name(step: u64) -> String {
        format!("style_gan_step{step}.ckpt")
    }

    /// Posterior style parameters of a patch.
    pub fn encode_style(&self, patch: &FourChannelImage) -> Result<StyleCode> {
        let x = patch.to_tensor(self.gen_store.dtype())?;
        let (mu, logvar) = self.encoder.forward(&x)?;
        StyleCode::new(
            mu.to_dtype(DType::F32)?.flatten_all()?.to_vec1::<f32>()?,
            logvar.to_dtype(DType::F32)?.flatten_all()?.to_vec1::<f32>()?,
        )
    }

    /// Texture for a silhouette with a freely sampled style.
    pub fn generate_crop_style(&self, shape: &BinaryShape, seed: u64) -> Result<FourChannelImage> {
        let mask = ConditionMask::from_binary(&shape.values);
        let mut noise = NoiseSource::new(seed);
        let z = noise.normal(&[1, self.config.style_dim], self.gen_store.dtype())?;
        let out = self.generator.forward(&mask.to_tensor(self.gen_store.dtype())?, &z)?;
        FourChannelImage::from_tensor(&out)
    }

    /// Texture for a silhouette whose style is guided by a real background
    /// patch: z = mu + sigma * epsilon from the encoded background.
    pub fn generate_soil_guided(
        &self,
        shape: &BinaryShape,
        background: &FourChannelImage,
        epsilon: &[f32],
    ) -> Result<FourChannelImage> {
        let code = self.encode_style(background)?;
        let z = code.reparameterize(epsilon)?;
        let mask = ConditionMask::from_binary(&shape.values);
        let zt = Tensor::from_vec(z, (1, self.config.style_dim), &candle_core::Device::Cpu)?
            .to_dtype(self.gen_store.dtype())?;
        let out = self.generator.forward(&mask.to_tensor(self.gen_store.dtype())?, &zt)?;
        FourChannelImage::from_tensor(&out)
    }
}

fn batch_tensors(
    pairs: &[(ConditionMask, FourChannelImage)],
    indices: &[usize],
    dtype: DType,
) -> Result<(Tensor, Tensor)> {
    let masks: Vec<Tensor> = indices
        .iter()
        .map(|&i| pairs[i].0.to_tensor(dtype))
        .collect::<Result<_>>()?;
    let images: Vec<Tensor> = indices
        .iter()
        .map(|&i| pairs[i].1.to_tensor(dtype))
        .collect::<Result<_>>()?;
    Ok((Tensor::cat(&masks, 0)?, Tensor::cat(&images, 0)?))
}

fn scalar(t: &Tensor) -> Result<f64> {
    Ok(t.to_dtype(DType::F64)?.to_scalar::<f64>()?)
}

/// Alternating multiscale-hinge training of the conditioned generator, the
/// style encoder (reconstruction path plus KL) and the discriminator.
pub fn train_style_gan(
    pairs: &[(ConditionMask, FourChannelImage)],
    config: &StyleGanConfig,
    steps: u64,
    seed: u64,
) -> Result<(StyleGan, StyleLossHistory)> {
    if pairs.is_empty() {
        return Err(Error::Argument("style training needs at least one pair".into()));
    }
    let r = config.resolution;
    for (mask, image) in pairs {
        if mask.resolution() != (r, r) || image.resolution() != (r, r) {
            return Err(Error::Argument(format!(
                "training pair has resolution {:?}/{:?}, expected {r}x{r}",
                mask.resolution(),
                image.resolution()
            )));
        }
    }
    let mut model = StyleGan::new(config.clone(), seed)?;
    let mut history = StyleLossHistory::default();
    if steps == 0 {
        return Ok((model, history));
    }
    let dtype = model.gen_store.dtype();
    let mut gen_vars = model.gen_store.vars();
    gen_vars.extend(model.enc_store.vars());
    let mut adam_g = Adam::new(gen_vars, config.lr_generator, config.adam_beta1, config.adam_beta2)?;
    let mut adam_d = Adam::new(
        model.disc_store.vars(),
        config.lr_discriminator,
        config.adam_beta1,
        config.adam_beta2,
    )?;
    let mut order_rng = ChaCha12Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9));
    let mut noise = NoiseSource::new(seed.wrapping_add(0x7f4a_7c15));
    let batch = config.batch_size.min(pairs.len());
    let mut order: Vec<usize> = Vec::new();

    for step in 1..=steps {
        let mut indices = Vec::with_capacity(batch);
        while indices.len() < batch {
            if order.is_empty() {
                order = (0..pairs.len()).collect();
                order.shuffle(&mut order_rng);
            }
            indices.push(order.pop().expect("refilled above"));
        }
        let (s, x) = batch_tensors(pairs, &indices, dtype)?;

        // Reconstruction path: the generator is fed the style of the real
        // patch, so feature-matching and perceptual losses pull the output
        // toward it.
        let (mu, logvar) = model.encoder.forward(&x)?;
        let eps = noise.normal(mu.dims(), dtype)?;
        let z = reparameterize(&mu, &logvar, &eps)?;
        let fake = model.generator.forward(&s, &z)?;

        // Discriminator update.
        let (logits_real, _) = model.discriminator.forward(&s, &x)?;
        let (logits_fake, _) = model.discriminator.forward(&s, &fake.detach())?;
        let d_loss = loss_adversarial(Some(&logits_real), &logits_fake, GanSide::Discriminator)?;
        adam_d.step(&d_loss.backward()?)?;

        // Generator + encoder update against the refreshed discriminator.
        let (logits_real2, feats_real) = model.discriminator.forward(&s, &x)?;
        drop(logits_real2);
        let (logits_fake2, feats_fake) = model.discriminator.forward(&s, &fake)?;
        let g_adv = loss_adversarial(None, &logits_fake2, GanSide::Generator)?;
        let g_fm = loss_feature_matching(&feats_real, &feats_fake)?;
        let g_vgg = loss_vgg(&model.perceptual, &x, &fake)?;
        let g_kld = loss_kl(&mu, &logvar)?;
        let g_total = (((g_adv.clone() + (g_fm.clone() * config.lambda_fm)?)?
            + (g_vgg.clone() * config.lambda_vgg)?)?
            + (g_kld.clone() * config.lambda_kl)?)?;
        adam_g.step(&g_total.backward()?)?;

        let row = StyleLossRow {
            step,
            d_loss: scalar(&d_loss)?,
            g_adv: scalar(&g_adv)?,
            g_fm: scalar(&g_fm)?,
            g_vgg: scalar(&g_vgg)?,
            g_kld: scalar(&g_kld)?,
            recon_mae: None,
        };
        for (name, v) in [
            ("d_loss", row.d_loss),
            ("g_adv", row.g_adv),
            ("g_fm", row.g_fm),
            ("g_vgg", row.g_vgg),
            ("g_kld", row.g_kld),
        ] {
            if !v.is_finite() {
                return Err(Error::Training {
                    step,
                    component: name.into(),
                    message: format!("non-finite loss component ({name}={v})"),
                });
            }
        }
        let mut row = row;
        if config.log_reconstruction {
            // Deterministic reconstruction: epsilon = 0, i.e. z = mu.
            let recon = model.generator.forward(&s, &mu.detach())?;
            let mae = recon.sub(&x)?.abs()?.mean_all()?;
            row.recon_mae = Some(scalar(&mae)?);
        }
        history.rows.push(row);
        model.step = step;
    }
    Ok((model, history))
}
