use std::fs;
use std::path::Path;

use candle_core::Tensor;
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::dataset::preprocess::SoftMask;
use crate::error::{Error, Result};
use crate::nn::layers::bce_with_logits_scalar_target;
use crate::nn::params::NoiseSource;
use crate::nn::{Adam, Checkpoint};
use crate::shape_gan::config::ShapeGanConfig;
use crate::shape_gan::model::ShapeGan;
use crate::shape_gan::BinaryShape;

/// Per-step discriminator/generator losses.
#[derive(Clone, Debug, Default)]
pub struct ShapeLossHistory {
    pub rows: Vec<(u64, f64, f64)>,
}

impl ShapeLossHistory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,d_loss,g_loss\n");
        for (step, d, g) in &self.rows {
            out.push_str(&format!("{step},{d},{g}\n"));
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

fn masks_to_tensor(masks: &[SoftMask], indices: &[usize], model: &ShapeGan) -> Result<Tensor> {
    let r = model.config.target_resolution;
    let mut data = Vec::with_capacity(indices.len() * r * r);
    for &i in indices {
        // Soft masks live in [0, 1]; the networks train in tanh range.
        data.extend(masks[i].values().iter().map(|v| (*v as f64) * 2.0 - 1.0));
    }
    Ok(Tensor::from_vec(data, (indices.len(), 1, r, r), &candle_core::Device::Cpu)?
        .to_dtype(model.gen_store.dtype())?)
}

/// Alternating discriminator/generator training with binary cross entropy
/// against the valid/fake labels. Returns the trained model and its loss
/// history; the model can be checkpointed with [`ShapeGan::to_checkpoint`].
pub fn train_shape_gan(
    masks: &[SoftMask],
    config: &ShapeGanConfig,
    steps: u64,
    seed: u64,
) -> Result<(ShapeGan, ShapeLossHistory)> {
    if masks.is_empty() {
        return Err(Error::Argument("shape training needs at least one mask".into()));
    }
    let r = config.target_resolution;
    for m in masks {
        if m.values().dim() != (r, r) {
            return Err(Error::Argument(format!(
                "training mask has shape {:?}, expected {r}x{r}",
                m.values().dim()
            )));
        }
    }
    let mut model = ShapeGan::new(config.clone(), seed)?;
    let mut history = ShapeLossHistory::default();
    if steps == 0 {
        return Ok((model, history));
    }

    let mut adam_d = Adam::new(
        model.disc_store.vars(),
        config.learning_rate,
        config.adam_beta1,
        config.adam_beta2,
    )?;
    let mut adam_g = Adam::new(
        model.gen_store.vars(),
        config.learning_rate,
        config.adam_beta1,
        config.adam_beta2,
    )?;
    let mut order_rng = ChaCha12Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9));
    let mut noise = NoiseSource::new(seed.wrapping_add(0x7f4a_7c15));
    let batch = config.batch_size.min(masks.len());
    let mut order: Vec<usize> = Vec::new();

    for step in 1..=steps {
        let mut indices = Vec::with_capacity(batch);
        while indices.len() < batch {
            if order.is_empty() {
                order = (0..masks.len()).collect();
                order.shuffle(&mut order_rng);
            }
            indices.push(order.pop().expect("refilled above"));
        }
        let real = masks_to_tensor(masks, &indices, &model)?;
        let dtype = model.gen_store.dtype();

        // Discriminator update on real vs detached fake.
        let z = noise.normal(&[batch, config.latent_size], dtype)?;
        let fake = model.generator.forward(&z)?;
        let d_real = model
            .discriminator
            .forward_logits(&real, config.input_noise_sigma, Some(&mut noise))?;
        let d_fake = model.discriminator.forward_logits(
            &fake.detach(),
            config.input_noise_sigma,
            Some(&mut noise),
        )?;
        let d_loss = (bce_with_logits_scalar_target(&d_real, 1.0)?
            + bce_with_logits_scalar_target(&d_fake, 0.0)?)?;
        adam_d.step(&d_loss.backward()?)?;

        // Generator update: make the discriminator call the fake valid.
        let g_logits =
            model
                .discriminator
                .forward_logits(&fake, config.input_noise_sigma, Some(&mut noise))?;
        let g_loss = bce_with_logits_scalar_target(&g_logits, 1.0)?;
        adam_g.step(&g_loss.backward()?)?;

        let d = d_loss.to_dtype(candle_core::DType::F64)?.to_scalar::<f64>()?;
        let g = g_loss.to_dtype(candle_core::DType::F64)?.to_scalar::<f64>()?;
        if !d.is_finite() || !g.is_finite() {
            return Err(Error::Training {
                step,
                component: "shape_gan".into(),
                message: format!("non-finite loss (d_loss={d}, g_loss={g})"),
            });
        }
        history.rows.push((step, d, g));
        model.step = step;
    }
    Ok((model, history))
}

impl ShapeGan {
    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        Checkpoint::new(
            "shape_gan",
            self.seed,
            self.step,
            &self.config,
            &[("generator", &self.gen_store), ("discriminator", &self.disc_store)],
        )
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        if ckpt.kind != "shape_gan" {
            return Err(Error::Format(format!(
                "expected a shape_gan checkpoint, found {}",
                ckpt.kind
            )));
        }
        let config: ShapeGanConfig = ckpt.config_as()?;
        let mut model = ShapeGan::new(config, ckpt.seed)?;
        ckpt.restore("generator", &mut model.gen_store)?;
        ckpt.restore("discriminator", &mut model.disc_store)?;
        model.step = ckpt.step;
        Ok(model)
    }

    /// Standard checkpoint file name for a given step.
    pub fn checkpoint_name(step: u64) -> String {
        format!("shape_gan_step{step}.ckpt")
    }

    /// Draw `n` silhouettes: latent vectors from a seeded standard normal,
    /// a generator pass, then thresholding. The pre-threshold raster is kept
    /// in `soft_source`.
    pub fn sample_shapes(&self, n: usize, threshold: f64, seed: u64) -> Result<Vec<BinaryShape>> {
        if n == 0 {
            return Err(Error::Argument("sample count must be >= 1".into()));
        }
        if !(-1.0..1.0).contains(&threshold) {
            return Err(Error::Argument(format!(
                "threshold {threshold} outside (-1, 1)"
            )));
        }
        let mut noise = NoiseSource::new(seed);
        let r = self.config.target_resolution;
        let mut shapes = Vec::with_capacity(n);
        for _ in 0..n {
            let z = noise.normal(&[1, self.config.latent_size], self.gen_store.dtype())?;
            let raster = self
                .generator
                .forward(&z)?
                .to_dtype(candle_core::DType::F32)?
                .reshape((r, r))?
                .to_vec2::<f32>()?;
            let mut soft = Array2::zeros((r, r));
            let mut hard = Array2::zeros((r, r));
            for (i, row) in raster.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    soft[[i, j]] = ((v + 1.0) / 2.0).clamp(0.0, 1.0);
                    hard[[i, j]] = u8::from(v as f64 > threshold);
                }
            }
            shapes.push(BinaryShape {
                values: hard,
                soft_source: Some(SoftMask::new(soft)?),
            });
        }
        Ok(shapes)
    }
}
