use std::path::{Path, PathBuf};

use candle_core::{DType, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::dataset::scene::{load_scene, MultispectralScene};
use crate::dataset::split::SplitManifest;
use crate::error::{Error, Result};
use crate::nn::{Adam, Checkpoint, ParamStore};
use crate::seg::confusion::{
    iou_from_confusion, ChannelMode, ConfusionAccumulator, IoUReport,
};
use crate::seg::unet::{cross_entropy_loss, predict_classes, SegConfig, SegNet};

/// A segmentation network plus its parameter store and provenance.
pub struct SegModel {
    pub net: SegNet,
    pub(crate) store: ParamStore,
    pub seed: u64,
    pub step: u64,
}

impl SegModel {
    pub fn new(config: &SegConfig, seed: u64) -> Result<Self> {
        let mut store = ParamStore::new(seed, DType::F32);
        let net = SegNet::new(&mut store, config)?;
        Ok(SegModel {
            net,
            store,
            seed,
            step: 0,
        })
    }

    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        Checkpoint::new(
            "segmentation",
            self.seed,
            self.step,
            &self.net.config,
            &[("net", &self.store)],
        )
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        if ckpt.kind != "segmentation" {
            return Err(Error::Format(format!(
                "expected a segmentation checkpoint, found {}",
                ckpt.kind
            )));
        }
        let config: SegConfig = ckpt.config_as()?;
        let mut model = SegModel::new(&config, ckpt.seed)?;
        ckpt.restore("net", &mut model.store)?;
        model.step = ckpt.step;
        Ok(model)
    }

    pub fn checkpoint_name(step: u64) -> String {
        format!("segmentation_step{step}.ckpt")
    }
}

fn scene_to_input(
    scene: &MultispectralScene,
    channels: ChannelMode,
    window: Option<(usize, usize, usize)>,
) -> (Vec<f32>, Vec<u8>, usize, usize) {
    let (top, left, size_h, size_w) = match window {
        Some((t, l, s)) => (t, l, s, s),
        None => (0, 0, scene.height(), scene.width()),
    };
    let c = channels.channels();
    let mut x = vec![0f32; c * size_h * size_w];
    let mut y = vec![0u8; size_h * size_w];
    for r in 0..size_h {
        for co in 0..size_w {
            let (sr, sc) = (top + r, left + co);
            let i = r * size_w + co;
            for ch in 0..3 {
                x[ch * size_h * size_w + i] = scene.rgb[[sr, sc, ch]] as f32 / 127.5 - 1.0;
            }
            if c == 4 {
                x[3 * size_h * size_w + i] = scene.nir[[sr, sc]] as f32 / 127.5 - 1.0;
            }
            y[i] = scene.mask[[sr, sc]];
        }
    }
    (x, y, size_h, size_w)
}

/// Inverse-frequency class weights over the training masks, clipped and
/// rescaled to mean 1.
fn class_weights(scenes: &[MultispectralScene], num_classes: usize, clip: (f64, f64)) -> Vec<f64> {
    let mut counts = vec![0u64; num_classes];
    for s in scenes {
        for v in s.mask.iter() {
            if (*v as usize) < num_classes {
                counts[*v as usize] += 1;
            }
        }
    }
    let total: u64 = counts.iter().sum();
    let mut weights: Vec<f64> = counts
        .iter()
        .map(|&c| {
            if c == 0 {
                clip.1
            } else {
                (total as f64 / (num_classes as f64 * c as f64)).clamp(clip.0, clip.1)
            }
        })
        .collect();
    let mean: f64 = weights.iter().sum::<f64>() / num_classes as f64;
    for w in &mut weights {
        *w /= mean;
    }
    weights
}

fn eval_scenes(
    model: &SegModel,
    scenes: &[MultispectralScene],
    channels: ChannelMode,
) -> Result<ConfusionAccumulator> {
    let num_classes = model.net.config.num_classes;
    let mut acc = ConfusionAccumulator::new(num_classes);
    let f = 1 << model.net.config.depth;
    for scene in scenes {
        let (h, w) = (scene.height(), scene.width());
        if h % f != 0 || w % f != 0 {
            return Err(Error::Argument(format!(
                "scene {} is {h}x{w}, not divisible by {f}; pad or crop the dataset",
                scene.scene_id
            )));
        }
        let (x, y, sh, sw) = scene_to_input(scene, channels, None);
        let xt = Tensor::from_vec(x, (1, channels.channels(), sh, sw), &candle_core::Device::Cpu)?;
        let logits = model.net.forward(&xt)?;
        let pred = predict_classes(&logits)?.remove(0);
        let gt = ndarray::Array2::from_shape_vec((sh, sw), y).expect("shape matches");
        let pr = ndarray::Array2::from_shape_vec((sh, sw), pred).expect("shape matches");
        acc.update(gt.view(), pr.view())?;
    }
    Ok(acc)
}

fn load_scenes(root: &Path, ids: &[String]) -> Result<Vec<MultispectralScene>> {
    ids.iter().map(|id| load_scene(root, id)).collect()
}

/// Train on the manifest's train split with early stopping on validation
/// mIoU. Returns the model restored to its best validation state.
pub fn train_segmentation(
    manifest: &SplitManifest,
    root: &Path,
    config: &SegConfig,
    seed: u64,
) -> Result<SegModel> {
    config.validate()?;
    let mut model = SegModel::new(config, seed)?;
    if config.steps == 0 {
        return Ok(model);
    }
    let train = load_scenes(root, &manifest.train)?;
    if train.is_empty() {
        return Err(Error::Argument("training split is empty".into()));
    }
    let val = load_scenes(root, &manifest.val)?;
    let weights = class_weights(&train, config.num_classes, config.weight_clip);
    let mut adam = Adam::new(
        model.store.vars(),
        config.learning_rate,
        config.adam_beta1,
        config.adam_beta2,
    )?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed.wrapping_add(0x51_7cc1));
    let crop = config.crop_size;
    let c = config.channels.channels();

    let mut best: Option<(f64, Vec<(String, Vec<usize>, Vec<f32>)>, u64)> = None;
    let mut since_best = 0u64;
    for step in 1..=config.steps {
        let mut xs = Vec::with_capacity(config.batch_size);
        let mut ys = Vec::with_capacity(config.batch_size);
        for _ in 0..config.batch_size {
            let scene = &train[rng.random_range(0..train.len())];
            let (h, w) = (scene.height(), scene.width());
            if h < crop || w < crop {
                return Err(Error::Argument(format!(
                    "scene {} is smaller than the {crop} training crop",
                    scene.scene_id
                )));
            }
            let top = rng.random_range(0..=h - crop);
            let left = rng.random_range(0..=w - crop);
            let (x, y, _, _) = scene_to_input(scene, config.channels, Some((top, left, crop)));
            xs.extend(x);
            ys.push(y);
        }
        let xt = Tensor::from_vec(
            xs,
            (config.batch_size, c, crop, crop),
            &candle_core::Device::Cpu,
        )?;
        let logits = model.net.forward(&xt)?;
        let loss = cross_entropy_loss(&logits, &ys, &weights)?;
        let loss_v = loss.to_dtype(DType::F64)?.to_scalar::<f64>()?;
        if !loss_v.is_finite() {
            return Err(Error::Training {
                step,
                component: "segmentation".into(),
                message: format!("non-finite loss {loss_v}"),
            });
        }
        adam.step(&loss.backward()?)?;
        model.step = step;

        if !val.is_empty() && step % config.eval_every == 0 {
            let acc = eval_scenes(&model, &val, config.channels)?;
            let miou = iou_from_confusion(&acc, "val", config.channels)?.miou;
            let improved = best.as_ref().is_none_or(|(b, _, _)| miou > *b);
            if improved {
                best = Some((miou, model.store.export()?, step));
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= config.patience {
                    break;
                }
            }
        }
    }
    if let Some((_, weights, step)) = best {
        model.store.import(&weights)?;
        model.step = step;
    }
    Ok(model)
}

/// Confusion over all test scenes, reduced into one report. Order of scenes
/// does not matter.
pub fn evaluate(
    model: &SegModel,
    test_ids: &[String],
    root: &Path,
    channels: ChannelMode,
    variant: &str,
) -> Result<IoUReport> {
    if test_ids.is_empty() {
        return Err(Error::Argument("test split is empty".into()));
    }
    if channels != model.net.config.channels {
        return Err(Error::Argument(format!(
            "model expects {} input, asked to evaluate with {}",
            model.net.config.channels, channels
        )));
    }
    let scenes = load_scenes(root, test_ids)?;
    let acc = eval_scenes(model, &scenes, channels)?;
    iou_from_confusion(&acc, variant, channels)
}

/// One named dataset variant to compare.
#[derive(Clone, Debug)]
pub struct Variant {
    pub name: String,
    pub manifest: SplitManifest,
    pub root: PathBuf,
}

/// Train one model per variant under identical config and seed, evaluate all
/// of them on the shared test split, and return the reports in input order.
pub fn compare_strategies(
    variants: &[Variant],
    config: &SegConfig,
    seed: u64,
) -> Result<Vec<IoUReport>> {
    if variants.is_empty() {
        return Err(Error::Argument("need at least one variant".into()));
    }
    let reference = &variants[0];
    for v in variants {
        let mut a = v.manifest.test.clone();
        let mut b = reference.manifest.test.clone();
        a.sort();
        b.sort();
        if a != b {
            return Err(Error::Argument(format!(
                "variant {} has a different test split; all variants must share one",
                v.name
            )));
        }
    }
    let mut reports = Vec::with_capacity(variants.len());
    for v in variants {
        let model = train_segmentation(&v.manifest, &v.root, config, seed).map_err(|e| {
            Error::Training {
                step: 0,
                component: format!("variant {}", v.name),
                message: e.to_string(),
            }
        })?;
        let report = evaluate(
            &model,
            &reference.manifest.test,
            &reference.root,
            config.channels,
            &v.name,
        )?;
        reports.push(report);
    }
    Ok(reports)
}
