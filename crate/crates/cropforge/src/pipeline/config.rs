use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::seg::ChannelMode;

/// Key/value configuration with dotted keys, loaded from a plain-text file
/// (`section.key = value`, `#` comments) and overridable from the command
/// line. Unknown keys are rejected so typos fail fast.
#[derive(Clone, Debug)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

const KNOWN_KEYS: &[(&str, &str)] = &[
    ("output.dir", ""),
    ("workers", "1"),
    ("dataset.root", ""),
    ("dataset.split_counts", "12,4,4"),
    ("dataset.seed", "0"),
    ("dataset.patch_size", "256"),
    ("dataset.blur_kernel", "15"),
    ("dataset.max_shape_patches", "0"),
    ("shape_gan.latent_size", "100"),
    ("shape_gan.base_resolution", "4"),
    ("shape_gan.gen_base_channels", "512"),
    ("shape_gan.disc_base_channels", "64"),
    ("shape_gan.input_noise_sigma", "0.1"),
    ("shape_gan.dropout_rate", "0.25"),
    ("shape_gan.learning_rate", "0.0002"),
    ("shape_gan.batch_size", "16"),
    ("shape_gan.steps", "200"),
    ("shape_gan.seed", "1"),
    ("shape_gan.threshold", "0"),
    ("style_gan.style_dim", "256"),
    ("style_gan.gen_base_channels", "512"),
    ("style_gan.min_channels", "16"),
    ("style_gan.spade_hidden", "128"),
    ("style_gan.enc_base_channels", "32"),
    ("style_gan.disc_base_channels", "64"),
    ("style_gan.disc_scales", "2"),
    ("style_gan.disc_taps", "4"),
    ("style_gan.lr_generator", "0.0001"),
    ("style_gan.lr_discriminator", "0.0004"),
    ("style_gan.lambda_fm", "10"),
    ("style_gan.lambda_vgg", "10"),
    ("style_gan.lambda_kl", "0.05"),
    ("style_gan.batch_size", "4"),
    ("style_gan.steps", "300"),
    ("style_gan.seed", "2"),
    ("style_gan.perceptual_width", "64"),
    ("composer.fraction", "0.5"),
    ("composer.seed", "3"),
    ("augment.fraction", "0.5"),
    ("augment.seed", "5"),
    ("eval.channels", "rgb+nir"),
    ("eval.variants", "original,basic,texture,shape_style"),
    ("eval.num_classes", "3"),
    ("eval.base_channels", "16"),
    ("eval.depth", "4"),
    ("eval.learning_rate", "0.001"),
    ("eval.batch_size", "4"),
    ("eval.crop_size", "64"),
    ("eval.steps", "400"),
    ("eval.eval_every", "50"),
    ("eval.patience", "10"),
    ("eval.seed", "4"),
];

impl RawConfig {
    pub fn defaults() -> Self {
        RawConfig {
            values: KNOWN_KEYS
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::defaults();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("{}:{}: expected key = value", path.display(), lineno + 1))
            })?;
            config.set(key.trim(), value.trim())?;
        }
        Ok(config)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KNOWN_KEYS.iter().any(|(k, _)| *k == key) {
            return Err(Error::Config(format!("unknown config key {key}")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Apply `key=value` command-line overrides.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        for ov in overrides {
            let (key, value) = ov
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {ov} is not key=value")))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Fully resolved config in file syntax, for provenance.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    fn get(&self, key: &str) -> Result<&str> {
        let v = self
            .values
            .get(key)
            .ok_or_else(|| Error::Config(format!("missing config key {key}")))?;
        if v.is_empty() {
            return Err(Error::Config(format!("config key {key} must be set")));
        }
        Ok(v)
    }

    fn get_u64(&self, key: &str) -> Result<u64> {
        self.get(key)?
            .parse()
            .map_err(|_| Error::Config(format!("config key {key} must be an integer")))
    }

    fn get_usize(&self, key: &str) -> Result<usize> {
        Ok(self.get_u64(key)? as usize)
    }

    fn get_f64(&self, key: &str) -> Result<f64> {
        self.get(key)?
            .parse()
            .map_err(|_| Error::Config(format!("config key {key} must be a number")))
    }
}

/// Typed, validated view of the configuration.
#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub output_dir: PathBuf,
    pub workers: usize,
    pub dataset_root: PathBuf,
    pub split_counts: (usize, usize, usize),
    pub dataset_seed: u64,
    pub patch_size: usize,
    pub blur_kernel: usize,
    pub max_shape_patches: usize,
    pub shape: crate::shape_gan::ShapeGanConfig,
    pub shape_steps: u64,
    pub shape_seed: u64,
    pub style: crate::style_gan::StyleGanConfig,
    pub style_steps: u64,
    pub style_seed: u64,
    pub compose_fraction: f64,
    pub compose_seed: u64,
    pub augment_fraction: f64,
    pub augment_seed: u64,
    pub eval_variants: Vec<String>,
    pub seg: crate::seg::SegConfig,
    pub eval_seed: u64,
}

pub const VARIANT_NAMES: &[&str] = &[
    "original",
    "synthetic",
    "basic",
    "texture",
    "style",
    "shape_style",
];

impl PipelineConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let counts_text = raw.get("dataset.split_counts")?;
        let counts: Vec<usize> = counts_text
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad split count {s}")))
            })
            .collect::<Result<_>>()?;
        if counts.len() != 3 {
            return Err(Error::Config(format!(
                "dataset.split_counts must have three entries, got {counts_text}"
            )));
        }
        let patch_size = raw.get_usize("dataset.patch_size")?;

        let shape = crate::shape_gan::ShapeGanConfig {
            latent_size: raw.get_usize("shape_gan.latent_size")?,
            base_resolution: raw.get_usize("shape_gan.base_resolution")?,
            target_resolution: patch_size,
            gen_base_channels: raw.get_usize("shape_gan.gen_base_channels")?,
            disc_base_channels: raw.get_usize("shape_gan.disc_base_channels")?,
            input_noise_sigma: raw.get_f64("shape_gan.input_noise_sigma")?,
            dropout_rate: raw.get_f64("shape_gan.dropout_rate")?,
            leaky_slope: 0.2,
            learning_rate: raw.get_f64("shape_gan.learning_rate")?,
            adam_beta1: 0.5,
            adam_beta2: 0.999,
            batch_size: raw.get_usize("shape_gan.batch_size")?,
            threshold: raw.get_f64("shape_gan.threshold")?,
        };
        shape.validate().map_err(|e| Error::Config(e.to_string()))?;

        let style = crate::style_gan::StyleGanConfig {
            resolution: patch_size,
            style_dim: raw.get_usize("style_gan.style_dim")?,
            gen_base_channels: raw.get_usize("style_gan.gen_base_channels")?,
            min_channels: raw.get_usize("style_gan.min_channels")?,
            spade_hidden: raw.get_usize("style_gan.spade_hidden")?,
            enc_base_channels: raw.get_usize("style_gan.enc_base_channels")?,
            encoder_in_channels: 4,
            disc_base_channels: raw.get_usize("style_gan.disc_base_channels")?,
            disc_scales: raw.get_usize("style_gan.disc_scales")?,
            disc_taps: raw.get_usize("style_gan.disc_taps")?,
            leaky_slope: 0.2,
            lr_generator: raw.get_f64("style_gan.lr_generator")?,
            lr_discriminator: raw.get_f64("style_gan.lr_discriminator")?,
            adam_beta1: 0.0,
            adam_beta2: 0.999,
            lambda_fm: raw.get_f64("style_gan.lambda_fm")?,
            lambda_vgg: raw.get_f64("style_gan.lambda_vgg")?,
            lambda_kl: raw.get_f64("style_gan.lambda_kl")?,
            batch_size: raw.get_usize("style_gan.batch_size")?,
            perceptual_width: raw.get_usize("style_gan.perceptual_width")?,
            perceptual_seed: 0x5647_4731,
            log_reconstruction: false,
        };
        style.validate().map_err(|e| Error::Config(e.to_string()))?;

        let variants: Vec<String> = raw
            .get("eval.variants")?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        for v in &variants {
            if !VARIANT_NAMES.contains(&v.as_str()) {
                return Err(Error::Config(format!(
                    "unknown variant {v}; known: {}",
                    VARIANT_NAMES.join(", ")
                )));
            }
        }
        if variants.is_empty() {
            return Err(Error::Config("eval.variants must not be empty".into()));
        }

        let seg = crate::seg::SegConfig {
            channels: ChannelMode::parse(raw.get("eval.channels")?)?,
            num_classes: raw.get_usize("eval.num_classes")?,
            base_channels: raw.get_usize("eval.base_channels")?,
            depth: raw.get_usize("eval.depth")?,
            learning_rate: raw.get_f64("eval.learning_rate")?,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            batch_size: raw.get_usize("eval.batch_size")?,
            crop_size: raw.get_usize("eval.crop_size")?,
            steps: raw.get_u64("eval.steps")?,
            eval_every: raw.get_u64("eval.eval_every")?,
            patience: raw.get_u64("eval.patience")?,
            weight_clip: (0.2, 5.0),
        };
        seg.validate().map_err(|e| Error::Config(e.to_string()))?;

        let fraction = raw.get_f64("composer.fraction")?;
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::Config(format!(
                "composer.fraction {fraction} outside [0, 1]"
            )));
        }
        let augment_fraction = raw.get_f64("augment.fraction")?;
        if !(0.0..=1.0).contains(&augment_fraction) {
            return Err(Error::Config(format!(
                "augment.fraction {augment_fraction} outside [0, 1]"
            )));
        }

        Ok(PipelineConfig {
            output_dir: PathBuf::from(raw.get("output.dir")?),
            workers: raw.get_usize("workers")?.max(1),
            dataset_root: PathBuf::from(raw.get("dataset.root")?),
            split_counts: (counts[0], counts[1], counts[2]),
            dataset_seed: raw.get_u64("dataset.seed")?,
            patch_size,
            blur_kernel: raw.get_usize("dataset.blur_kernel")?,
            max_shape_patches: raw.get_usize("dataset.max_shape_patches")?,
            shape,
            shape_steps: raw.get_u64("shape_gan.steps")?,
            shape_seed: raw.get_u64("shape_gan.seed")?,
            style,
            style_steps: raw.get_u64("style_gan.steps")?,
            style_seed: raw.get_u64("style_gan.seed")?,
            compose_fraction: fraction,
            compose_seed: raw.get_u64("composer.seed")?,
            augment_fraction,
            augment_seed: raw.get_u64("augment.seed")?,
            eval_variants: variants,
            seg,
            eval_seed: raw.get_u64("eval.seed")?,
        })
    }

    /// Paths that must exist before any command runs.
    pub fn check_dataset_root(&self) -> Result<()> {
        if !self.dataset_root.is_dir() {
            return Err(Error::Config(format!(
                "dataset.root {} is not a directory",
                self.dataset_root.display()
            )));
        }
        for sub in ["rgb", "nir", "mask"] {
            if !self.dataset_root.join(sub).is_dir() {
                return Err(Error::Config(format!(
                    "dataset.root is missing the {sub}/ subdirectory"
                )));
            }
        }
        Ok(())
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.output_dir.join("split.txt")
    }

    pub fn variant_root(&self, variant: &str) -> PathBuf {
        self.output_dir.join("datasets").join(variant)
    }
}
