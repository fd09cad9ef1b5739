use std::fs;
use std::path::{Path, PathBuf};

use image::GrayImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::composer::{
    build_synthetic_dataset, BuildOptions, GanShapeSource, GanTextureSource, ShapeProvider,
};
use crate::dataset::augment::{basic_augment, texture_augment, BasicAugment, TextureAugment};
use crate::dataset::preprocess::{blur_mask, SoftMask};
use crate::dataset::scene::{self, list_scene_ids, load_scene, save_scene, CLASS_CROP};
use crate::dataset::split::{build_split, SplitManifest};
use crate::dataset::{extract_crop_patches, Patch};
use crate::error::{Error, Result};
use crate::nn::Checkpoint;
use crate::pipeline::config::PipelineConfig;
use crate::seg::{compare_strategies, reports_to_csv, reports_to_table, Variant};
use crate::shape_gan::{train_shape_gan, ShapeGan};
use crate::style_gan::{train_style_gan, ConditionMask, FourChannelImage, StyleGan};

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn copy_scene_triplet(root: &Path, out_root: &Path, id: &str) -> Result<()> {
    for (src, dst) in [
        (scene::rgb_path(root, id), scene::rgb_path(out_root, id)),
        (scene::nir_path(root, id), scene::nir_path(out_root, id)),
        (scene::mask_path(root, id), scene::mask_path(out_root, id)),
    ] {
        if let Some(dir) = dst.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::copy(&src, &dst).map_err(|e| Error::io(&src, e))?;
    }
    Ok(())
}

fn shape_cache_dir(config: &PipelineConfig) -> PathBuf {
    config.output_dir.join("cache").join("shape")
}

fn style_cache_dir(config: &PipelineConfig) -> PathBuf {
    config.output_dir.join("cache").join("style")
}

fn save_soft_mask(path: &Path, mask: &SoftMask) -> Result<()> {
    let (h, w) = mask.values().dim();
    let data: Vec<u8> = mask
        .values()
        .iter()
        .map(|v| (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8)
        .collect();
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    GrayImage::from_raw(w as u32, h as u32, data)
        .expect("raster buffer matches its dimensions")
        .save(path)?;
    Ok(())
}

fn load_soft_mask(path: &Path) -> Result<SoftMask> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = image::load_from_memory(&bytes)?.to_luma8();
    let (w, h) = img.dimensions();
    let values =
        ndarray::Array2::from_shape_vec((h as usize, w as usize), img.into_raw())
            .expect("raster buffer matches its dimensions")
            .mapv(|v| v as f32 / 255.0);
    SoftMask::new(values)
}

fn save_patch(dir: &Path, name: &str, patch: &Patch) -> Result<()> {
    let scene = scene::MultispectralScene {
        rgb: patch.rgb.clone(),
        nir: patch.nir.clone(),
        mask: patch.mask.clone(),
        scene_id: name.to_string(),
    };
    save_scene(dir, &scene)
}

/// Build the split manifest and the two training caches: blurred crop
/// silhouettes for the shape GAN and (mask, RGB+NIR patch) pairs for the
/// style GAN.
pub fn cmd_prepare(config: &PipelineConfig) -> Result<()> {
    config.check_dataset_root()?;
    let ids = list_scene_ids(&config.dataset_root)?;
    let manifest = build_split(&ids, config.split_counts, config.dataset_seed)?;
    manifest.save(&config.manifest_path())?;

    let shape_dir = shape_cache_dir(config);
    let style_dir = style_cache_dir(config);
    let mut n_patches = 0usize;
    for id in &manifest.train {
        let scene = load_scene(&config.dataset_root, id)?;
        let patches = extract_crop_patches(&scene, config.patch_size)?;
        for (k, patch) in patches.iter().enumerate() {
            if config.max_shape_patches > 0 && n_patches >= config.max_shape_patches {
                break;
            }
            let name = format!("{id}_{k:03}");
            let crop_mask = patch.mask.mapv(|v| u8::from(v == CLASS_CROP));
            let soft = blur_mask(crop_mask.view(), config.blur_kernel)?;
            save_soft_mask(&shape_dir.join(format!("{name}.png")), &soft)?;
            save_patch(&style_dir, &name, patch)?;
            n_patches += 1;
        }
    }
    if n_patches == 0 {
        return Err(Error::Format(
            "prepare produced 0 patches: no crop instance admits an in-bounds window".into(),
        ));
    }
    println!(
        "prepared {} train / {} val / {} test scenes, {} patches",
        manifest.train.len(),
        manifest.val.len(),
        manifest.test.len(),
        n_patches
    );
    Ok(())
}

fn list_pngs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let p = entry.path();
        if p.extension().is_some_and(|e| e == "png") {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

pub fn cmd_train_shape(config: &PipelineConfig) -> Result<()> {
    let dir = shape_cache_dir(config);
    if !dir.is_dir() {
        return Err(Error::Config(format!(
            "{} missing; run prepare first",
            dir.display()
        )));
    }
    let masks: Vec<SoftMask> = list_pngs(&dir)?
        .iter()
        .map(|p| load_soft_mask(p))
        .collect::<Result<_>>()?;
    let (model, history) = train_shape_gan(&masks, &config.shape, config.shape_steps, config.shape_seed)?;
    history.save(&config.output_dir.join("shape_losses.csv"))?;
    let ckpt_path = config.output_dir.join(ShapeGan::checkpoint_name(model.step));
    model.to_checkpoint()?.save(&ckpt_path)?;
    println!("shape gan trained for {} steps -> {}", model.step, ckpt_path.display());
    Ok(())
}

fn load_style_pairs(config: &PipelineConfig) -> Result<Vec<(ConditionMask, FourChannelImage)>> {
    let dir = style_cache_dir(config);
    if !dir.is_dir() {
        return Err(Error::Config(format!(
            "{} missing; run prepare first",
            dir.display()
        )));
    }
    let ids = list_scene_ids(&dir)?;
    let mut pairs = Vec::with_capacity(ids.len());
    for id in &ids {
        let scene = load_scene(&dir, id)?;
        let patch = Patch {
            rgb: scene.rgb,
            nir: scene.nir,
            mask: scene.mask,
            origin: (0, 0),
            scene_id: id.clone(),
        };
        pairs.push((
            ConditionMask::from_class_mask(&patch.mask),
            FourChannelImage::from_patch(&patch),
        ));
    }
    Ok(pairs)
}

pub fn cmd_train_style(config: &PipelineConfig) -> Result<()> {
    let pairs = load_style_pairs(config)?;
    let (model, history) = train_style_gan(&pairs, &config.style, config.style_steps, config.style_seed)?;
    history.save(&config.output_dir.join("style_losses.csv"))?;
    let ckpt_path = config.output_dir.join(StyleGan::checkpoint_name(model.step));
    model.to_checkpoint()?.save(&ckpt_path)?;
    println!("style gan trained for {} steps -> {}", model.step, ckpt_path.display());
    Ok(())
}

fn load_latest_checkpoint(config: &PipelineConfig, prefix: &str) -> Result<Checkpoint> {
    let mut best: Option<(u64, PathBuf)> = None;
    let dir = &config.output_dir;
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if let Some(rest) = name.strip_prefix(prefix) {
            if let Some(step) = rest
                .strip_prefix("_step")
                .and_then(|s| s.strip_suffix(".ckpt"))
                .and_then(|s| s.parse::<u64>().ok())
            {
                if best.as_ref().is_none_or(|(s, _)| step > *s) {
                    best = Some((step, entry.path()));
                }
            }
        }
    }
    let (_, path) = best.ok_or_else(|| {
        Error::Config(format!(
            "no {prefix} checkpoint under {}; run the training command first",
            dir.display()
        ))
    })?;
    Checkpoint::load(&path)
}

/// Compose the GAN-backed dataset variants requested in `eval.variants`:
/// `shape_style` (sampled silhouettes), `synthetic` (every train scene
/// replaced) and `style` (real silhouettes, synthetic texture).
pub fn cmd_compose(config: &PipelineConfig) -> Result<()> {
    config.check_dataset_root()?;
    let manifest = SplitManifest::load(&config.manifest_path())?;
    let wanted: Vec<&str> = config
        .eval_variants
        .iter()
        .map(|s| s.as_str())
        .filter(|v| matches!(*v, "shape_style" | "synthetic" | "style"))
        .collect();
    if wanted.is_empty() {
        println!("no GAN-backed variants requested; nothing to compose");
        return Ok(());
    }
    let shape_model = ShapeGan::from_checkpoint(&load_latest_checkpoint(config, "shape_gan")?)?;
    let style_model = StyleGan::from_checkpoint(&load_latest_checkpoint(config, "style_gan")?)?;
    let shapes = GanShapeSource::new(shape_model);
    let textures = GanTextureSource::new(style_model);
    for variant in wanted {
        let (fraction, provider) = match variant {
            "synthetic" => (1.0, ShapeProvider::Sampled(&shapes)),
            "style" => (config.compose_fraction, ShapeProvider::RealSilhouette),
            _ => (config.compose_fraction, ShapeProvider::Sampled(&shapes)),
        };
        let out_root = config.variant_root(variant);
        let opts = BuildOptions {
            patch_size: config.patch_size,
            fraction,
            seed: config.compose_seed,
            workers: config.workers,
        };
        build_synthetic_dataset(&manifest, &config.dataset_root, &provider, &textures, &out_root, &opts)?;
        println!("composed variant {variant} -> {}", out_root.display());
    }
    Ok(())
}

fn random_basic_op(rng: &mut ChaCha12Rng) -> BasicAugment {
    match rng.random_range(0..5) {
        0 => BasicAugment::Rotate {
            degrees: [90.0, 180.0, 270.0][rng.random_range(0..3)],
        },
        1 => BasicAugment::Shift {
            dy: rng.random_range(-10..=10),
            dx: rng.random_range(-10..=10),
        },
        2 => BasicAugment::Flip {
            horizontal: rng.random_range(0..2) == 0,
        },
        3 => BasicAugment::Zoom {
            factor: rng.random_range(0.85..1.2),
        },
        _ => BasicAugment::Crop {
            top: rng.random_range(0..8),
            left: rng.random_range(0..8),
            height: 100,
            width: 100,
        },
    }
}

fn random_texture_op(rng: &mut ChaCha12Rng) -> TextureAugment {
    match rng.random_range(0..5) {
        0 => TextureAugment::GaussianBlur {
            kernel: [3, 5, 7][rng.random_range(0..3)],
        },
        1 => TextureAugment::MedianBlur {
            kernel: [3, 5][rng.random_range(0..2)],
        },
        2 => TextureAugment::Noise {
            sigma: rng.random_range(2.0..10.0),
            seed: rng.random(),
        },
        3 => TextureAugment::Contrast {
            factor: rng.random_range(0.7..1.4),
        },
        _ => TextureAugment::Brightness {
            delta: rng.random_range(-30..=30),
        },
    }
}

/// Build the classical baseline variants requested in `eval.variants`: a
/// fraction of the train split is replaced by transformed copies, the rest
/// and val/test are copied unchanged.
pub fn cmd_augment_baseline(config: &PipelineConfig) -> Result<()> {
    config.check_dataset_root()?;
    let manifest = SplitManifest::load(&config.manifest_path())?;
    for variant in ["basic", "texture"] {
        if !config.eval_variants.iter().any(|v| v == variant) {
            continue;
        }
        let out_root = config.variant_root(variant);
        let mut rng = ChaCha12Rng::seed_from_u64(config.augment_seed);
        let k = (config.augment_fraction * manifest.train.len() as f64).floor() as usize;
        let mut order = manifest.train.clone();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        let selected: std::collections::HashSet<&String> = order.iter().take(k).collect();
        for id in &manifest.train {
            if selected.contains(id) {
                let original = load_scene(&config.dataset_root, id)?;
                let augmented = if variant == "basic" {
                    let op = random_basic_op(&mut rng);
                    let out = basic_augment(&original, &op)?;
                    // Quarter turns may swap H and W; keep scene sizes stable
                    // for batched training by re-augmenting only the square
                    // case, otherwise fall back to a flip.
                    if out.height() == original.height() && out.width() == original.width() {
                        out
                    } else {
                        basic_augment(&original, &BasicAugment::Flip { horizontal: true })?
                    }
                } else {
                    texture_augment(&original, &random_texture_op(&mut rng))?
                };
                save_scene(&out_root, &augmented)?;
            } else {
                copy_scene_triplet(&config.dataset_root, &out_root, id)?;
            }
        }
        for id in manifest.val.iter().chain(&manifest.test) {
            copy_scene_triplet(&config.dataset_root, &out_root, id)?;
        }
        manifest.save(&out_root.join("split.txt"))?;
        println!("built baseline variant {variant} -> {}", out_root.display());
    }
    Ok(())
}

fn resolve_variant(config: &PipelineConfig, name: &str) -> Result<Variant> {
    let (manifest_path, root) = if name == "original" {
        (config.manifest_path(), config.dataset_root.clone())
    } else {
        let root = config.variant_root(name);
        (root.join("split.txt"), root)
    };
    if !manifest_path.is_file() {
        return Err(Error::Config(format!(
            "variant {name}: manifest {} missing; run the producing command first",
            manifest_path.display()
        )));
    }
    Ok(Variant {
        name: name.to_string(),
        manifest: SplitManifest::load(&manifest_path)?,
        root,
    })
}

/// Train one segmentation model per variant and emit the comparison table.
pub fn cmd_eval(config: &PipelineConfig) -> Result<()> {
    let variants: Vec<Variant> = config
        .eval_variants
        .iter()
        .map(|name| resolve_variant(config, name))
        .collect::<Result<_>>()?;
    let reports = compare_strategies(&variants, &config.seg, config.eval_seed)?;
    let csv = reports_to_csv(&reports);
    let table = reports_to_table(&reports);
    write_file(&config.output_dir.join("eval").join("results.csv"), &csv)?;
    write_file(&config.output_dir.join("eval").join("results.txt"), &table)?;
    print!("{table}");
    Ok(())
}

/// Re-emit the comparison table from the stored CSV.
pub fn cmd_report(config: &PipelineConfig) -> Result<()> {
    let csv_path = config.output_dir.join("eval").join("results.csv");
    if !csv_path.is_file() {
        return Err(Error::Config(format!(
            "{} missing; run eval first",
            csv_path.display()
        )));
    }
    let text = fs::read_to_string(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    let mut reports = Vec::new();
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 2 {
            continue;
        }
        let per_class = fields[2..]
            .iter()
            .map(|f| f.parse::<f64>().ok())
            .collect();
        reports.push(crate::seg::IoUReport {
            per_class,
            miou: fields[1]
                .parse()
                .map_err(|_| Error::Format(format!("bad miou in {line}")))?,
            dataset_variant: fields[0].to_string(),
            input_channels: config.seg.channels,
        });
    }
    let table = reports_to_table(&reports);
    write_file(&config.output_dir.join("report.txt"), &table)?;
    print!("{table}");
    Ok(())
}

