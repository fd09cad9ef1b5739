use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::composer::{
    compose_scene, find_replaceable_instances, scene_seed, ShapeProvider, TextureSource,
};
use crate::dataset::scene::{self, save_scene};
use crate::dataset::split::SplitManifest;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct BuildOptions {
    pub patch_size: usize,
    /// Fraction of the training split to replace with composed scenes.
    pub fraction: f64,
    pub seed: u64,
    pub workers: usize,
}

fn copy_scene_files(root: &Path, out_root: &Path, id: &str) -> Result<()> {
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

fn compose_one(
    root: &Path,
    out_root: &Path,
    id: &str,
    shapes: &ShapeProvider<'_>,
    textures: &dyn TextureSource,
    opts: &BuildOptions,
) -> Result<usize> {
    let scene = scene::load_scene(root, id)?;
    let instances = find_replaceable_instances(&scene, opts.patch_size);
    let composed = compose_scene(
        &scene,
        &instances,
        shapes,
        textures,
        opts.patch_size,
        scene_seed(opts.seed, id),
    )?;
    save_scene(out_root, &composed.scene)?;
    let prov_dir = out_root.join("provenance");
    fs::create_dir_all(&prov_dir).map_err(|e| Error::io(&prov_dir, e))?;
    let mut text = String::new();
    for r in &composed.provenance {
        text.push_str(&format!(
            "{} {} {} {} {}\n",
            r.component_id, r.shape_seed, r.style_seed, r.origin.0, r.origin.1
        ));
    }
    let prov_path = prov_dir.join(format!("{id}.txt"));
    fs::write(&prov_path, text).map_err(|e| Error::io(&prov_path, e))?;
    Ok(composed.provenance.len())
}

/// Materialize a mixed dataset: a deterministic `fraction` of the training
/// scenes is composed, the rest plus the val/test splits are copied byte for
/// byte. Output is identical for any worker count because every scene's seed
/// derives from (seed, scene_id).
pub fn build_synthetic_dataset(
    manifest: &SplitManifest,
    root: &Path,
    shapes: &ShapeProvider<'_>,
    textures: &dyn TextureSource,
    out_root: &Path,
    opts: &BuildOptions,
) -> Result<SplitManifest> {
    if !(0.0..=1.0).contains(&opts.fraction) {
        return Err(Error::Argument(format!(
            "fraction {} outside [0, 1]",
            opts.fraction
        )));
    }
    let k = (opts.fraction * manifest.train.len() as f64).floor() as usize;
    let mut order = manifest.train.clone();
    let mut rng = ChaCha12Rng::seed_from_u64(opts.seed);
    order.shuffle(&mut rng);
    let selected: std::collections::HashSet<&String> = order.iter().take(k).collect();

    let jobs: Vec<(&String, bool)> = manifest
        .train
        .iter()
        .map(|id| (id, selected.contains(id)))
        .collect();
    let run = |(id, compose): &(&String, bool)| -> Result<()> {
        if *compose {
            compose_one(root, out_root, id, shapes, textures, opts)?;
        } else {
            copy_scene_files(root, out_root, id)?;
        }
        Ok(())
    };
    if opts.workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(run).collect::<Result<Vec<()>>>())?;
    } else {
        for job in &jobs {
            run(job)?;
        }
    }
    for id in manifest.val.iter().chain(&manifest.test) {
        copy_scene_files(root, out_root, id)?;
    }
    let out_manifest = manifest.clone();
    out_manifest.save(&out_root.join("split.txt"))?;
    Ok(out_manifest)
}
