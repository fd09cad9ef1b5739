//! Builds semi-artificial scenes: selected crop instances are replaced by
//! synthetic silhouettes carrying generated crop texture, the rest of the
//! replacement window is filled with style-guided soil, and the ground-truth
//! mask is repaired accordingly. Pixels outside every replacement window are
//! bit-identical to the input.

mod dataset_build;
mod synth;

use ndarray::s;

use crate::dataset::patches::{centered_window, connected_components};
use crate::dataset::preprocess::{denormalize_f32, normalize_u8};
use crate::dataset::scene::{MultispectralScene, CLASS_CROP, CLASS_SOIL};
use crate::error::{Error, Result};
use crate::shape_gan::BinaryShape;
use crate::style_gan::FourChannelImage;

pub use dataset_build::{build_synthetic_dataset, BuildOptions};
pub use synth::{GanShapeSource, GanTextureSource};

/// Supplies synthetic silhouettes at the replacement-window size.
pub trait ShapeSource: Sync {
    fn sample(&self, seed: u64) -> Result<BinaryShape>;
    fn resolution(&self) -> usize;
}

/// Supplies crop and soil textures for a silhouette.
pub trait TextureSource: Sync {
    /// Freely styled crop texture.
    fn crop_texture(&self, shape: &BinaryShape, seed: u64) -> Result<FourChannelImage>;
    /// Soil texture guided by the real background patch under replacement.
    fn soil_texture(
        &self,
        shape: &BinaryShape,
        background: &FourChannelImage,
        seed: u64,
    ) -> Result<FourChannelImage>;
}

/// Which silhouette replaces an instance: a sampled synthetic shape, or the
/// instance's own real silhouette (texture-only augmentation).
pub enum ShapeProvider<'a> {
    Sampled(&'a dyn ShapeSource),
    RealSilhouette,
}

/// A crop instance eligible for replacement: its centroid (the stem proxy)
/// admits a fully in-bounds replacement window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplaceableInstance {
    pub component_id: usize,
    pub centroid: (usize, usize),
    /// (top, left, height, width) of the component itself.
    pub bbox: (usize, usize, usize, usize),
    /// Top-left corner of the replacement window.
    pub patch_origin: (usize, usize),
}

/// One applied replacement, for provenance files.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Replacement {
    pub component_id: usize,
    pub shape_seed: u64,
    pub style_seed: u64,
    pub origin: (usize, usize),
}

/// A composed scene plus the record of what was replaced.
#[derive(Clone, Debug)]
pub struct SemiArtificialScene {
    pub scene: MultispectralScene,
    pub provenance: Vec<Replacement>,
}

/// splitmix64, used to derive independent per-instance and per-scene seeds.
pub(crate) fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn scene_seed(global: u64, scene_id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in scene_id.as_bytes() {
        h = (h ^ *b as u64).wrapping_mul(0x100_0000_01b3);
    }
    mix_seed(global, h)
}

/// Crop components whose stem proxy admits a fully in-bounds window, in
/// raster order of their centroids. Components failing the margin rule are
/// excluded and their pixels stay untouched downstream.
pub fn find_replaceable_instances(
    scene: &MultispectralScene,
    patch_size: usize,
) -> Vec<ReplaceableInstance> {
    let bounds = (scene.height(), scene.width());
    let mut instances: Vec<ReplaceableInstance> = connected_components(&scene.mask, CLASS_CROP)
        .into_iter()
        .filter_map(|comp| {
            centered_window(comp.centroid, patch_size, bounds).map(|origin| ReplaceableInstance {
                component_id: comp.id,
                centroid: comp.centroid,
                bbox: comp.bbox,
                patch_origin: origin,
            })
        })
        .collect();
    instances.sort_by_key(|i| i.centroid);
    instances
}

/// The original window content as a normalized four-channel patch; guides
/// the soil style.
fn window_background(
    scene: &MultispectralScene,
    origin: (usize, usize),
    size: usize,
) -> FourChannelImage {
    let (top, left) = origin;
    let mut values = ndarray::Array3::zeros((4, size, size));
    for r in 0..size {
        for c in 0..size {
            for ch in 0..3 {
                values[[ch, r, c]] = normalize_u8(scene.rgb[[top + r, left + c, ch]]);
            }
            values[[3, r, c]] = normalize_u8(scene.nir[[top + r, left + c]]);
        }
    }
    FourChannelImage::new(values).expect("normalized pixels stay in range")
}

/// Replace each instance: sample (or reuse) a silhouette, synthesize crop and
/// guided-soil texture, rewrite the window's rgb/nir, and repair the mask —
/// old crop clears to soil, the silhouette's support becomes crop (erasing
/// overlapped weed labels), weed outside the support is kept.
pub fn compose_scene(
    scene: &MultispectralScene,
    instances: &[ReplaceableInstance],
    shapes: &ShapeProvider<'_>,
    textures: &dyn TextureSource,
    patch_size: usize,
    seed: u64,
) -> Result<SemiArtificialScene> {
    let (h, w) = (scene.height(), scene.width());
    for inst in instances {
        let (top, left) = inst.patch_origin;
        if top + patch_size > h || left + patch_size > w {
            return Err(Error::Argument(format!(
                "instance {} window at ({top}, {left}) leaves the {h}x{w} scene",
                inst.component_id
            )));
        }
    }
    if let ShapeProvider::Sampled(src) = shapes {
        if src.resolution() != patch_size {
            return Err(Error::Argument(format!(
                "shape source resolution {} != patch size {patch_size}",
                src.resolution()
            )));
        }
    }

    let mut out = scene.clone();
    let mut provenance = Vec::with_capacity(instances.len());
    for (idx, inst) in instances.iter().enumerate() {
        let shape_seed = mix_seed(seed, (idx as u64) << 1);
        let style_seed = mix_seed(seed, ((idx as u64) << 1) | 1);
        let (top, left) = inst.patch_origin;

        let shape = match shapes {
            ShapeProvider::Sampled(src) => src.sample(shape_seed)?,
            ShapeProvider::RealSilhouette => BinaryShape::from_binary(
                scene
                    .mask
                    .slice(s![top..top + patch_size, left..left + patch_size])
                    .mapv(|v| u8::from(v == CLASS_CROP)),
            ),
        };
        if shape.size() != patch_size {
            return Err(Error::Argument(format!(
                "sampled shape size {} != patch size {patch_size}",
                shape.size()
            )));
        }
        let background = window_background(scene, inst.patch_origin, patch_size);
        let crop_tex = textures.crop_texture(&shape, style_seed)?;
        let soil_tex = textures.soil_texture(&shape, &background, style_seed)?;
        if crop_tex.resolution() != (patch_size, patch_size)
            || soil_tex.resolution() != (patch_size, patch_size)
        {
            return Err(Error::Argument("texture resolution mismatch".into()));
        }

        let crop_v = crop_tex.values();
        let soil_v = soil_tex.values();
        for r in 0..patch_size {
            for c in 0..patch_size {
                let (sr, sc) = (top + r, left + c);
                let on_crop = shape.values[[r, c]] == 1;
                let tex = if on_crop { crop_v } else { soil_v };
                for ch in 0..3 {
                    out.rgb[[sr, sc, ch]] = denormalize_f32(tex[[ch, r, c]]);
                }
                out.nir[[sr, sc]] = denormalize_f32(tex[[3, r, c]]);
                if on_crop {
                    out.mask[[sr, sc]] = CLASS_CROP;
                } else if out.mask[[sr, sc]] == CLASS_CROP {
                    out.mask[[sr, sc]] = CLASS_SOIL;
                }
                // Weed labels outside the silhouette survive.
            }
        }
        provenance.push(Replacement {
            component_id: inst.component_id,
            shape_seed,
            style_seed,
            origin: inst.patch_origin,
        });
    }
    Ok(SemiArtificialScene {
        scene: out,
        provenance,
    })
}
