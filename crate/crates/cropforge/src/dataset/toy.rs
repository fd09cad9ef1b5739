//! Procedural field scenes for demos and smoke tests: textured soil,
//! rosette-shaped crops with a bright NIR response, and small weeds.

use std::path::Path;

use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::dataset::preprocess::{blur_mask, SoftMask};
use crate::dataset::scene::{save_scene, MultispectralScene, CLASS_CROP, CLASS_WEED};
use crate::error::Result;

#[derive(Clone, Debug)]
pub struct ToyConfig {
    pub scene_count: usize,
    pub height: usize,
    pub width: usize,
    pub crops_per_scene: std::ops::RangeInclusive<usize>,
    pub weeds_per_scene: std::ops::RangeInclusive<usize>,
    pub seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig {
            scene_count: 20,
            height: 128,
            width: 128,
            crops_per_scene: 1..=2,
            weeds_per_scene: 1..=3,
            seed: 17,
        }
    }
}

/// A rosette of elliptical lobes; the crop silhouettes the shape GAN trains on.
fn stamp_rosette(
    mask: &mut Array2<u8>,
    class: u8,
    center: (f32, f32),
    radius: f32,
    lobes: usize,
    rng: &mut ChaCha12Rng,
) {
    let (h, w) = mask.dim();
    let mut shapes = Vec::new();
    for i in 0..lobes {
        let angle = i as f32 / lobes as f32 * std::f32::consts::TAU + rng.random_range(-0.2..0.2);
        let dist = radius * rng.random_range(0.35..0.55);
        let a = radius * rng.random_range(0.45..0.7);
        let b = radius * rng.random_range(0.2..0.35);
        shapes.push((
            center.0 + dist * angle.sin(),
            center.1 + dist * angle.cos(),
            angle,
            a,
            b,
        ));
    }
    // Central disc keeps the rosette connected.
    shapes.push((center.0, center.1, 0.0, radius * 0.3, radius * 0.3));
    let r_lo = (center.0 - radius * 1.5).floor().max(0.0) as usize;
    let r_hi = ((center.0 + radius * 1.5).ceil() as usize).min(h.saturating_sub(1));
    let c_lo = (center.1 - radius * 1.5).floor().max(0.0) as usize;
    let c_hi = ((center.1 + radius * 1.5).ceil() as usize).min(w.saturating_sub(1));
    for r in r_lo..=r_hi {
        for c in c_lo..=c_hi {
            for (cy, cx, angle, a, b) in &shapes {
                let y = r as f32 - cy;
                let x = c as f32 - cx;
                let u = y * angle.sin() + x * angle.cos();
                let v = -y * angle.cos() + x * angle.sin();
                if (u / a).powi(2) + (v / b).powi(2) <= 1.0 {
                    mask[[r, c]] = class;
                    break;
                }
            }
        }
    }
}

fn value_noise(h: usize, w: usize, cell: usize, amp: f32, rng: &mut ChaCha12Rng) -> Array2<f32> {
    let gh = h / cell + 2;
    let gw = w / cell + 2;
    let grid = Array2::from_shape_fn((gh, gw), |_| rng.random_range(-amp..amp));
    Array2::from_shape_fn((h, w), |(r, c)| {
        let gr = r as f32 / cell as f32;
        let gc = c as f32 / cell as f32;
        let r0 = gr.floor() as usize;
        let c0 = gc.floor() as usize;
        let fr = gr - r0 as f32;
        let fc = gc - c0 as f32;
        grid[[r0, c0]] * (1.0 - fr) * (1.0 - fc)
            + grid[[r0, c0 + 1]] * (1.0 - fr) * fc
            + grid[[r0 + 1, c0]] * fr * (1.0 - fc)
            + grid[[r0 + 1, c0 + 1]] * fr * fc
    })
}

pub fn make_scene(scene_id: &str, config: &ToyConfig, rng: &mut ChaCha12Rng) -> MultispectralScene {
    let (h, w) = (config.height, config.width);
    let mut mask = Array2::zeros((h, w));

    let n_crops = rng.random_range(config.crops_per_scene.clone());
    let margin = (h.min(w) / 4) as f32;
    for _ in 0..n_crops {
        let center = (
            rng.random_range(margin..h as f32 - margin),
            rng.random_range(margin..w as f32 - margin),
        );
        let radius = rng.random_range(0.09..0.16) * h.min(w) as f32;
        let lobes = rng.random_range(4..8);
        stamp_rosette(&mut mask, CLASS_CROP, center, radius, lobes, rng);
    }
    // Occasionally a crop hugging the border, which composition must skip.
    if rng.random_range(0.0..1.0) < 0.3 {
        let side = rng.random_range(0..4);
        let center = match side {
            0 => (2.0, rng.random_range(0.0..w as f32)),
            1 => (h as f32 - 3.0, rng.random_range(0.0..w as f32)),
            2 => (rng.random_range(0.0..h as f32), 2.0),
            _ => (rng.random_range(0.0..h as f32), w as f32 - 3.0),
        };
        stamp_rosette(&mut mask, CLASS_CROP, center, 0.08 * h as f32, 4, rng);
    }
    let n_weeds = rng.random_range(config.weeds_per_scene.clone());
    for _ in 0..n_weeds {
        let center = (
            rng.random_range(0.0..h as f32),
            rng.random_range(0.0..w as f32),
        );
        let radius = rng.random_range(0.02..0.05) * h.min(w) as f32;
        stamp_rosette(&mut mask, CLASS_WEED, center, radius, 3, rng);
    }

    let soil_base = rng.random_range(80.0..110.0f32);
    let soil_noise = value_noise(h, w, 9, 18.0, rng);
    let fine_noise = value_noise(h, w, 2, 7.0, rng);
    let crop_green = rng.random_range(120.0..160.0f32);
    let weed_green = rng.random_range(90.0..120.0f32);

    let mut rgb = Array3::zeros((h, w, 3));
    let mut nir = Array2::zeros((h, w));
    for r in 0..h {
        for c in 0..w {
            let n = soil_noise[[r, c]] + fine_noise[[r, c]];
            let q = |v: f32| v.clamp(0.0, 255.0) as u8;
            match mask[[r, c]] {
                CLASS_CROP => {
                    rgb[[r, c, 0]] = q(45.0 + n * 0.4);
                    rgb[[r, c, 1]] = q(crop_green + n * 0.6);
                    rgb[[r, c, 2]] = q(40.0 + n * 0.3);
                    nir[[r, c]] = q(205.0 + n * 0.5);
                }
                CLASS_WEED => {
                    rgb[[r, c, 0]] = q(60.0 + n * 0.4);
                    rgb[[r, c, 1]] = q(weed_green + n * 0.6);
                    rgb[[r, c, 2]] = q(55.0 + n * 0.3);
                    nir[[r, c]] = q(160.0 + n * 0.5);
                }
                _ => {
                    rgb[[r, c, 0]] = q(soil_base + n);
                    rgb[[r, c, 1]] = q(soil_base * 0.82 + n);
                    rgb[[r, c, 2]] = q(soil_base * 0.6 + n);
                    nir[[r, c]] = q(55.0 + n * 0.8);
                }
            }
        }
    }
    MultispectralScene {
        rgb,
        nir,
        mask,
        scene_id: scene_id.to_string(),
    }
}

/// Generate a full toy dataset in the standard directory layout and return
/// the scene ids.
pub fn generate_dataset(root: &Path, config: &ToyConfig) -> Result<Vec<String>> {
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut ids = Vec::with_capacity(config.scene_count);
    for i in 0..config.scene_count {
        let id = format!("toy{i:04}");
        let scene = make_scene(&id, config, &mut rng);
        save_scene(root, &scene)?;
        ids.push(id);
    }
    Ok(ids)
}

/// Blurred elliptical silhouettes, the standard fixture set for shape-GAN
/// smoke training.
pub fn ellipse_soft_masks(count: usize, size: usize, kernel: usize, seed: u64) -> Result<Vec<SoftMask>> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut masks = Vec::with_capacity(count);
    for _ in 0..count {
        let mut mask = Array2::zeros((size, size));
        let center = (
            size as f32 / 2.0 + rng.random_range(-4.0..4.0),
            size as f32 / 2.0 + rng.random_range(-4.0..4.0),
        );
        let radius = rng.random_range(0.2..0.32) * size as f32;
        let lobes = rng.random_range(3..7);
        stamp_rosette(&mut mask, 1, center, radius, lobes, &mut rng);
        masks.push(blur_mask(mask.view(), kernel)?);
    }
    Ok(masks)
}
