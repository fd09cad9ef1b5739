use ndarray::{s, Array2};

use crate::dataset::scene::{MultispectralScene, Patch, CLASS_CROP};
use crate::error::{Error, Result};

/// One 8-connected component of a binary raster.
#[derive(Clone, Debug)]
pub struct Component {
    pub id: usize,
    pub pixel_count: usize,
    /// Centroid rounded to the nearest pixel.
    pub centroid: (usize, usize),
    /// (top, left, height, width)
    pub bbox: (usize, usize, usize, usize),
}

/// Label the 8-connected components of `mask == class`. Components are
/// numbered in raster order of their first pixel, starting at 0.
pub fn connected_components(mask: &Array2<u8>, class: u8) -> Vec<Component> {
    let (h, w) = mask.dim();
    let mut labels: Array2<i32> = Array2::from_elem((h, w), -1);
    let mut components = Vec::new();
    let mut stack = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if mask[[r, c]] != class || labels[[r, c]] >= 0 {
                continue;
            }
            let id = components.len();
            let mut count = 0usize;
            let mut sum_r = 0usize;
            let mut sum_c = 0usize;
            let (mut top, mut left, mut bottom, mut right) = (r, c, r, c);
            stack.push((r, c));
            labels[[r, c]] = id as i32;
            while let Some((pr, pc)) = stack.pop() {
                count += 1;
                sum_r += pr;
                sum_c += pc;
                top = top.min(pr);
                left = left.min(pc);
                bottom = bottom.max(pr);
                right = right.max(pc);
                for dr in -1i64..=1 {
                    for dc in -1i64..=1 {
                        if dr == 0 && dc == 0 {
                            continue;
                        }
                        let nr = pr as i64 + dr;
                        let nc = pc as i64 + dc;
                        if nr < 0 || nc < 0 || nr >= h as i64 || nc >= w as i64 {
                            continue;
                        }
                        let (nr, nc) = (nr as usize, nc as usize);
                        if mask[[nr, nc]] == class && labels[[nr, nc]] < 0 {
                            labels[[nr, nc]] = id as i32;
                            stack.push((nr, nc));
                        }
                    }
                }
            }
            let centroid = (
                ((sum_r as f64 / count as f64) + 0.5).floor() as usize,
                ((sum_c as f64 / count as f64) + 0.5).floor() as usize,
            );
            components.push(Component {
                id,
                pixel_count: count,
                centroid,
                bbox: (top, left, bottom - top + 1, right - left + 1),
            });
        }
    }
    components
}

/// Where a size x size window centered on `centroid` would sit, or None if it
/// leaves the raster. The centroid is the stem proxy: a component qualifies
/// only when the full window fits.
pub fn centered_window(
    centroid: (usize, usize),
    size: usize,
    bounds: (usize, usize),
) -> Option<(usize, usize)> {
    let half = size / 2;
    let (r, c) = centroid;
    let (h, w) = bounds;
    if r < half || c < half {
        return None;
    }
    let top = r - half;
    let left = c - half;
    if top + size > h || left + size > w {
        return None;
    }
    Some((top, left))
}

/// Cut one training patch per crop component whose stem proxy admits a fully
/// in-bounds window. Border-hugging components are skipped, not padded.
pub fn extract_crop_patches(scene: &MultispectralScene, size: usize) -> Result<Vec<Patch>> {
    let (h, w) = scene.mask.dim();
    if size == 0 || size > h.min(w) {
        return Err(Error::Argument(format!(
            "patch size {size} does not fit a {h}x{w} scene"
        )));
    }
    let mut patches = Vec::new();
    for comp in connected_components(&scene.mask, CLASS_CROP) {
        let Some((top, left)) = centered_window(comp.centroid, size, (h, w)) else {
            continue;
        };
        patches.push(Patch {
            rgb: scene
                .rgb
                .slice(s![top..top + size, left..left + size, ..])
                .to_owned(),
            nir: scene
                .nir
                .slice(s![top..top + size, left..left + size])
                .to_owned(),
            mask: scene
                .mask
                .slice(s![top..top + size, left..left + size])
                .to_owned(),
            origin: (top, left),
            scene_id: scene.scene_id.clone(),
        });
    }
    Ok(patches)
}
