use ndarray::{s, Array2, Array3};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::scene::MultispectralScene;
use crate::error::{Error, Result};

/// Geometric transforms, applied identically to rgb, nir and mask.
#[derive(Clone, Debug, PartialEq)]
pub enum BasicAugment {
    /// Counter-clockwise rotation. Multiples of 90 degrees are exact index
    /// permutations; other angles resample (bilinear for images, nearest for
    /// the mask).
    Rotate { degrees: f32 },
    /// Translate content by (dy, dx) pixels; uncovered areas read 0.
    Shift { dy: i32, dx: i32 },
    Flip { horizontal: bool },
    /// Scale about the scene center; factor > 1 magnifies.
    Zoom { factor: f32 },
    /// Cut a window and resize it back to the full scene size.
    Crop {
        top: usize,
        left: usize,
        height: usize,
        width: usize,
    },
}

/// Photometric transforms, applied to rgb and nir; the mask is untouched.
#[derive(Clone, Debug, PartialEq)]
pub enum TextureAugment {
    GaussianBlur { kernel: usize },
    MedianBlur { kernel: usize },
    Noise { sigma: f32, seed: u64 },
    Contrast { factor: f32 },
    Brightness { delta: i32 },
}

impl BasicAugment {
    /// Resolve an op by name, for config/CLI surfaces. Unknown names are an
    /// argument error.
    pub fn parse(name: &str, params: &[f64]) -> Result<Self> {
        let want = |n: usize| -> Result<()> {
            if params.len() != n {
                return Err(Error::Argument(format!(
                    "basic op {name} takes {n} parameter(s), got {}",
                    params.len()
                )));
            }
            Ok(())
        };
        match name {
            "rotate" => {
                want(1)?;
                Ok(BasicAugment::Rotate {
                    degrees: params[0] as f32,
                })
            }
            "shift" => {
                want(2)?;
                Ok(BasicAugment::Shift {
                    dy: params[0] as i32,
                    dx: params[1] as i32,
                })
            }
            "flip" => {
                want(1)?;
                Ok(BasicAugment::Flip {
                    horizontal: params[0] != 0.0,
                })
            }
            "zoom" => {
                want(1)?;
                Ok(BasicAugment::Zoom {
                    factor: params[0] as f32,
                })
            }
            "crop" => {
                want(4)?;
                Ok(BasicAugment::Crop {
                    top: params[0] as usize,
                    left: params[1] as usize,
                    height: params[2] as usize,
                    width: params[3] as usize,
                })
            }
            other => Err(Error::Argument(format!("unknown basic op {other}"))),
        }
    }
}

impl TextureAugment {
    pub fn parse(name: &str, params: &[f64]) -> Result<Self> {
        let want = |n: usize| -> Result<()> {
            if params.len() != n {
                return Err(Error::Argument(format!(
                    "texture op {name} takes {n} parameter(s), got {}",
                    params.len()
                )));
            }
            Ok(())
        };
        match name {
            "gaussian_blur" => {
                want(1)?;
                Ok(TextureAugment::GaussianBlur {
                    kernel: params[0] as usize,
                })
            }
            "median_blur" => {
                want(1)?;
                Ok(TextureAugment::MedianBlur {
                    kernel: params[0] as usize,
                })
            }
            "noise" => {
                want(2)?;
                Ok(TextureAugment::Noise {
                    sigma: params[0] as f32,
                    seed: params[1] as u64,
                })
            }
            "contrast" => {
                want(1)?;
                Ok(TextureAugment::Contrast {
                    factor: params[0] as f32,
                })
            }
            "brightness" => {
                want(1)?;
                Ok(TextureAugment::Brightness {
                    delta: params[0] as i32,
                })
            }
            other => Err(Error::Argument(format!("unknown texture op {other}"))),
        }
    }
}

// --- geometric machinery ------------------------------------------------

/// Per-pixel inverse map: output (r, c) -> fractional source coordinates,
/// or None for "read fill value".
type InverseMap<'a> = dyn Fn(usize, usize) -> Option<(f32, f32)> + 'a;

fn sample_nearest(src: &Array2<u8>, coords: Option<(f32, f32)>) -> u8 {
    let Some((r, c)) = coords else { return 0 };
    let (h, w) = src.dim();
    let ri = (r + 0.5).floor() as i64;
    let ci = (c + 0.5).floor() as i64;
    if ri < 0 || ci < 0 || ri >= h as i64 || ci >= w as i64 {
        return 0;
    }
    src[[ri as usize, ci as usize]]
}

fn sample_bilinear(src: &Array2<u8>, coords: Option<(f32, f32)>) -> u8 {
    let Some((r, c)) = coords else { return 0 };
    let (h, w) = src.dim();
    if r < 0.0 || c < 0.0 || r > (h - 1) as f32 || c > (w - 1) as f32 {
        return 0;
    }
    let r0 = r.floor() as usize;
    let c0 = c.floor() as usize;
    let r1 = (r0 + 1).min(h - 1);
    let c1 = (c0 + 1).min(w - 1);
    let fr = r - r0 as f32;
    let fc = c - c0 as f32;
    let v = src[[r0, c0]] as f32 * (1.0 - fr) * (1.0 - fc)
        + src[[r0, c1]] as f32 * (1.0 - fr) * fc
        + src[[r1, c0]] as f32 * fr * (1.0 - fc)
        + src[[r1, c1]] as f32 * fr * fc;
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

fn warp_scene(
    scene: &MultispectralScene,
    out_dims: (usize, usize),
    map: &InverseMap<'_>,
) -> MultispectralScene {
    let (oh, ow) = out_dims;
    let channel =
        |ch: usize| Array2::from_shape_fn((scene.height(), scene.width()), |(r, c)| scene.rgb[[r, c, ch]]);
    let rgb_channels: Vec<Array2<u8>> = (0..3).map(channel).collect();
    let mut rgb = Array3::zeros((oh, ow, 3));
    let mut nir = Array2::zeros((oh, ow));
    let mut mask = Array2::zeros((oh, ow));
    for r in 0..oh {
        for c in 0..ow {
            let coords = map(r, c);
            for (ch, plane) in rgb_channels.iter().enumerate() {
                rgb[[r, c, ch]] = sample_bilinear(plane, coords);
            }
            nir[[r, c]] = sample_bilinear(&scene.nir, coords);
            mask[[r, c]] = sample_nearest(&scene.mask, coords);
        }
    }
    MultispectralScene {
        rgb,
        nir,
        mask,
        scene_id: scene.scene_id.clone(),
    }
}

/// Exact index permutations for flips and quarter turns; no resampling.
fn permute_scene(
    scene: &MultispectralScene,
    out_dims: (usize, usize),
    index: impl Fn(usize, usize) -> (usize, usize),
) -> MultispectralScene {
    let (oh, ow) = out_dims;
    let mut rgb = Array3::zeros((oh, ow, 3));
    let mut nir = Array2::zeros((oh, ow));
    let mut mask = Array2::zeros((oh, ow));
    for r in 0..oh {
        for c in 0..ow {
            let (sr, sc) = index(r, c);
            for ch in 0..3 {
                rgb[[r, c, ch]] = scene.rgb[[sr, sc, ch]];
            }
            nir[[r, c]] = scene.nir[[sr, sc]];
            mask[[r, c]] = scene.mask[[sr, sc]];
        }
    }
    MultispectralScene {
        rgb,
        nir,
        mask,
        scene_id: scene.scene_id.clone(),
    }
}

pub fn basic_augment(scene: &MultispectralScene, op: &BasicAugment) -> Result<MultispectralScene> {
    let (h, w) = (scene.height(), scene.width());
    match op {
        BasicAugment::Rotate { degrees } => {
            let quarter = degrees.rem_euclid(360.0);
            if quarter.fract() == 0.0 && (quarter as u32) % 90 == 0 {
                return Ok(match (quarter as u32) / 90 {
                    0 => scene.clone(),
                    1 => permute_scene(scene, (w, h), |r, c| (c, w - 1 - r)),
                    2 => permute_scene(scene, (h, w), |r, c| (h - 1 - r, w - 1 - c)),
                    _ => permute_scene(scene, (w, h), |r, c| (h - 1 - c, r)),
                });
            }
            let theta = (*degrees as f64).to_radians();
            let (sin, cos) = (theta.sin() as f32, theta.cos() as f32);
            let (mr, mc) = ((h as f32 - 1.0) / 2.0, (w as f32 - 1.0) / 2.0);
            Ok(warp_scene(scene, (h, w), &|r, c| {
                let y = r as f32 - mr;
                let x = c as f32 - mc;
                Some((mr + cos * y + sin * x, mc - sin * y + cos * x))
            }))
        }
        BasicAugment::Shift { dy, dx } => Ok(permute_or_fill_shift(scene, *dy, *dx)),
        BasicAugment::Flip { horizontal } => Ok(if *horizontal {
            permute_scene(scene, (h, w), |r, c| (r, w - 1 - c))
        } else {
            permute_scene(scene, (h, w), |r, c| (h - 1 - r, c))
        }),
        BasicAugment::Zoom { factor } => {
            if *factor <= 0.0 {
                return Err(Error::Argument(format!("zoom factor must be > 0, got {factor}")));
            }
            let (mr, mc) = ((h as f32 - 1.0) / 2.0, (w as f32 - 1.0) / 2.0);
            let inv = 1.0 / *factor;
            Ok(warp_scene(scene, (h, w), &|r, c| {
                Some((mr + (r as f32 - mr) * inv, mc + (c as f32 - mc) * inv))
            }))
        }
        BasicAugment::Crop {
            top,
            left,
            height,
            width,
        } => {
            if *height == 0 || *width == 0 || top + height > h || left + width > w {
                return Err(Error::Argument(format!(
                    "crop window ({top}, {left}, {height}, {width}) leaves the {h}x{w} scene"
                )));
            }
            let sy = *height as f32 / h as f32;
            let sx = *width as f32 / w as f32;
            Ok(warp_scene(scene, (h, w), &|r, c| {
                Some((*top as f32 + r as f32 * sy, *left as f32 + c as f32 * sx))
            }))
        }
    }
}

fn permute_or_fill_shift(scene: &MultispectralScene, dy: i32, dx: i32) -> MultispectralScene {
    let (h, w) = (scene.height(), scene.width());
    let mut out = MultispectralScene {
        rgb: Array3::zeros((h, w, 3)),
        nir: Array2::zeros((h, w)),
        mask: Array2::zeros((h, w)),
        scene_id: scene.scene_id.clone(),
    };
    for r in 0..h {
        for c in 0..w {
            let sr = r as i64 - dy as i64;
            let sc = c as i64 - dx as i64;
            if sr < 0 || sc < 0 || sr >= h as i64 || sc >= w as i64 {
                continue;
            }
            let (sr, sc) = (sr as usize, sc as usize);
            for ch in 0..3 {
                out.rgb[[r, c, ch]] = scene.rgb[[sr, sc, ch]];
            }
            out.nir[[r, c]] = scene.nir[[sr, sc]];
            out.mask[[r, c]] = scene.mask[[sr, sc]];
        }
    }
    out
}

// --- photometric machinery ------------------------------------------------

fn map_planes(scene: &MultispectralScene, f: impl Fn(&Array2<u8>) -> Array2<u8>) -> MultispectralScene {
    let channel =
        |ch: usize| Array2::from_shape_fn((scene.height(), scene.width()), |(r, c)| scene.rgb[[r, c, ch]]);
    let planes: Vec<Array2<u8>> = (0..3).map(|ch| f(&channel(ch))).collect();
    let mut rgb = Array3::zeros((scene.height(), scene.width(), 3));
    for ch in 0..3 {
        rgb.slice_mut(s![.., .., ch]).assign(&planes[ch]);
    }
    MultispectralScene {
        rgb,
        nir: f(&scene.nir),
        mask: scene.mask.clone(),
        scene_id: scene.scene_id.clone(),
    }
}

fn gaussian_blur_plane(src: &Array2<u8>, kernel: usize) -> Array2<u8> {
    let sigma = kernel as f64 / 6.0;
    let half = (kernel / 2) as i64;
    let weights: Vec<f64> = (-half..=half)
        .map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = weights.iter().sum();
    let weights: Vec<f64> = weights.into_iter().map(|w| w / sum).collect();
    let (h, w) = src.dim();
    let pass = |src: &Array2<f64>, axis: usize| -> Array2<f64> {
        let mut out = Array2::zeros((h, w));
        for r in 0..h {
            for c in 0..w {
                let mut acc = 0.0;
                for (i, wt) in weights.iter().enumerate() {
                    let d = i as i64 - half;
                    let (sr, sc) = if axis == 0 {
                        ((r as i64 + d).clamp(0, h as i64 - 1) as usize, c)
                    } else {
                        (r, (c as i64 + d).clamp(0, w as i64 - 1) as usize)
                    };
                    acc += wt * src[[sr, sc]];
                }
                out[[r, c]] = acc;
            }
        }
        out
    };
    let f = src.mapv(|v| v as f64);
    pass(&pass(&f, 0), 1).mapv(|v| (v + 0.5).floor().clamp(0.0, 255.0) as u8)
}

fn median_blur_plane(src: &Array2<u8>, kernel: usize) -> Array2<u8> {
    let (h, w) = src.dim();
    let half = (kernel / 2) as i64;
    let mut window = Vec::with_capacity(kernel * kernel);
    Array2::from_shape_fn((h, w), |(r, c)| {
        window.clear();
        for dr in -half..=half {
            for dc in -half..=half {
                let sr = (r as i64 + dr).clamp(0, h as i64 - 1) as usize;
                let sc = (c as i64 + dc).clamp(0, w as i64 - 1) as usize;
                window.push(src[[sr, sc]]);
            }
        }
        window.sort_unstable();
        window[window.len() / 2]
    })
}

pub fn texture_augment(scene: &MultispectralScene, op: &TextureAugment) -> Result<MultispectralScene> {
    match op {
        TextureAugment::GaussianBlur { kernel } => {
            if kernel % 2 == 0 || *kernel == 0 {
                return Err(Error::Argument(format!(
                    "blur kernel size must be odd and >= 1, got {kernel}"
                )));
            }
            Ok(map_planes(scene, |p| gaussian_blur_plane(p, *kernel)))
        }
        TextureAugment::MedianBlur { kernel } => {
            if kernel % 2 == 0 || *kernel == 0 {
                return Err(Error::Argument(format!(
                    "median kernel size must be odd and >= 1, got {kernel}"
                )));
            }
            Ok(map_planes(scene, |p| median_blur_plane(p, *kernel)))
        }
        TextureAugment::Noise { sigma, seed } => {
            let mut rng = ChaCha12Rng::seed_from_u64(*seed);
            let mut noisy = |p: &Array2<u8>, rng: &mut ChaCha12Rng| {
                p.mapv(|v| {
                    let n: f64 = StandardNormal.sample(rng);
                    (v as f64 + n * *sigma as f64 + 0.5).floor().clamp(0.0, 255.0) as u8
                })
            };
            // Planes drawn in a fixed order: r, g, b, nir.
            let (h, w) = (scene.height(), scene.width());
            let mut rgb = Array3::zeros((h, w, 3));
            for ch in 0..3 {
                let plane = Array2::from_shape_fn((h, w), |(r, c)| scene.rgb[[r, c, ch]]);
                rgb.slice_mut(s![.., .., ch]).assign(&noisy(&plane, &mut rng));
            }
            Ok(MultispectralScene {
                rgb,
                nir: noisy(&scene.nir, &mut rng),
                mask: scene.mask.clone(),
                scene_id: scene.scene_id.clone(),
            })
        }
        TextureAugment::Contrast { factor } => Ok(map_planes(scene, |p| {
            p.mapv(|v| ((v as f32 - 127.5) * factor + 127.5 + 0.5).floor().clamp(0.0, 255.0) as u8)
        })),
        TextureAugment::Brightness { delta } => Ok(map_planes(scene, |p| {
            p.mapv(|v| (v as i32 + delta).clamp(0, 255) as u8)
        })),
    }
}
