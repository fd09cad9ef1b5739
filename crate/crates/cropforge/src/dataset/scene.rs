use std::fs;
use std::path::{Path, PathBuf};

use image::{ColorType, GrayImage, RgbImage};
use ndarray::{Array2, Array3};

use crate::error::{Error, Result};

pub const CLASS_SOIL: u8 = 0;
pub const CLASS_CROP: u8 = 1;
pub const CLASS_WEED: u8 = 2;
pub const NUM_CLASSES: usize = 3;

/// One registered field scene: RGB raster, NIR raster and a per-pixel class
/// mask over {soil, crop, weed}, all sharing the same height and width.
#[derive(Clone, Debug)]
pub struct MultispectralScene {
    pub rgb: Array3<u8>,
    pub nir: Array2<u8>,
    pub mask: Array2<u8>,
    pub scene_id: String,
}

impl MultispectralScene {
    pub fn new(
        rgb: Array3<u8>,
        nir: Array2<u8>,
        mask: Array2<u8>,
        scene_id: impl Into<String>,
    ) -> Result<Self> {
        let scene_id = scene_id.into();
        let (h, w, c) = rgb.dim();
        if c != 3 {
            return Err(Error::Format(format!(
                "scene {scene_id}: rgb raster has {c} channels, expected 3"
            )));
        }
        if nir.dim() != (h, w) || mask.dim() != (h, w) {
            return Err(Error::Format(format!(
                "scene {scene_id}: raster shapes disagree: rgb {h}x{w}, nir {:?}, mask {:?}",
                nir.dim(),
                mask.dim()
            )));
        }
        if let Some(bad) = mask.iter().find(|v| **v > CLASS_WEED) {
            return Err(Error::Format(format!(
                "scene {scene_id}: mask contains value {bad} outside {{0, 1, 2}}"
            )));
        }
        Ok(MultispectralScene {
            rgb,
            nir,
            mask,
            scene_id,
        })
    }

    pub fn height(&self) -> usize {
        self.rgb.dim().0
    }

    pub fn width(&self) -> usize {
        self.rgb.dim().1
    }
}

/// A square window cut from a scene, carrying all three rasters.
#[derive(Clone, Debug)]
pub struct Patch {
    pub rgb: Array3<u8>,
    pub nir: Array2<u8>,
    pub mask: Array2<u8>,
    pub origin: (usize, usize),
    pub scene_id: String,
}

impl Patch {
    pub fn size(&self) -> usize {
        self.rgb.dim().0
    }
}

pub fn rgb_path(root: &Path, scene_id: &str) -> PathBuf {
    root.join("rgb").join(format!("{scene_id}.png"))
}

pub fn nir_path(root: &Path, scene_id: &str) -> PathBuf {
    root.join("nir").join(format!("{scene_id}.png"))
}

pub fn mask_path(root: &Path, scene_id: &str) -> PathBuf {
    root.join("mask").join(format!("{scene_id}.png"))
}

fn open_image(path: &Path) -> Result<image::DynamicImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(image::load_from_memory(&bytes)?)
}

fn load_rgb(path: &Path) -> Result<Array3<u8>> {
    let img = open_image(path)?;
    if img.color() != ColorType::Rgb8 {
        return Err(Error::Format(format!(
            "{}: expected 8-bit 3-channel png, found {:?}",
            path.display(),
            img.color()
        )));
    }
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    let data = rgb.into_raw();
    Ok(Array3::from_shape_vec((h as usize, w as usize, 3), data)
        .expect("raster buffer matches its dimensions"))
}

fn load_gray(path: &Path) -> Result<Array2<u8>> {
    let img = open_image(path)?;
    if img.color() != ColorType::L8 {
        return Err(Error::Format(format!(
            "{}: expected 8-bit 1-channel png, found {:?}",
            path.display(),
            img.color()
        )));
    }
    let gray = img.to_luma8();
    let (w, h) = gray.dimensions();
    let data = gray.into_raw();
    Ok(Array2::from_shape_vec((h as usize, w as usize), data)
        .expect("raster buffer matches its dimensions"))
}

/// Load one scene from the standard directory layout:
/// `root/rgb/<id>.png`, `root/nir/<id>.png`, `root/mask/<id>.png`.
pub fn load_scene(root: &Path, scene_id: &str) -> Result<MultispectralScene> {
    let rgb = load_rgb(&rgb_path(root, scene_id))?;
    let nir = load_gray(&nir_path(root, scene_id))?;
    let mask = load_gray(&mask_path(root, scene_id))?;
    MultispectralScene::new(rgb, nir, mask, scene_id)
}

/// Write one scene in the standard directory layout. Encoding is
/// deterministic, so identical scenes produce identical files.
pub fn save_scene(root: &Path, scene: &MultispectralScene) -> Result<()> {
    for sub in ["rgb", "nir", "mask"] {
        let dir = root.join(sub);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    let (h, w, _) = scene.rgb.dim();
    let rgb_img = RgbImage::from_raw(
        w as u32,
        h as u32,
        scene.rgb.as_standard_layout().iter().copied().collect(),
    )
    .expect("raster buffer matches its dimensions");
    let nir_img = GrayImage::from_raw(
        w as u32,
        h as u32,
        scene.nir.as_standard_layout().iter().copied().collect(),
    )
    .expect("raster buffer matches its dimensions");
    let mask_img = GrayImage::from_raw(
        w as u32,
        h as u32,
        scene.mask.as_standard_layout().iter().copied().collect(),
    )
    .expect("raster buffer matches its dimensions");
    rgb_img.save(rgb_path(root, &scene.scene_id))?;
    nir_img.save(nir_path(root, &scene.scene_id))?;
    mask_img.save(mask_path(root, &scene.scene_id))?;
    Ok(())
}

/// Scene ids present in a dataset directory, sorted for deterministic
/// iteration.
pub fn list_scene_ids(root: &Path) -> Result<Vec<String>> {
    let dir = root.join("rgb");
    let mut ids = Vec::new();
    for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
        let entry = entry.map_err(|e| Error::io(&dir, e))?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if let Some(id) = name.strip_suffix(".png") {
            ids.push(id.to_string());
        }
    }
    ids.sort();
    Ok(ids)
}
