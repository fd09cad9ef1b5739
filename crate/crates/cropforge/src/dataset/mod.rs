//! Scene ingestion, patch extraction, preprocessing and the classical
//! augmentation baselines.

pub mod augment;
pub mod patches;
pub mod preprocess;
pub mod scene;
pub mod split;
pub mod toy;

pub use augment::{basic_augment, texture_augment, BasicAugment, TextureAugment};
pub use patches::{centered_window, connected_components, extract_crop_patches, Component};
pub use preprocess::{blur_mask, denormalize_f32, normalize_raster, normalize_u8, SoftMask};
pub use scene::{
    list_scene_ids, load_scene, save_scene, MultispectralScene, Patch, CLASS_CROP, CLASS_SOIL,
    CLASS_WEED, NUM_CLASSES,
};
pub use split::{build_split, SplitManifest};
