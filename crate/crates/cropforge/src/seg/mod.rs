//! Downstream evaluation harness: a compact encoder-decoder segmentation
//! network trained per dataset variant, scored by per-class IoU and mIoU.

pub mod confusion;
pub mod train;
pub mod unet;

pub use confusion::{
    iou_from_confusion, reports_to_csv, reports_to_table, ChannelMode, ConfusionAccumulator,
    IoUReport,
};
pub use train::{compare_strategies, evaluate, train_segmentation, SegModel, Variant};
pub use unet::{cross_entropy_loss, predict_classes, SegConfig, SegNet};
