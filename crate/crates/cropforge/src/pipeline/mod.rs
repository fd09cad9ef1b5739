//! Configuration file handling and the command implementations behind the
//! `cropforge` binary. Every command validates its configuration fully
//! before touching the filesystem, and all randomness flows from explicit
//! seeds in the config.

pub mod commands;
pub mod config;

pub use commands::{
    cmd_augment_baseline, cmd_compose, cmd_eval, cmd_prepare, cmd_report, cmd_train_shape,
    cmd_train_style,
};
pub use config::{PipelineConfig, RawConfig, VARIANT_NAMES};
