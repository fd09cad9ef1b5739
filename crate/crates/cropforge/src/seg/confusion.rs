use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which planes the segmentation network consumes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelMode {
    Rgb,
    RgbNir,
}

impl ChannelMode {
    pub fn channels(&self) -> usize {
        match self {
            ChannelMode::Rgb => 3,
            ChannelMode::RgbNir => 4,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rgb" => Ok(ChannelMode::Rgb),
            "rgb+nir" | "rgbnir" | "rgb_nir" => Ok(ChannelMode::RgbNir),
            other => Err(Error::Argument(format!("unknown channel mode {other}"))),
        }
    }
}

impl std::fmt::Display for ChannelMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ChannelMode::Rgb => write!(f, "RGB"),
            ChannelMode::RgbNir => write!(f, "RGB+NIR"),
        }
    }
}

/// Per-class pixel counts; rows are ground truth, columns predictions.
#[derive(Clone, Debug)]
pub struct ConfusionAccumulator {
    counts: Array2<u64>,
}

impl ConfusionAccumulator {
    pub fn new(num_classes: usize) -> Self {
        ConfusionAccumulator {
            counts: Array2::zeros((num_classes, num_classes)),
        }
    }

    pub fn num_classes(&self) -> usize {
        self.counts.dim().0
    }

    pub fn counts(&self) -> &Array2<u64> {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn update(&mut self, gt: ArrayView2<'_, u8>, pred: ArrayView2<'_, u8>) -> Result<()> {
        if gt.dim() != pred.dim() {
            return Err(Error::Argument(format!(
                "mask shapes differ: {:?} vs {:?}",
                gt.dim(),
                pred.dim()
            )));
        }
        let c = self.num_classes() as u8;
        for (g, p) in gt.iter().zip(pred.iter()) {
            if *g >= c || *p >= c {
                return Err(Error::Argument(format!(
                    "class value out of range: gt={g}, pred={p}, classes={c}"
                )));
            }
            self.counts[[*g as usize, *p as usize]] += 1;
        }
        Ok(())
    }

    /// Accumulation is associative and commutative, so scenes can be counted
    /// in any grouping.
    pub fn merge(&mut self, other: &ConfusionAccumulator) -> Result<()> {
        if self.num_classes() != other.num_classes() {
            return Err(Error::Argument("class count mismatch in merge".into()));
        }
        self.counts = &self.counts + &other.counts;
        Ok(())
    }
}

/// Per-class IoU plus their mean. Classes absent from both ground truth and
/// prediction (empty union) are excluded from the mean and reported as None.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IoUReport {
    pub per_class: Vec<Option<f64>>,
    pub miou: f64,
    pub dataset_variant: String,
    pub input_channels: ChannelMode,
}

pub fn iou_from_confusion(
    acc: &ConfusionAccumulator,
    dataset_variant: &str,
    input_channels: ChannelMode,
) -> Result<IoUReport> {
    if acc.total() == 0 {
        return Err(Error::Argument("no pixels accumulated".into()));
    }
    let c = acc.num_classes();
    let counts = acc.counts();
    let mut per_class = Vec::with_capacity(c);
    let mut sum = 0.0;
    let mut n = 0usize;
    for i in 0..c {
        let diag = counts[[i, i]];
        let row: u64 = (0..c).map(|j| counts[[i, j]]).sum();
        let col: u64 = (0..c).map(|j| counts[[j, i]]).sum();
        let union = row + col - diag;
        if union == 0 {
            per_class.push(None);
        } else {
            let iou = diag as f64 / union as f64;
            per_class.push(Some(iou));
            sum += iou;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::Argument("every class has an empty union".into()));
    }
    Ok(IoUReport {
        per_class,
        miou: sum / n as f64,
        dataset_variant: dataset_variant.to_string(),
        input_channels,
    })
}

fn fmt_opt(v: &Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.4}"),
        None => String::from(""),
    }
}

/// CSV lines in the report layout: variant, miou, then per-class IoU
/// (soil, crop, weed).
pub fn reports_to_csv(reports: &[IoUReport]) -> String {
    let classes = reports.first().map_or(3, |r| r.per_class.len());
    let mut out = String::from("variant,miou");
    for name in ["iou_soil", "iou_crop", "iou_weed"].iter().take(classes) {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for r in reports {
        out.push_str(&format!("{},{:.4}", r.dataset_variant, r.miou));
        for v in &r.per_class {
            out.push(',');
            out.push_str(&fmt_opt(v));
        }
        out.push('\n');
    }
    out
}

/// Aligned text table mirroring the paper's comparison layout
/// (strategy, mIoU, crop IoU, weed IoU).
pub fn reports_to_table(reports: &[IoUReport]) -> String {
    let name_w = reports
        .iter()
        .map(|r| r.dataset_variant.len())
        .chain(std::iter::once("Augmentation Strategy".len()))
        .max()
        .unwrap_or(20);
    let mut out = format!(
        "{:<name_w$}  {:>6}  {:>6}  {:>6}\n",
        "Augmentation Strategy", "mIoU", "Crop", "Weed"
    );
    for r in reports {
        let crop = r.per_class.get(1).cloned().flatten();
        let weed = r.per_class.get(2).cloned().flatten();
        out.push_str(&format!(
            "{:<name_w$}  {:>6.4}  {:>6}  {:>6}\n",
            r.dataset_variant,
            r.miou,
            fmt_opt(&crop),
            fmt_opt(&weed),
        ));
    }
    out
}
