//! Confusion counts, the five segmentation metrics, micro/macro aggregation
//! and report files.

mod report;

pub use report::{
    read_history_csv, read_report, write_history_csv, write_per_image_csv, write_report, write_triptych, HistoryWriter,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::imaging::Image2D;
use crate::{Error, Result};

/// Pixel tallies with the lung (255) as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        ConfusionCounts {
            tp: self.tp + o.tp,
            tn: self.tn + o.tn,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
        }
    }
}

impl std::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |a, b| a + b)
    }
}

/// Tallies a predicted mask against the ground truth. Both must be {0, 255}.
pub fn confusion(pred: &Image2D, gt: &Image2D) -> Result<ConfusionCounts> {
    pred.same_extents(gt)?;
    let mut c = ConfusionCounts::default();
    for (&p, &g) in pred.pixels().iter().zip(gt.pixels()) {
        match (p, g) {
            (255, 255) => c.tp += 1,
            (0, 0) => c.tn += 1,
            (255, 0) => c.fp += 1,
            (0, 255) => c.fn_ += 1,
            (v, 0 | 255) | (_, v) => return Err(Error::NonBinaryMask(v)),
        }
    }
    Ok(c)
}

/// The five metrics as percentages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub dice: f64,
}

/// `num / den · 100`, or by convention 100 when `den` is zero and the
/// complementary mask is empty as well (nothing to find, nothing found), else 0.
fn ratio(num: u64, den: u64, other_empty: bool) -> f64 {
    if den > 0 {
        num as f64 / den as f64 * 100.0
    } else if other_empty {
        100.0
    } else {
        0.0
    }
}

/// Accuracy, precision, recall, F1 (harmonic mean of precision and recall) and Dice.
pub fn metrics_from_counts(c: &ConfusionCounts) -> Result<Metrics> {
    if c.total() == 0 {
        return Err(Error::Empty("confusion counts"));
    }
    let pred_empty = c.tp + c.fp == 0;
    let gt_empty = c.tp + c.fn_ == 0;
    let accuracy = (c.tp + c.tn) as f64 / c.total() as f64 * 100.0;
    let precision = ratio(c.tp, c.tp + c.fp, gt_empty);
    let recall = ratio(c.tp, c.tp + c.fn_, pred_empty);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    let dice = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_, true);
    Ok(Metrics {
        accuracy,
        precision,
        recall,
        f1,
        dice,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Sum counts over images, then compute metrics.
    Micro,
    /// Compute metrics per image, then average.
    Macro,
}

impl std::fmt::Display for Aggregation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Aggregation::Micro => "micro",
            Aggregation::Macro => "macro",
        })
    }
}

/// Counts and metrics for one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageResult {
    pub id: String,
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
}

impl ImageResult {
    pub fn new(id: impl Into<String>, counts: ConfusionCounts) -> Result<Self> {
        Ok(ImageResult {
            id: id.into(),
            metrics: metrics_from_counts(&counts)?,
            counts,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerImage {
    pub id: String,
    pub metrics: Metrics,
}

/// Aggregated metrics for a set of images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub aggregation: Aggregation,
    pub n_images: usize,
    #[serde(flatten)]
    pub metrics: Metrics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_image: Option<Vec<PerImage>>,
}

impl MetricsReport {
    pub fn with_dataset(mut self, tag: impl Into<String>) -> Self {
        self.dataset = Some(tag.into());
        self
    }

    pub fn with_per_image(mut self, results: &[ImageResult]) -> Self {
        self.per_image = Some(
            results
                .iter()
                .map(|r| PerImage {
                    id: r.id.clone(),
                    metrics: r.metrics,
                })
                .collect(),
        );
        self
    }

    /// One line, percentages to two decimals.
    pub fn summary(&self) -> String {
        let m = &self.metrics;
        format!(
            "{} over {} images: accuracy {:.2}  precision {:.2}  recall {:.2}  f1 {:.2}  dice {:.2}",
            self.aggregation, self.n_images, m.accuracy, m.precision, m.recall, m.f1, m.dice
        )
    }
}

pub fn aggregate_results(results: &[ImageResult], mode: Aggregation) -> Result<MetricsReport> {
    if results.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    let metrics = match mode {
        Aggregation::Micro => metrics_from_counts(&results.iter().map(|r| r.counts).sum())?,
        Aggregation::Macro => {
            let n = results.len() as f64;
            let mean = |f: fn(&Metrics) -> f64| results.iter().map(|r| f(&r.metrics)).sum::<f64>() / n;
            Metrics {
                accuracy: mean(|m| m.accuracy),
                precision: mean(|m| m.precision),
                recall: mean(|m| m.recall),
                f1: mean(|m| m.f1),
                dice: mean(|m| m.dice),
            }
        }
    };
    Ok(MetricsReport {
        aggregation: mode,
        n_images: results.len(),
        metrics,
        dataset: None,
        per_image: None,
    })
}

/// Per-image results for `(id, pred, gt)` triples, computed in parallel.
pub fn evaluate_masks(items: &[(String, Image2D, Image2D)]) -> Result<Vec<ImageResult>> {
    items
        .par_iter()
        .map(|(id, pred, gt)| ImageResult::new(id.clone(), confusion(pred, gt)?))
        .collect()
}

/// Aggregates `(pred, gt)` mask pairs.
pub fn aggregate(pairs: &[(&Image2D, &Image2D)], mode: Aggregation) -> Result<MetricsReport> {
    let results = pairs
        .iter()
        .enumerate()
        .map(|(i, (p, g))| ImageResult::new(i.to_string(), confusion(p, g)?))
        .collect::<Result<Vec<_>>>()?;
    aggregate_results(&results, mode)
}
