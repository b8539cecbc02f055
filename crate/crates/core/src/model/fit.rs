use serde::{Deserialize, Serialize};

use super::{predict_mask, Generator, InferenceMode, Pix2Pix, StepLosses};
use crate::datasets::{Batcher, SamplePair};
use crate::imaging::normalize;
use crate::{Result, Scalar};

/// Loop settings for [`fit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    /// Steps to run from the model's current step.
    pub steps: u64,
    /// Pixel accuracy is measured whenever the global step is a multiple of this; 0 disables.
    pub eval_interval: u64,
    /// Caps the pairs scored per accuracy evaluation on each side (train and validation).
    pub eval_limit: Option<usize>,
    /// Batches prepared ahead of the training loop.
    pub prefetch: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            steps: 2000,
            eval_interval: 100,
            eval_limit: Some(32),
            prefetch: 4,
        }
    }
}

/// One row of training history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Global step, counting from 1.
    pub step: u64,
    pub g_total: f64,
    pub g_adv: f64,
    pub g_l1: f64,
    pub d_loss: f64,
    pub train_acc: Option<f64>,
    pub val_acc: Option<f64>,
}

impl StepRecord {
    pub fn new(step: u64, losses: StepLosses) -> Self {
        StepRecord {
            step,
            g_total: losses.g_total,
            g_adv: losses.g_adv,
            g_l1: losses.g_l1,
            d_loss: losses.d_loss,
            train_acc: None,
            val_acc: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub records: Vec<StepRecord>,
}

impl TrainHistory {
    pub fn evaluations(&self) -> impl Iterator<Item = &StepRecord> {
        self.records.iter().filter(|r| r.train_acc.is_some() || r.val_acc.is_some())
    }
}

/// Hooks into the training loop; an error stops training.
pub trait FitObserver<T> {
    fn on_step(&mut self, _model: &Pix2Pix<T>, _record: &StepRecord) -> Result<()> {
        Ok(())
    }

    /// Called after `on_step` on evaluation steps.
    fn on_eval(&mut self, _model: &Pix2Pix<T>, _record: &StepRecord) -> Result<()> {
        Ok(())
    }
}

pub struct NoopObserver;

impl<T> FitObserver<T> for NoopObserver {}

/// Fraction of pixels where the predicted mask matches the ground truth, pooled over `pairs`.
pub fn pixel_accuracy<T: Scalar>(gen: &mut Generator<T>, pairs: &[SamplePair], mode: InferenceMode) -> Result<f64> {
    let mut correct = 0u64;
    let mut total = 0u64;
    for pair in pairs {
        let pred = predict_mask(gen, &normalize::<T>(&pair.image), mode)?;
        pred.mask.same_extents(&pair.mask)?;
        correct += pred
            .mask
            .pixels()
            .iter()
            .zip(pair.mask.pixels())
            .filter(|(a, b)| a == b)
            .count() as u64;
        total += pair.mask.pixels().len() as u64;
    }
    Ok(if total == 0 { 0.0 } else { correct as f64 / total as f64 })
}

/// Runs `opts.steps` training steps, continuing from `model.step`.
///
/// Batch `k` of `train` feeds global step `k + 1`, so a model restored from
/// a checkpoint picks up the exact stream an uninterrupted run would see.
pub fn fit<T: Scalar>(
    model: &mut Pix2Pix<T>,
    train: &Batcher,
    val: &[SamplePair],
    opts: &FitOptions,
    observer: &mut dyn FitObserver<T>,
) -> Result<TrainHistory> {
    let mut history = TrainHistory::default();
    if opts.steps == 0 {
        return Ok(history);
    }
    let limit = |n: usize| opts.eval_limit.map_or(n, |l| l.min(n));
    let train_probe = &train.pairs()[..limit(train.pairs().len())];
    let val_probe = &val[..limit(val.len())];
    let mode = model.config.inference_mode;

    let start = model.step;
    for batch in train.prefetch::<T>(start..start + opts.steps, opts.prefetch) {
        let batch = batch?;
        let losses = model.train_step(&batch.image, &batch.mask)?;
        let mut record = StepRecord::new(model.step, losses);
        let evaluate = opts.eval_interval > 0 && model.step % opts.eval_interval == 0;
        if evaluate {
            record.train_acc = Some(pixel_accuracy(&mut model.generator, train_probe, mode)?);
            if !val_probe.is_empty() {
                record.val_acc = Some(pixel_accuracy(&mut model.generator, val_probe, mode)?);
            }
        }
        observer.on_step(model, &record)?;
        if evaluate {
            observer.on_eval(model, &record)?;
        }
        history.records.push(record);
    }
    Ok(history)
}
