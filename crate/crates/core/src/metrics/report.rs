use std::fs::{self, File, OpenOptions};
use std::path::Path;

use super::{ImageResult, MetricsReport};
use crate::imaging::{diff_image, write_png, Image2D};
use crate::model::StepRecord;
use crate::Result;

pub fn write_report(path: &Path, report: &MetricsReport) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(report)?)?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<MetricsReport> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

/// Columns: step, g_total, g_adv, g_l1, d_loss, train_acc, val_acc; missing accuracies are empty cells.
pub fn write_history_csv(path: &Path, records: &[StepRecord]) -> Result<()> {
    let mut w = HistoryWriter::create(path)?;
    for r in records {
        w.push(r)?;
    }
    Ok(())
}

pub fn read_history_csv(path: &Path) -> Result<Vec<StepRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    Ok(rdr.deserialize().collect::<std::result::Result<Vec<StepRecord>, _>>()?)
}

/// Appends history rows as training runs, flushing each one.
pub struct HistoryWriter {
    inner: csv::Writer<File>,
}

impl HistoryWriter {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(HistoryWriter {
            inner: csv::Writer::from_path(path)?,
        })
    }

    /// Keeps the rows of an existing file up to `last_step` and appends after them.
    pub fn resume(path: &Path, last_step: u64) -> Result<Self> {
        let kept: Vec<StepRecord> = if path.exists() {
            read_history_csv(path)?
                .into_iter()
                .filter(|r| r.step <= last_step)
                .collect()
        } else {
            Vec::new()
        };
        write_history_csv(path, &kept)?;
        let file = OpenOptions::new().append(true).open(path)?;
        let has_header = !kept.is_empty() || fs::metadata(path)?.len() > 0;
        let inner = csv::WriterBuilder::new().has_headers(!has_header).from_writer(file);
        Ok(HistoryWriter { inner })
    }

    pub fn push(&mut self, record: &StepRecord) -> Result<()> {
        self.inner.serialize(record)?;
        self.inner.flush()?;
        Ok(())
    }
}

#[derive(serde::Serialize)]
struct PerImageRow<'a> {
    id: &'a str,
    tp: u64,
    tn: u64,
    fp: u64,
    #[serde(rename = "fn")]
    fn_: u64,
    accuracy: f64,
    precision: f64,
    recall: f64,
    f1: f64,
    dice: f64,
}

pub fn write_per_image_csv(path: &Path, results: &[ImageResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in results {
        let (c, m) = (&r.counts, &r.metrics);
        w.serialize(PerImageRow {
            id: &r.id,
            tp: c.tp,
            tn: c.tn,
            fp: c.fp,
            fn_: c.fn_,
            accuracy: m.accuracy,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            dice: m.dice,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Ground truth, prediction and their absolute difference side by side.
pub fn write_triptych(path: &Path, gt: &Image2D, pred: &Image2D) -> Result<Image2D> {
    let diff = diff_image(gt, pred)?;
    let (w, h) = (gt.width(), gt.height());
    let panels = [gt, pred, &diff];
    let strip = Image2D::from_fn(3 * w, h, |x, y| panels[x / w].get(x % w, y));
    write_png(path, &strip)?;
    Ok(strip)
}
