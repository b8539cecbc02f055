use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use lungfield::datasets::split;
use lungfield::imaging::normalize;
use lungfield::metrics::{
    aggregate_results, evaluate_masks, write_per_image_csv, write_report, write_triptych, Aggregation,
};
use lungfield::model::{predict_mask, Pix2Pix};

use super::{load_pairs, RunFlags};
use crate::config::config_error;
use crate::Common;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Selection {
    Train,
    Test,
    All,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,

    /// Which side of the configured split to score. Defaults to `test` for the
    /// training dataset and `all` when a dataset is given on the command line.
    #[arg(long, value_enum)]
    split: Option<Selection>,

    /// Write ground truth / prediction / difference strips under `triptychs/`.
    #[arg(long)]
    triptychs: bool,

    #[command(flatten)]
    run: RunFlags,
}

pub fn run(args: EvalArgs, common: &Common) -> Result<()> {
    let selection = args
        .split
        .unwrap_or(if args.run.has_dataset() { Selection::All } else { Selection::Test });
    let cfg = args.run.resolve(common, Vec::new())?;
    let out = common.out.clone().ok_or_else(|| config_error("eval needs --out"))?;
    let mut model = Pix2Pix::<f32>::load(&cfg.model(), &args.checkpoint)
        .with_context(|| format!("loading {}", args.checkpoint.display()))?;

    let pairs = load_pairs(&cfg)?;
    let tag = if cfg.dataset_tag.is_empty() {
        pairs[0].source.clone()
    } else {
        cfg.dataset_tag.clone()
    };
    let pairs = match selection {
        Selection::All => pairs,
        Selection::Train => split(pairs, &cfg.split())?.0,
        Selection::Test => split(pairs, &cfg.split())?.1,
    };

    fs::create_dir_all(&out)?;
    let trip_dir = out.join("triptychs");
    if args.triptychs {
        fs::create_dir_all(&trip_dir)?;
    }
    let mut scored = Vec::with_capacity(pairs.len());
    for pair in &pairs {
        let pred = predict_mask(&mut model.generator, &normalize(&pair.image), cfg.inference_mode)?;
        if args.triptychs {
            write_triptych(&trip_dir.join(format!("{}.png", pair.id)), &pair.mask, &pred.mask)?;
        }
        scored.push((pair.id.clone(), pred.mask, pair.mask.clone()));
    }
    let results = evaluate_masks(&scored)?;
    write_per_image_csv(&out.join("per_image.csv"), &results)?;
    for (mode, file) in [(Aggregation::Micro, "report.json"), (Aggregation::Macro, "report_macro.json")] {
        let report = aggregate_results(&results, mode)?
            .with_dataset(tag.clone())
            .with_per_image(&results);
        write_report(&out.join(file), &report)?;
        println!("{tag}: {}", report.summary());
    }
    Ok(())
}
