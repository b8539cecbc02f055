use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use lungfield::imaging::{normalize, read_png, write_png};
use lungfield::model::{predict_mask, Pix2Pix};

use super::RunFlags;
use crate::config::config_error;
use crate::Common;

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    checkpoint: PathBuf,

    #[arg(long)]
    image: PathBuf,

    /// Also write the raw generator output rescaled to 8 bits.
    #[arg(long)]
    raw: Option<PathBuf>,

    #[command(flatten)]
    run: RunFlags,
}

pub fn run(args: PredictArgs, common: &Common) -> Result<()> {
    let cfg = args.run.resolve(common, Vec::new())?;
    let out = common.out.clone().ok_or_else(|| config_error("predict needs --out <mask.png>"))?;
    let mut model = Pix2Pix::<f32>::load(&cfg.model(), &args.checkpoint)
        .with_context(|| format!("loading {}", args.checkpoint.display()))?;
    let image = cfg.preprocess().image(&read_png(&args.image)?)?;
    let pred = predict_mask(&mut model.generator, &normalize(&image), cfg.inference_mode)?;
    write_png(&out, &pred.mask)?;
    if let Some(raw) = &args.raw {
        write_png(raw, &pred.raw_image()?)?;
    }
    let on = pred.mask.pixels().iter().filter(|&&p| p == 255).count();
    println!(
        "{}: {:.1}% of pixels marked lung",
        out.display(),
        100.0 * on as f64 / pred.mask.pixels().len() as f64
    );
    Ok(())
}
