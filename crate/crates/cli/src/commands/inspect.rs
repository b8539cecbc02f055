use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use lungfield::imaging::{apply_affine, histogram, read_png, sample_affine, write_png, AugmentConfig, Image2D};
use lungfield::derive_seed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{config_error, RunConfig};
use crate::Common;

#[derive(Args, Debug)]
pub struct InspectArgs {
    #[arg(long)]
    image: PathBuf,

    #[arg(long)]
    mask: Option<PathBuf>,

    /// Number of augmented variants in the preview grid; 0 skips the preview.
    #[arg(long, default_value_t = 0)]
    preview: usize,

    /// Preview with every augmentation range zeroed.
    #[arg(long)]
    identity: bool,
}

fn write_histogram(path: &PathBuf, img: &Image2D) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["bin", "count"])?;
    for (bin, count) in histogram(img).iter().enumerate() {
        w.write_record([bin.to_string(), count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(args: InspectArgs, common: &Common) -> Result<()> {
    let out = common.out.clone().ok_or_else(|| config_error("inspect needs --out"))?;
    fs::create_dir_all(&out)?;
    let image = read_png(&args.image)?;
    write_histogram(&out.join("image_histogram.csv"), &image)?;
    let mask = match &args.mask {
        Some(p) => {
            let m = read_png(p)?;
            write_histogram(&out.join("mask_histogram.csv"), &m)?;
            m
        }
        None => Image2D::filled(image.width(), image.height(), 0),
    };
    if args.preview == 0 {
        return Ok(());
    }

    let run_cfg = RunConfig::resolve(None, common.config.as_deref(), &[])?;
    let aug = if args.identity {
        AugmentConfig::identity()
    } else {
        run_cfg.augment_config()
    };
    let seed = common.seed.unwrap_or(run_cfg.seed);
    let (w, h) = (image.width(), image.height());
    let mut tiles = Vec::with_capacity(args.preview);
    for i in 0..args.preview {
        let params = sample_affine(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, 0, i as u64)), &aug);
        tiles.push(apply_affine(&image, &mask, &params).context("augmenting preview")?);
    }
    // Top row: augmented images; bottom row: their masks.
    let grid = Image2D::from_fn(w * args.preview, 2 * h, |x, y| {
        let (img, m) = &tiles[x / w];
        if y < h {
            img.get(x % w, y)
        } else {
            m.get(x % w, y - h)
        }
    });
    write_png(&out.join("augment_preview.png"), &grid)?;
    println!("wrote {} previews to {}", args.preview, out.display());
    Ok(())
}
