use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::Args;
use lungfield::datasets::{split, Batcher};
use lungfield::metrics::HistoryWriter;
use lungfield::model::{fit, FitObserver, Pix2Pix, StepRecord};
use serde::Serialize;

use super::{load_pairs, RunFlags};
use crate::config::RunConfig;
use crate::Common;

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Total steps for the run; a resumed run continues up to this count.
    #[arg(long)]
    steps: Option<u64>,

    #[arg(long)]
    eval_interval: Option<u64>,

    #[arg(long)]
    checkpoint_interval: Option<u64>,

    /// Continue from a checkpoint written by an earlier run with the same config.
    #[arg(long)]
    resume: Option<PathBuf>,

    #[arg(long)]
    no_augment: bool,

    #[arg(long)]
    clahe: bool,

    #[arg(long)]
    quiet: bool,

    #[command(flatten)]
    run: RunFlags,
}

/// Timestamps live here and nowhere else, so every other artifact is reproducible byte for byte.
#[derive(Serialize)]
struct RunMeta {
    version: &'static str,
    started_unix: u64,
    finished_unix: Option<u64>,
    status: &'static str,
    resumed_from: Option<String>,
    start_step: u64,
    end_step: u64,
}

impl RunMeta {
    fn write(&self, dir: &Path) -> Result<()> {
        fs::write(dir.join("run_meta.json"), serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn checkpoint_path(dir: &Path, step: u64) -> PathBuf {
    dir.join(format!("step_{step:06}.p2ps"))
}

struct Recorder {
    history: HistoryWriter,
    ckpt_dir: PathBuf,
    interval: u64,
    last_saved: u64,
    quiet: bool,
}

impl FitObserver<f32> for Recorder {
    fn on_step(&mut self, model: &Pix2Pix<f32>, r: &StepRecord) -> lungfield::Result<()> {
        self.history.push(r)?;
        if self.interval > 0 && r.step % self.interval == 0 {
            model.save(&checkpoint_path(&self.ckpt_dir, r.step))?;
            self.last_saved = r.step;
        }
        Ok(())
    }

    fn on_eval(&mut self, _: &Pix2Pix<f32>, r: &StepRecord) -> lungfield::Result<()> {
        if !self.quiet {
            let acc = |a: Option<f64>| a.map_or("-".to_string(), |v| format!("{v:.4}"));
            eprintln!(
                "step {:>6}  g {:.3} (adv {:.3}, l1 {:.4})  d {:.3}  acc train {} val {}",
                r.step,
                r.g_total,
                r.g_adv,
                r.g_l1,
                r.d_loss,
                acc(r.train_acc),
                acc(r.val_acc)
            );
        }
        Ok(())
    }
}

pub fn run(args: TrainArgs, common: &Common) -> Result<()> {
    let mut extra = Vec::new();
    let int = |v: u64| toml::Value::Integer(v as i64);
    if let Some(v) = args.steps {
        extra.push(("steps".to_string(), int(v)));
    }
    if let Some(v) = args.eval_interval {
        extra.push(("eval_interval".to_string(), int(v)));
    }
    if let Some(v) = args.checkpoint_interval {
        extra.push(("checkpoint_interval".to_string(), int(v)));
    }
    if args.no_augment {
        extra.push(("augment".to_string(), toml::Value::Boolean(false)));
    }
    if args.clahe {
        extra.push(("clahe".to_string(), toml::Value::Boolean(true)));
    }
    if let Some(out) = &common.out {
        extra.push(("output_dir".to_string(), toml::Value::String(out.display().to_string())));
    }
    let cfg = args.run.resolve(common, extra)?;
    train(&cfg, args.resume.as_deref(), args.quiet)
}

fn train(cfg: &RunConfig, resume: Option<&Path>, quiet: bool) -> Result<()> {
    let out = cfg.output_dir()?;
    let ckpt_dir = cfg.checkpoint_dir()?;
    fs::create_dir_all(&ckpt_dir).with_context(|| format!("creating {}", ckpt_dir.display()))?;
    fs::write(out.join("config.resolved.toml"), cfg.to_toml()?)?;

    let model_cfg = cfg.model();
    let mut model = match resume {
        Some(path) => {
            Pix2Pix::<f32>::load(&model_cfg, path).with_context(|| format!("resuming from {}", path.display()))?
        }
        None => Pix2Pix::<f32>::new(&model_cfg)?,
    };
    let start = model.step;
    let mut meta = RunMeta {
        version: env!("CARGO_PKG_VERSION"),
        started_unix: unix_now(),
        finished_unix: None,
        status: "running",
        resumed_from: resume.map(|p| p.display().to_string()),
        start_step: start,
        end_step: start,
    };
    meta.write(&out)?;
    if resume.is_none() {
        model.save(&checkpoint_path(&ckpt_dir, 0))?;
    }
    let remaining = cfg.steps.saturating_sub(start);
    if remaining == 0 {
        meta.status = "complete";
        meta.finished_unix = Some(unix_now());
        meta.write(&out)?;
        println!("nothing to train: model is at step {start} of {}", cfg.steps);
        return Ok(());
    }

    let (train_pairs, val_pairs) = split(load_pairs(cfg)?, &cfg.split())?;
    if !quiet {
        eprintln!(
            "training on {} pairs, validating on {}, steps {}..{}",
            train_pairs.len(),
            val_pairs.len(),
            start + 1,
            cfg.steps
        );
    }
    let augment = cfg.augment.then(|| cfg.augment_config());
    let batcher = Batcher::new(train_pairs, cfg.batch_size, cfg.seed, augment)?;
    let mut recorder = Recorder {
        history: HistoryWriter::resume(&out.join("history.csv"), start)?,
        ckpt_dir: ckpt_dir.clone(),
        interval: cfg.checkpoint_interval,
        last_saved: start,
        quiet,
    };
    let result = fit(&mut model, &batcher, &val_pairs, &cfg.fit_options(remaining), &mut recorder);

    meta.end_step = model.step;
    meta.finished_unix = Some(unix_now());
    if let Err(e) = result {
        // The last good checkpoint and the history so far stay on disk.
        meta.status = if matches!(e, lungfield::Error::Diverged { .. }) {
            "diverged"
        } else {
            "failed"
        };
        meta.write(&out)?;
        return Err(e.into());
    }
    if recorder.last_saved != model.step {
        model.save(&checkpoint_path(&ckpt_dir, model.step))?;
    }
    meta.status = "complete";
    meta.write(&out)?;
    println!(
        "trained to step {}; final checkpoint {}",
        model.step,
        checkpoint_path(&ckpt_dir, model.step).display()
    );
    Ok(())
}
