//! End-to-end acceptance gate. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.
//!
//! Criteria 6 and 8 drive the release binary through three full desk-scale
//! training runs and take several minutes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use lungfield::datasets::{synth_generate, Batcher, SynthConfig};
use lungfield::imaging::{apply_affine, normalize, sample_affine, AffineParams, AugmentConfig, Image2D};
use lungfield::metrics::{aggregate_results, confusion, read_history_csv, read_report, Aggregation, ImageResult};
use lungfield::model::{Discriminator, Generator, ModelConfig, Network, Pix2Pix};
use lungfield::nn::{
    bce_with_logits, bce_with_logits_grad, grad_check, relative_error, Activation, ActivationKind, BatchNorm, Conv2d,
    ConvTranspose2d, Ctx, Dropout, Layer, Mode, Padding, Shape, Tensor, ZeroPad2d,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = std::result::Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn main() {
    let started = Instant::now();
    let work = tempfile::tempdir().expect("temp dir");
    let criteria: Vec<(&str, Box<dyn FnOnce() -> Outcome + '_>)> = vec![
        ("architecture parity", Box::new(parity)),
        ("gradient correctness", Box::new(gradients)),
        ("adjoint identity", Box::new(adjoint)),
        ("metric oracle", Box::new(metric_oracle)),
        ("augmentation contract", Box::new(augmentation)),
        ("desk-scale end-to-end", Box::new(|| desk_end_to_end(work.path()))),
        ("overfit one sample", Box::new(overfit)),
        ("reproducibility", Box::new(|| reproducibility(work.path()))),
        ("published-number status", Box::new(|| published_status(work.path()))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        let t = Instant::now();
        let outcome = run();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  criterion {} ({name}): {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {} ({name}): {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {failed} failed, total {:.0}s", started.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- criterion 1

fn parity() -> Outcome {
    let cfg = ModelConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let gen = Generator::<f32>::new(&cfg, &mut rng).map_err(|e| e.to_string())?;
    let disc = Discriminator::<f32>::new(&cfg, &mut rng).map_err(|e| e.to_string())?;

    let gen_expected: [([usize; 3], usize); 16] = [
        ([128, 128, 64], 1024),
        ([64, 64, 128], 131_584),
        ([32, 32, 256], 525_312),
        ([16, 16, 512], 2_099_200),
        ([8, 8, 512], 4_196_352),
        ([4, 4, 512], 4_196_352),
        ([2, 2, 512], 4_196_352),
        ([1, 1, 512], 4_196_352),
        ([2, 2, 512], 4_196_352),
        ([4, 4, 512], 8_390_656),
        ([8, 8, 512], 8_390_656),
        ([16, 16, 512], 8_390_656),
        ([32, 32, 256], 4_195_328),
        ([64, 64, 128], 1_049_088),
        ([128, 128, 64], 262_400),
        ([256, 256, 1], 2049),
    ];
    let gen_rows = gen.param_table().map_err(|e| e.to_string())?;
    let gen_got: Vec<([usize; 3], usize)> = gen_rows.iter().filter(|r| r.params > 0).map(|r| (r.output, r.params)).collect();
    check(gen_got == gen_expected, format!("generator rows differ: {gen_got:?}"))?;

    let disc_expected: [([usize; 3], usize); 6] = [
        ([128, 128, 64], 2048),
        ([64, 64, 128], 131_584),
        ([32, 32, 256], 525_312),
        ([31, 31, 512], 2_097_152),
        ([31, 31, 512], 2048),
        ([30, 30, 1], 8193),
    ];
    let disc_rows = disc.param_table().map_err(|e| e.to_string())?;
    let disc_got: Vec<([usize; 3], usize)> =
        disc_rows.iter().filter(|r| r.params > 0).map(|r| (r.output, r.params)).collect();
    check(disc_got == disc_expected, format!("discriminator rows differ: {disc_got:?}"))?;
    check(
        disc.output_shape().map_err(|e| e.to_string())? == Shape::new(1, 30, 30, 1),
        "discriminator output is not (30, 30, 1)",
    )?;

    let gen_total: usize = gen_rows.iter().map(|r| r.params).sum();
    let disc_total: usize = disc_rows.iter().map(|r| r.params).sum();
    check(
        gen_total == 54_419_713 && gen.stored_param_count() == gen_total,
        format!("generator total {gen_total}"),
    )?;
    check(
        disc_total == 2_766_337 && disc.stored_param_count() == disc_total,
        format!("discriminator total {disc_total}"),
    )?;
    Ok(format!("generator {gen_total}, discriminator {disc_total}, patch grid 30x30"))
}

// ---------------------------------------------------------------- criterion 2

const FD_EPS: f64 = 1e-4;
const FD_TOL: f64 = 1e-3;
const INSTANCES: u64 = 20;

fn uniform_tensor(rng: &mut ChaCha8Rng, shape: Shape, scale: f64) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| rng.random_range(-scale..scale))
}

/// Values bounded away from zero so central differences never straddle a kink.
fn off_kink_tensor(rng: &mut ChaCha8Rng, shape: Shape) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| {
        let v: f64 = rng.random_range(0.05..1.5);
        if rng.random_bool(0.5) {
            v
        } else {
            -v
        }
    })
}

fn small_shape(rng: &mut ChaCha8Rng, even: bool) -> Shape {
    let mut side = rng.random_range(3..=7usize);
    if even && side % 2 == 1 {
        side += 1;
    }
    Shape::new(rng.random_range(1..=2), side, side, rng.random_range(1..=3))
}

fn worst_over_instances(
    label: &str,
    mode: Mode,
    mut make: impl FnMut(&mut ChaCha8Rng) -> (Box<dyn FnMut(&Tensor<f64>) -> lungfield::Result<f64>>, Tensor<f64>),
) -> std::result::Result<f64, String> {
    let mut worst: f64 = 0.0;
    for i in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(lungfield::derive_seed(0xFD, label.len() as u64, i));
        let (mut run, x) = make(&mut rng);
        let err = run(&x).map_err(|e| format!("{label} ({mode:?}): {e}"))?;
        worst = worst.max(err);
    }
    Ok(worst)
}

fn boxed<L: Layer<f64> + 'static>(mut layer: L, mode: Mode) -> Box<dyn FnMut(&Tensor<f64>) -> lungfield::Result<f64>> {
    Box::new(move |x| grad_check(&mut layer, x, FD_EPS, mode))
}

fn gradients() -> Outcome {
    let mut results: BTreeMap<String, f64> = BTreeMap::new();
    let mut record = |name: &str, r: std::result::Result<f64, String>| -> std::result::Result<(), String> {
        results.insert(name.to_string(), r?);
        Ok(())
    };

    for (padding, pname) in [(Padding::Same, "same"), (Padding::Valid, "valid")] {
        for stride in [1usize, 2] {
            let name = format!("conv2d {pname} stride {stride}");
            record(
                &name,
                worst_over_instances(&name, Mode::Train, |rng| {
                    let shape = small_shape(rng, stride == 2);
                    let k = if padding == Padding::Valid { rng.random_range(1..=3) } else { rng.random_range(2..=4) };
                    let cout = rng.random_range(1..=3);
                    let bias = rng.random_bool(0.5);
                    let w = uniform_tensor(rng, Shape::new(k, k, shape.c, cout), 0.5);
                    let b = bias.then(|| uniform_tensor(rng, Shape::new(1, 1, 1, cout), 0.5));
                    let layer = Conv2d::from_weights(w, b, stride, padding).expect("conv weights");
                    (boxed(layer, Mode::Train), uniform_tensor(rng, shape, 1.0))
                }),
            )?;
        }
    }
    for stride in [1usize, 2] {
        let name = format!("conv_transpose2d stride {stride}");
        record(
            &name,
            worst_over_instances(&name, Mode::Train, |rng| {
                let shape = small_shape(rng, false);
                let k = rng.random_range(2..=4);
                let cout = rng.random_range(1..=3);
                let w = uniform_tensor(rng, Shape::new(k, k, cout, shape.c), 0.5);
                let b = rng.random_bool(0.5).then(|| uniform_tensor(rng, Shape::new(1, 1, 1, cout), 0.5));
                let layer = ConvTranspose2d::from_weights(w, b, stride).expect("conv transpose weights");
                (boxed(layer, Mode::Train), uniform_tensor(rng, shape, 1.0))
            }),
        )?;
    }
    for mode in [Mode::Train, Mode::Eval] {
        let name = format!("batch_norm {mode:?}").to_lowercase();
        record(
            &name,
            worst_over_instances(&name, mode, |rng| {
                let shape = small_shape(rng, false);
                let mut bn = BatchNorm::<f64>::new(shape.c, 0.99, 1e-3);
                for v in bn.gamma.value.data_mut() {
                    *v = rng.random_range(0.5..1.5);
                }
                for v in bn.beta.value.data_mut() {
                    *v = rng.random_range(-0.5..0.5);
                }
                for c in 0..shape.c {
                    bn.moving_mean[c] = rng.random_range(-0.5..0.5);
                    bn.moving_var[c] = rng.random_range(0.5..2.0);
                }
                (boxed(bn, mode), uniform_tensor(rng, shape, 2.0))
            }),
        )?;
    }
    let activations = [
        ("relu", ActivationKind::Relu),
        ("leaky_relu", ActivationKind::LeakyRelu(0.2)),
        ("tanh", ActivationKind::Tanh),
        ("sigmoid", ActivationKind::Sigmoid),
    ];
    for (name, kind) in activations {
        record(
            name,
            worst_over_instances(name, Mode::Train, |rng| {
                let shape = small_shape(rng, false);
                (boxed(Activation::<f64>::new(kind), Mode::Train), off_kink_tensor(rng, shape))
            }),
        )?;
    }
    for mode in [Mode::Train, Mode::Eval] {
        let name = format!("dropout {mode:?}").to_lowercase();
        record(
            &name,
            worst_over_instances(&name, mode, |rng| {
                let shape = small_shape(rng, false);
                (boxed(Dropout::<f64>::new(0.5), mode), uniform_tensor(rng, shape, 1.0))
            }),
        )?;
    }
    record(
        "zero_pad2d",
        worst_over_instances("zero_pad2d", Mode::Train, |rng| {
            let shape = small_shape(rng, false);
            let pad = rng.random_range(1..=2);
            (boxed(ZeroPad2d::new(pad), Mode::Train), uniform_tensor(rng, shape, 1.0))
        }),
    )?;
    record("bce_with_logits", bce_grad_check())?;

    let failing: Vec<String> = results
        .iter()
        .filter(|(_, e)| !(**e < FD_TOL))
        .map(|(n, e)| format!("{n} {e:.2e}"))
        .collect();
    check(failing.is_empty(), format!("relative error >= {FD_TOL:e}: {}", failing.join(", ")))?;
    let (worst_name, worst) = results
        .iter()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(n, e)| (n.clone(), *e))
        .unwrap_or_default();
    Ok(format!(
        "{} layer variants x {INSTANCES} instances, worst {worst:.2e} ({worst_name})",
        results.len()
    ))
}

fn bce_grad_check() -> std::result::Result<f64, String> {
    let mut worst: f64 = 0.0;
    for i in 0..INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(lungfield::derive_seed(0xBCE, 0, i));
        let shape = small_shape(&mut rng, false);
        let logits = uniform_tensor(&mut rng, shape, 4.0);
        let targets = Tensor::from_fn(shape, |_| if rng.random_bool(0.5) { 1.0 } else { 0.0 });
        let analytic = bce_with_logits_grad(&logits, &targets).map_err(|e| e.to_string())?;
        let mut x = logits.clone();
        for j in 0..x.len() {
            let orig = x.data()[j];
            x.data_mut()[j] = orig + FD_EPS;
            let plus = bce_with_logits(&x, &targets).map_err(|e| e.to_string())?;
            x.data_mut()[j] = orig - FD_EPS;
            let minus = bce_with_logits(&x, &targets).map_err(|e| e.to_string())?;
            x.data_mut()[j] = orig;
            worst = worst.max(relative_error(analytic.data()[j], (plus - minus) / (2.0 * FD_EPS)));
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------- criterion 3

fn adjoint() -> Outcome {
    let mut worst: f64 = 0.0;
    for trial in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(lungfield::derive_seed(0xAD, 0, trial));
        let stride = rng.random_range(1..=2usize);
        let k = rng.random_range(1..=4usize);
        let side = stride * rng.random_range(2..=5usize);
        let (n, cin, cout) = (rng.random_range(1..=2), rng.random_range(1..=3), rng.random_range(1..=3));
        let weight = uniform_tensor(&mut rng, Shape::new(k, k, cin, cout), 1.0);
        let x = uniform_tensor(&mut rng, Shape::new(n, side, side, cin), 1.0);
        let mut conv = Conv2d::from_weights(weight.clone(), None, stride, Padding::Same).map_err(|e| e.to_string())?;
        let mut convt = ConvTranspose2d::from_weights(weight, None, stride).map_err(|e| e.to_string())?;
        let cx = conv.forward(&x, &mut Ctx::eval()).map_err(|e| e.to_string())?;
        let y = uniform_tensor(&mut rng, cx.shape(), 1.0);
        let ty = convt.forward(&y, &mut Ctx::eval()).map_err(|e| e.to_string())?;
        check(ty.shape() == x.shape(), format!("transpose shape {} vs input {}", ty.shape(), x.shape()))?;
        let lhs = cx.dot(&y).map_err(|e| e.to_string())?;
        let rhs = x.dot(&ty).map_err(|e| e.to_string())?;
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-12));
    }
    check(worst < 1e-4, format!("worst relative gap {worst:.2e}"))?;
    Ok(format!("100 trials, worst relative gap {worst:.2e}"))
}

// ---------------------------------------------------------------- criterion 4

/// Metrics recomputed from a per-pixel tally, written independently of the library.
fn oracle(pred: &[bool], gt: &[bool]) -> ([u64; 4], [f64; 5]) {
    let (mut tp, mut tn, mut fp, mut fn_) = (0u64, 0u64, 0u64, 0u64);
    for (&p, &g) in pred.iter().zip(gt) {
        match (p, g) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
        }
    }
    oracle_from_tally([tp, tn, fp, fn_])
}

fn oracle_from_tally(t: [u64; 4]) -> ([u64; 4], [f64; 5]) {
    let [tp, tn, fp, fn_] = t.map(|v| v as f64);
    let total = tp + tn + fp + fn_;
    let accuracy = 100.0 * (tp + tn) / total;
    let precision = if tp + fp > 0.0 {
        100.0 * tp / (tp + fp)
    } else if tp + fn_ == 0.0 {
        100.0
    } else {
        0.0
    };
    let recall = if tp + fn_ > 0.0 {
        100.0 * tp / (tp + fn_)
    } else if tp + fp == 0.0 {
        100.0
    } else {
        0.0
    };
    let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    let dice = if 2.0 * tp + fp + fn_ > 0.0 { 100.0 * 2.0 * tp / (2.0 * tp + fp + fn_) } else { 100.0 };
    (t, [accuracy, precision, recall, f1, dice])
}

fn metric_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4E7);
    let mut results = Vec::new();
    let mut total = [0u64; 4];
    let mut worst: f64 = 0.0;
    for i in 0..1000usize {
        // Densities cover empty, full and everything in between.
        let density = |rng: &mut ChaCha8Rng| match rng.random_range(0..6) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.random_range(0.0..1.0),
        };
        let (dp, dg) = (density(&mut rng), density(&mut rng));
        let pred: Vec<bool> = (0..256).map(|_| rng.random_bool(dp)).collect();
        let gt: Vec<bool> = (0..256).map(|_| rng.random_bool(dg)).collect();
        let to_img = |m: &[bool]| Image2D::new(16, 16, m.iter().map(|&b| if b { 255 } else { 0 }).collect()).unwrap();
        let counts = confusion(&to_img(&pred), &to_img(&gt)).map_err(|e| e.to_string())?;
        let (tally, expected) = oracle(&pred, &gt);
        check(
            [counts.tp, counts.tn, counts.fp, counts.fn_] == tally,
            format!("pair {i}: counts {counts:?} vs {tally:?}"),
        )?;
        let r = ImageResult::new(i.to_string(), counts).map_err(|e| e.to_string())?;
        let m = r.metrics;
        for (got, want) in [m.accuracy, m.precision, m.recall, m.f1, m.dice].iter().zip(expected) {
            worst = worst.max((got - want).abs());
        }
        for k in 0..4 {
            total[k] += tally[k];
        }
        results.push(r);
    }
    check(worst <= 1e-10, format!("per-image deviation {worst:.2e}"))?;

    let micro = aggregate_results(&results, Aggregation::Micro).map_err(|e| e.to_string())?;
    let (_, expected) = oracle_from_tally(total);
    let m = micro.metrics;
    let micro_gap = [m.accuracy, m.precision, m.recall, m.f1, m.dice]
        .iter()
        .zip(expected)
        .map(|(g, w)| (g - w).abs())
        .fold(0.0, f64::max);
    check(micro_gap <= 1e-10, format!("micro deviation {micro_gap:.2e}"))?;
    let f1_dice = (m.f1 - m.dice).abs();
    check(f1_dice <= 1e-12, format!("micro F1 {} vs Dice {}", m.f1, m.dice))?;
    Ok(format!(
        "1000 pairs, worst per-image gap {worst:.1e}, micro gap {micro_gap:.1e}, |F1 - Dice| {f1_dice:.1e}"
    ))
}

// ---------------------------------------------------------------- criterion 5

fn augmentation() -> Outcome {
    let pairs = synth_generate(&SynthConfig {
        count: 8,
        size: 64,
        seed: 11,
        ..Default::default()
    })
    .map_err(|e| e.to_string())?;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let identity = AugmentConfig::identity();
    for p in &pairs {
        let draw = sample_affine(&mut rng, &identity);
        check(draw == AffineParams::identity(), format!("identity config drew {draw:?}"))?;
        let (img, mask) = apply_affine(&p.image, &p.mask, &draw).map_err(|e| e.to_string())?;
        check(img == p.image && mask == p.mask, format!("identity transform changed sample {}", p.id))?;
    }

    let cfg = AugmentConfig::default();
    let draws = 10_000;
    let mut flips = 0usize;
    for i in 0..draws {
        let p = sample_affine(&mut rng, &cfg);
        check(cfg.contains(&p), format!("draw {i} out of range: {p:?}"))?;
        flips += p.flip_h as usize;
        if i < 200 {
            let pair = &pairs[i % pairs.len()];
            let (_, mask) = apply_affine(&pair.image, &pair.mask, &p).map_err(|e| e.to_string())?;
            check(mask.is_binary(), format!("draw {i} produced a non-binary mask"))?;
        }
    }
    let rate = flips as f64 / draws as f64;
    check((rate - 0.5).abs() <= 0.02, format!("horizontal flip rate {rate:.4}"))?;

    let batcher = Batcher::new(pairs, 3, 9, Some(cfg)).map_err(|e| e.to_string())?;
    for index in 0..20 {
        let batch = batcher.batch::<f32>(index).map_err(|e| e.to_string())?;
        check(
            batch.mask.data().iter().all(|&v| v == -1.0 || v == 1.0),
            format!("batch {index} mask tensor is not binary"),
        )?;
    }
    Ok(format!("identity bit-exact, {draws} draws in range, flip rate {rate:.4}, batches binary"))
}

// ---------------------------------------------------------------- criteria 6, 8, 9

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lungfield"))
}

fn run_cli(args: &[&str]) -> std::result::Result<(), String> {
    let out = bin().args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "`lungfield {}` exited with {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr).trim()
        ))
    }
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn synth_dir(work: &Path) -> std::result::Result<PathBuf, String> {
    let data = work.join("synth");
    if !data.join("manifest.json").exists() {
        run_cli(&["synth", "--count", "200", "--size", "64", "--seed", "0", "--out", s(&data)])?;
    }
    Ok(data)
}

fn desk_train(work: &Path, name: &str, resume: Option<&Path>) -> std::result::Result<PathBuf, String> {
    let data = synth_dir(work)?;
    let out = work.join(name);
    let mut args = vec![
        "train", "--preset", "desk", "--data", s(&data), "--seed", "0", "--steps", "2000", "--quiet", "--out", s(&out),
    ];
    if let Some(ckpt) = resume {
        args.extend(["--resume", s(ckpt)]);
    }
    run_cli(&args)?;
    Ok(out)
}

fn desk_end_to_end(work: &Path) -> Outcome {
    let run = desk_train(work, "run_a", None)?;
    let eval = work.join("eval_a");
    run_cli(&[
        "eval",
        "--config",
        s(&run.join("config.resolved.toml")),
        "--checkpoint",
        s(&run.join("checkpoints/step_002000.p2ps")),
        "--split",
        "test",
        "--out",
        s(&eval),
    ])?;
    let report = read_report(&eval.join("report.json")).map_err(|e| e.to_string())?;
    let m = report.metrics;
    let summary = format!(
        "{} held-out images, micro dice {:.2}, accuracy {:.2}",
        report.n_images, m.dice, m.accuracy
    );
    check(report.n_images == 40, format!("expected 40 held-out images, {summary}"))?;
    check(m.dice >= 90.0 && m.accuracy >= 97.0, summary.clone())?;
    Ok(summary)
}

fn overfit() -> Outcome {
    let cfg = ModelConfig::desk();
    let mut model = Pix2Pix::<f32>::new(&cfg).map_err(|e| e.to_string())?;
    let pair = &synth_generate(&SynthConfig {
        count: 1,
        size: cfg.image_size,
        seed: 3,
        ..Default::default()
    })
    .map_err(|e| e.to_string())?[0];
    let (image, mask) = (normalize::<f32>(&pair.image), normalize::<f32>(&pair.mask));
    let first = model.train_step(&image, &mask).map_err(|e| e.to_string())?.g_l1;
    let mut last = first;
    for _ in 1..200 {
        last = model.train_step(&image, &mask).map_err(|e| e.to_string())?.g_l1;
    }
    let detail = format!("L1 {first:.4} at step 1, {last:.4} at step 200 ({:.0}%)", 100.0 * last / first);
    check(last <= 0.5 * first, detail.clone())?;
    Ok(detail)
}

fn reproducibility(work: &Path) -> Outcome {
    let a = work.join("run_a");
    if !a.join("checkpoints/step_002000.p2ps").exists() {
        desk_train(work, "run_a", None)?;
    }
    let b = desk_train(work, "run_b", None)?;
    let c = desk_train(work, "run_c", Some(&a.join("checkpoints/step_001000.p2ps")))?;

    let read = |p: PathBuf| fs::read(&p).map_err(|e| format!("{}: {e}", p.display()));
    let final_a = read(a.join("checkpoints/step_002000.p2ps"))?;
    check(
        read(a.join("history.csv"))? == read(b.join("history.csv"))?,
        "repeat run history.csv differs",
    )?;
    check(final_a == read(b.join("checkpoints/step_002000.p2ps"))?, "repeat run final checkpoint differs")?;
    check(final_a == read(c.join("checkpoints/step_002000.p2ps"))?, "resumed run final checkpoint differs")?;

    let hist_a = read_history_csv(&a.join("history.csv")).map_err(|e| e.to_string())?;
    let hist_c = read_history_csv(&c.join("history.csv")).map_err(|e| e.to_string())?;
    check(hist_a.len() == 2000, format!("run history has {} rows", hist_a.len()))?;
    check(hist_c == hist_a[1000..], "resumed history differs from steps 1001-2000")?;
    Ok(format!("repeat and resume-from-1000 runs match ({} checkpoint bytes)", final_a.len()))
}

fn published_status(work: &Path) -> Outcome {
    let note = "published benchmark figures are not reproducible at desk scale (need the real datasets and \
                unstated training settings); criteria 1-8 are the substitute";
    let (Ok(mont), Ok(shen)) = (std::env::var("LUNGFIELD_MONTGOMERY"), std::env::var("LUNGFIELD_SHENZHEN")) else {
        return Ok(format!("{note}; real-data smoke SKIP (LUNGFIELD_MONTGOMERY / LUNGFIELD_SHENZHEN unset)"));
    };
    let (mont, shen) = (PathBuf::from(mont), PathBuf::from(shen));
    let out = work.join("real");
    run_cli(&[
        "train",
        "--preset",
        "desk",
        "--images",
        s(&mont.join("CXR_png")),
        "--masks",
        s(&mont.join("ManualMask/leftMask")),
        "--masks",
        s(&mont.join("ManualMask/rightMask")),
        "--tag",
        "montgomery",
        "--steps",
        "200",
        "--quiet",
        "--out",
        s(&out),
    ])?;
    let eval = work.join("real_eval");
    run_cli(&[
        "eval",
        "--config",
        s(&out.join("config.resolved.toml")),
        "--checkpoint",
        s(&out.join("checkpoints/step_000200.p2ps")),
        "--images",
        s(&shen.join("CXR_png")),
        "--masks",
        s(&shen.join("mask")),
        "--tag",
        "shenzhen",
        "--out",
        s(&eval),
    ])?;
    let report = read_report(&eval.join("report.json")).map_err(|e| e.to_string())?;
    check(
        report.dataset.as_deref() == Some("shenzhen") && report.per_image.as_ref().is_some_and(|p| !p.is_empty()),
        "cross-dataset report incomplete",
    )?;
    Ok(format!("{note}; real-data smoke ran, cross-dataset report: {}", report.summary()))
}
