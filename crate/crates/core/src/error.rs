use std::path::PathBuf;

use crate::nn::Shape;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left} vs {right}")]
    ShapeMismatch {
        op: &'static str,
        left: Shape,
        right: Shape,
    },

    #[error("channel mismatch in {op}: expected {expected}, got {got}")]
    ChannelMismatch {
        op: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("failed to decode image{}: {reason}", path.as_ref().map(|p| format!(" {}", p.display())).unwrap_or_default())]
    Decode {
        path: Option<PathBuf>,
        reason: String,
    },

    #[error("image extents differ: {0}x{1} vs {2}x{3}")]
    ExtentMismatch(usize, usize, usize, usize),

    #[error("mask is not binary: found value {0}")]
    NonBinaryMask(u8),

    #[error("{0} is empty")]
    Empty(&'static str),

    #[error("no image/mask pairs found ({} unpaired images)", unpaired_images.len())]
    NoPairs { unpaired_images: Vec<String> },

    #[error("duplicate sample stem `{stem}` in {}", dir.display())]
    DuplicateStem { stem: String, dir: PathBuf },

    #[error(
        "non-finite loss at step {step}: g_total={g_total} g_adv={g_adv} g_l1={g_l1} d_loss={d_loss}"
    )]
    Diverged {
        step: u64,
        g_total: f64,
        g_adv: f64,
        g_l1: f64,
        d_loss: f64,
    },

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error("architecture fingerprint mismatch: checkpoint {found:016x}, config {expected:016x}")]
    FingerprintMismatch { expected: u64, found: u64 },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
