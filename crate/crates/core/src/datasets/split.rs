use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SamplePair;
use crate::{derive_seed, Error, Result};

const STREAM_SPLIT: u64 = 2;

/// Train/test partition settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

impl SplitSpec {
    /// `floor(fraction · n)`, guarded against products like 0.29·100 landing just below an integer.
    pub fn train_len(&self, n: usize) -> usize {
        ((self.train_fraction * n as f64) + 1e-9).floor() as usize
    }
}

/// Partitions ids: sort lexicographically, shuffle with the split seed, take the head for training.
pub fn split_ids(ids: &[String], spec: &SplitSpec) -> Result<(Vec<String>, Vec<String>)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train_fraction must be in (0, 1), got {}",
            spec.train_fraction
        )));
    }
    if ids.len() < 2 {
        return Err(Error::Config(format!("need at least 2 pairs to split, got {}", ids.len())));
    }
    let mut order = ids.to_vec();
    order.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, STREAM_SPLIT, 0));
    order.shuffle(&mut rng);
    let test = order.split_off(spec.train_len(ids.len()));
    Ok((order, test))
}

/// [`split_ids`] applied to pairs; each side comes back sorted by id.
pub fn split(pairs: Vec<SamplePair>, spec: &SplitSpec) -> Result<(Vec<SamplePair>, Vec<SamplePair>)> {
    let ids: Vec<String> = pairs.iter().map(|p| p.id.clone()).collect();
    let (train_ids, _) = split_ids(&ids, spec)?;
    let train_ids: std::collections::HashSet<String> = train_ids.into_iter().collect();
    let (mut train, mut test): (Vec<_>, Vec<_>) = pairs.into_iter().partition(|p| train_ids.contains(&p.id));
    train.sort_by(|a, b| a.id.cmp(&b.id));
    test.sort_by(|a, b| a.id.cmp(&b.id));
    Ok((train, test))
}
