use std::marker::PhantomData;
use std::ops::Range;
use std::sync::mpsc::{sync_channel, Receiver};
use std::sync::Arc;
use std::thread::JoinHandle;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::SamplePair;
use crate::imaging::{apply_affine, normalize, sample_affine, AugmentConfig};
use crate::nn::Tensor;
use crate::{derive_seed, Error, Result, Scalar};

const STREAM_SHUFFLE: u64 = 4;
const STREAM_AUGMENT: u64 = 5;

/// One training batch of normalized `(n, h, w, 1)` tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch<T> {
    pub image: Tensor<T>,
    pub mask: Tensor<T>,
    pub ids: Vec<String>,
}

/// Random-access batch stream over preprocessed pairs.
///
/// Batch `k` belongs to epoch `k / batches_per_epoch`; each epoch visits every
/// pair once in an order keyed by `(seed, epoch)`, and each visit's
/// augmentation is keyed by `(seed, epoch, pair index)`. Any batch can be
/// rebuilt from its index alone, which makes resumed runs and prefetching
/// reproduce the serial stream exactly.
#[derive(Debug, Clone)]
pub struct Batcher {
    pairs: Arc<Vec<SamplePair>>,
    batch_size: usize,
    seed: u64,
    augment: Option<AugmentConfig>,
}

impl Batcher {
    pub fn new(pairs: Vec<SamplePair>, batch_size: usize, seed: u64, augment: Option<AugmentConfig>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Empty("training set"));
        }
        if batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if let Some(cfg) = &augment {
            cfg.validate()?;
        }
        Ok(Batcher {
            pairs: Arc::new(pairs),
            batch_size,
            seed,
            augment,
        })
    }

    pub fn pairs(&self) -> &[SamplePair] {
        &self.pairs
    }

    /// The last batch of an epoch may be smaller.
    pub fn batches_per_epoch(&self) -> u64 {
        self.pairs.len().div_ceil(self.batch_size) as u64
    }

    /// Pair indices visited in `epoch`, in order.
    pub fn epoch_order(&self, epoch: u64) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.pairs.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, STREAM_SHUFFLE, epoch));
        order.shuffle(&mut rng);
        order
    }

    pub fn batch<T: Scalar>(&self, index: u64) -> Result<Batch<T>> {
        let per_epoch = self.batches_per_epoch();
        let epoch = index / per_epoch;
        let start = (index % per_epoch) as usize * self.batch_size;
        let order = self.epoch_order(epoch);
        let members = &order[start..(start + self.batch_size).min(order.len())];
        let mut images = Vec::with_capacity(members.len());
        let mut masks = Vec::with_capacity(members.len());
        let mut ids = Vec::with_capacity(members.len());
        for &i in members {
            let pair = &self.pairs[i];
            let (image, mask) = match &self.augment {
                Some(cfg) => {
                    let key = derive_seed(derive_seed(self.seed, STREAM_AUGMENT, epoch), 0, i as u64);
                    let params = sample_affine(&mut ChaCha8Rng::seed_from_u64(key), cfg);
                    apply_affine(&pair.image, &pair.mask, &params)?
                }
                None => (pair.image.clone(), pair.mask.clone()),
            };
            images.push(normalize::<T>(&image));
            masks.push(normalize::<T>(&mask));
            ids.push(pair.id.clone());
        }
        Ok(Batch {
            image: Tensor::stack(&images)?,
            mask: Tensor::stack(&masks)?,
            ids,
        })
    }

    /// Builds batches `range` on a background thread, at most `depth` ahead of the consumer.
    pub fn prefetch<T: Scalar>(&self, range: Range<u64>, depth: usize) -> Prefetch<T> {
        let (tx, rx) = sync_channel(depth.max(1));
        let batcher = self.clone();
        let worker = std::thread::spawn(move || {
            for k in range {
                let batch = batcher.batch::<T>(k);
                let failed = batch.is_err();
                if tx.send(batch).is_err() || failed {
                    break;
                }
            }
        });
        Prefetch {
            rx: Some(rx),
            worker: Some(worker),
            _marker: PhantomData,
        }
    }
}

/// Iterator over prefetched batches; stops after the first error.
pub struct Prefetch<T> {
    rx: Option<Receiver<Result<Batch<T>>>>,
    worker: Option<JoinHandle<()>>,
    _marker: PhantomData<T>,
}

impl<T> Iterator for Prefetch<T> {
    type Item = Result<Batch<T>>;

    fn next(&mut self) -> Option<Self::Item> {
        self.rx.as_ref()?.recv().ok()
    }
}

impl<T> Drop for Prefetch<T> {
    fn drop(&mut self) {
        // Closing the channel unblocks a worker waiting on a full queue.
        self.rx = None;
        if let Some(worker) = self.worker.take() {
            let _ = worker.join();
        }
    }
}
