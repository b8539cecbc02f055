//! The U-Net generator, the PatchGAN discriminator, the adversarial + L1
//! objective, training, prediction and checkpointing.

mod blocks;
pub mod checkpoint;
mod config;
mod discriminator;
mod fit;
mod generator;
mod objective;
mod predict;
mod summary;
mod train;

pub use blocks::{DownBlock, UpBlock};
pub use checkpoint::{Checkpoint, Entry, EntryData};
pub use config::{InferenceMode, ModelConfig};
pub use discriminator::Discriminator;
pub use fit::{fit, pixel_accuracy, FitObserver, FitOptions, NoopObserver, StepRecord, TrainHistory};
pub use generator::Generator;
pub use objective::{disc_loss, gen_loss, GenLoss};
pub use predict::{binarize, predict_mask, Prediction};
pub use summary::LayerRow;
pub use train::{Pix2Pix, StepLosses};

use crate::nn::{Layer, Param};
use crate::Scalar;

/// Named access to every stateful layer of a network.
pub trait Network<T: Scalar> {
    fn layers(&self) -> Vec<(String, &dyn Layer<T>)>;

    fn layers_mut(&mut self) -> Vec<(String, &mut dyn Layer<T>)>;

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        self.layers_mut()
            .into_iter()
            .flat_map(|(_, l)| l.params_mut())
            .collect()
    }

    /// Trainable scalars plus normalization buffers.
    fn stored_param_count(&self) -> usize {
        self.layers().iter().map(|(_, l)| l.stored_param_count()).sum()
    }

    fn trainable_param_count(&self) -> usize {
        self.layers()
            .iter()
            .flat_map(|(_, l)| l.params())
            .map(|p| p.len())
            .sum()
    }

    /// Parameter values, flattened in layer order; handy for equality checks.
    fn param_snapshot(&self) -> Vec<T> {
        self.layers()
            .iter()
            .flat_map(|(_, l)| l.params())
            .flat_map(|p| p.value.data().to_vec())
            .collect()
    }
}
