//! Numeric substrate: NHWC tensors, the closed layer vocabulary with forward
//! and backward passes, losses and the Adam optimizer.

mod activation;
mod adam;
mod batchnorm;
mod conv;
pub mod gradcheck;
mod init;
mod layer;
mod loss;
mod param;
mod structural;
mod tensor;

pub use activation::{Activation, ActivationKind};
pub use adam::{Adam, AdamConfig};
pub use batchnorm::BatchNorm;
pub use conv::{Conv2d, ConvTranspose2d, Padding};
pub use gradcheck::{grad_check, relative_error};
pub use init::normal_init;
pub use layer::{Ctx, Layer, Mode};
pub use loss::{bce_with_logits, bce_with_logits_grad, l1, l1_grad};
pub use param::Param;
pub use structural::{concat_channels, split_channels, Dropout, ZeroPad2d};
pub use tensor::{Shape, Tensor};
