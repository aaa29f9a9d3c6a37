//! Losses, reverse-mode gradients, the learning-rate schedule, Adam and the
//! epoch loop.

mod adam;
mod backward;
mod loss;
mod schedule;
mod trainer;

pub use adam::{adam_step, AdamState, BETA1, BETA2, EPSILON};
pub use backward::{backprop, backward, backward_prepared};
pub use loss::{loss, loss_and_grad, LossKind};
pub use schedule::{lr_at, TrainConfig};
pub use trainer::{
    evaluate, format_sig6, metric_better, prepare, train, train_with, EpochRecord, PreparedGraph,
    TrainHistory,
};
