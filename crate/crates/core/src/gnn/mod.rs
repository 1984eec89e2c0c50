//! Graph neural network classifiers.
//!
//! Every variant shares the two-layer shape `Conv1 -> ReLU -> dropout ->
//! Conv2 -> log-softmax` (hidden width 32, two classes). AGNN instead runs
//! `Linear -> ReLU -> dropout -> attention propagation -> Linear`. All graph
//! operators are built on the symmetrized input graph.

mod model;
pub mod tape;
mod train;

pub use model::{layers, GnnConfig, GnnModel, Mode, Propagation, TrainConfig, Variant, NUM_CLASSES};
pub use train::{
    adam_step, predict, train, write_loss_curve, AdamState, EpochRecord, Predictions, TrainOutcome, ADAM_EPS,
};

#[cfg(test)]
mod tests;
