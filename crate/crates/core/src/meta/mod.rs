//! Bi-level meta-training: inner adaptation on support sets, outer
//! updates from query losses, and evaluation.

mod bilevel;
mod learner;
mod metrics;
mod optimizer;
mod train;

pub use bilevel::{
    inner_adapt, meta_gradient, outer_step, MetaConfig, MetaState, Order, TaskLossRecord,
};
pub use learner::{argmax_rows, task_loss, EncoderLearner, Learner, Objective};
pub use metrics::{evaluate, Metrics, Prediction};
pub use optimizer::Adam;
pub use train::{fixed_tasks, sample_batch, train, EpisodeConfig, StepLog};
