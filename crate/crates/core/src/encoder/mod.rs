//! Modality projection, gated temporal convolution, task-graph message
//! passing, fuzzy semantic features and the 18-way classifier.

mod config;
mod graph;
mod model;

pub use config::EncoderConfig;
pub use graph::{spatial_conv, TaskGraph};
pub use model::{temporal_conv, Encoder, Forward, GluLayer, ViewBatch, CODING_DIM};
