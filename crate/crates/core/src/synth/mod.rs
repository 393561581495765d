//! Synthetic multi-modal emotion videos and feature-level corruptions.

mod bench;
mod generator;
mod noise;

pub use bench::{video_seed, BenchConfig, BenchVideo, Benchmark, Split, MANIFEST};
pub use generator::{generate_video, GeneratedVideo, GeneratorConfig, Lifts};
pub use noise::{inject_distortion, inject_fog, inject_mask, NoiseKind, NoiseSpec, SWEEP_LEVELS};
