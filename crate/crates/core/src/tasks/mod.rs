//! Long videos, per-segment views and meta-task sampling.

mod sample;
mod video;
mod views;

pub use sample::{sample_task, MetaTask, TaskPool};
pub use video::{LongVideo, SegmentLabel, TEXT_DIM, VISUAL_DIM};
pub use views::{
    segment_by_labels, segment_modalities, video_groups, Modality, PositionEncoder, TaggedStream,
    View, ViewGroup, POS_DIM,
};
