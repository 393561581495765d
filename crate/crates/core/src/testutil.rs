use std::sync::Arc;

use crate::fuzzy::RuleBank;
use crate::labels::EmotionClass;
use crate::synth::{generate_video, GeneratorConfig, Lifts};
use crate::tasks::{video_groups, PositionEncoder, ViewGroup};

/// View groups of one generated video with the given classes.
pub fn groups(classes: &[usize], frames: usize, seed: u64) -> Vec<Arc<ViewGroup>> {
    let cfg = GeneratorConfig {
        frames_per_segment: frames,
        segments_per_video: classes.len(),
        ..Default::default()
    };
    let classes: Vec<EmotionClass> = classes
        .iter()
        .map(|&c| EmotionClass::from_index(c).unwrap())
        .collect();
    let bank = RuleBank::default_bank();
    let g = generate_video(&classes, &cfg, &bank, &Lifts::seeded(seed), seed).unwrap();
    video_groups(&g.video, 0, &PositionEncoder::shipped())
        .unwrap()
        .into_iter()
        .map(Arc::new)
        .collect()
}
