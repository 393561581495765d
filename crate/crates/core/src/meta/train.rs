use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{ParamSet, Real};
use crate::encoder::Encoder;
use crate::error::Result;
use crate::labels::Emotion;
use crate::tasks::{MetaTask, TaskPool};

use super::bilevel::{outer_step, MetaState};
use super::learner::EncoderLearner;

/// Support and query sizes of sampled tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpisodeConfig {
    pub k_support: usize,
    pub k_query: usize,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            k_support: 5,
            k_query: 5,
        }
    }
}

/// Summary of one outer step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepLog {
    pub step: usize,
    pub support_loss: f64,
    pub query_loss: f64,
    pub query_accuracy: f64,
    pub wall_ms: u128,
}

impl StepLog {
    pub const HEADER: &'static str = "step\tsupport_loss\tquery_loss\tquery_accuracy";

    /// Tab-separated log line without the trailing newline. Wall time is
    /// left out so that logs are reproducible.
    pub fn tsv(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}",
            self.step, self.support_loss, self.query_loss, self.query_accuracy
        )
    }
}

/// Draws `count` tasks, each for a uniformly chosen emotion.
pub fn sample_batch(
    pool: &TaskPool,
    episode: EpisodeConfig,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<MetaTask>> {
    (0..count)
        .map(|_| {
            let emotion = Emotion::ALL[rng.random_range(0..Emotion::ALL.len())];
            pool.sample(emotion, episode.k_support, episode.k_query, rng.random())
        })
        .collect()
}

/// A fixed evaluation set: `per_emotion` tasks for every emotion.
pub fn fixed_tasks(
    pool: &TaskPool,
    episode: EpisodeConfig,
    per_emotion: usize,
    seed: u64,
) -> Result<Vec<MetaTask>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tasks = Vec::with_capacity(per_emotion * Emotion::ALL.len());
    for emotion in Emotion::ALL {
        for _ in 0..per_emotion {
            tasks.push(pool.sample(emotion, episode.k_support, episode.k_query, rng.random())?);
        }
    }
    Ok(tasks)
}

/// Runs `steps` outer steps on tasks drawn from `pool`, calling `on_step`
/// with the log entry and the updated parameters after each.
pub fn train<T: Real>(
    state: &mut MetaState<T>,
    encoder: &Encoder,
    pool: &TaskPool,
    episode: EpisodeConfig,
    steps: usize,
    seed: u64,
    mut on_step: impl FnMut(&StepLog, &ParamSet<T>) -> Result<()>,
) -> Result<()> {
    let learner = EncoderLearner { encoder };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for step in 1..=steps {
        let started = Instant::now();
        let tasks = sample_batch(pool, episode, state.cfg.tasks_per_step, &mut rng)?;
        let records = outer_step(state, &learner, &tasks)?;
        let n = records.len() as f64;
        let mean = |f: fn(&super::TaskLossRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
        on_step(
            &StepLog {
                step,
                support_loss: mean(|r| r.support_loss),
                query_loss: mean(|r| r.query_loss),
                query_accuracy: mean(|r| r.query_accuracy),
                wall_ms: started.elapsed().as_millis(),
            },
            &state.params,
        )?;
    }
    Ok(())
}
