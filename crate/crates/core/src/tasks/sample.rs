use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::video::LongVideo;
use super::views::{video_groups, PositionEncoder, ViewGroup};
use crate::error::{Error, Result};
use crate::labels::{Emotion, NUM_EMOTIONS};

/// Support and query groups sharing one emotion.
#[derive(Debug, Clone)]
pub struct MetaTask {
    pub emotion: Emotion,
    pub support: Vec<Arc<ViewGroup>>,
    pub query: Vec<Arc<ViewGroup>>,
    pub seed: u64,
}

impl MetaTask {
    /// Builds a task from explicit groups, checking emotion purity.
    pub fn new(
        emotion: Emotion,
        support: Vec<Arc<ViewGroup>>,
        query: Vec<Arc<ViewGroup>>,
        seed: u64,
    ) -> Result<Self> {
        if let Some(g) = support
            .iter()
            .chain(&query)
            .find(|g| g.class().emotion != emotion)
        {
            return Err(Error::Invariant(format!(
                "{} group in a {} task",
                g.class(),
                emotion.name()
            )));
        }
        Ok(Self {
            emotion,
            support,
            query,
            seed,
        })
    }
}

/// Uniformly samples `k_support + k_query` distinct groups of `emotion`
/// from `pool`; the first `k_support` form the support set.
pub fn sample_task(
    pool: &[Arc<ViewGroup>],
    emotion: Emotion,
    k_support: usize,
    k_query: usize,
    seed: u64,
) -> Result<MetaTask> {
    let eligible: Vec<&Arc<ViewGroup>> = pool
        .iter()
        .filter(|g| g.class().emotion == emotion)
        .collect();
    let need = k_support + k_query;
    if eligible.len() < need {
        return Err(Error::Data(format!(
            "{} task needs {need} groups, pool has {}",
            emotion.name(),
            eligible.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, eligible.len(), need).into_vec();
    let take = |ix: &[usize]| ix.iter().map(|&i| Arc::clone(eligible[i])).collect();
    MetaTask::new(
        emotion,
        take(&picks[..k_support]),
        take(&picks[k_support..]),
        seed,
    )
}

/// View groups of a video collection, indexed by emotion.
#[derive(Debug, Clone, Default)]
pub struct TaskPool {
    by_emotion: [Vec<Arc<ViewGroup>>; NUM_EMOTIONS],
}

impl TaskPool {
    /// Video `i` gets source id `i`.
    pub fn from_videos(videos: &[LongVideo]) -> Result<Self> {
        let enc = PositionEncoder::shipped();
        let mut pool = Self::default();
        for (i, v) in videos.iter().enumerate() {
            for g in video_groups(v, i, &enc)? {
                pool.by_emotion[g.class().emotion.index()].push(Arc::new(g));
            }
        }
        Ok(pool)
    }

    pub fn groups(&self, emotion: Emotion) -> &[Arc<ViewGroup>] {
        &self.by_emotion[emotion.index()]
    }

    pub fn len(&self) -> usize {
        self.by_emotion.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample(
        &self,
        emotion: Emotion,
        k_support: usize,
        k_query: usize,
        seed: u64,
    ) -> Result<MetaTask> {
        sample_task(self.groups(emotion), emotion, k_support, k_query, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;
    use crate::labels::{EmotionClass, Intensity};
    use crate::tasks::views::{Modality, View, POS_DIM};

    fn pool(n: usize, emotion: Emotion) -> Vec<Arc<ViewGroup>> {
        (0..n)
            .map(|i| {
                let class = EmotionClass::new(emotion, Intensity::ALL[i % 3]);
                let mk = |m| {
                    View::new(m, Tensor::scalar(i as f64), 0, 1, class, [0.0; POS_DIM], i).unwrap()
                };
                Arc::new(ViewGroup::new(mk(Modality::Visual), mk(Modality::Text)).unwrap())
            })
            .collect()
    }

    fn ids(groups: &[Arc<ViewGroup>]) -> Vec<usize> {
        groups.iter().map(|g| g.source()).collect()
    }

    #[test]
    fn seeded_and_disjoint() {
        let p = pool(12, Emotion::Fear);
        let a = sample_task(&p, Emotion::Fear, 5, 5, 99).unwrap();
        let b = sample_task(&p, Emotion::Fear, 5, 5, 99).unwrap();
        assert_eq!(ids(&a.support), ids(&b.support));
        assert_eq!(ids(&a.query), ids(&b.query));
        assert!(ids(&a.support).iter().all(|i| !ids(&a.query).contains(i)));
    }

    #[test]
    fn full_draw_partitions_the_pool() {
        let p = pool(10, Emotion::Sad);
        let t = sample_task(&p, Emotion::Sad, 4, 6, 3).unwrap();
        let mut all = [ids(&t.support), ids(&t.query)].concat();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn insufficient_pool_reports_available_count() {
        let mut p = pool(6, Emotion::Happy);
        p.extend(pool(20, Emotion::Angry));
        let msg = sample_task(&p, Emotion::Happy, 5, 5, 0)
            .unwrap_err()
            .to_string();
        assert!(msg.contains("pool has 6"), "{msg}");
    }

    #[test]
    fn mixed_emotion_task_is_rejected() {
        let a = pool(2, Emotion::Happy);
        let b = pool(2, Emotion::Sad);
        assert!(MetaTask::new(Emotion::Happy, a, b, 0).is_err());
    }

    #[test]
    fn selection_frequencies_are_uniform() {
        let p = pool(10, Emotion::Angry);
        let draws = 10_000;
        let mut counts = [0usize; 10];
        for seed in 0..draws {
            let t = sample_task(&p, Emotion::Angry, 2, 3, seed).unwrap();
            for i in ids(&t.support).into_iter().chain(ids(&t.query)) {
                counts[i] += 1;
            }
        }
        // each group is picked with probability 5/10
        let (n, q) = (draws as f64, 0.5);
        let sigma = (n * q * (1.0 - q)).sqrt();
        for &c in &counts {
            assert!((c as f64 - n * q).abs() <= 3.0 * sigma, "{counts:?}");
        }
    }
}
