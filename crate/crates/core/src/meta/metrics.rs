use crate::autodiff::{ParamSet, Real};
use crate::error::{Error, Result};
use crate::labels::{NUM_CLASSES, NUM_EMOTIONS, NUM_INTENSITIES};

use super::bilevel::{inner_adapt, MetaConfig, Order};
use super::learner::Learner;

/// One query prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prediction {
    pub task: usize,
    pub label: usize,
    pub predicted: usize,
}

/// Accuracy, macro recall and confusion counts at 18 and 6 classes.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub count: usize,
    pub accuracy18: f64,
    pub recall18: f64,
    pub accuracy6: f64,
    pub recall6: f64,
    /// `confusion18[true][predicted]`.
    pub confusion18: Vec<Vec<u64>>,
    pub confusion6: Vec<Vec<u64>>,
}

fn summarize(confusion: &[Vec<u64>]) -> (usize, f64, f64) {
    let total: u64 = confusion.iter().flatten().sum();
    let hits: u64 = (0..confusion.len()).map(|i| confusion[i][i]).sum();
    let recalls: Vec<f64> = confusion
        .iter()
        .enumerate()
        .filter_map(|(i, row)| {
            let n: u64 = row.iter().sum();
            (n > 0).then(|| row[i] as f64 / n as f64)
        })
        .collect();
    let acc = if total > 0 {
        hits as f64 / total as f64
    } else {
        0.0
    };
    let recall = if recalls.is_empty() {
        0.0
    } else {
        recalls.iter().sum::<f64>() / recalls.len() as f64
    };
    (total as usize, acc, recall)
}

impl Metrics {
    /// Macro recall averages over classes that occur among the labels.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut c18 = vec![vec![0u64; NUM_CLASSES]; NUM_CLASSES];
        let mut c6 = vec![vec![0u64; NUM_EMOTIONS]; NUM_EMOTIONS];
        for (y, p) in pairs {
            if y >= NUM_CLASSES || p >= NUM_CLASSES {
                return Err(Error::Param(format!(
                    "class pair ({y}, {p}) outside 0..{NUM_CLASSES}"
                )));
            }
            c18[y][p] += 1;
            c6[y / NUM_INTENSITIES][p / NUM_INTENSITIES] += 1;
        }
        let (count, accuracy18, recall18) = summarize(&c18);
        let (_, accuracy6, recall6) = summarize(&c6);
        Ok(Self {
            count,
            accuracy18,
            recall18,
            accuracy6,
            recall6,
            confusion18: c18,
            confusion6: c6,
        })
    }
}

/// Adapts on each task's support set and scores its query set.
pub fn evaluate<T: Real, L: Learner<T>>(
    learner: &L,
    params: &ParamSet<T>,
    tasks: &[L::Task],
    cfg: &MetaConfig,
) -> Result<(Metrics, Vec<Prediction>)> {
    let mut preds = Vec::new();
    for (i, task) in tasks.iter().enumerate() {
        let mut run = || -> Result<()> {
            let (support, query) = learner.prepare(task)?;
            let graph = crate::autodiff::Graph::new();
            let vars = params.register(&graph);
            // adapted values do not depend on the order; first order
            // records less
            let (adapted, _) = inner_adapt(
                learner,
                &vars,
                &support,
                cfg.alpha,
                cfg.inner_steps,
                Order::First,
            )?;
            let obj = learner.objective(&adapted, &query)?;
            preds.extend(
                obj.predictions
                    .iter()
                    .map(|&(label, predicted)| Prediction {
                        task: i,
                        label,
                        predicted,
                    }),
            );
            Ok(())
        };
        run().map_err(|e| Error::Task {
            task: i,
            source: Box::new(e),
        })?;
    }
    let metrics = Metrics::from_pairs(preds.iter().map(|p| (p.label, p.predicted)))?;
    Ok((metrics, preds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn perfect_predictions_give_a_diagonal() {
        let pairs: Vec<_> = (0..NUM_CLASSES).flat_map(|c| [(c, c), (c, c)]).collect();
        let m = Metrics::from_pairs(pairs).unwrap();
        assert_eq!((m.accuracy18, m.recall18, m.accuracy6), (1.0, 1.0, 1.0));
        for (i, row) in m.confusion18.iter().enumerate() {
            assert_eq!(row.iter().sum::<u64>(), row[i]);
        }
    }

    #[test]
    fn constant_predictor_on_balanced_data() {
        let pairs: Vec<_> = (0..NUM_CLASSES).flat_map(|c| [(c, 4); 3]).collect();
        let m = Metrics::from_pairs(pairs).unwrap();
        assert_close!(m.accuracy18, 1.0 / 18.0, 1e-15);
        assert_close!(m.recall18, 1.0 / 18.0, 1e-15);
    }

    #[test]
    fn coarse_accuracy_never_below_fine() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let n = rng.random_range(1..60);
            let pairs: Vec<_> = (0..n)
                .map(|_| {
                    (
                        rng.random_range(0..NUM_CLASSES),
                        rng.random_range(0..NUM_CLASSES),
                    )
                })
                .collect();
            let m = Metrics::from_pairs(pairs).unwrap();
            assert!(m.accuracy6 >= m.accuracy18);
        }
    }
}
