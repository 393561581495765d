use crate::autodiff::{Real, Var, VarSet};
use crate::encoder::{Encoder, ViewBatch};
use crate::error::{Error, Result};
use crate::labels::NUM_CLASSES;
use crate::tasks::MetaTask;

/// A differentiable objective with the bookkeeping needed for logging.
pub struct Objective<'g, T: Real> {
    /// Value that is differentiated (classification loss plus any
    /// auxiliary terms).
    pub loss: Var<'g, T>,
    /// Classification loss alone.
    pub nll: f64,
    /// `(label, prediction)` per example.
    pub predictions: Vec<(usize, usize)>,
}

impl<T: Real> Objective<'_, T> {
    pub fn accuracy(&self) -> f64 {
        if self.predictions.is_empty() {
            return 0.0;
        }
        let hits = self.predictions.iter().filter(|(y, p)| y == p).count();
        hits as f64 / self.predictions.len() as f64
    }
}

/// Model interface the bi-level optimizer works against.
pub trait Learner<T: Real> {
    type Task;
    type Batch;

    /// Support and query data of a task.
    fn prepare(&self, task: &Self::Task) -> Result<(Self::Batch, Self::Batch)>;

    fn objective<'g>(&self, vars: &VarSet<'g, T>, batch: &Self::Batch) -> Result<Objective<'g, T>>;
}

/// Mean negative log-probability of the true class over rows of
/// `log_probs`.
pub fn task_loss<'g, T: Real>(log_probs: Var<'g, T>, labels: &[usize]) -> Result<Var<'g, T>> {
    let [rows, cols] = log_probs.shape();
    if labels.len() != rows {
        return Err(Error::shape(
            "task_loss",
            format!("{} labels for {rows} rows", labels.len()),
        ));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= cols) {
        return Err(Error::Param(format!("label {bad} outside 0..{cols}")));
    }
    let mut onehot = crate::autodiff::Tensor::zeros(rows, cols);
    for (r, &y) in labels.iter().enumerate() {
        onehot.set(r, y, T::one());
    }
    let g = log_probs.graph();
    Ok(log_probs
        .mul(g.constant(onehot))?
        .sum()
        .scale(-T::one() / T::of(rows.max(1) as f64)))
}

/// Row-wise argmax; ties go to the lower index.
pub fn argmax_rows<T: Real>(t: &crate::autodiff::Tensor<T>) -> Vec<usize> {
    (0..t.rows())
        .map(|r| {
            t.row(r)
                .iter()
                .enumerate()
                .fold((0, T::neg_infinity()), |best, (i, &v)| {
                    if v > best.1 {
                        (i, v)
                    } else {
                        best
                    }
                })
                .0
        })
        .collect()
}

/// [`Encoder`] as a meta-learner over view-group tasks.
pub struct EncoderLearner<'a> {
    pub encoder: &'a Encoder,
}

impl<T: Real> Learner<T> for EncoderLearner<'_> {
    type Task = MetaTask;
    type Batch = ViewBatch<T>;

    fn prepare(&self, task: &MetaTask) -> Result<(ViewBatch<T>, ViewBatch<T>)> {
        if task.support.is_empty() {
            return Err(Error::Data("task has an empty support set".into()));
        }
        Ok((
            self.encoder.batch(&task.support)?,
            self.encoder.batch(&task.query)?,
        ))
    }

    fn objective<'g>(
        &self,
        vars: &VarSet<'g, T>,
        batch: &ViewBatch<T>,
    ) -> Result<Objective<'g, T>> {
        let fwd = self.encoder.forward(vars, batch, None)?;
        debug_assert_eq!(fwd.log_probs.shape()[1], NUM_CLASSES);
        let nll = task_loss(fwd.log_probs, batch.labels())?;
        let loss = match self.encoder.coding_loss(&fwd, batch)? {
            Some(aux) => nll.add(aux)?,
            None => nll,
        };
        let preds = argmax_rows(&fwd.log_probs.value());
        Ok(Objective {
            loss,
            nll: nll.value().item().to_f64().unwrap(),
            predictions: batch.labels().iter().copied().zip(preds).collect(),
        })
    }
}
