use crate::autodiff::{Graph, ParamSet, Real, VarSet};
use crate::error::{Error, Result};

use super::learner::Learner;
use super::optimizer::Adam;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    /// Differentiate through the inner gradient.
    Second,
    /// Treat the inner gradient as a constant.
    First,
}

/// Bi-level optimization settings.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaConfig {
    /// Inner step size.
    pub alpha: f64,
    /// Outer learning rate.
    pub beta: f64,
    /// Tasks per outer step.
    pub tasks_per_step: usize,
    /// Inner gradient steps.
    pub inner_steps: usize,
    pub order: Order,
    pub momentum: f64,
    pub second_moment: f64,
    pub weight_decay: f64,
}

impl Default for MetaConfig {
    fn default() -> Self {
        Self {
            alpha: 0.2,
            beta: 0.003,
            tasks_per_step: 4,
            inner_steps: 1,
            order: Order::Second,
            momentum: 0.9,
            second_moment: 0.999,
            weight_decay: 1e-4,
        }
    }
}

impl MetaConfig {
    /// `alpha` may be zero (single-level training); `beta` must be positive.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || !(self.beta > 0.0) {
            return Err(Error::Config(format!(
                "need alpha >= 0 and beta > 0, got alpha {} beta {}",
                self.alpha, self.beta
            )));
        }
        if self.tasks_per_step == 0 || self.inner_steps == 0 {
            return Err(Error::Config(
                "tasks per step and inner steps must be at least 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.momentum) || !(0.0..1.0).contains(&self.second_moment) {
            return Err(Error::Config(
                "moment decay rates must lie in [0, 1)".into(),
            ));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::Config("weight decay must be >= 0".into()));
        }
        Ok(())
    }
}

/// Per-task losses of one outer step.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskLossRecord {
    pub task: usize,
    pub support_loss: f64,
    pub query_loss: f64,
    pub query_accuracy: f64,
}

/// Runs `steps` gradient steps of size `alpha` on the support objective.
///
/// With `differentiable` the updates stay on the graph in the requested
/// order; otherwise inner gradients are constants. Returns the adapted
/// parameters and the support classification loss before adaptation.
pub fn inner_adapt<'g, T: Real, L: Learner<T>>(
    learner: &L,
    vars: &VarSet<'g, T>,
    support: &L::Batch,
    alpha: f64,
    steps: usize,
    order: Order,
) -> Result<(VarSet<'g, T>, f64)> {
    if !(alpha >= 0.0) {
        return Err(Error::Param(format!(
            "inner step size must be >= 0, got {alpha}"
        )));
    }
    let mut cur = vars.clone();
    let mut first_loss = None;
    for _ in 0..steps.max(1) {
        let obj = learner.objective(&cur, support)?;
        first_loss.get_or_insert(obj.nll);
        if alpha == 0.0 {
            break;
        }
        let second = order == Order::Second;
        let grads = cur.grad(obj.loss, second)?;
        cur = cur.step(&grads, alpha, !second)?;
    }
    Ok((cur, first_loss.unwrap_or(0.0)))
}

/// Average query-loss gradient over `tasks` after inner adaptation, with
/// per-task records.
pub fn meta_gradient<T: Real, L: Learner<T>>(
    learner: &L,
    params: &ParamSet<T>,
    tasks: &[L::Task],
    cfg: &MetaConfig,
) -> Result<(ParamSet<T>, Vec<TaskLossRecord>)> {
    if tasks.is_empty() {
        return Err(Error::Param("empty task batch".into()));
    }
    let scale = T::one() / T::of(tasks.len() as f64);
    let mut total = params.zeros_like();
    let mut records = Vec::with_capacity(tasks.len());
    for (i, task) in tasks.iter().enumerate() {
        let wrap = |e: Error| Error::Task {
            task: i,
            source: Box::new(e),
        };
        let (support, query) = learner.prepare(task).map_err(wrap)?;
        let graph = Graph::new();
        let vars = params.register(&graph);
        let step = || -> Result<(ParamSet<T>, TaskLossRecord)> {
            let (adapted, support_loss) = inner_adapt(
                learner,
                &vars,
                &support,
                cfg.alpha,
                cfg.inner_steps,
                cfg.order,
            )?;
            let obj = learner.objective(&adapted, &query)?;
            let grads = vars.backward(obj.loss)?;
            if !grads.is_finite() {
                return Err(Error::Invariant("non-finite meta-gradient".into()));
            }
            Ok((
                grads,
                TaskLossRecord {
                    task: i,
                    support_loss,
                    query_loss: obj.nll,
                    query_accuracy: obj.accuracy(),
                },
            ))
        };
        let (grads, record) = step().map_err(wrap)?;
        for ((_, acc), (_, g)) in total.iter_mut().zip(grads.iter()) {
            for (a, &v) in acc.data_mut().iter_mut().zip(g.data()) {
                *a = *a + v * scale;
            }
        }
        records.push(record);
    }
    Ok((total, records))
}

/// Parameters plus outer optimizer state.
#[derive(Debug, Clone)]
pub struct MetaState<T: Real> {
    pub params: ParamSet<T>,
    pub optimizer: Adam<T>,
    pub cfg: MetaConfig,
}

impl<T: Real> MetaState<T> {
    pub fn new(params: ParamSet<T>, cfg: MetaConfig) -> Result<Self> {
        cfg.validate()?;
        let optimizer = Adam::new(
            &params,
            cfg.beta,
            cfg.momentum,
            cfg.second_moment,
            cfg.weight_decay,
        );
        Ok(Self {
            params,
            optimizer,
            cfg,
        })
    }

    pub fn steps_taken(&self) -> u64 {
        self.optimizer.steps()
    }
}

/// One meta-update from a batch of tasks.
pub fn outer_step<T: Real, L: Learner<T>>(
    state: &mut MetaState<T>,
    learner: &L,
    tasks: &[L::Task],
) -> Result<Vec<TaskLossRecord>> {
    if tasks.len() != state.cfg.tasks_per_step {
        return Err(Error::Param(format!(
            "batch of {} tasks, configured {}",
            tasks.len(),
            state.cfg.tasks_per_step
        )));
    }
    let (grads, records) = meta_gradient(learner, &state.params, tasks, &state.cfg)?;
    state.optimizer.update(&mut state.params, &grads)?;
    Ok(records)
}
