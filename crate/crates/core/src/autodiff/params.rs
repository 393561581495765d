use super::graph::{Graph, Var};
use super::tensor::{Real, Tensor};
use crate::error::{Error, Result};

/// Named tensors in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet<T: Real> {
    entries: Vec<(String, Tensor<T>)>,
}

impl<T: Real> Default for ParamSet<T> {
    fn default() -> Self {
        Self {
            entries: Vec::new(),
        }
    }
}

impl<T: Real> ParamSet<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor<T>) -> Result<()> {
        let name = name.into();
        if self.index_of(&name).is_some() {
            return Err(Error::Invariant(format!("duplicate parameter `{name}`")));
        }
        self.entries.push((name, value));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|(n, _)| n == name)
    }

    pub fn get(&self, name: &str) -> Result<&Tensor<T>> {
        self.index_of(name)
            .map(|i| &self.entries[i].1)
            .ok_or_else(|| Error::Lookup(format!("no parameter `{name}`")))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor<T>> {
        let i = self
            .index_of(name)
            .ok_or_else(|| Error::Lookup(format!("no parameter `{name}`")))?;
        Ok(&mut self.entries[i].1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor<T>)> {
        self.entries.iter_mut().map(|(n, t)| (n.as_str(), t))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn num_scalars(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.len()).sum()
    }

    /// All values concatenated in order.
    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.num_scalars());
        for (_, t) in &self.entries {
            out.extend_from_slice(t.data());
        }
        out
    }

    /// Inverse of [`flatten`](Self::flatten) using this set's shapes.
    pub fn unflatten(&self, flat: &[T]) -> Result<Self> {
        if flat.len() != self.num_scalars() {
            return Err(Error::shape(
                "unflatten",
                format!(
                    "{} values for {} parameters",
                    flat.len(),
                    self.num_scalars()
                ),
            ));
        }
        let mut offset = 0;
        let entries = self
            .entries
            .iter()
            .map(|(n, t)| {
                let data = flat[offset..offset + t.len()].to_vec();
                offset += t.len();
                Ok((n.clone(), Tensor::new(t.rows(), t.cols(), data)?))
            })
            .collect::<Result<_>>()?;
        Ok(Self { entries })
    }

    /// Same names and shapes, all zero.
    pub fn zeros_like(&self) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|(n, t)| (n.clone(), Tensor::zeros(t.rows(), t.cols())))
                .collect(),
        }
    }

    pub fn same_layout(&self, other: &Self) -> bool {
        self.entries.len() == other.entries.len()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|((a, x), (b, y))| a == b && x.shape() == y.shape())
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|(_, t)| t.is_finite())
    }

    pub fn cast<U: Real>(&self) -> ParamSet<U> {
        ParamSet {
            entries: self
                .entries
                .iter()
                .map(|(n, t)| (n.clone(), t.cast()))
                .collect(),
        }
    }

    /// Registers every tensor as a differentiable leaf on `graph`.
    pub fn register<'g>(&self, graph: &'g Graph<T>) -> VarSet<'g, T> {
        VarSet {
            names: self.entries.iter().map(|(n, _)| n.clone()).collect(),
            vars: self
                .entries
                .iter()
                .map(|(_, t)| graph.param(t.clone()))
                .collect(),
        }
    }

    /// Registers every tensor as a constant on `graph`.
    pub fn register_constant<'g>(&self, graph: &'g Graph<T>) -> VarSet<'g, T> {
        VarSet {
            names: self.entries.iter().map(|(n, _)| n.clone()).collect(),
            vars: self
                .entries
                .iter()
                .map(|(_, t)| graph.constant(t.clone()))
                .collect(),
        }
    }
}

/// A [`ParamSet`] living on a graph.
#[derive(Clone)]
pub struct VarSet<'g, T: Real> {
    names: Vec<String>,
    vars: Vec<Var<'g, T>>,
}

impl<'g, T: Real> VarSet<'g, T> {
    pub fn get(&self, name: &str) -> Result<Var<'g, T>> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.vars[i])
            .ok_or_else(|| Error::Lookup(format!("no parameter `{name}`")))
    }

    pub fn vars(&self) -> &[Var<'g, T>] {
        &self.vars
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Gradients of `loss` with respect to every var, as plain tensors.
    pub fn backward(&self, loss: Var<'g, T>) -> Result<ParamSet<T>> {
        let grads = loss.graph().grad(loss, &self.vars, false)?;
        Ok(self.collect(&grads))
    }

    /// Gradients kept on the graph (differentiable when `create_graph`).
    pub fn grad(&self, loss: Var<'g, T>, create_graph: bool) -> Result<Self> {
        let vars = loss.graph().grad(loss, &self.vars, create_graph)?;
        Ok(Self {
            names: self.names.clone(),
            vars,
        })
    }

    /// One gradient step `theta - alpha * grad`, recorded on the graph.
    ///
    /// With `first_order` the gradients are treated as constants, so later
    /// differentiation does not pass through them.
    pub fn step(&self, grads: &Self, alpha: f64, first_order: bool) -> Result<Self> {
        if !(alpha >= 0.0) {
            return Err(Error::Param(format!(
                "step size must be non-negative, got {alpha}"
            )));
        }
        if self.names != grads.names {
            return Err(Error::Invariant(
                "gradient set does not match parameters".into(),
            ));
        }
        let a = T::of(alpha);
        let vars = self
            .vars
            .iter()
            .zip(&grads.vars)
            .map(|(&p, &g)| {
                let g = if first_order { g.detach() } else { g };
                p.sub(g.scale(a))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            names: self.names.clone(),
            vars,
        })
    }

    /// Current values.
    pub fn values(&self) -> ParamSet<T> {
        ParamSet {
            entries: self
                .names
                .iter()
                .zip(&self.vars)
                .map(|(n, v)| (n.clone(), (*v.value()).clone()))
                .collect(),
        }
    }

    fn collect(&self, grads: &[Var<'g, T>]) -> ParamSet<T> {
        ParamSet {
            entries: self
                .names
                .iter()
                .zip(grads)
                .map(|(n, g)| (n.clone(), (*g.value()).clone()))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_set(v: f64) -> ParamSet<f64> {
        let mut p = ParamSet::new();
        p.insert("theta", Tensor::scalar(v)).unwrap();
        p
    }

    /// Loss after one inner step on f(theta) = theta^2, differentiated
    /// back to the starting point.
    fn meta_gradient(first_order: bool) -> f64 {
        let g = Graph::new();
        let vars = scalar_set(1.0).register(&g);
        let theta = vars.get("theta").unwrap();
        let inner = theta.mul(theta).unwrap();
        let grads = vars.grad(inner, !first_order).unwrap();
        let adapted = vars.step(&grads, 0.1, first_order).unwrap();
        let t2 = adapted.get("theta").unwrap();
        let outer = t2.mul(t2).unwrap();
        vars.backward(outer).unwrap().get("theta").unwrap().item()
    }

    #[test]
    fn second_order_meta_gradient() {
        // d/dtheta (theta(1 - 2a))^2 = 2 theta (1 - 2a)^2
        assert_close!(meta_gradient(false), 1.28, 1e-10);
    }

    #[test]
    fn first_order_meta_gradient() {
        // gradient of the adapted loss at the adapted point, 2 theta (1 - 2a)
        assert_close!(meta_gradient(true), 1.6, 1e-12);
    }

    #[test]
    fn negative_step_size_is_rejected() {
        let g = Graph::new();
        let vars = scalar_set(1.0).register(&g);
        let t = vars.get("theta").unwrap();
        let grads = vars.grad(t.mul(t).unwrap(), false).unwrap();
        assert!(matches!(
            vars.step(&grads, -0.1, false),
            Err(Error::Param(_))
        ));
    }

    #[test]
    fn flatten_round_trip() {
        let mut p = ParamSet::<f64>::new();
        p.insert("a", Tensor::from_f64(2, 2, &[1., 2., 3., 4.]).unwrap())
            .unwrap();
        p.insert("b", Tensor::from_f64(1, 3, &[5., 6., 7.]).unwrap())
            .unwrap();
        let flat = p.flatten();
        assert_eq!(flat, vec![1., 2., 3., 4., 5., 6., 7.]);
        assert_eq!(p.unflatten(&flat).unwrap(), p);
        assert!(p.unflatten(&flat[1..]).is_err());
        assert!(p.insert("a", Tensor::scalar(0.0)).is_err());
    }
}
