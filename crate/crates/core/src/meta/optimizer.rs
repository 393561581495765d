use crate::autodiff::{ParamSet, Real};
use crate::error::{Error, Result};

/// Adaptive-moment optimizer with coupled (L2) weight decay.
#[derive(Debug, Clone)]
pub struct Adam<T: Real> {
    lr: f64,
    beta1: f64,
    beta2: f64,
    weight_decay: f64,
    eps: f64,
    m: ParamSet<T>,
    v: ParamSet<T>,
    t: u64,
}

impl<T: Real> Adam<T> {
    pub fn new(params: &ParamSet<T>, lr: f64, beta1: f64, beta2: f64, weight_decay: f64) -> Self {
        Self {
            lr,
            beta1,
            beta2,
            weight_decay,
            eps: 1e-8,
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn update(&mut self, params: &mut ParamSet<T>, grads: &ParamSet<T>) -> Result<()> {
        if !params.same_layout(grads) || !params.same_layout(&self.m) {
            return Err(Error::Invariant(
                "optimizer state does not match parameters".into(),
            ));
        }
        self.t += 1;
        let c1 = T::of(1.0 - self.beta1.powi(self.t as i32));
        let c2 = T::of(1.0 - self.beta2.powi(self.t as i32));
        let (b1, b2) = (T::of(self.beta1), T::of(self.beta2));
        let (lr, wd, eps) = (T::of(self.lr), T::of(self.weight_decay), T::of(self.eps));
        let entries = params
            .iter_mut()
            .zip(grads.iter())
            .zip(self.m.iter_mut().zip(self.v.iter_mut()));
        for (((_, p), (_, g)), ((_, m), (_, v))) in entries {
            let cells = p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut().iter_mut().zip(v.data_mut()));
            for ((p, &g), (m, v)) in cells {
                let g = g + wd * *p;
                *m = b1 * *m + (T::one() - b1) * g;
                *v = b2 * *v + (T::one() - b2) * g * g;
                *p = *p - lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = ParamSet::<f64>::new();
        p.insert("x", Tensor::from_f64(1, 2, &[1.0, -1.0]).unwrap())
            .unwrap();
        let mut g = p.zeros_like();
        g.get_mut("x")
            .unwrap()
            .data_mut()
            .copy_from_slice(&[0.5, -2.0]);
        let mut adam = Adam::new(&p, 0.01, 0.9, 0.999, 0.0);
        adam.update(&mut p, &g).unwrap();
        let x = p.get("x").unwrap();
        assert_close!(x.data()[0], 0.99, 1e-7);
        assert_close!(x.data()[1], -0.99, 1e-7);
    }

    #[test]
    fn zero_gradient_without_decay_is_a_no_op() {
        let mut p = ParamSet::<f64>::new();
        p.insert("x", Tensor::from_f64(1, 2, &[1.0, -1.0]).unwrap())
            .unwrap();
        let before = p.clone();
        let g = p.zeros_like();
        let mut adam = Adam::new(&p, 0.01, 0.9, 0.999, 0.0);
        for _ in 0..3 {
            adam.update(&mut p, &g).unwrap();
        }
        assert_eq!(p, before);
    }
}
