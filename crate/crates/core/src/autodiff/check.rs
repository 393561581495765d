use super::graph::{Graph, Var};
use super::params::{ParamSet, VarSet};
use crate::error::{Error, Result};

/// Outcome of a finite-difference comparison.
#[derive(Debug, Clone)]
pub struct GradCheck {
    /// Largest `|a - f| / max(1e-8, |a| + |f|)` over all coordinates.
    pub max_rel_error: f64,
    /// Flat index of the worst coordinate.
    pub worst_index: usize,
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
}

/// Compares reverse-mode gradients with central differences of step `eps`.
///
/// `build` records a scalar loss from the registered parameters.
pub fn finite_diff_check<F>(params: &ParamSet<f64>, eps: f64, build: F) -> Result<GradCheck>
where
    F: for<'g> Fn(&'g Graph<f64>, &VarSet<'g, f64>) -> Result<Var<'g, f64>>,
{
    if !(eps > 0.0) {
        return Err(Error::Param(format!(
            "finite-difference step must be positive, got {eps}"
        )));
    }
    let eval = |p: &ParamSet<f64>| -> Result<f64> {
        let g = Graph::new();
        let vars = p.register_constant(&g);
        Ok(build(&g, &vars)?.value().item())
    };

    let analytic = {
        let g = Graph::new();
        let vars = params.register(&g);
        let loss = build(&g, &vars)?;
        vars.backward(loss)?.flatten()
    };

    let base = params.flatten();
    let mut numeric = Vec::with_capacity(base.len());
    let mut probe = base.clone();
    for i in 0..base.len() {
        probe[i] = base[i] + eps;
        let up = eval(&params.unflatten(&probe)?)?;
        probe[i] = base[i] - eps;
        let down = eval(&params.unflatten(&probe)?)?;
        probe[i] = base[i];
        numeric.push((up - down) / (2.0 * eps));
    }

    let (worst_index, max_rel_error) = analytic
        .iter()
        .zip(&numeric)
        .map(|(a, f)| (a - f).abs() / (a.abs() + f.abs()).max(1e-8))
        .enumerate()
        .fold(
            (0, 0.0),
            |best, (i, e)| if e > best.1 { (i, e) } else { best },
        );

    Ok(GradCheck {
        max_rel_error,
        worst_index,
        analytic,
        numeric,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor<f64> {
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        Tensor::new(rows, cols, data).unwrap()
    }

    #[test]
    fn two_layer_network_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random(&mut rng, 5, 4);
        let mut params = ParamSet::new();
        params.insert("w1", random(&mut rng, 4, 6)).unwrap();
        params.insert("b1", random(&mut rng, 1, 6)).unwrap();
        params.insert("w2", random(&mut rng, 6, 3)).unwrap();
        let target = Tensor::from_f64(
            5,
            3,
            &[1., 0., 0., 0., 1., 0., 0., 0., 1., 1., 0., 0., 0., 1., 0.],
        )
        .unwrap();
        let check = finite_diff_check(&params, 1e-3, |g, p| {
            let h = g
                .constant(x.clone())
                .matmul(p.get("w1")?)?
                .add_row(p.get("b1")?)?
                .tanh();
            let logp = h.matmul(p.get("w2")?)?.log_softmax();
            Ok(logp.mul(g.constant(target.clone()))?.sum().neg())
        })
        .unwrap();
        assert!(check.max_rel_error <= 1e-4, "{check:?}");
    }

    #[test]
    fn non_positive_step_is_rejected() {
        let mut params = ParamSet::new();
        params.insert("x", Tensor::scalar(1.0)).unwrap();
        let r = finite_diff_check(&params, 0.0, |_, p| {
            let x = p.get("x")?;
            x.mul(x)
        });
        assert!(matches!(r, Err(Error::Param(_))));
    }
}
