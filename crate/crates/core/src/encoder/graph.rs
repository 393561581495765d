use crate::autodiff::{Real, Tensor, Var};
use crate::error::{Error, Result};
use crate::tasks::ViewGroup;

/// View adjacency of a task and its symmetric normalization
/// `D^-1/2 (A + I) D^-1/2`.
///
/// Nodes are ordered group by group, visual before text: group `i`
/// owns nodes `2i` and `2i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskGraph {
    adjacency: Tensor<f64>,
    normalized: Tensor<f64>,
}

impl TaskGraph {
    /// Links the two views of each group, and same-modality views at
    /// neighbouring positions of the same video.
    pub fn from_groups<G: AsRef<ViewGroup>>(groups: &[G]) -> Self {
        let n = 2 * groups.len();
        let mut a = Tensor::zeros(n, n);
        for (i, gi) in groups.iter().enumerate() {
            let gi = gi.as_ref();
            a.set(2 * i, 2 * i + 1, 1.0);
            a.set(2 * i + 1, 2 * i, 1.0);
            for (j, gj) in groups.iter().enumerate().skip(i + 1) {
                let gj = gj.as_ref();
                if gi.source() == gj.source() && gi.position().abs_diff(gj.position()) == 1 {
                    for m in 0..2 {
                        a.set(2 * i + m, 2 * j + m, 1.0);
                        a.set(2 * j + m, 2 * i + m, 1.0);
                    }
                }
            }
        }
        Self::from_adjacency(a).expect("constructed adjacency is valid")
    }

    pub fn from_adjacency(a: Tensor<f64>) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::shape(
                "task_graph",
                format!("adjacency {:?} is not square", a.shape()),
            ));
        }
        for i in 0..n {
            if a.get(i, i) != 0.0 {
                return Err(Error::Invariant(format!(
                    "adjacency has a self loop at {i}"
                )));
            }
            for j in 0..i {
                if a.get(i, j) != a.get(j, i) {
                    return Err(Error::Invariant(format!(
                        "adjacency is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let deg: Vec<f64> = (0..n).map(|i| 1.0 + a.row(i).iter().sum::<f64>()).collect();
        let mut normalized = Tensor::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let aij = a.get(i, j) + if i == j { 1.0 } else { 0.0 };
                normalized.set(i, j, aij / (deg[i] * deg[j]).sqrt());
            }
        }
        Ok(Self {
            adjacency: a,
            normalized,
        })
    }

    pub fn len(&self) -> usize {
        self.adjacency.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn adjacency(&self) -> &Tensor<f64> {
        &self.adjacency
    }

    pub fn normalized(&self) -> &Tensor<f64> {
        &self.normalized
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.data().iter().filter(|&&v| v != 0.0).count() / 2
    }
}

/// One round of message passing, `relu(A_hat Z W)`.
pub fn spatial_conv<'g, T: Real>(
    z: Var<'g, T>,
    a_hat: Var<'g, T>,
    w: Var<'g, T>,
) -> Result<Var<'g, T>> {
    if a_hat.shape()[1] != z.shape()[0] {
        return Err(Error::shape(
            "spatial_conv",
            format!("{:?} adjacency for {} nodes", a_hat.shape(), z.shape()[0]),
        ));
    }
    Ok(a_hat.matmul(z)?.matmul(w)?.relu())
}
