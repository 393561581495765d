//! Reverse-mode automatic differentiation over dense 2-D tensors.

mod check;
mod checkpoint;
mod graph;
mod params;
mod tensor;

pub use check::{finite_diff_check, GradCheck};
pub use checkpoint::{read_checkpoint, write_checkpoint, MAGIC, VERSION};
pub use graph::{Graph, Var};
pub use params::{ParamSet, VarSet};
pub use tensor::{DType, Real, Tensor};
