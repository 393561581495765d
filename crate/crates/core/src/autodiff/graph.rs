//! Operation recording and reverse-mode differentiation.
//!
//! Node ids are assigned in recording order, which is a topological order,
//! so backward is a single reverse sweep. Every vector-Jacobian product is
//! itself built from recorded operations: with `create_graph` the gradients
//! are ordinary differentiable nodes and can be differentiated again.

use std::cell::RefCell;
use std::rc::Rc;

use super::tensor::{Real, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
enum Op<T> {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    /// `scale * x + shift`
    Affine(usize, T),
    MatMul {
        a: usize,
        b: usize,
        ta: bool,
        tb: bool,
    },
    Sigmoid(usize),
    Tanh(usize),
    Relu(usize),
    Exp(usize),
    Log(usize),
    Recip(usize),
    LogSoftmax(usize),
    SumAll(usize),
    SumRows(usize),
    SumCols(usize),
    Broadcast(usize),
    Unfold {
        x: usize,
        lens: Rc<[usize]>,
        k: usize,
    },
    Fold {
        x: usize,
        lens: Rc<[usize]>,
        k: usize,
    },
    ConcatCols(Vec<usize>),
    SliceCols {
        x: usize,
        start: usize,
    },
    PadCols {
        x: usize,
        start: usize,
    },
    ConcatRows(Vec<usize>),
    GatherRows {
        x: usize,
        idx: Rc<[usize]>,
    },
    ScatterRows {
        x: usize,
        idx: Rc<[usize]>,
    },
}

struct Node<T> {
    value: Rc<Tensor<T>>,
    op: Op<T>,
    requires_grad: bool,
}

/// A recording of tensor operations. Single-writer; build one per task.
pub struct Graph<T: Real> {
    nodes: RefCell<Vec<Node<T>>>,
}

/// Handle to a recorded value.
#[derive(Clone, Copy)]
pub struct Var<'g, T: Real> {
    graph: &'g Graph<T>,
    id: usize,
}

impl<T: Real> std::fmt::Debug for Var<'_, T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var#{}{:?}", self.id, self.value())
    }
}

impl<T: Real> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Graph<T> {
    pub fn new() -> Self {
        Self {
            nodes: RefCell::new(Vec::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push_node(&self, value: Tensor<T>, op: Op<T>, requires_grad: bool) -> Var<'_, T> {
        let mut nodes = self.nodes.borrow_mut();
        let id = nodes.len();
        nodes.push(Node {
            value: Rc::new(value),
            op,
            requires_grad,
        });
        Var { graph: self, id }
    }

    fn record(&self, value: Tensor<T>, op: Op<T>, inputs: &[usize]) -> Var<'_, T> {
        let requires_grad = {
            let nodes = self.nodes.borrow();
            debug_assert!(
                value.is_finite() || inputs.iter().any(|&i| !nodes[i].value.is_finite()),
                "non-finite output of {op:?} from finite inputs"
            );
            inputs.iter().any(|&i| nodes[i].requires_grad)
        };
        let op = if requires_grad { op } else { Op::Leaf };
        self.push_node(value, op, requires_grad)
    }

    /// A differentiable leaf.
    pub fn param(&self, value: Tensor<T>) -> Var<'_, T> {
        self.push_node(value, Op::Leaf, true)
    }

    /// A constant leaf; receives no gradient.
    pub fn constant(&self, value: Tensor<T>) -> Var<'_, T> {
        self.push_node(value, Op::Leaf, false)
    }

    fn value_of(&self, id: usize) -> Rc<Tensor<T>> {
        Rc::clone(&self.nodes.borrow()[id].value)
    }

    fn requires_grad(&self, id: usize) -> bool {
        self.nodes.borrow()[id].requires_grad
    }

    fn var(&self, id: usize) -> Var<'_, T> {
        Var { graph: self, id }
    }

    /// Gradients of a scalar `loss` with respect to `wrt`.
    ///
    /// With `create_graph` the returned gradients are differentiable nodes
    /// (for second-order use); otherwise they are constants. Inputs that do
    /// not influence `loss` get an exact zero.
    pub fn grad<'g>(
        &'g self,
        loss: Var<'g, T>,
        wrt: &[Var<'g, T>],
        create_graph: bool,
    ) -> Result<Vec<Var<'g, T>>> {
        let loss_value = loss.value();
        if loss_value.shape() != [1, 1] {
            return Err(Error::shape(
                "backward",
                format!("loss must be 1x1, got {:?}", loss_value.shape()),
            ));
        }
        let n = loss.id + 1;
        let mut grads: Vec<Option<Var<'g, T>>> = vec![None; n];
        grads[loss.id] = Some(self.constant(Tensor::scalar(T::one())));

        // nothing below the lowest requested node can reach it
        let stop = wrt.iter().map(|w| w.id).min().unwrap_or(n);
        for id in (stop..n).rev() {
            let Some(g) = grads[id] else { continue };
            let (op, requires_grad) = {
                let nodes = self.nodes.borrow();
                (nodes[id].op.clone(), nodes[id].requires_grad)
            };
            if !requires_grad || matches!(op, Op::Leaf) {
                continue;
            }
            let g = if create_graph { g } else { g.detach() };
            for (input, gi) in self.vjp(id, &op, g, create_graph)? {
                grads[input] = Some(match grads[input] {
                    Some(acc) => acc.add(gi)?,
                    None => gi,
                });
            }
        }

        wrt.iter()
            .map(|w| {
                let g = if w.id < n { grads[w.id] } else { None };
                Ok(match g {
                    Some(g) if create_graph => g,
                    Some(g) => g.detach(),
                    None => {
                        let v = w.value();
                        self.constant(Tensor::zeros(v.rows(), v.cols()))
                    }
                })
            })
            .collect()
    }

    /// Input gradients of node `id` given its output gradient `g`.
    fn vjp<'g>(
        &'g self,
        id: usize,
        op: &Op<T>,
        g: Var<'g, T>,
        create_graph: bool,
    ) -> Result<Vec<(usize, Var<'g, T>)>> {
        // Saved inputs/outputs enter the VJP as graph nodes when the result
        // must stay differentiable, and as detached copies otherwise.
        let saved = |i: usize| {
            let v = self.var(i);
            if create_graph {
                v
            } else {
                v.detach()
            }
        };
        let needs = |i: usize| self.requires_grad(i);
        let out = saved(id);
        let mut res = Vec::with_capacity(2);
        match *op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                if needs(a) {
                    res.push((a, g));
                }
                if needs(b) {
                    res.push((b, g));
                }
            }
            Op::Sub(a, b) => {
                if needs(a) {
                    res.push((a, g));
                }
                if needs(b) {
                    res.push((b, g.neg()));
                }
            }
            Op::Mul(a, b) => {
                if needs(a) {
                    res.push((a, g.mul(saved(b))?));
                }
                if needs(b) {
                    res.push((b, g.mul(saved(a))?));
                }
            }
            Op::Affine(x, scale) => {
                // shift is not stored: d(scale*x + shift)/dx = scale
                res.push((x, g.affine(scale, T::zero())));
            }
            Op::MatMul { a, b, ta, tb } => {
                if needs(a) {
                    let ga = if ta {
                        saved(b).matmul_t(tb, g, true)?
                    } else {
                        g.matmul_t(false, saved(b), !tb)?
                    };
                    res.push((a, ga));
                }
                if needs(b) {
                    let gb = if tb {
                        g.matmul_t(true, saved(a), ta)?
                    } else {
                        saved(a).matmul_t(!ta, g, false)?
                    };
                    res.push((b, gb));
                }
            }
            Op::Sigmoid(x) => {
                let d = out.mul(out.affine(-T::one(), T::one()))?;
                res.push((x, g.mul(d)?));
            }
            Op::Tanh(x) => {
                let d = out.mul(out)?.affine(-T::one(), T::one());
                res.push((x, g.mul(d)?));
            }
            Op::Relu(x) => {
                let mask = self
                    .value_of(x)
                    .map(|v| if v > T::zero() { T::one() } else { T::zero() });
                res.push((x, g.mul(self.constant(mask))?));
            }
            Op::Exp(x) => res.push((x, g.mul(out)?)),
            Op::Log(x) => res.push((x, g.mul(saved(x).recip())?)),
            Op::Recip(x) => {
                let d = out.mul(out)?.neg();
                res.push((x, g.mul(d)?));
            }
            Op::LogSoftmax(x) => {
                let shape = self.value_of(x).shape();
                let row_total = g.sum_cols().broadcast(shape)?;
                res.push((x, g.sub(out.exp().mul(row_total)?)?));
            }
            Op::SumAll(x) | Op::SumRows(x) | Op::SumCols(x) => {
                res.push((x, g.broadcast(self.value_of(x).shape())?));
            }
            Op::Broadcast(x) => {
                let [r, c] = self.value_of(x).shape();
                let [gr, gc] = g.value().shape();
                let reduced = match (r == gr, c == gc) {
                    (true, true) => g,
                    (false, true) => g.sum_rows(),
                    (true, false) => g.sum_cols(),
                    (false, false) => g.sum(),
                };
                res.push((x, reduced));
            }
            Op::Unfold { x, ref lens, k } => res.push((x, g.fold(Rc::clone(lens), k)?)),
            Op::Fold { x, ref lens, k } => res.push((x, g.unfold(Rc::clone(lens), k)?)),
            Op::ConcatCols(ref parts) => {
                let mut start = 0;
                for &p in parts {
                    let w = self.value_of(p).cols();
                    if needs(p) {
                        res.push((p, g.slice_cols(start, w)?));
                    }
                    start += w;
                }
            }
            Op::SliceCols { x, start } => {
                let total = self.value_of(x).cols();
                res.push((x, g.pad_cols(start, total)?));
            }
            Op::PadCols { x, start } => {
                let w = self.value_of(x).cols();
                res.push((x, g.slice_cols(start, w)?));
            }
            Op::ConcatRows(ref parts) => {
                let mut start = 0;
                for &p in parts {
                    let h = self.value_of(p).rows();
                    if needs(p) {
                        let idx: Rc<[usize]> = (start..start + h).collect();
                        res.push((p, g.gather_rows(idx)?));
                    }
                    start += h;
                }
            }
            Op::GatherRows { x, ref idx } => {
                let rows = self.value_of(x).rows();
                res.push((x, g.scatter_rows(Rc::clone(idx), rows)?));
            }
            Op::ScatterRows { x, ref idx } => res.push((x, g.gather_rows(Rc::clone(idx))?)),
        }
        Ok(res)
    }
}

fn check_same(op: &'static str, a: &Tensor<impl Real>, b: &Tensor<impl Real>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::shape(
            op,
            format!("{:?} vs {:?}", a.shape(), b.shape()),
        ));
    }
    Ok(())
}

impl<'g, T: Real> Var<'g, T> {
    pub fn graph(&self) -> &'g Graph<T> {
        self.graph
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn value(&self) -> Rc<Tensor<T>> {
        self.graph.value_of(self.id)
    }

    pub fn shape(&self) -> [usize; 2] {
        self.value().shape()
    }

    pub fn requires_grad(&self) -> bool {
        self.graph.requires_grad(self.id)
    }

    /// Same value, cut from the graph.
    pub fn detach(self) -> Self {
        let v = self.graph.value_of(self.id);
        let mut nodes = self.graph.nodes.borrow_mut();
        let id = nodes.len();
        nodes.push(Node {
            value: v,
            op: Op::Leaf,
            requires_grad: false,
        });
        Var {
            graph: self.graph,
            id,
        }
    }

    fn same_graph(&self, other: &Self) -> Result<()> {
        if !std::ptr::eq(self.graph, other.graph) {
            return Err(Error::Invariant(
                "operands recorded on different graphs".into(),
            ));
        }
        Ok(())
    }

    fn unary(self, op: Op<T>, f: impl Fn(T) -> T) -> Self {
        let v = self.value().map(f);
        self.graph.record(v, op, &[self.id])
    }

    fn binary(
        self,
        other: Self,
        name: &'static str,
        op: Op<T>,
        f: impl Fn(T, T) -> T,
    ) -> Result<Self> {
        self.same_graph(&other)?;
        let (a, b) = (self.value(), other.value());
        check_same(name, &a, &b)?;
        Ok(self
            .graph
            .record(a.zip_map(&b, f), op, &[self.id, other.id]))
    }

    pub fn add(self, other: Self) -> Result<Self> {
        self.binary(other, "add", Op::Add(self.id, other.id), |a, b| a + b)
    }

    pub fn sub(self, other: Self) -> Result<Self> {
        self.binary(other, "sub", Op::Sub(self.id, other.id), |a, b| a - b)
    }

    pub fn mul(self, other: Self) -> Result<Self> {
        self.binary(other, "mul", Op::Mul(self.id, other.id), |a, b| a * b)
    }

    /// `scale * self + shift`.
    pub fn affine(self, scale: T, shift: T) -> Self {
        self.unary(Op::Affine(self.id, scale), |v| scale * v + shift)
    }

    pub fn scale(self, s: T) -> Self {
        self.affine(s, T::zero())
    }

    pub fn neg(self) -> Self {
        self.affine(-T::one(), T::zero())
    }

    pub fn matmul(self, other: Self) -> Result<Self> {
        self.matmul_t(false, other, false)
    }

    /// `op(self) * op(other)` with optional transposes.
    pub fn matmul_t(self, ta: bool, other: Self, tb: bool) -> Result<Self> {
        self.same_graph(&other)?;
        let v = self.value().matmul_t(ta, &other.value(), tb)?;
        Ok(self.graph.record(
            v,
            Op::MatMul {
                a: self.id,
                b: other.id,
                ta,
                tb,
            },
            &[self.id, other.id],
        ))
    }

    pub fn sigmoid(self) -> Self {
        self.unary(Op::Sigmoid(self.id), |v| {
            if v >= T::zero() {
                T::one() / (T::one() + (-v).exp())
            } else {
                let e = v.exp();
                e / (T::one() + e)
            }
        })
    }

    pub fn tanh(self) -> Self {
        self.unary(Op::Tanh(self.id), T::tanh)
    }

    pub fn relu(self) -> Self {
        self.unary(Op::Relu(self.id), |v| v.max(T::zero()))
    }

    pub fn exp(self) -> Self {
        self.unary(Op::Exp(self.id), T::exp)
    }

    pub fn ln(self) -> Self {
        self.unary(Op::Log(self.id), T::ln)
    }

    pub fn recip(self) -> Self {
        self.unary(Op::Recip(self.id), T::recip)
    }

    /// Row-wise log-softmax.
    pub fn log_softmax(self) -> Self {
        let x = self.value();
        let mut out = Tensor::zeros(x.rows(), x.cols());
        for r in 0..x.rows() {
            let row = x.row(r);
            let m = row.iter().copied().fold(T::neg_infinity(), T::max);
            let lse = m + row.iter().map(|&v| (v - m).exp()).sum::<T>().ln();
            for (c, &v) in row.iter().enumerate() {
                out.set(r, c, v - lse);
            }
        }
        self.graph.record(out, Op::LogSoftmax(self.id), &[self.id])
    }

    /// Row-wise softmax.
    pub fn softmax(self) -> Self {
        self.log_softmax().exp()
    }

    /// Sum of all entries, `1 x 1`.
    pub fn sum(self) -> Self {
        let s = self.value().data().iter().copied().sum::<T>();
        self.graph
            .record(Tensor::scalar(s), Op::SumAll(self.id), &[self.id])
    }

    pub fn mean(self) -> Self {
        let n = self.value().len();
        self.sum().scale(T::one() / T::of(n as f64))
    }

    /// Column sums, `1 x cols`.
    pub fn sum_rows(self) -> Self {
        let x = self.value();
        let mut out = vec![T::zero(); x.cols()];
        for r in 0..x.rows() {
            for (o, &v) in out.iter_mut().zip(x.row(r)) {
                *o = *o + v;
            }
        }
        self.graph
            .record(Tensor::row_vector(out), Op::SumRows(self.id), &[self.id])
    }

    /// Row sums, `rows x 1`.
    pub fn sum_cols(self) -> Self {
        let x = self.value();
        let out: Vec<T> = (0..x.rows())
            .map(|r| x.row(r).iter().copied().sum())
            .collect();
        let t = Tensor::new(x.rows(), 1, out).unwrap();
        self.graph.record(t, Op::SumCols(self.id), &[self.id])
    }

    /// Expands size-1 axes to `shape`.
    pub fn broadcast(self, shape: [usize; 2]) -> Result<Self> {
        let x = self.value();
        let [r, c] = x.shape();
        if [r, c] == shape {
            return Ok(self);
        }
        if (r != 1 && r != shape[0]) || (c != 1 && c != shape[1]) {
            return Err(Error::shape(
                "broadcast",
                format!("{:?} to {:?}", x.shape(), shape),
            ));
        }
        let mut out = Tensor::zeros(shape[0], shape[1]);
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                out.set(
                    i,
                    j,
                    x.get(if r == 1 { 0 } else { i }, if c == 1 { 0 } else { j }),
                );
            }
        }
        Ok(self.graph.record(out, Op::Broadcast(self.id), &[self.id]))
    }

    /// Adds a `1 x cols` row to every row.
    pub fn add_row(self, row: Self) -> Result<Self> {
        let shape = self.shape();
        self.add(row.broadcast(shape)?)
    }

    /// Sliding windows of width `k` within consecutive row segments of the
    /// given lengths: each output row concatenates `k` consecutive input rows.
    pub fn unfold(self, lens: Rc<[usize]>, k: usize) -> Result<Self> {
        let x = self.value();
        let total: usize = lens.iter().sum();
        if total != x.rows() || k == 0 || lens.iter().any(|&l| l < k) {
            return Err(Error::shape(
                "unfold",
                format!(
                    "segments {:?} with width {k} over {} rows",
                    &*lens,
                    x.rows()
                ),
            ));
        }
        let c = x.cols();
        let out_rows: usize = lens.iter().map(|&l| l - k + 1).sum();
        let mut out = Tensor::zeros(out_rows, k * c);
        let (mut src, mut dst) = (0, 0);
        for &l in lens.iter() {
            for t in 0..l - k + 1 {
                let row_start = dst * k * c;
                for j in 0..k {
                    out.data_mut()[row_start + j * c..row_start + (j + 1) * c]
                        .copy_from_slice(x.row(src + t + j));
                }
                dst += 1;
            }
            src += l;
        }
        Ok(self.graph.record(
            out,
            Op::Unfold {
                x: self.id,
                lens,
                k,
            },
            &[self.id],
        ))
    }

    /// Adjoint of [`unfold`](Self::unfold): scatters window rows back onto
    /// the segments, summing overlaps.
    pub fn fold(self, lens: Rc<[usize]>, k: usize) -> Result<Self> {
        let x = self.value();
        let windows: usize = lens.iter().map(|&l| l.saturating_sub(k - 1)).sum();
        if k == 0 || x.rows() != windows || x.cols() % k != 0 || lens.iter().any(|&l| l < k) {
            return Err(Error::shape(
                "fold",
                format!("{:?} into segments {:?} with width {k}", x.shape(), &*lens),
            ));
        }
        let c = x.cols() / k;
        let total: usize = lens.iter().sum();
        let mut out = Tensor::zeros(total, c);
        let (mut src, mut dst) = (0, 0);
        for &l in lens.iter() {
            for t in 0..l - k + 1 {
                let win = x.row(src);
                for j in 0..k {
                    let base = (dst + t + j) * c;
                    for (o, &v) in out.data_mut()[base..base + c]
                        .iter_mut()
                        .zip(&win[j * c..(j + 1) * c])
                    {
                        *o = *o + v;
                    }
                }
                src += 1;
            }
            dst += l;
        }
        Ok(self.graph.record(
            out,
            Op::Fold {
                x: self.id,
                lens,
                k,
            },
            &[self.id],
        ))
    }

    pub fn concat_cols(parts: &[Self]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::shape("concat_cols", "no operands"))?;
        let rows = first.shape()[0];
        let values: Vec<_> = parts.iter().map(|p| p.value()).collect();
        for (p, v) in parts.iter().zip(&values) {
            first.same_graph(p)?;
            if v.rows() != rows {
                return Err(Error::shape(
                    "concat_cols",
                    format!("row counts {} vs {}", rows, v.rows()),
                ));
            }
        }
        let cols: usize = values.iter().map(|v| v.cols()).sum();
        let mut out = Tensor::zeros(rows, cols);
        for r in 0..rows {
            let mut c0 = 0;
            for v in &values {
                out.data_mut()[r * cols + c0..r * cols + c0 + v.cols()].copy_from_slice(v.row(r));
                c0 += v.cols();
            }
        }
        let ids: Vec<usize> = parts.iter().map(|p| p.id).collect();
        Ok(first.graph.record(out, Op::ConcatCols(ids.clone()), &ids))
    }

    pub fn slice_cols(self, start: usize, width: usize) -> Result<Self> {
        let x = self.value();
        if start + width > x.cols() {
            return Err(Error::shape(
                "slice_cols",
                format!("[{start}, {}) of {} columns", start + width, x.cols()),
            ));
        }
        let mut out = Tensor::zeros(x.rows(), width);
        for r in 0..x.rows() {
            out.data_mut()[r * width..(r + 1) * width]
                .copy_from_slice(&x.row(r)[start..start + width]);
        }
        Ok(self
            .graph
            .record(out, Op::SliceCols { x: self.id, start }, &[self.id]))
    }

    /// Places the columns at `start` inside a zero matrix `total` wide.
    pub fn pad_cols(self, start: usize, total: usize) -> Result<Self> {
        let x = self.value();
        if start + x.cols() > total {
            return Err(Error::shape(
                "pad_cols",
                format!("{} columns at {start} within {total}", x.cols()),
            ));
        }
        let mut out = Tensor::zeros(x.rows(), total);
        for r in 0..x.rows() {
            out.data_mut()[r * total + start..r * total + start + x.cols()]
                .copy_from_slice(x.row(r));
        }
        Ok(self
            .graph
            .record(out, Op::PadCols { x: self.id, start }, &[self.id]))
    }

    pub fn concat_rows(parts: &[Self]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::shape("concat_rows", "no operands"))?;
        let cols = first.shape()[1];
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            first.same_graph(p)?;
            let v = p.value();
            if v.cols() != cols {
                return Err(Error::shape(
                    "concat_rows",
                    format!("column counts {} vs {}", cols, v.cols()),
                ));
            }
            data.extend_from_slice(v.data());
            rows += v.rows();
        }
        let ids: Vec<usize> = parts.iter().map(|p| p.id).collect();
        Ok(first.graph.record(
            Tensor::new(rows, cols, data)?,
            Op::ConcatRows(ids.clone()),
            &ids,
        ))
    }

    /// Rows picked by index; indices may repeat.
    pub fn gather_rows(self, idx: Rc<[usize]>) -> Result<Self> {
        let x = self.value();
        if let Some(&bad) = idx.iter().find(|&&i| i >= x.rows()) {
            return Err(Error::shape(
                "gather_rows",
                format!("row {bad} of {}", x.rows()),
            ));
        }
        let mut data = Vec::with_capacity(idx.len() * x.cols());
        for &i in idx.iter() {
            data.extend_from_slice(x.row(i));
        }
        let out = Tensor::new(idx.len(), x.cols(), data)?;
        Ok(self
            .graph
            .record(out, Op::GatherRows { x: self.id, idx }, &[self.id]))
    }

    /// Adjoint of [`gather_rows`](Self::gather_rows): adds row `r` of `self`
    /// into row `idx[r]` of a zero matrix with `rows` rows.
    pub fn scatter_rows(self, idx: Rc<[usize]>, rows: usize) -> Result<Self> {
        let x = self.value();
        if idx.len() != x.rows() || idx.iter().any(|&i| i >= rows) {
            return Err(Error::shape(
                "scatter_rows",
                format!("{} rows by {} indices into {rows}", x.rows(), idx.len()),
            ));
        }
        let c = x.cols();
        let mut out = Tensor::zeros(rows, c);
        for (r, &i) in idx.iter().enumerate() {
            for (o, &v) in out.data_mut()[i * c..(i + 1) * c].iter_mut().zip(x.row(r)) {
                *o = *o + v;
            }
        }
        Ok(self
            .graph
            .record(out, Op::ScatterRows { x: self.id, idx }, &[self.id]))
    }

    /// Valid-padding 1-D convolution over the rows (time) of `self`:
    /// `out[t] = sum_j x[t + j] * W_j + b` with `kernel` stacked as
    /// `(k * c_in) x c_out` and `bias` `1 x c_out`.
    pub fn conv1d(self, kernel: Self, bias: Self, k: usize) -> Result<Self> {
        let len = self.shape()[0];
        let lens: Rc<[usize]> = Rc::from(vec![len]);
        self.conv1d_segments(lens, kernel, bias, k)
    }

    /// [`conv1d`](Self::conv1d) applied independently to consecutive row
    /// segments; outputs are stacked in segment order.
    pub fn conv1d_segments(
        self,
        lens: Rc<[usize]>,
        kernel: Self,
        bias: Self,
        k: usize,
    ) -> Result<Self> {
        self.unfold(lens, k)?.matmul(kernel)?.add_row(bias)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(rows: usize, cols: usize, v: &[f64]) -> Tensor<f64> {
        Tensor::from_f64(rows, cols, v).unwrap()
    }

    #[test]
    fn square_gradient() {
        let g = Graph::new();
        let x = g.param(Tensor::scalar(3.0));
        let loss = x.mul(x).unwrap();
        let gx = g.grad(loss, &[x], false).unwrap();
        assert_eq!(gx[0].value().item(), 6.0);
    }

    #[test]
    fn unused_parameter_gets_exact_zero() {
        let g = Graph::new();
        let x = g.param(Tensor::scalar(3.0));
        let y = g.param(t(2, 2, &[1., 2., 3., 4.]));
        let loss = x.mul(x).unwrap();
        let grads = g.grad(loss, &[x, y], false).unwrap();
        assert_eq!(grads[1].value().data(), &[0.0; 4]);
    }

    #[test]
    fn non_scalar_loss_is_rejected() {
        let g = Graph::new();
        let x = g.param(t(1, 2, &[1., 2.]));
        assert!(matches!(g.grad(x, &[x], false), Err(Error::Shape { .. })));
    }

    #[test]
    fn forward_examples() {
        let g = Graph::<f64>::new();
        let a = g.constant(t(3, 2, &[1., 2., 3., 4., 5., 6.]));
        let i3 = g.constant(Tensor::identity(3));
        assert_eq!(*i3.matmul(a).unwrap().value(), *a.value());

        let logits = g.constant(Tensor::filled(1, 18, 0.7));
        let p = logits.softmax();
        for &v in p.value().data() {
            assert!((v - 1.0 / 18.0).abs() < 1e-15);
        }

        let x = g.constant(t(5, 1, &[1., 2., 3., 4., 5.]));
        let k = g.constant(t(3, 1, &[0., 1., 0.]));
        let b = g.constant(Tensor::zeros(1, 1));
        let y = x.conv1d(k, b, 3).unwrap();
        assert_eq!(y.value().data(), &[2., 3., 4.]);
    }

    #[test]
    fn shape_errors_name_the_op() {
        let g = Graph::<f64>::new();
        let a = g.constant(Tensor::zeros(2, 3));
        let b = g.constant(Tensor::zeros(2, 2));
        match a.matmul(b) {
            Err(Error::Shape { op, detail }) => {
                assert_eq!(op, "matmul");
                assert!(detail.contains("2x3"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(a.add(b), Err(Error::Shape { op: "add", .. })));
    }

    #[test]
    fn softmax_nll_gradient_is_probabilities_minus_onehot() {
        let g = Graph::new();
        let z = g.param(t(1, 4, &[0.3, -1.2, 2.0, 0.5]));
        let onehot = g.constant(t(1, 4, &[0., 0., 1., 0.]));
        let loss = z.log_softmax().mul(onehot).unwrap().sum().neg();
        let gz = g.grad(loss, &[z], false).unwrap()[0].value();
        let p = z.softmax().value();
        for j in 0..4 {
            let expect = p.data()[j] - onehot.value().data()[j];
            assert!((gz.data()[j] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn second_order_through_gradient() {
        // f(x) = x^3, f'(x) = 3x^2, f''(x) = 6x
        let g = Graph::new();
        let x = g.param(Tensor::scalar(2.0));
        let f = x.mul(x).unwrap().mul(x).unwrap();
        let d1 = g.grad(f, &[x], true).unwrap()[0];
        assert_eq!(d1.value().item(), 12.0);
        let d2 = g.grad(d1, &[x], false).unwrap()[0];
        assert_eq!(d2.value().item(), 12.0);
    }

    #[test]
    fn fold_is_adjoint_of_unfold() {
        let g = Graph::<f64>::new();
        let lens: Rc<[usize]> = Rc::from(vec![4, 3]);
        let x = g.constant(
            Tensor::from_f64(7, 2, &(0..14).map(|v| v as f64).collect::<Vec<_>>()).unwrap(),
        );
        let u = x.unfold(Rc::clone(&lens), 2).unwrap();
        assert_eq!(u.shape(), [5, 4]);
        let y = g.constant(
            Tensor::from_f64(5, 4, &(0..20).map(|v| (v as f64).sin()).collect::<Vec<_>>()).unwrap(),
        );
        // <unfold(x), y> == <x, fold(y)>
        let lhs = u.mul(y).unwrap().sum().value().item();
        let rhs = x
            .mul(y.fold(lens, 2).unwrap())
            .unwrap()
            .sum()
            .value()
            .item();
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
