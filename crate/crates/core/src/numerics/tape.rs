//! Define-by-run reverse-mode differentiation.
//!
//! A [`Tape`] is built fresh for every forward pass. Nodes are appended in
//! evaluation order, so walking the node list backwards is a reverse
//! topological traversal and each node is visited exactly once.
//!
//! Subgradient conventions: `relu'(0) = 0`, `sqrt'(0) = 0`, and max
//! reductions route the whole gradient to the first (lowest index) maximum.

use super::tensor::{Axis, Tensor};
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reduction {
    Sum,
    Mean,
    Max,
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Div(Var, Var),
    Relu(Var),
    Log2(Var),
    Square(Var),
    Sqrt(Var),
    Scale(Var, f64),
    AddScalar(Var),
    Transpose(Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    Reduce {
        input: Var,
        kind: Reduction,
        axis: Axis,
        argmax: Vec<usize>,
    },
    SumAll(Var),
    GatherRows {
        input: Var,
        index: Vec<usize>,
    },
    SegmentReduce {
        input: Var,
        kind: Reduction,
        segment: Vec<usize>,
        counts: Vec<usize>,
        argmax: Vec<Option<usize>>,
    },
}

struct Node {
    value: Tensor,
    op: Op,
    tracked: bool,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of a scalar with respect to every tracked node.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    shapes: Vec<(usize, usize)>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads[v.0].as_ref()
    }

    /// Gradient for `v`, zeros when the output does not depend on it.
    pub fn wrt(&self, v: Var) -> Tensor {
        match &self.grads[v.0] {
            Some(g) => g.clone(),
            None => {
                let (r, c) = self.shapes[v.0];
                Tensor::zeros(r, c)
            }
        }
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// A leaf whose gradient is reported by [`Tape::backward`].
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push_leaf(value, true)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push_leaf(value, false)
    }

    fn push_leaf(&mut self, value: Tensor, tracked: bool) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            tracked,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    fn tracked(&self, v: Var) -> bool {
        self.nodes[v.0].tracked
    }

    fn push(&mut self, name: &'static str, value: Tensor, op: Op, tracked: bool) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::NonFinite(name));
        }
        self.nodes.push(Node { value, op, tracked });
        Ok(Var(self.nodes.len() - 1))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        let tracked = self.tracked(a) || self.tracked(b);
        self.push("matmul", value, Op::MatMul(a, b), tracked)
    }

    fn binary(
        &mut self,
        name: &'static str,
        a: Var,
        b: Var,
        op: Op,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Var> {
        let value = self.value(a).zip_broadcast(self.value(b), name, f)?;
        let tracked = self.tracked(a) || self.tracked(b);
        self.push(name, value, op, tracked)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("add", a, b, Op::Add(a, b), |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("sub", a, b, Op::Sub(a, b), |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("mul", a, b, Op::Mul(a, b), |x, y| x * y)
    }

    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.value(b).data().contains(&0.0) {
            return Err(Error::DivisionByZero("div"));
        }
        self.binary("div", a, b, Op::Div(a, b), |x, y| x / y)
    }

    fn unary(&mut self, name: &'static str, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Result<Var> {
        let value = self.value(a).map(f);
        let tracked = self.tracked(a);
        self.push(name, value, op, tracked)
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        self.unary("relu", a, Op::Relu(a), |x| x.max(0.0))
    }

    pub fn log2(&mut self, a: Var) -> Result<Var> {
        if let Some(&bad) = self.value(a).data().iter().find(|&&x| x <= 0.0) {
            return Err(Error::Domain {
                op: "log2",
                value: bad,
            });
        }
        self.unary("log2", a, Op::Log2(a), f64::log2)
    }

    pub fn square(&mut self, a: Var) -> Result<Var> {
        self.unary("square", a, Op::Square(a), |x| x * x)
    }

    pub fn sqrt(&mut self, a: Var) -> Result<Var> {
        if let Some(&bad) = self.value(a).data().iter().find(|&&x| x < 0.0) {
            return Err(Error::Domain {
                op: "sqrt",
                value: bad,
            });
        }
        self.unary("sqrt", a, Op::Sqrt(a), f64::sqrt)
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Result<Var> {
        self.unary("scale", a, Op::Scale(a, factor), |x| x * factor)
    }

    pub fn add_scalar(&mut self, a: Var, offset: f64) -> Result<Var> {
        self.unary("add_scalar", a, Op::AddScalar(a), |x| x + offset)
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let value = self.value(a).transpose();
        let tracked = self.tracked(a);
        self.push("transpose", value, Op::Transpose(a), tracked)
    }

    /// Places the inputs side by side; all must have the same row count.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = parts
            .first()
            .map(|&p| self.shape(p).0)
            .ok_or(Error::EmptyReduction("concat_cols"))?;
        let mut cols = 0;
        for &p in parts {
            let s = self.shape(p);
            if s.0 != rows {
                return Err(Error::Shape {
                    op: "concat_cols",
                    lhs: (rows, cols),
                    rhs: s,
                });
            }
            cols += s.1;
        }
        let mut out = Tensor::zeros(rows, cols);
        for i in 0..rows {
            let mut offset = 0;
            for &p in parts {
                let src = self.value(p).row(i);
                out.row_mut(i)[offset..offset + src.len()].copy_from_slice(src);
                offset += src.len();
            }
        }
        let tracked = parts.iter().any(|&p| self.tracked(p));
        self.push("concat_cols", out, Op::ConcatCols(parts.to_vec()), tracked)
    }

    /// Stacks the inputs vertically; all must have the same column count.
    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let cols = parts
            .first()
            .map(|&p| self.shape(p).1)
            .ok_or(Error::EmptyReduction("concat_rows"))?;
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let s = self.shape(p);
            if s.1 != cols {
                return Err(Error::Shape {
                    op: "concat_rows",
                    lhs: (rows, cols),
                    rhs: s,
                });
            }
            rows += s.0;
            data.extend_from_slice(self.value(p).data());
        }
        let out = Tensor::from_vec(rows, cols, data)?;
        let tracked = parts.iter().any(|&p| self.tracked(p));
        self.push("concat_rows", out, Op::ConcatRows(parts.to_vec()), tracked)
    }

    pub fn reduce(&mut self, a: Var, kind: Reduction, axis: Axis) -> Result<Var> {
        let x = self.value(a);
        let (r, c) = x.shape();
        let (outer, inner) = match axis {
            Axis::Rows => (c, r),
            Axis::Cols => (r, c),
        };
        if inner == 0 {
            return Err(Error::EmptyReduction("reduce"));
        }
        let at = |o: usize, i: usize| match axis {
            Axis::Rows => x.get(i, o),
            Axis::Cols => x.get(o, i),
        };
        let mut values = Vec::with_capacity(outer);
        let mut argmax = Vec::new();
        for o in 0..outer {
            match kind {
                Reduction::Sum => values.push((0..inner).map(|i| at(o, i)).sum()),
                Reduction::Mean => {
                    values.push((0..inner).map(|i| at(o, i)).sum::<f64>() / inner as f64)
                }
                Reduction::Max => {
                    let mut best = 0;
                    for i in 1..inner {
                        if at(o, i) > at(o, best) {
                            best = i;
                        }
                    }
                    argmax.push(best);
                    values.push(at(o, best));
                }
            }
        }
        let out = match axis {
            Axis::Rows => Tensor::row_vector(values),
            Axis::Cols => Tensor::column_vector(values),
        };
        let tracked = self.tracked(a);
        self.push(
            "reduce",
            out,
            Op::Reduce {
                input: a,
                kind,
                axis,
                argmax,
            },
            tracked,
        )
    }

    pub fn sum_all(&mut self, a: Var) -> Result<Var> {
        let out = Tensor::scalar(self.value(a).sum());
        let tracked = self.tracked(a);
        self.push("sum_all", out, Op::SumAll(a), tracked)
    }

    /// Row `i` of the output is row `index[i]` of the input.
    pub fn gather_rows(&mut self, a: Var, index: &[usize]) -> Result<Var> {
        let x = self.value(a);
        let (r, c) = x.shape();
        let mut data = Vec::with_capacity(index.len() * c);
        for &i in index {
            if i >= r {
                return Err(Error::Shape {
                    op: "gather_rows",
                    lhs: (r, c),
                    rhs: (i, c),
                });
            }
            data.extend_from_slice(x.row(i));
        }
        let out = Tensor::from_vec(index.len(), c, data)?;
        let tracked = self.tracked(a);
        self.push(
            "gather_rows",
            out,
            Op::GatherRows {
                input: a,
                index: index.to_vec(),
            },
            tracked,
        )
    }

    /// Reduces input rows into `segments` output rows; row `i` of the input
    /// belongs to segment `segment[i]`. Empty segments yield zero rows.
    pub fn segment_reduce(
        &mut self,
        a: Var,
        kind: Reduction,
        segment: &[usize],
        segments: usize,
    ) -> Result<Var> {
        let x = self.value(a);
        let (r, c) = x.shape();
        if segment.len() != r {
            return Err(Error::Shape {
                op: "segment_reduce",
                lhs: (r, c),
                rhs: (segment.len(), 1),
            });
        }
        let mut counts = vec![0usize; segments];
        let mut out = Tensor::zeros(segments, c);
        let mut argmax: Vec<Option<usize>> = vec![None; segments * c];
        for (i, &s) in segment.iter().enumerate() {
            if s >= segments {
                return Err(Error::Shape {
                    op: "segment_reduce",
                    lhs: (segments, c),
                    rhs: (s, c),
                });
            }
            counts[s] += 1;
            let row = x.row(i);
            for j in 0..c {
                match kind {
                    Reduction::Sum | Reduction::Mean => {
                        let v = out.get(s, j) + row[j];
                        out.set(s, j, v);
                    }
                    Reduction::Max => {
                        let slot = &mut argmax[s * c + j];
                        if slot.is_none_or(|b| row[j] > x.get(b, j)) {
                            *slot = Some(i);
                            out.set(s, j, row[j]);
                        }
                    }
                }
            }
        }
        if kind == Reduction::Mean {
            for (s, &n) in counts.iter().enumerate() {
                if n > 0 {
                    for v in out.row_mut(s) {
                        *v /= n as f64;
                    }
                }
            }
        }
        let tracked = self.tracked(a);
        self.push(
            "segment_reduce",
            out,
            Op::SegmentReduce {
                input: a,
                kind,
                segment: segment.to_vec(),
                counts,
                argmax,
            },
            tracked,
        )
    }

    /// Reverse sweep from a `1 × 1` output.
    pub fn backward(&self, output: Var) -> Result<Gradients> {
        let out_shape = self.shape(output);
        if out_shape != (1, 1) {
            return Err(Error::NotScalar(out_shape));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[output.0] = Some(Tensor::scalar(1.0));

        for idx in (0..=output.0).rev() {
            let node = &self.nodes[idx];
            if !node.tracked {
                continue;
            }
            let Some(g) = grads[idx].take() else {
                continue;
            };
            self.propagate(node, &g, &mut grads);
            grads[idx] = Some(g);
        }
        Ok(Gradients {
            grads,
            shapes: self.nodes.iter().map(|n| n.value.shape()).collect(),
        })
    }

    fn propagate(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let mut send = |v: Var, contrib: Tensor| {
            if !self.tracked(v) {
                return;
            }
            match &mut grads[v.0] {
                Some(acc) => acc.add_assign(&contrib),
                slot @ None => *slot = Some(contrib),
            }
        };
        let val = |v: Var| &self.nodes[v.0].value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if self.tracked(*a) {
                    send(*a, g.matmul(&val(*b).transpose()).expect("matmul grad"));
                }
                if self.tracked(*b) {
                    send(*b, val(*a).transpose().matmul(g).expect("matmul grad"));
                }
            }
            Op::Add(a, b) => {
                send(*a, g.reduce_to(val(*a).shape()));
                send(*b, g.reduce_to(val(*b).shape()));
            }
            Op::Sub(a, b) => {
                send(*a, g.reduce_to(val(*a).shape()));
                send(*b, g.map(|x| -x).reduce_to(val(*b).shape()));
            }
            Op::Mul(a, b) => {
                let (x, y) = (val(*a), val(*b));
                if self.tracked(*a) {
                    send(*a, mul_broadcast(g, y).reduce_to(x.shape()));
                }
                if self.tracked(*b) {
                    send(*b, mul_broadcast(g, x).reduce_to(y.shape()));
                }
            }
            Op::Div(a, b) => {
                let (x, y) = (val(*a), val(*b));
                let shape = g.shape();
                if self.tracked(*a) {
                    let ga = Tensor::from_fn(shape.0, shape.1, |i, j| {
                        g.get(i, j) / y.broadcast_get(i, j)
                    });
                    send(*a, ga.reduce_to(x.shape()));
                }
                if self.tracked(*b) {
                    let gb = Tensor::from_fn(shape.0, shape.1, |i, j| {
                        let d = y.broadcast_get(i, j);
                        -g.get(i, j) * x.broadcast_get(i, j) / (d * d)
                    });
                    send(*b, gb.reduce_to(y.shape()));
                }
            }
            Op::Relu(a) => {
                let x = val(*a);
                send(*a, zip(g, x, |g, x| if x > 0.0 { g } else { 0.0 }));
            }
            Op::Log2(a) => {
                let x = val(*a);
                send(*a, zip(g, x, |g, x| g / (x * std::f64::consts::LN_2)));
            }
            Op::Square(a) => {
                let x = val(*a);
                send(*a, zip(g, x, |g, x| 2.0 * x * g));
            }
            Op::Sqrt(a) => {
                let y = &node.value;
                send(
                    *a,
                    zip(g, y, |g, y| if y > 0.0 { g / (2.0 * y) } else { 0.0 }),
                );
            }
            Op::Scale(a, f) => send(*a, g.map(|x| x * f)),
            Op::AddScalar(a) => send(*a, g.clone()),
            Op::Transpose(a) => send(*a, g.transpose()),
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let (r, c) = val(p).shape();
                    let part = Tensor::from_fn(r, c, |i, j| g.get(i, offset + j));
                    offset += c;
                    send(p, part);
                }
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let (r, c) = val(p).shape();
                    let part = Tensor::from_fn(r, c, |i, j| g.get(offset + i, j));
                    offset += r;
                    send(p, part);
                }
            }
            Op::Reduce {
                input,
                kind,
                axis,
                argmax,
            } => {
                let (r, c) = val(*input).shape();
                let n = match axis {
                    Axis::Rows => r,
                    Axis::Cols => c,
                } as f64;
                let gi = Tensor::from_fn(r, c, |i, j| {
                    let (o, k) = match axis {
                        Axis::Rows => (j, i),
                        Axis::Cols => (i, j),
                    };
                    let go = g.data()[o];
                    match kind {
                        Reduction::Sum => go,
                        Reduction::Mean => go / n,
                        Reduction::Max => {
                            if argmax[o] == k {
                                go
                            } else {
                                0.0
                            }
                        }
                    }
                });
                send(*input, gi);
            }
            Op::SumAll(a) => {
                let (r, c) = val(*a).shape();
                send(*a, Tensor::filled(r, c, g.data()[0]));
            }
            Op::GatherRows { input, index } => {
                let (r, c) = val(*input).shape();
                let mut gi = Tensor::zeros(r, c);
                for (row, &src) in index.iter().enumerate() {
                    for j in 0..c {
                        let v = gi.get(src, j) + g.get(row, j);
                        gi.set(src, j, v);
                    }
                }
                send(*input, gi);
            }
            Op::SegmentReduce {
                input,
                kind,
                segment,
                counts,
                argmax,
            } => {
                let (r, c) = val(*input).shape();
                let mut gi = Tensor::zeros(r, c);
                match kind {
                    Reduction::Sum | Reduction::Mean => {
                        for (i, &s) in segment.iter().enumerate() {
                            let scale = if *kind == Reduction::Mean {
                                1.0 / counts[s] as f64
                            } else {
                                1.0
                            };
                            for j in 0..c {
                                gi.set(i, j, g.get(s, j) * scale);
                            }
                        }
                    }
                    Reduction::Max => {
                        for (slot, best) in argmax.iter().enumerate() {
                            if let Some(i) = *best {
                                let j = slot % c;
                                gi.set(i, j, gi.get(i, j) + g.get(slot / c, j));
                            }
                        }
                    }
                }
                send(*input, gi);
            }
        }
    }
}

fn mul_broadcast(g: &Tensor, other: &Tensor) -> Tensor {
    let (r, c) = g.shape();
    Tensor::from_fn(r, c, |i, j| g.get(i, j) * other.broadcast_get(i, j))
}

fn zip(g: &Tensor, x: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let data = g
        .data()
        .iter()
        .zip(x.data())
        .map(|(&a, &b)| f(a, b))
        .collect();
    Tensor::from_vec(g.rows(), g.cols(), data).expect("same shape")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec_row(t: &Tape, v: Var) -> Vec<f64> {
        t.value(v).data().to_vec()
    }

    #[test]
    fn relu_definition() {
        let mut t = Tape::new();
        let x = t.constant(Tensor::row_vector(vec![-1.0, 0.0, 2.0]));
        let y = t.relu(x).unwrap();
        assert_eq!(vec_row(&t, y), vec![0.0, 0.0, 2.0]);
    }

    #[test]
    fn log2_definition_and_domain() {
        let mut t = Tape::new();
        let x = t.constant(Tensor::row_vector(vec![8.0]));
        let y = t.log2(x).unwrap();
        assert_eq!(vec_row(&t, y), vec![3.0]);
        let bad = t.constant(Tensor::row_vector(vec![1.0, 0.0]));
        assert!(matches!(t.log2(bad), Err(Error::Domain { op: "log2", .. })));
    }

    #[test]
    fn division_by_zero_rejected() {
        let mut t = Tape::new();
        let a = t.constant(Tensor::row_vector(vec![1.0, 2.0]));
        let b = t.constant(Tensor::row_vector(vec![1.0, 0.0]));
        assert!(matches!(t.div(a, b), Err(Error::DivisionByZero(_))));
    }

    #[test]
    fn square_backward_at_three() {
        let mut t = Tape::new();
        let x = t.param(Tensor::scalar(3.0));
        let y = t.square(x).unwrap();
        let g = t.backward(y).unwrap();
        assert_eq!(g.wrt(x).item(), Some(6.0));
    }

    #[test]
    fn mean_over_rows() {
        let mut t = Tape::new();
        let x = t.constant(Tensor::from_rows(&[vec![1.0, 3.0], vec![5.0, 7.0]]).unwrap());
        let m = t.reduce(x, Reduction::Mean, Axis::Rows).unwrap();
        assert_eq!(vec_row(&t, m), vec![3.0, 5.0]);
    }

    #[test]
    fn concat_preserves_order() {
        let mut t = Tape::new();
        let a = t.constant(Tensor::row_vector(vec![1.0, 2.0]));
        let b = t.constant(Tensor::row_vector(vec![3.0, 4.0, 5.0]));
        let c = t.concat_cols(&[a, b]).unwrap();
        assert_eq!(vec_row(&t, c), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn max_backward_goes_to_argmax_lowest_tie() {
        let mut t = Tape::new();
        let x = t.param(Tensor::row_vector(vec![1.0, 4.0, 4.0, 2.0]));
        let m = t.reduce(x, Reduction::Max, Axis::Cols).unwrap();
        let s = t.sum_all(m).unwrap();
        let g = t.backward(s).unwrap();
        assert_eq!(g.wrt(x).data(), &[0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn empty_reduction_rejected() {
        let mut t = Tape::new();
        let x = t.constant(Tensor::zeros(0, 3));
        assert!(matches!(
            t.reduce(x, Reduction::Sum, Axis::Rows),
            Err(Error::EmptyReduction(_))
        ));
    }

    #[test]
    fn backward_requires_scalar() {
        let mut t = Tape::new();
        let x = t.param(Tensor::row_vector(vec![1.0, 2.0]));
        assert!(matches!(t.backward(x), Err(Error::NotScalar((1, 2)))));
    }

    #[test]
    fn fan_out_gradients_accumulate() {
        // f(x) = x * x + x, built from separate consumers of x.
        let mut t = Tape::new();
        let x = t.param(Tensor::scalar(3.0));
        let sq = t.mul(x, x).unwrap();
        let f = t.add(sq, x).unwrap();
        let g = t.backward(f).unwrap();
        assert_eq!(g.wrt(x).item(), Some(7.0));
    }

    #[test]
    fn sqrt_at_zero_has_zero_gradient() {
        let mut t = Tape::new();
        let x = t.param(Tensor::row_vector(vec![0.0, 4.0]));
        let y = t.sqrt(x).unwrap();
        let s = t.sum_all(y).unwrap();
        let g = t.backward(s).unwrap();
        assert_eq!(g.wrt(x).data(), &[0.0, 0.25]);
    }

    #[test]
    fn empty_segment_is_zero() {
        let mut t = Tape::new();
        let x = t.param(Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap());
        let m = t.segment_reduce(x, Reduction::Mean, &[0, 0], 2).unwrap();
        assert_eq!(t.value(m).to_rows(), vec![vec![2.0, 3.0], vec![0.0, 0.0]]);
    }

    #[test]
    fn constants_receive_no_gradient() {
        let mut t = Tape::new();
        let c = t.constant(Tensor::scalar(2.0));
        let x = t.param(Tensor::scalar(5.0));
        let y = t.mul(c, x).unwrap();
        let g = t.backward(y).unwrap();
        assert!(g.get(c).is_none());
        assert_eq!(g.wrt(x).item(), Some(2.0));
    }
}
