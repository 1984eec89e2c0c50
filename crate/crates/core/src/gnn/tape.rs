//! Reverse-mode differentiation over dense matrices.
//!
//! Every operation appends a node whose inputs have smaller indices, so the
//! node order is already topological and the backward pass is a single sweep
//! from the last node to the first. Attention ops are recorded as fused nodes
//! with their per-edge intermediates cached from the forward pass.

use std::sync::Arc;

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};
use crate::graph::CsrMatrix;
use crate::Matrix;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// A constant sparse operator together with its transpose for the backward
/// product.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    pub forward: Arc<CsrMatrix>,
    transpose: Arc<CsrMatrix>,
}

impl SparseOperator {
    pub fn new(m: CsrMatrix) -> Self {
        let t = m.transpose();
        Self {
            forward: Arc::new(m),
            transpose: Arc::new(t),
        }
    }

    /// For a matrix known to be symmetric; the transpose is shared.
    pub fn symmetric(m: CsrMatrix) -> Self {
        let m = Arc::new(m);
        Self {
            forward: Arc::clone(&m),
            transpose: m,
        }
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Dropout(Var, Matrix),
    Spmm(SparseOperator, Var),
    Agnn {
        h: Var,
        beta: Var,
        pattern: Arc<CsrMatrix>,
        attn: Vec<f64>,
        cos: Vec<f64>,
        unit: Matrix,
        norms: Vec<f64>,
    },
    Gat {
        z: Var,
        a_l: Var,
        a_r: Var,
        pattern: Arc<CsrMatrix>,
        slope: f64,
        attn: Vec<f64>,
        pre: Vec<f64>,
    },
    Mean(Vec<Var>),
    LogSoftmax(Var),
    Nll {
        input: Var,
        targets: Vec<(usize, usize)>,
    },
    WeightedSum(Var, Matrix),
}

#[derive(Debug)]
struct Node {
    value: Matrix,
    op: Op,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of a scalar with respect to every recorded value.
#[derive(Debug)]
pub struct Gradients(Vec<Option<Matrix>>);

impl Gradients {
    /// `None` when the value does not influence the output.
    pub fn get(&self, v: Var) -> Option<&Matrix> {
        self.0[v.0].as_ref()
    }

    /// Gradient with zeros filled in for values that do not influence the
    /// output.
    pub fn dense(&self, v: Var, shape: (usize, usize)) -> Matrix {
        self.get(v).cloned().unwrap_or_else(|| Array2::zeros(shape))
    }
}

fn shape_err(what: &str, a: &Matrix, b: &Matrix) -> Error {
    Error::Shape(format!("{what}: {:?} vs {:?}", a.dim(), b.dim()))
}

/// Row-wise softmax over the entries of each CSR row, written into `out`.
fn edge_softmax(pattern: &CsrMatrix, scores: &[f64], out: &mut [f64]) {
    for i in 0..pattern.n_rows {
        let r = pattern.offsets[i]..pattern.offsets[i + 1];
        let m = scores[r.clone()].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for k in r.clone() {
            out[k] = (scores[k] - m).exp();
            total += out[k];
        }
        for k in r {
            out[k] /= total;
        }
    }
}

/// Softmax backward per CSR row: `ds = p * (dp - sum(p * dp))`.
fn edge_softmax_backward(pattern: &CsrMatrix, p: &[f64], dp: &[f64]) -> Vec<f64> {
    let mut ds = vec![0.0; p.len()];
    for i in 0..pattern.n_rows {
        let r = pattern.offsets[i]..pattern.offsets[i + 1];
        let inner: f64 = r.clone().map(|k| p[k] * dp[k]).sum();
        for k in r {
            ds[k] = p[k] * (dp[k] - inner);
        }
    }
    ds
}

/// `out_i = sum_k w_k x_{col_k}` over the CSR row pattern with per-edge
/// weights `w`.
fn edge_aggregate(pattern: &CsrMatrix, w: &[f64], x: &Matrix) -> Matrix {
    let mut out = Array2::zeros((pattern.n_rows, x.ncols()));
    for i in 0..pattern.n_rows {
        let mut row = out.row_mut(i);
        for k in pattern.offsets[i]..pattern.offsets[i + 1] {
            row.scaled_add(w[k], &x.row(pattern.cols[k]));
        }
    }
    out
}

fn check_pattern(pattern: &CsrMatrix, x: &Matrix) -> Result<()> {
    if pattern.n_rows != x.nrows() || pattern.n_cols != x.nrows() {
        return Err(Error::Shape(format!(
            "attention pattern {}x{} over {} rows",
            pattern.n_rows,
            pattern.n_cols,
            x.nrows()
        )));
    }
    if (0..pattern.n_rows).any(|i| pattern.row(i).0.binary_search(&i).is_err()) {
        return Err(Error::InvalidInput(
            "attention pattern needs a self-loop on every row".into(),
        ));
    }
    Ok(())
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

    fn push(&mut self, value: Matrix, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    /// A parameter or constant input.
    pub fn leaf(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.ncols() != y.nrows() {
            return Err(shape_err("matmul", x, y));
        }
        let v = x.dot(y);
        Ok(self.push(v, Op::MatMul(a, b)))
    }

    /// Adds a `1 x c` row to every row of an `n x c` matrix.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (m, b) = (self.value(x), self.value(bias));
        if b.nrows() != 1 || b.ncols() != m.ncols() {
            return Err(shape_err("add_bias", m, b));
        }
        let v = m + b;
        Ok(self.push(v, Op::AddBias(x, bias)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.dim() != y.dim() {
            return Err(shape_err("add", x, y));
        }
        let v = x + y;
        Ok(self.push(v, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.dim() != y.dim() {
            return Err(shape_err("sub", x, y));
        }
        let v = x - y;
        Ok(self.push(v, Op::Sub(a, b)))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let v = self.value(a) * s;
        self.push(v, Op::Scale(a, s))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(|x| x.max(0.0));
        self.push(v, Op::Relu(a))
    }

    /// Multiplies by a fixed mask whose kept entries already carry the
    /// inverted-dropout scale.
    pub fn dropout(&mut self, a: Var, mask: Matrix) -> Result<Var> {
        let x = self.value(a);
        if x.dim() != mask.dim() {
            return Err(shape_err("dropout", x, &mask));
        }
        let v = x * &mask;
        Ok(self.push(v, Op::Dropout(a, mask)))
    }

    pub fn spmm(&mut self, op: &SparseOperator, x: Var) -> Result<Var> {
        let v = op.forward.mul_dense(self.value(x))?;
        Ok(self.push(v, Op::Spmm(op.clone(), x)))
    }

    /// Attention propagation `P H` with `P_ij = softmax_j(beta cos(H_i, H_j))`
    /// over the row pattern, which must hold every self-loop. Rows of zero
    /// norm have cosine 0 with everything.
    pub fn agnn(&mut self, h: Var, beta: Var, pattern: &Arc<CsrMatrix>) -> Result<Var> {
        let x = self.value(h);
        check_pattern(pattern, x)?;
        let b = self.value(beta);
        if b.dim() != (1, 1) {
            return Err(Error::Shape(format!("beta must be 1x1, got {:?}", b.dim())));
        }
        let b = b[[0, 0]];
        let norms: Vec<f64> = x.outer_iter().map(|r| r.dot(&r).sqrt()).collect();
        let mut unit = x.clone();
        for (mut row, &r) in unit.outer_iter_mut().zip(&norms) {
            if r > 0.0 {
                row /= r;
            } else {
                row.fill(0.0);
            }
        }
        let mut cos = vec![0.0; pattern.nnz()];
        for i in 0..pattern.n_rows {
            for k in pattern.offsets[i]..pattern.offsets[i + 1] {
                cos[k] = unit.row(i).dot(&unit.row(pattern.cols[k]));
            }
        }
        let scores: Vec<f64> = cos.iter().map(|c| b * c).collect();
        let mut attn = vec![0.0; scores.len()];
        edge_softmax(pattern, &scores, &mut attn);
        let v = edge_aggregate(pattern, &attn, x);
        Ok(self.push(
            v,
            Op::Agnn {
                h,
                beta,
                pattern: Arc::clone(pattern),
                attn,
                cos,
                unit,
                norms,
            },
        ))
    }

    /// One attention head over already-projected features `z`:
    /// `e_ij = LeakyReLU(z_i a_l + z_j a_r)`, `alpha = softmax_j(e)`,
    /// output `alpha z`.
    pub fn gat(&mut self, z: Var, a_l: Var, a_r: Var, pattern: &Arc<CsrMatrix>, slope: f64) -> Result<Var> {
        let x = self.value(z);
        check_pattern(pattern, x)?;
        let (al, ar) = (self.value(a_l), self.value(a_r));
        if al.dim() != (x.ncols(), 1) || ar.dim() != (x.ncols(), 1) {
            return Err(Error::Shape(format!(
                "attention vectors {:?}, {:?} for width {}",
                al.dim(),
                ar.dim(),
                x.ncols()
            )));
        }
        let el = x.dot(al);
        let er = x.dot(ar);
        let mut pre = vec![0.0; pattern.nnz()];
        let mut scores = vec![0.0; pattern.nnz()];
        for i in 0..pattern.n_rows {
            for k in pattern.offsets[i]..pattern.offsets[i + 1] {
                let u = el[[i, 0]] + er[[pattern.cols[k], 0]];
                pre[k] = u;
                scores[k] = if u > 0.0 { u } else { slope * u };
            }
        }
        let mut attn = vec![0.0; scores.len()];
        edge_softmax(pattern, &scores, &mut attn);
        let v = edge_aggregate(pattern, &attn, x);
        Ok(self.push(
            v,
            Op::Gat {
                z,
                a_l,
                a_r,
                pattern: Arc::clone(pattern),
                slope,
                attn,
                pre,
            },
        ))
    }

    /// Attention weights recorded by an AGNN or GAT node, in CSR order.
    pub fn attention(&self, v: Var) -> Option<&[f64]> {
        match &self.nodes[v.0].op {
            Op::Agnn { attn, .. } | Op::Gat { attn, .. } => Some(attn),
            _ => None,
        }
    }

    pub fn mean(&mut self, xs: &[Var]) -> Result<Var> {
        let first = xs
            .first()
            .ok_or_else(|| Error::InvalidInput("mean of no values".into()))?;
        let mut acc = self.value(*first).clone();
        for &x in &xs[1..] {
            let m = self.value(x);
            if m.dim() != acc.dim() {
                return Err(shape_err("mean", &acc, m));
            }
            acc += m;
        }
        acc /= xs.len() as f64;
        Ok(self.push(acc, Op::Mean(xs.to_vec())))
    }

    pub fn log_softmax(&mut self, a: Var) -> Var {
        let mut v = self.value(a).clone();
        for mut row in v.outer_iter_mut() {
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + row.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
            row -= lse;
        }
        self.push(v, Op::LogSoftmax(a))
    }

    /// `-mean_{(row, class)} input[row, class]` as a `1 x 1` value.
    pub fn nll(&mut self, log_probs: Var, targets: Vec<(usize, usize)>) -> Result<Var> {
        if targets.is_empty() {
            return Err(Error::Empty("loss mask selects no nodes".into()));
        }
        let x = self.value(log_probs);
        if let Some(&(r, c)) = targets.iter().find(|&&(r, c)| r >= x.nrows() || c >= x.ncols()) {
            return Err(Error::Shape(format!("target ({r}, {c}) outside {:?}", x.dim())));
        }
        let total: f64 = targets.iter().map(|&(r, c)| x[[r, c]]).sum();
        let v = Array2::from_elem((1, 1), -total / targets.len() as f64);
        Ok(self.push(v, Op::Nll { input: log_probs, targets }))
    }

    /// `sum(input * weights)` as a `1 x 1` value; a convenient scalar probe.
    pub fn weighted_sum(&mut self, a: Var, weights: Matrix) -> Result<Var> {
        let x = self.value(a);
        if x.dim() != weights.dim() {
            return Err(shape_err("weighted_sum", x, &weights));
        }
        let v = Array2::from_elem((1, 1), (x * &weights).sum());
        Ok(self.push(v, Op::WeightedSum(a, weights)))
    }

    /// Gradients of the `1 x 1` value `out`.
    pub fn backward(&self, out: Var) -> Result<Gradients> {
        if self.value(out).dim() != (1, 1) {
            return Err(Error::Shape(format!(
                "backward needs a scalar, got {:?}",
                self.value(out).dim()
            )));
        }
        let mut grads: Vec<Option<Matrix>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[out.0] = Some(Array2::ones((1, 1)));
        let acc = |grads: &mut Vec<Option<Matrix>>, v: Var, g: Matrix| match &mut grads[v.0] {
            Some(existing) => *existing += &g,
            slot @ None => *slot = Some(g),
        };
        for idx in (0..=out.0).rev() {
            let node = &self.nodes[idx];
            if matches!(node.op, Op::Leaf) {
                continue;
            }
            // interior gradients are consumed; leaf gradients stay for the caller
            let Some(g) = grads[idx].take() else { continue };
            match &node.op {
                Op::Leaf => unreachable!("leaves are skipped above"),
                Op::MatMul(a, b) => {
                    let ga = g.dot(&self.value(*b).t());
                    let gb = self.value(*a).t().dot(&g);
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::AddBias(x, b) => {
                    let gb = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                    acc(&mut grads, *b, gb);
                    acc(&mut grads, *x, g.clone());
                }
                Op::Add(a, b) => {
                    acc(&mut grads, *b, g.clone());
                    acc(&mut grads, *a, g.clone());
                }
                Op::Sub(a, b) => {
                    acc(&mut grads, *b, -&g);
                    acc(&mut grads, *a, g.clone());
                }
                Op::Scale(a, s) => acc(&mut grads, *a, &g * *s),
                Op::Relu(a) => {
                    let mut ga = g.clone();
                    ga.zip_mut_with(self.value(*a), |d, &x| {
                        if x <= 0.0 {
                            *d = 0.0;
                        }
                    });
                    acc(&mut grads, *a, ga);
                }
                Op::Dropout(a, mask) => acc(&mut grads, *a, &g * mask),
                Op::Spmm(op, x) => {
                    let gx = op.transpose.mul_dense(&g)?;
                    acc(&mut grads, *x, gx);
                }
                Op::Agnn {
                    h,
                    beta,
                    pattern,
                    attn,
                    cos,
                    unit,
                    norms,
                } => {
                    let x = self.value(*h);
                    let b = self.value(*beta)[[0, 0]];
                    let mut gx = Array2::zeros(x.dim());
                    let mut dp = vec![0.0; attn.len()];
                    for i in 0..pattern.n_rows {
                        for k in pattern.offsets[i]..pattern.offsets[i + 1] {
                            let j = pattern.cols[k];
                            gx.row_mut(j).scaled_add(attn[k], &g.row(i));
                            dp[k] = g.row(i).dot(&x.row(j));
                        }
                    }
                    let ds = edge_softmax_backward(pattern, attn, &dp);
                    let gbeta: f64 = ds.iter().zip(cos).map(|(d, c)| d * c).sum();
                    let mut gunit: Matrix = Array2::zeros(x.dim());
                    for i in 0..pattern.n_rows {
                        for k in pattern.offsets[i]..pattern.offsets[i + 1] {
                            let j = pattern.cols[k];
                            let dc = b * ds[k];
                            gunit.row_mut(i).scaled_add(dc, &unit.row(j));
                            gunit.row_mut(j).scaled_add(dc, &unit.row(i));
                        }
                    }
                    for i in 0..x.nrows() {
                        if norms[i] > 0.0 {
                            let u = unit.row(i);
                            let du = gunit.row(i);
                            let radial = u.dot(&du);
                            let mut row = gx.row_mut(i);
                            row.scaled_add(1.0 / norms[i], &du);
                            row.scaled_add(-radial / norms[i], &u);
                        }
                    }
                    acc(&mut grads, *beta, Array2::from_elem((1, 1), gbeta));
                    acc(&mut grads, *h, gx);
                }
                Op::Gat {
                    z,
                    a_l,
                    a_r,
                    pattern,
                    slope,
                    attn,
                    pre,
                } => {
                    let x = self.value(*z);
                    let (al, ar) = (self.value(*a_l), self.value(*a_r));
                    let mut gz = Array2::zeros(x.dim());
                    let mut dp = vec![0.0; attn.len()];
                    for i in 0..pattern.n_rows {
                        for k in pattern.offsets[i]..pattern.offsets[i + 1] {
                            let j = pattern.cols[k];
                            gz.row_mut(j).scaled_add(attn[k], &g.row(i));
                            dp[k] = g.row(i).dot(&x.row(j));
                        }
                    }
                    let de = edge_softmax_backward(pattern, attn, &dp);
                    let mut gel = Array2::zeros((x.nrows(), 1));
                    let mut ger = Array2::zeros((x.nrows(), 1));
                    for i in 0..pattern.n_rows {
                        for k in pattern.offsets[i]..pattern.offsets[i + 1] {
                            let du = de[k] * if pre[k] > 0.0 { 1.0 } else { *slope };
                            gel[[i, 0]] += du;
                            ger[[pattern.cols[k], 0]] += du;
                        }
                    }
                    gz += &gel.dot(&al.t());
                    gz += &ger.dot(&ar.t());
                    acc(&mut grads, *a_l, x.t().dot(&gel));
                    acc(&mut grads, *a_r, x.t().dot(&ger));
                    acc(&mut grads, *z, gz);
                }
                Op::Mean(xs) => {
                    let share = &g / xs.len() as f64;
                    for &x in xs {
                        acc(&mut grads, x, share.clone());
                    }
                }
                Op::LogSoftmax(a) => {
                    let y = &node.value;
                    let mut ga = g.clone();
                    for ((mut grow, yrow), g0) in ga.outer_iter_mut().zip(y.outer_iter()).zip(g.outer_iter()) {
                        let s = g0.sum();
                        grow.zip_mut_with(&yrow, |d, &ly| *d -= ly.exp() * s);
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::Nll { input, targets } => {
                    let x = self.value(*input);
                    let mut gi = Array2::zeros(x.dim());
                    let w = -g[[0, 0]] / targets.len() as f64;
                    for &(r, c) in targets {
                        gi[[r, c]] += w;
                    }
                    acc(&mut grads, *input, gi);
                }
                Op::WeightedSum(a, w) => acc(&mut grads, *a, w * g[[0, 0]]),
            }
        }
        Ok(Gradients(grads))
    }
}
