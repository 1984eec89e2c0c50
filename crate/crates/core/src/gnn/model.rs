//! The two-layer node classifier and its five convolution variants.

use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tape::{SparseOperator, Tape, Var};
use crate::container::{CheckpointContainer, NamedMatrix};
use crate::error::{Error, Result};
use crate::graph::{normalize, CsrMatrix, DirectedGraph, NormKind};
use crate::rng;
use crate::Matrix;

/// Number of output classes (non-hateful, hateful).
pub const NUM_CLASSES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum Variant {
    Gcn,
    Cheb {
        k: usize,
    },
    /// `sample` neighbors per node during training; `None` always uses the
    /// full neighborhood. Evaluation always uses the full neighborhood.
    Sage {
        sample: Option<usize>,
    },
    /// `layers` attention propagations, each with its own temperature.
    Agnn {
        #[serde(default = "one")]
        layers: usize,
    },
    Gat {
        heads: usize,
    },
}

impl Variant {
    pub const NAMES: [&'static str; 5] = ["gcn", "cheb", "sage", "agnn", "gat"];

    /// Variant with its default settings from a short name.
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "gcn" => Self::Gcn,
            "cheb" => Self::Cheb { k: 2 },
            "sage" => Self::Sage { sample: Some(25) },
            "agnn" => Self::Agnn { layers: 1 },
            "gat" => Self::Gat { heads: 1 },
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gcn => "gcn",
            Self::Cheb { .. } => "cheb",
            Self::Sage { .. } => "sage",
            Self::Agnn { .. } => "agnn",
            Self::Gat { .. } => "gat",
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Self::Cheb { k: 0 } => Err(Error::InvalidInput("ChebNet order K must be at least 1".into())),
            Self::Sage { sample: Some(0) } => Err(Error::InvalidInput("SAGE sample size must be at least 1".into())),
            Self::Agnn { layers: 0 } => Err(Error::InvalidInput("AGNN needs at least one propagation layer".into())),
            Self::Gat { heads: 0 } => Err(Error::InvalidInput("GAT needs at least one head".into())),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub dropout: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            lr: 0.01,
            weight_decay: 5e-4,
            dropout: 0.2,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidInput("epochs must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidInput(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if !(self.lr > 0.0 && self.weight_decay >= 0.0) {
            return Err(Error::InvalidInput("lr must be positive and weight decay nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnnConfig {
    #[serde(flatten)]
    pub variant: Variant,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_slope")]
    pub leaky_slope: f64,
    #[serde(default)]
    pub train: TrainConfig,
}

fn one() -> usize {
    1
}

/// Parameter name of the temperature of AGNN propagation layer `l`.
pub fn agnn_beta(l: usize) -> String {
    if l == 0 {
        "prop.beta".into()
    } else {
        format!("prop{l}.beta")
    }
}

fn default_hidden() -> usize {
    32
}

fn default_slope() -> f64 {
    0.2
}

impl GnnConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            hidden: default_hidden(),
            leaky_slope: default_slope(),
            train: TrainConfig::default(),
        }
    }
}

/// Graph operators a variant propagates with, built once per graph. The input
/// graph is symmetrized first.
#[derive(Debug, Clone)]
pub struct Propagation {
    num_nodes: usize,
    graph: DirectedGraph,
    gcn: Option<SparseOperator>,
    cheb: Option<SparseOperator>,
    lambda_max: Option<f64>,
    sage_full: Option<SparseOperator>,
    attention: Option<Arc<CsrMatrix>>,
}

impl Propagation {
    pub fn new(g: &DirectedGraph, variant: &Variant) -> Self {
        let graph = g.symmetrize().without_self_loops();
        let mut p = Self {
            num_nodes: g.num_nodes(),
            graph,
            gcn: None,
            cheb: None,
            lambda_max: None,
            sage_full: None,
            attention: None,
        };
        match variant {
            Variant::Gcn => {
                p.gcn = Some(SparseOperator::symmetric(normalize(&p.graph, NormKind::SymmetricGcn).matrix));
            }
            Variant::Cheb { .. } => {
                let adj = normalize(&p.graph, NormKind::ScaledLaplacian);
                p.lambda_max = adj.lambda_max;
                p.cheb = Some(SparseOperator::symmetric(adj.matrix));
            }
            Variant::Sage { .. } => p.sage_full = Some(SparseOperator::new(mean_operator(&p.graph, None, 0))),
            Variant::Agnn { .. } | Variant::Gat { .. } => {
                let pattern = p.graph.with_self_loops();
                let (offsets, cols, _) = pattern.csr();
                let rows = (0..pattern.num_nodes())
                    .map(|u| cols[offsets[u]..offsets[u + 1]].iter().map(|&v| (v, 1.0)).collect())
                    .collect();
                p.attention = Some(Arc::new(CsrMatrix::from_rows(pattern.num_nodes(), rows)));
            }
        }
        p
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Largest Laplacian eigenvalue used to scale the ChebNet operator.
    pub fn lambda_max(&self) -> Option<f64> {
        self.lambda_max
    }

    /// The symmetrized, loop-free graph the operators were built from.
    pub fn graph(&self) -> &DirectedGraph {
        &self.graph
    }

    fn need<'a, T>(slot: &'a Option<T>, what: &str) -> Result<&'a T> {
        slot.as_ref()
            .ok_or_else(|| Error::InvalidInput(format!("propagation was not built for {what}")))
    }
}

/// Row-normalized neighbor-mean operator. With `sample = Some(s)`, rows with
/// more than `s` neighbors keep a uniform subset of size `s` drawn from the
/// stream keyed by (`stream`, node). Isolated nodes get an empty row.
pub(crate) fn mean_operator(g: &DirectedGraph, sample_size: Option<usize>, stream: u64) -> CsrMatrix {
    let rows = (0..g.num_nodes())
        .map(|u| {
            let nbrs = g.out_neighbors(u);
            let mut chosen: Vec<usize> = match sample_size {
                Some(s) if nbrs.len() > s => {
                    let mut r = rng::rng(rng::indexed(stream, &[u as u64]));
                    sample(&mut r, nbrs.len(), s).into_iter().map(|k| nbrs[k]).collect()
                }
                _ => nbrs.to_vec(),
            };
            chosen.sort_unstable();
            let w = 1.0 / chosen.len().max(1) as f64;
            chosen.into_iter().map(|v| (v, w)).collect()
        })
        .collect();
    CsrMatrix::from_rows(g.num_nodes(), rows)
}

/// Forward mode for one pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Eval,
    /// Dropout and neighbor sampling active, keyed by epoch.
    Train { epoch: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnModel {
    pub config: GnnConfig,
    pub in_dim: usize,
    params: Vec<(String, Matrix)>,
}

fn glorot(r: &mut rng::Rng, rows: usize, cols: usize) -> Matrix {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| r.random_range(-a..a))
}

/// Parameter names and shapes, in the order they are stored.
fn layout(config: &GnnConfig, in_dim: usize) -> Vec<(String, (usize, usize))> {
    let h = config.hidden;
    let mut out = Vec::new();
    let mut conv = |prefix: &str, i: usize, o: usize| match config.variant {
        Variant::Gcn => {
            out.push((format!("{prefix}.weight"), (i, o)));
            out.push((format!("{prefix}.bias"), (1, o)));
        }
        Variant::Cheb { k } => {
            for t in 0..k {
                out.push((format!("{prefix}.weight{t}"), (i, o)));
            }
            out.push((format!("{prefix}.bias"), (1, o)));
        }
        Variant::Sage { .. } => {
            out.push((format!("{prefix}.self"), (i, o)));
            out.push((format!("{prefix}.neigh"), (i, o)));
            out.push((format!("{prefix}.bias"), (1, o)));
        }
        Variant::Gat { heads } => {
            for hd in 0..heads {
                out.push((format!("{prefix}.weight.h{hd}"), (i, o)));
                out.push((format!("{prefix}.att_l.h{hd}"), (o, 1)));
                out.push((format!("{prefix}.att_r.h{hd}"), (o, 1)));
            }
            out.push((format!("{prefix}.bias"), (1, o)));
        }
        Variant::Agnn { .. } => {
            out.push((format!("{prefix}.weight"), (i, o)));
            out.push((format!("{prefix}.bias"), (1, o)));
        }
    };
    if let Variant::Agnn { layers } = config.variant {
        conv("lin1", in_dim, h);
        conv("lin2", h, NUM_CLASSES);
        for l in 0..layers {
            out.insert(2 + l, (agnn_beta(l), (1, 1)));
        }
    } else {
        conv("conv1", in_dim, h);
        conv("conv2", h, NUM_CLASSES);
    }
    out
}

impl GnnModel {
    /// Glorot-uniform weights, zero biases, AGNN temperature 1.
    pub fn new(config: GnnConfig, in_dim: usize) -> Result<Self> {
        config.variant.validate()?;
        config.train.validate()?;
        if in_dim == 0 || config.hidden == 0 {
            return Err(Error::InvalidInput("input and hidden widths must be positive".into()));
        }
        let mut r = rng::named(config.train.seed, "gnn-init");
        let params = layout(&config, in_dim)
            .into_iter()
            .map(|(name, (rows, cols))| {
                let m = if name.ends_with("bias") {
                    Array2::zeros((rows, cols))
                } else if name.ends_with(".beta") {
                    Array2::ones((1, 1))
                } else {
                    glorot(&mut r, rows, cols)
                };
                (name, m)
            })
            .collect();
        Ok(Self { config, in_dim, params })
    }

    pub fn params(&self) -> &[(String, Matrix)] {
        &self.params
    }

    pub fn param(&self, name: &str) -> Option<&Matrix> {
        self.params.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    /// Replaces parameter values in storage order; shapes must match.
    pub fn set_params(&mut self, values: Vec<Matrix>) -> Result<()> {
        if values.len() != self.params.len() {
            return Err(Error::Shape(format!("{} tensors for {} parameters", values.len(), self.params.len())));
        }
        for ((name, old), new) in self.params.iter().zip(&values) {
            if old.dim() != new.dim() {
                return Err(Error::Shape(format!("{name}: {:?} vs {:?}", old.dim(), new.dim())));
            }
        }
        for ((_, old), new) in self.params.iter_mut().zip(values) {
            *old = new;
        }
        Ok(())
    }

    pub(crate) fn params_mut(&mut self) -> impl Iterator<Item = &mut Matrix> {
        self.params.iter_mut().map(|(_, m)| m)
    }

    /// Records the forward pass on `tape`; returns the log-probability node
    /// and the parameter leaves in storage order.
    pub fn record(&self, tape: &mut Tape, prop: &Propagation, x: &Matrix, mode: Mode) -> Result<(Var, Vec<Var>)> {
        if x.nrows() != prop.num_nodes() {
            return Err(Error::Shape(format!("{} feature rows for {} nodes", x.nrows(), prop.num_nodes())));
        }
        if x.ncols() != self.in_dim {
            return Err(Error::Shape(format!("model expects {} features, got {}", self.in_dim, x.ncols())));
        }
        let vars: Vec<Var> = self.params.iter().map(|(_, m)| tape.leaf(m.clone())).collect();
        let p = |name: &str| -> Var {
            let i = self.params.iter().position(|(n, _)| n == name).expect("layout names are fixed");
            vars[i]
        };
        let input = tape.leaf(x.clone());
        let dropout = |tape: &mut Tape, h: Var| -> Result<Var> {
            match mode {
                Mode::Train { epoch } if self.config.train.dropout > 0.0 => {
                    let keep = 1.0 - self.config.train.dropout;
                    let mut r = rng::rng(rng::indexed(rng::substream(self.config.train.seed, "dropout"), &[epoch]));
                    let mask = tape
                        .value(h)
                        .map(|_| if r.random_bool(keep) { 1.0 / keep } else { 0.0 });
                    tape.dropout(h, mask)
                }
                _ => Ok(h),
            }
        };
        let logits = if let Variant::Agnn { layers } = self.config.variant {
            let h = linear(tape, input, p("lin1.weight"), p("lin1.bias"))?;
            let h = tape.relu(h);
            let mut h = dropout(tape, h)?;
            let pattern = Propagation::need(&prop.attention, "agnn")?;
            for l in 0..layers {
                h = tape.agnn(h, p(&agnn_beta(l)), pattern)?;
            }
            linear(tape, h, p("lin2.weight"), p("lin2.bias"))?
        } else {
            let h = self.conv(tape, prop, "conv1", 0, input, mode, &p)?;
            let h = tape.relu(h);
            let h = dropout(tape, h)?;
            self.conv(tape, prop, "conv2", 1, h, mode, &p)?
        };
        Ok((tape.log_softmax(logits), vars))
    }

    #[allow(clippy::too_many_arguments)]
    fn conv(
        &self,
        tape: &mut Tape,
        prop: &Propagation,
        prefix: &str,
        layer: u64,
        h: Var,
        mode: Mode,
        p: &dyn Fn(&str) -> Var,
    ) -> Result<Var> {
        let bias = p(&format!("{prefix}.bias"));
        match self.config.variant {
            Variant::Gcn => {
                let hw = tape.matmul(h, p(&format!("{prefix}.weight")))?;
                let out = tape.spmm(Propagation::need(&prop.gcn, "gcn")?, hw)?;
                tape.add_bias(out, bias)
            }
            Variant::Cheb { k } => {
                let op = Propagation::need(&prop.cheb, "cheb")?;
                let ws: Vec<Var> = (0..k).map(|t| p(&format!("{prefix}.weight{t}"))).collect();
                let out = cheb_record(tape, op, h, &ws)?;
                tape.add_bias(out, bias)
            }
            Variant::Sage { sample } => {
                let op = match (mode, sample) {
                    (Mode::Train { epoch }, Some(s)) => {
                        let stream = rng::indexed(rng::substream(self.config.train.seed, "sage"), &[epoch, layer]);
                        SparseOperator::new(mean_operator(&prop.graph, Some(s), stream))
                    }
                    _ => Propagation::need(&prop.sage_full, "sage")?.clone(),
                };
                let own = tape.matmul(h, p(&format!("{prefix}.self")))?;
                let agg = tape.spmm(&op, h)?;
                let nb = tape.matmul(agg, p(&format!("{prefix}.neigh")))?;
                let out = tape.add(own, nb)?;
                tape.add_bias(out, bias)
            }
            Variant::Gat { heads } => {
                let pattern = Propagation::need(&prop.attention, "gat")?;
                let outs = (0..heads)
                    .map(|hd| {
                        let z = tape.matmul(h, p(&format!("{prefix}.weight.h{hd}")))?;
                        tape.gat(
                            z,
                            p(&format!("{prefix}.att_l.h{hd}")),
                            p(&format!("{prefix}.att_r.h{hd}")),
                            pattern,
                            self.config.leaky_slope,
                        )
                    })
                    .collect::<Result<Vec<Var>>>()?;
                let out = if outs.len() == 1 { outs[0] } else { tape.mean(&outs)? };
                tape.add_bias(out, bias)
            }
            Variant::Agnn { .. } => unreachable!("AGNN uses its own stack"),
        }
    }

    /// Log-probabilities, `n x 2`.
    pub fn forward(&self, prop: &Propagation, x: &Matrix, mode: Mode) -> Result<Matrix> {
        let mut tape = Tape::new();
        let (out, _) = self.record(&mut tape, prop, x, mode)?;
        Ok(tape.value(out).clone())
    }

    /// Masked mean negative log-likelihood and its gradient for every
    /// parameter in storage order. Weight decay is not included.
    pub fn loss_and_grads(
        &self,
        prop: &Propagation,
        x: &Matrix,
        labels: &[u8],
        mask: &[usize],
        mode: Mode,
    ) -> Result<(f64, Vec<Matrix>)> {
        let mut tape = Tape::new();
        let (out, vars) = self.record(&mut tape, prop, x, mode)?;
        let loss = tape.nll(out, targets(labels, mask)?)?;
        let grads = tape.backward(loss)?;
        let g = vars
            .iter()
            .zip(&self.params)
            .map(|(&v, (_, m))| grads.dense(v, m.dim()))
            .collect();
        Ok((tape.value(loss)[[0, 0]], g))
    }

    /// Masked mean negative log-likelihood without gradients.
    pub fn loss(&self, prop: &Propagation, x: &Matrix, labels: &[u8], mask: &[usize], mode: Mode) -> Result<f64> {
        let log_probs = self.forward(prop, x, mode)?;
        let t = targets(labels, mask)?;
        if t.is_empty() {
            return Err(Error::Empty("loss mask selects no nodes".into()));
        }
        Ok(-t.iter().map(|&(r, c)| log_probs[[r, c]]).sum::<f64>() / t.len() as f64)
    }

    pub fn to_checkpoint(&self) -> CheckpointContainer {
        CheckpointContainer {
            config: serde_json::json!({ "model": self.config, "in_dim": self.in_dim }),
            tensors: self
                .params
                .iter()
                .map(|(name, m)| NamedMatrix {
                    name: name.clone(),
                    rows: m.nrows(),
                    cols: m.ncols(),
                    data: m.iter().copied().collect(),
                })
                .collect(),
        }
    }

    pub fn from_checkpoint(c: &CheckpointContainer) -> Result<Self> {
        let config: GnnConfig = serde_json::from_value(
            c.config
                .get("model")
                .cloned()
                .ok_or_else(|| Error::Container("checkpoint lacks model config".into()))?,
        )?;
        let in_dim = c
            .config
            .get("in_dim")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::Container("checkpoint lacks in_dim".into()))? as usize;
        let mut model = Self::new(config, in_dim)?;
        let values = model
            .params
            .iter()
            .map(|(name, _)| {
                let t = c
                    .tensor(name)
                    .ok_or_else(|| Error::Container(format!("checkpoint lacks tensor {name}")))?;
                Matrix::from_shape_vec((t.rows, t.cols), t.data.clone()).map_err(|e| Error::Container(e.to_string()))
            })
            .collect::<Result<Vec<Matrix>>>()?;
        model.set_params(values)?;
        Ok(model)
    }
}

fn targets(labels: &[u8], mask: &[usize]) -> Result<Vec<(usize, usize)>> {
    mask.iter()
        .map(|&i| {
            let l = *labels
                .get(i)
                .ok_or_else(|| Error::Shape(format!("mask node {i} has no label")))?;
            if usize::from(l) >= NUM_CLASSES {
                return Err(Error::InvalidInput(format!("label {l} is not 0 or 1")));
            }
            Ok((i, usize::from(l)))
        })
        .collect()
}

fn linear(tape: &mut Tape, h: Var, w: Var, b: Var) -> Result<Var> {
    let hw = tape.matmul(h, w)?;
    tape.add_bias(hw, b)
}

/// `sum_k T_k(L) H W_k` with the Chebyshev recurrence on `L H`.
fn cheb_record(tape: &mut Tape, op: &SparseOperator, h: Var, ws: &[Var]) -> Result<Var> {
    let mut prev = h;
    let mut out = tape.matmul(h, ws[0])?;
    if ws.len() == 1 {
        return Ok(out);
    }
    let mut cur = tape.spmm(op, h)?;
    for (k, &w) in ws.iter().enumerate().skip(1) {
        if k >= 2 {
            let lc = tape.spmm(op, cur)?;
            let twice = tape.scale(lc, 2.0);
            let next = tape.sub(twice, prev)?;
            prev = cur;
            cur = next;
        }
        let term = tape.matmul(cur, w)?;
        out = tape.add(out, term)?;
    }
    Ok(out)
}

/// Single layers evaluated through the same tape operations the models use.
pub mod layers {
    use super::*;

    fn run(f: impl FnOnce(&mut Tape) -> Result<Var>) -> Result<Matrix> {
        let mut tape = Tape::new();
        let out = f(&mut tape)?;
        Ok(tape.value(out).clone())
    }

    fn require(adj: &crate::graph::NormalizedAdjacency, kind: NormKind) -> Result<()> {
        if adj.kind != kind {
            return Err(Error::InvalidInput(format!("layer needs a {kind:?} operator, got {:?}", adj.kind)));
        }
        Ok(())
    }

    /// `A H W` for a symmetric-GCN operator `A`.
    pub fn gcn_layer(adj: &crate::graph::NormalizedAdjacency, h: &Matrix, w: &Matrix) -> Result<Matrix> {
        require(adj, NormKind::SymmetricGcn)?;
        let op = SparseOperator::new(adj.matrix.clone());
        run(|t| {
            let (h, w) = (t.leaf(h.clone()), t.leaf(w.clone()));
            let hw = t.matmul(h, w)?;
            t.spmm(&op, hw)
        })
    }

    /// `sum_k T_k(L) H W_k` for a scaled-Laplacian operator.
    pub fn cheb_layer(adj: &crate::graph::NormalizedAdjacency, h: &Matrix, ws: &[Matrix]) -> Result<Matrix> {
        require(adj, NormKind::ScaledLaplacian)?;
        if ws.is_empty() {
            return Err(Error::InvalidInput("ChebNet order K must be at least 1".into()));
        }
        let op = SparseOperator::new(adj.matrix.clone());
        run(|t| {
            let h = t.leaf(h.clone());
            let ws: Vec<Var> = ws.iter().map(|w| t.leaf(w.clone())).collect();
            cheb_record(t, &op, h, &ws)
        })
    }

    /// `H W_self + mean_{j in S(i)} H_j W_neigh` over the out-neighbors of
    /// `g`, sampling at most `sample_size` per node from `stream`.
    pub fn sage_mean_layer(
        g: &DirectedGraph,
        h: &Matrix,
        w_self: &Matrix,
        w_neigh: &Matrix,
        sample_size: Option<usize>,
        stream: u64,
    ) -> Result<Matrix> {
        let op = SparseOperator::new(mean_operator(&g.without_self_loops(), sample_size, stream));
        run(|t| {
            let (hv, ws, wn) = (t.leaf(h.clone()), t.leaf(w_self.clone()), t.leaf(w_neigh.clone()));
            let own = t.matmul(hv, ws)?;
            let agg = t.spmm(&op, hv)?;
            let nb = t.matmul(agg, wn)?;
            t.add(own, nb)
        })
    }

    fn attention_pattern(g: &DirectedGraph) -> Arc<CsrMatrix> {
        let p = g.with_self_loops();
        let rows = (0..p.num_nodes())
            .map(|u| p.out_neighbors(u).iter().map(|&v| (v, 1.0)).collect())
            .collect();
        Arc::new(CsrMatrix::from_rows(p.num_nodes(), rows))
    }

    /// AGNN propagation over the out-neighborhoods of `g` plus self-loops.
    pub fn agnn_layer(g: &DirectedGraph, h: &Matrix, beta: f64) -> Result<Matrix> {
        let pattern = attention_pattern(g);
        run(|t| {
            let hv = t.leaf(h.clone());
            let b = t.leaf(Array2::from_elem((1, 1), beta));
            t.agnn(hv, b, &pattern)
        })
    }

    /// GAT layer with per-head `(W, a_l, a_r)`, heads averaged.
    pub fn gat_layer(g: &DirectedGraph, h: &Matrix, heads: &[(Matrix, Matrix, Matrix)], slope: f64) -> Result<Matrix> {
        if heads.is_empty() {
            return Err(Error::InvalidInput("GAT needs at least one head".into()));
        }
        let pattern = attention_pattern(g);
        run(|t| {
            let hv = t.leaf(h.clone());
            let outs = heads
                .iter()
                .map(|(w, al, ar)| {
                    let (w, al, ar) = (t.leaf(w.clone()), t.leaf(al.clone()), t.leaf(ar.clone()));
                    let z = t.matmul(hv, w)?;
                    t.gat(z, al, ar, &pattern, slope)
                })
                .collect::<Result<Vec<Var>>>()?;
            t.mean(&outs)
        })
    }
}
