use crate::error::{Error, Result};
use crate::eval::TrainedModel;
use crate::gnn::{self, EpochRecord, GnnModel, Propagation, Variant};
use crate::graph::DirectedGraph;
use crate::node_embed::{embed_nodes, WalkKind};
use crate::text::train_logistic;
use crate::Matrix;

use super::config::PipelineConfig;

/// A model name from the config, resolved against its settings.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Gnn(Variant),
    /// Logistic regression on the configured features.
    Logistic,
    /// Logistic regression on node embeddings from the given walks.
    Walk(WalkKind),
}

impl ModelSpec {
    pub fn parse(name: &str, cfg: &PipelineConfig) -> Result<Self> {
        match name {
            "logistic" => Ok(ModelSpec::Logistic),
            "deepwalk" => Ok(ModelSpec::Walk(WalkKind::DeepWalk)),
            "node2vec" => Ok(ModelSpec::Walk(WalkKind::Node2vec)),
            _ => cfg
                .gnn
                .variant(name)
                .map(ModelSpec::Gnn)
                .ok_or_else(|| Error::InvalidInput(format!("unknown model {name:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Gnn(v) => v.name(),
            ModelSpec::Logistic => "logistic",
            ModelSpec::Walk(WalkKind::DeepWalk) => "deepwalk",
            ModelSpec::Walk(WalkKind::Node2vec) => "node2vec",
        }
    }
}

/// Node embeddings for every walk kind in `specs`, in first-use order.
pub(crate) fn walk_features(specs: &[ModelSpec], g: &DirectedGraph, cfg: &PipelineConfig) -> Result<Vec<(WalkKind, Matrix)>> {
    let mut out: Vec<(WalkKind, Matrix)> = Vec::new();
    for s in specs {
        if let ModelSpec::Walk(kind) = s {
            if out.iter().all(|(k, _)| k != kind) {
                log::info!("training {} node embeddings", s.name());
                let e = embed_nodes(g, &cfg.features.node_embed.config(*kind))?;
                out.push((*kind, e.matrix));
            }
        }
    }
    Ok(out)
}

/// Features a spec consumes.
pub(crate) fn features_for<'a>(spec: &ModelSpec, x: &'a Matrix, walks: &'a [(WalkKind, Matrix)]) -> &'a Matrix {
    match spec {
        ModelSpec::Walk(kind) => &walks.iter().find(|(k, _)| k == kind).expect("walk features built").1,
        _ => x,
    }
}

/// Per-epoch records and the epoch whose parameters were kept.
pub(crate) type LossCurve = (Vec<EpochRecord>, usize);

/// Fits one model on `train` and returns it with its loss curve (GNNs only).
pub(crate) fn fit(
    spec: &ModelSpec,
    cfg: &PipelineConfig,
    g: &DirectedGraph,
    x: &Matrix,
    labels: &[u8],
    train: &[usize],
    val: &[usize],
) -> Result<(TrainedModel, Option<LossCurve>)> {
    match spec {
        ModelSpec::Gnn(v) => {
            let prop = Propagation::new(g, v);
            let model = GnnModel::new(cfg.gnn.config(*v), x.ncols())?;
            let out = gnn::train(&model, &prop, x, labels, train, val)?;
            Ok((TrainedModel::Gnn(out.model), Some((out.curve, out.best_epoch))))
        }
        ModelSpec::Logistic | ModelSpec::Walk(_) => {
            let rows = x.select(ndarray::Axis(0), train);
            let y: Vec<u8> = train.iter().map(|&i| labels[i]).collect();
            let (model, _) = train_logistic(&rows, &y, &cfg.logistic)?;
            Ok((TrainedModel::Logistic(model), None))
        }
    }
}

