//! Trained-model handle and zero-shot evaluation on another graph.

use crate::container::{CheckpointContainer, NamedMatrix};
use crate::error::{Error, Result};
use crate::gnn::{self, GnnModel, Propagation};
use crate::graph::DirectedGraph;
use crate::text::{predict_logistic, LogisticModel};
use crate::Matrix;

use super::metrics::{macro_metrics, Metrics};

/// A fitted classifier that can be applied to any graph with matching
/// feature width.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Gnn(GnnModel),
    Logistic(LogisticModel),
}

impl TrainedModel {
    pub fn name(&self) -> String {
        match self {
            TrainedModel::Gnn(m) => m.config.variant.name().to_owned(),
            TrainedModel::Logistic(_) => "logistic".to_owned(),
        }
    }

    pub fn in_dim(&self) -> usize {
        match self {
            TrainedModel::Gnn(m) => m.in_dim,
            TrainedModel::Logistic(m) => m.weights.len(),
        }
    }

    /// Probability of the hateful class per node.
    pub fn predict_proba(&self, g: &DirectedGraph, x: &Matrix) -> Result<Vec<f64>> {
        self.check_input(g, x)?;
        match self {
            TrainedModel::Gnn(m) => {
                let prop = Propagation::new(g, &m.config.variant);
                Ok(gnn::predict(m, &prop, x)?.prob_hateful)
            }
            TrainedModel::Logistic(m) => predict_logistic(m, x),
        }
    }

    /// Predicted class per node.
    pub fn predict(&self, g: &DirectedGraph, x: &Matrix) -> Result<Vec<u8>> {
        self.check_input(g, x)?;
        match self {
            TrainedModel::Gnn(m) => {
                let prop = Propagation::new(g, &m.config.variant);
                Ok(gnn::predict(m, &prop, x)?.classes)
            }
            TrainedModel::Logistic(m) => Ok(predict_logistic(m, x)?.into_iter().map(|p| u8::from(p > 0.5)).collect()),
        }
    }

    fn check_input(&self, g: &DirectedGraph, x: &Matrix) -> Result<()> {
        if x.ncols() != self.in_dim() {
            return Err(Error::Shape(format!(
                "model expects {} features, got {}",
                self.in_dim(),
                x.ncols()
            )));
        }
        if x.nrows() != g.num_nodes() {
            return Err(Error::Shape(format!("{} feature rows for {} nodes", x.nrows(), g.num_nodes())));
        }
        Ok(())
    }

    pub fn to_checkpoint(&self) -> CheckpointContainer {
        match self {
            TrainedModel::Gnn(m) => {
                let mut c = m.to_checkpoint();
                c.config["kind"] = "gnn".into();
                c
            }
            TrainedModel::Logistic(m) => CheckpointContainer {
                config: serde_json::json!({ "kind": "logistic", "l2": m.l2 }),
                tensors: vec![
                    NamedMatrix {
                        name: "weights".into(),
                        rows: 1,
                        cols: m.weights.len(),
                        data: m.weights.clone(),
                    },
                    NamedMatrix {
                        name: "bias".into(),
                        rows: 1,
                        cols: 1,
                        data: vec![m.bias],
                    },
                ],
            },
        }
    }

    pub fn from_checkpoint(c: &CheckpointContainer) -> Result<Self> {
        match c.config.get("kind").and_then(|k| k.as_str()).unwrap_or("gnn") {
            "gnn" => Ok(TrainedModel::Gnn(GnnModel::from_checkpoint(c)?)),
            "logistic" => {
                let tensor = |n: &str| c.tensor(n).ok_or_else(|| Error::Container(format!("checkpoint lacks tensor {n}")));
                let weights = tensor("weights")?.data.clone();
                let bias = *tensor("bias")?
                    .data
                    .first()
                    .ok_or_else(|| Error::Container("empty bias tensor".into()))?;
                let l2 = c.config.get("l2").and_then(|v| v.as_f64()).unwrap_or(0.0);
                Ok(TrainedModel::Logistic(LogisticModel { weights, bias, l2 }))
            }
            other => Err(Error::Container(format!("unknown model kind {other:?}"))),
        }
    }
}

/// Applies `model` to a target graph with no target supervision and scores it
/// on the labeled target nodes.
pub fn cross_platform_eval(
    model: &TrainedModel,
    target: &DirectedGraph,
    target_x: &Matrix,
    target_labels: &[(usize, u8)],
) -> Result<Metrics> {
    let pred = model.predict(target, target_x)?;
    let mut truth = Vec::with_capacity(target_labels.len());
    let mut guess = Vec::with_capacity(target_labels.len());
    for &(v, c) in target_labels {
        let p = *pred
            .get(v)
            .ok_or_else(|| Error::InvalidInput(format!("labeled node {v} outside the target graph")))?;
        truth.push(c);
        guess.push(p);
    }
    macro_metrics(&truth, &guess)
}
