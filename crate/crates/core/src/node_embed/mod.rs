//! DeepWalk and node2vec node embeddings.

mod skipgram;
mod walks;

pub use skipgram::{train_skipgram, SkipGramOutput, SkipGramParams};
pub use walks::{generate_walks, read_walks, write_walks, WalkConfig, WalkKind};

use serde::{Deserialize, Serialize};

use crate::container::{EmbeddingContainer, NamedMatrix};
use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeEmbedConfig {
    pub kind: WalkKind,
    pub walks: WalkConfig,
    pub skipgram: SkipGramParams,
}

impl NodeEmbedConfig {
    /// Skip-gram window and seed follow the walk config.
    pub fn new(kind: WalkKind, walks: WalkConfig, dim: usize, epochs: usize) -> Self {
        let skipgram = SkipGramParams {
            dim,
            epochs,
            window: walks.window,
            seed: walks.seed,
            ..Default::default()
        };
        Self { kind, walks, skipgram }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeEmbedding {
    pub matrix: Matrix,
    pub config: NodeEmbedConfig,
    pub epoch_loss: Vec<f64>,
}

impl NodeEmbedding {
    pub fn to_container(&self, names: Vec<String>) -> Result<EmbeddingContainer> {
        if names.len() != self.matrix.nrows() {
            return Err(Error::Shape(format!(
                "{} names for {} rows",
                names.len(),
                self.matrix.nrows()
            )));
        }
        Ok(EmbeddingContainer {
            dim: self.matrix.ncols(),
            vocab: Vec::new(),
            meta: serde_json::json!({ "kind": "node-embedding", "config": self.config }),
            tags: names,
            matrices: vec![NamedMatrix {
                name: "node_vectors".into(),
                rows: self.matrix.nrows(),
                cols: self.matrix.ncols(),
                data: self.matrix.iter().map(|&x| x as f32).collect(),
            }],
        })
    }

    pub fn from_container(c: &EmbeddingContainer) -> Result<Self> {
        let config: NodeEmbedConfig = serde_json::from_value(
            c.meta
                .get("config")
                .cloned()
                .ok_or_else(|| Error::Container("missing node embedding config".into()))?,
        )?;
        let m = c
            .matrix("node_vectors")
            .ok_or_else(|| Error::Container("missing matrix node_vectors".into()))?;
        let matrix = Matrix::from_shape_vec((m.rows, m.cols), m.data.iter().map(|&x| f64::from(x)).collect())
            .map_err(|e| Error::Container(e.to_string()))?;
        Ok(Self {
            matrix,
            config,
            epoch_loss: Vec::new(),
        })
    }
}

/// Walks then skip-gram, end to end.
pub fn embed_nodes(g: &DirectedGraph, config: &NodeEmbedConfig) -> Result<NodeEmbedding> {
    let walks = generate_walks(g, &config.walks, config.kind)?;
    let out = train_skipgram(&walks, g.num_nodes(), &config.skipgram)?;
    log::info!(
        "{:?} embedding: {} walks, {} pairs per epoch",
        config.kind,
        walks.len(),
        out.pairs_per_epoch
    );
    Ok(NodeEmbedding {
        matrix: out.vectors,
        config: config.clone(),
        epoch_loss: out.epoch_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn container_round_trip() {
        let g = DirectedGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap();
        let walks = WalkConfig { walk_length: 6, walks_per_node: 2, ..Default::default() };
        let cfg = NodeEmbedConfig::new(WalkKind::DeepWalk, walks, 4, 2);
        let e = embed_nodes(&g, &cfg).unwrap();
        let names: Vec<String> = (0..3).map(|i| format!("n{i}")).collect();
        let mut buf = Vec::new();
        e.to_container(names.clone()).unwrap().write(&mut buf).unwrap();
        let c = EmbeddingContainer::read(buf.as_slice()).unwrap();
        assert_eq!(c.tags, names);
        let back = NodeEmbedding::from_container(&c).unwrap();
        assert_eq!(back.config, cfg);
        for (a, b) in back.matrix.iter().zip(e.matrix.iter()) {
            assert_eq!(*a, f64::from(*b as f32));
        }
    }
}
