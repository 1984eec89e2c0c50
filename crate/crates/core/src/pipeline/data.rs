//! Dataset loading and node feature construction.

use std::path::PathBuf;

use crate::container::{EmbeddingContainer, NamedMatrix};
use crate::error::{Error, Result};
use crate::graph::{io::read_edges, DirectedGraph};
use crate::labels::{read_labels, resolve};
use crate::node_embed::{embed_nodes, NodeEmbedding};
use crate::posthoc::{Lexicon, Month, TimedEdge};
use crate::synth::{generate, read_edge_times};
use crate::text::doc2vec::infer_matrix;
use crate::text::io::read_corpus;
use crate::text::{
    build_documents, load_word_embeddings, mean_pool, preprocess, train_doc2vec, Doc2vecModel, UserCorpus,
    WordVectors,
};
use crate::Matrix;

use super::config::{DataSource, FeatureConfig, FeatureSource};

/// Graph, posts and labels with node `i` of the graph owning corpus entry `i`.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: DirectedGraph,
    pub corpus: UserCorpus,
    pub labeled: Vec<(usize, u8)>,
    pub lexicon: Option<Lexicon>,
    pub edge_times: Option<Vec<TimedEdge>>,
    /// Months the data was generated over, when known.
    pub months: Option<Vec<Month>>,
    /// Files read, for the manifest.
    pub inputs: Vec<PathBuf>,
}

impl Dataset {
    pub fn load(source: &DataSource) -> Result<Self> {
        match source {
            DataSource::Synth(cfg) => {
                let d = generate(cfg)?;
                let names: Vec<String> = d.graph.ids().map(|i| i.names().to_vec()).unwrap_or_default();
                let corpus = UserCorpus::from_posts(d.posts.clone()).with_users(names.iter().map(String::as_str));
                Ok(Self {
                    labeled: d.labeled(),
                    graph: d.graph,
                    corpus,
                    lexicon: Some(d.lexicon),
                    edge_times: Some(d.edge_times),
                    months: Some(d.months),
                    inputs: Vec::new(),
                })
            }
            DataSource::Files(f) => {
                let edges = read_edges(&f.edges)?;
                let corpus = read_corpus(&f.posts)?;
                let label_rows = read_labels(&f.labels)?;
                let extra: Vec<String> = corpus
                    .users()
                    .iter()
                    .map(|u| u.user.clone())
                    .chain(label_rows.iter().map(|r| r.user.clone()))
                    .collect();
                let refs: Vec<(&str, &str, Option<f64>)> =
                    edges.iter().map(|(s, d, w)| (s.as_str(), d.as_str(), *w)).collect();
                let graph = DirectedGraph::from_labeled_edges(extra.iter().map(String::as_str), &refs)?;
                let names = graph.ids().map(|i| i.names().to_vec()).unwrap_or_default();
                let corpus = corpus.with_users(names.iter().map(String::as_str));
                let labeled = resolve(&label_rows, &graph)?;
                let mut inputs = vec![f.edges.clone(), f.posts.clone(), f.labels.clone()];
                let lexicon = match &f.lexicon {
                    Some(p) => {
                        inputs.push(p.clone());
                        Some(Lexicon::load(p)?)
                    }
                    None => None,
                };
                let edge_times = match &f.edge_times {
                    Some(p) => {
                        inputs.push(p.clone());
                        Some(read_edge_times(p, &graph)?)
                    }
                    None => None,
                };
                Ok(Self {
                    graph,
                    corpus,
                    labeled,
                    lexicon,
                    edge_times,
                    months: None,
                    inputs,
                })
            }
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn node_names(&self) -> Vec<String> {
        (0..self.num_nodes()).map(|i| self.graph.node_name(i)).collect()
    }

    /// Labels indexed by node; unlabeled nodes read as non-hateful and must
    /// never be used as supervision.
    pub fn label_vector(&self) -> Vec<u8> {
        let mut out = vec![crate::NON_HATEFUL; self.num_nodes()];
        for &(v, c) in &self.labeled {
            out[v] = c;
        }
        out
    }
}

/// A fitted feature extractor.
#[derive(Debug, Clone)]
pub enum FeatureModel {
    Doc2vec(Doc2vecModel),
    Pretrained(WordVectors),
    /// Node embeddings belong to one graph and do not transfer.
    NodeEmbed(NodeEmbedding),
}

impl FeatureModel {
    /// Features for `corpus` under this model; doc2vec infers fresh vectors.
    pub fn apply(&self, corpus: &UserCorpus) -> Result<Matrix> {
        match self {
            FeatureModel::Doc2vec(m) => Ok(infer_matrix(m, &build_documents(corpus))),
            FeatureModel::Pretrained(v) => Ok(pretrained_matrix(v, corpus)),
            FeatureModel::NodeEmbed(_) => Err(Error::InvalidInput(
                "node embeddings cannot be applied to another graph".into(),
            )),
        }
    }

    /// Container for `embed`; pooled pretrained features store the matrix
    /// `x` they produced.
    pub fn to_container(&self, names: Vec<String>, x: &Matrix) -> Result<EmbeddingContainer> {
        match self {
            FeatureModel::Doc2vec(m) => m.to_container(),
            FeatureModel::Pretrained(_) => Ok(EmbeddingContainer {
                dim: x.ncols(),
                vocab: Vec::new(),
                meta: serde_json::json!({ "kind": "pretrained-mean" }),
                tags: names,
                matrices: vec![NamedMatrix {
                    name: "user_vectors".into(),
                    rows: x.nrows(),
                    cols: x.ncols(),
                    data: x.iter().map(|&v| v as f32).collect(),
                }],
            }),
            FeatureModel::NodeEmbed(e) => e.to_container(names),
        }
    }
}

fn pretrained_matrix(v: &WordVectors, corpus: &UserCorpus) -> Matrix {
    let rows: Vec<Vec<f64>> = corpus
        .users()
        .iter()
        .map(|u| {
            let tokens: Vec<String> = u.posts.iter().flat_map(|p| preprocess(&p.text)).collect();
            mean_pool(&tokens, v)
        })
        .collect();
    Matrix::from_shape_vec((rows.len(), v.dim), rows.into_iter().flatten().collect()).expect("rows of dim d")
}

/// Fits the configured feature source on `ds` and returns one row per node.
pub fn build_features(ds: &Dataset, cfg: &FeatureConfig) -> Result<(Matrix, FeatureModel, Vec<PathBuf>)> {
    match cfg.source {
        FeatureSource::Doc2vec => {
            let model = train_doc2vec(&build_documents(&ds.corpus), &cfg.doc2vec)?;
            Ok((model.doc_matrix(), FeatureModel::Doc2vec(model), Vec::new()))
        }
        FeatureSource::PretrainedMean => {
            let path = cfg
                .pretrained
                .clone()
                .ok_or_else(|| Error::InvalidInput("no pretrained vectors configured".into()))?;
            let v = load_word_embeddings(&path)?;
            Ok((pretrained_matrix(&v, &ds.corpus), FeatureModel::Pretrained(v), vec![path]))
        }
        FeatureSource::NodeEmbed => {
            let e = embed_nodes(&ds.graph, &cfg.node_embed.config(cfg.node_embed.kind))?;
            Ok((e.matrix.clone(), FeatureModel::NodeEmbed(e), Vec::new()))
        }
    }
}
