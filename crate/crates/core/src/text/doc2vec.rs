//! PV-DBOW paragraph vectors: each document vector is trained to predict the
//! words of its document through a shared output matrix with negative
//! sampling. Word input vectors are never trained.

use std::collections::HashMap;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::UserDocument;
use crate::container::{EmbeddingContainer, NamedMatrix};
use crate::error::{Error, Result};
use crate::rng;
use crate::sgns::{decayed_lr, sgns_step, sgns_step_frozen, unigram_table, AliasTable};
use crate::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Doc2vecParams {
    pub dim: usize,
    pub negative: usize,
    pub epochs: usize,
    pub alpha: f64,
    pub min_alpha: f64,
    pub min_count: u64,
    pub infer_epochs: usize,
    pub seed: u64,
}

impl Default for Doc2vecParams {
    fn default() -> Self {
        Self {
            dim: 100,
            negative: 5,
            epochs: 10,
            alpha: 0.025,
            min_alpha: 0.0001,
            min_count: 2,
            infer_epochs: 50,
            seed: 0,
        }
    }
}

/// Word list ordered by descending count, ties by word.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn build<'a>(tokens: impl IntoIterator<Item = &'a String>, min_count: u64) -> Self {
        let mut freq: HashMap<&str, u64> = HashMap::new();
        for t in tokens {
            *freq.entry(t.as_str()).or_default() += 1;
        }
        let mut kept: Vec<(&str, u64)> = freq.into_iter().filter(|&(_, c)| c >= min_count).collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        Self::from_pairs(kept.into_iter().map(|(w, c)| (w.to_owned(), c)).collect())
    }

    fn from_pairs(pairs: Vec<(String, u64)>) -> Self {
        let index = pairs.iter().enumerate().map(|(i, (w, _))| (w.clone(), i)).collect();
        let (words, counts) = pairs.into_iter().unzip();
        Self { words, counts, index }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().filter_map(|t| self.get(t)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Doc2vecModel {
    pub params: Doc2vecParams,
    pub vocab: Vocab,
    /// Document tags (user ids), one per row of the document matrix.
    pub tags: Vec<String>,
    doc_vectors: Vec<f64>,
    output: Vec<f64>,
    negatives: AliasTable,
    /// Mean per-example loss of each training epoch.
    pub epoch_loss: Vec<f64>,
}

impl PartialEq for Doc2vecModel {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params
            && self.vocab == other.vocab
            && self.tags == other.tags
            && self.doc_vectors == other.doc_vectors
            && self.output == other.output
    }
}

impl Doc2vecModel {
    pub fn dim(&self) -> usize {
        self.params.dim
    }

    /// Trained document vectors, one row per tag.
    pub fn doc_matrix(&self) -> Matrix {
        Array2::from_shape_vec((self.tags.len(), self.dim()), self.doc_vectors.clone())
            .expect("consistent shape")
    }

    pub fn doc_vector(&self, row: usize) -> &[f64] {
        &self.doc_vectors[row * self.dim()..(row + 1) * self.dim()]
    }

    pub fn output_matrix(&self) -> &[f64] {
        &self.output
    }

    pub fn to_container(&self) -> Result<EmbeddingContainer> {
        let d = self.dim();
        let f32s = |v: &[f64]| v.iter().map(|&x| x as f32).collect::<Vec<f32>>();
        Ok(EmbeddingContainer {
            dim: d,
            vocab: self
                .vocab
                .words
                .iter()
                .cloned()
                .zip(self.vocab.counts.iter().copied())
                .collect(),
            meta: serde_json::json!({ "kind": "doc2vec-pv-dbow", "params": self.params }),
            tags: self.tags.clone(),
            matrices: vec![
                NamedMatrix {
                    name: "doc_vectors".into(),
                    rows: self.tags.len(),
                    cols: d,
                    data: f32s(&self.doc_vectors),
                },
                NamedMatrix {
                    name: "output_words".into(),
                    rows: self.vocab.len(),
                    cols: d,
                    data: f32s(&self.output),
                },
            ],
        })
    }

    pub fn from_container(c: &EmbeddingContainer) -> Result<Self> {
        let params: Doc2vecParams = serde_json::from_value(
            c.meta
                .get("params")
                .cloned()
                .ok_or_else(|| Error::Container("missing doc2vec params".into()))?,
        )?;
        let get = |name: &str| {
            c.matrix(name)
                .ok_or_else(|| Error::Container(format!("missing matrix {name}")))
                .map(|m| m.data.iter().map(|&x| f64::from(x)).collect::<Vec<f64>>())
        };
        let vocab = Vocab::from_pairs(c.vocab.clone());
        let negatives = unigram_table(vocab.counts())
            .ok_or_else(|| Error::Container("empty vocabulary".into()))?;
        let model = Self {
            params,
            vocab,
            tags: c.tags.clone(),
            doc_vectors: get("doc_vectors")?,
            output: get("output_words")?,
            negatives,
            epoch_loss: Vec::new(),
        };
        if model.output.len() != model.vocab.len() * model.dim()
            || model.doc_vectors.len() != model.tags.len() * model.dim()
        {
            return Err(Error::Container("doc2vec matrix shapes disagree with header".into()));
        }
        Ok(model)
    }
}

fn init_vector(r: &mut rng::Rng, dim: usize) -> Vec<f64> {
    let half = 0.5 / dim as f64;
    (0..dim).map(|_| r.random_range(-half..half)).collect()
}

pub fn train_doc2vec(documents: &[UserDocument], params: &Doc2vecParams) -> Result<Doc2vecModel> {
    if documents.len() < 2 {
        return Err(Error::InvalidInput("doc2vec needs at least two documents".into()));
    }
    if params.dim == 0 || params.epochs == 0 {
        return Err(Error::InvalidInput("dim and epochs must be positive".into()));
    }
    let vocab = Vocab::build(documents.iter().flat_map(|d| &d.tokens), params.min_count);
    let negatives = unigram_table(vocab.counts())
        .ok_or_else(|| Error::Empty("vocabulary is empty after min-count filtering".into()))?;
    let d = params.dim;
    let encoded: Vec<Vec<usize>> = documents.iter().map(|doc| vocab.encode(&doc.tokens)).collect();
    let mut r = rng::named(params.seed, "doc2vec");
    let mut doc_vectors: Vec<f64> = Vec::with_capacity(documents.len() * d);
    for _ in documents {
        doc_vectors.extend(init_vector(&mut r, d));
    }
    let mut output = vec![0.0; vocab.len() * d];
    let per_epoch: u64 = encoded.iter().map(|e| e.len() as u64).sum();
    let total = per_epoch * params.epochs as u64;
    let mut order: Vec<usize> = (0..documents.len()).collect();
    let mut negs = vec![0usize; params.negative];
    let mut step = 0u64;
    let mut epoch_loss = Vec::with_capacity(params.epochs);
    for _ in 0..params.epochs {
        order.shuffle(&mut r);
        let mut loss = 0.0;
        for &doc in &order {
            for &w in &encoded[doc] {
                let lr = decayed_lr(params.alpha, params.min_alpha, step, total);
                for n in negs.iter_mut() {
                    *n = negatives.sample(&mut r);
                }
                loss += sgns_step(&mut doc_vectors, &mut output, d, doc, w, &negs, lr);
                step += 1;
            }
        }
        epoch_loss.push(if per_epoch > 0 { loss / per_epoch as f64 } else { 0.0 });
    }
    Ok(Doc2vecModel {
        params: params.clone(),
        vocab,
        tags: documents.iter().map(|d| d.user.clone()).collect(),
        doc_vectors,
        output,
        negatives,
        epoch_loss,
    })
}

/// Fits a fresh vector for `tokens` against the frozen output matrix.
/// Out-of-vocabulary tokens are skipped; a document with no known tokens maps
/// to the zero vector.
pub fn infer_doc_vector(model: &Doc2vecModel, tokens: &[String]) -> Vec<f64> {
    let d = model.dim();
    let encoded = model.vocab.encode(tokens);
    if encoded.is_empty() {
        log::warn!("document has no in-vocabulary tokens; using the zero vector");
        return vec![0.0; d];
    }
    let mut r = rng::rng(rng::substream(model.params.seed, &tokens.join(" ")));
    let mut vector = init_vector(&mut r, d);
    let total = (encoded.len() * model.params.infer_epochs) as u64;
    let mut negs = vec![0usize; model.params.negative];
    let mut step = 0u64;
    for _ in 0..model.params.infer_epochs {
        for &w in &encoded {
            let lr = decayed_lr(model.params.alpha, model.params.min_alpha, step, total);
            for n in negs.iter_mut() {
                *n = model.negatives.sample(&mut r);
            }
            sgns_step_frozen(&mut vector, &model.output, d, w, &negs, lr);
            step += 1;
        }
    }
    vector
}

/// Infers vectors for many documents in parallel; row order follows input.
pub fn infer_matrix(model: &Doc2vecModel, docs: &[UserDocument]) -> Matrix {
    use rayon::prelude::*;
    let rows: Vec<Vec<f64>> = docs.par_iter().map(|doc| infer_doc_vector(model, &doc.tokens)).collect();
    let d = model.dim();
    Array2::from_shape_vec((docs.len(), d), rows.into_iter().flatten().collect()).expect("rows of dim d")
}
