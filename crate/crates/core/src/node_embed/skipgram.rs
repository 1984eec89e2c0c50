//! Skip-gram with negative sampling over node walks.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::sgns::{decayed_lr, sgns_step, unigram_table};
use crate::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SkipGramParams {
    pub dim: usize,
    pub negative: usize,
    pub epochs: usize,
    pub window: usize,
    pub alpha: f64,
    pub min_alpha: f64,
    pub seed: u64,
}

impl Default for SkipGramParams {
    fn default() -> Self {
        Self {
            dim: 128,
            negative: 5,
            epochs: 5,
            window: 10,
            alpha: 0.025,
            min_alpha: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkipGramOutput {
    /// Input (center) vectors, one row per node.
    pub vectors: Matrix,
    /// Mean per-pair loss of each epoch.
    pub epoch_loss: Vec<f64>,
    pub pairs_per_epoch: u64,
}

/// Trains node vectors for ids `0..num_nodes`. Context offsets follow the
/// word2vec reduced-window scheme: each center draws an effective radius in
/// `1..=window`. Nodes that never occur in a walk keep their random init.
pub fn train_skipgram(walks: &[Vec<usize>], num_nodes: usize, params: &SkipGramParams) -> Result<SkipGramOutput> {
    if walks.is_empty() {
        return Err(Error::Empty("no walks to train on".into()));
    }
    if params.dim == 0 || params.epochs == 0 || params.window == 0 {
        return Err(Error::InvalidInput("dim, epochs and window must be positive".into()));
    }
    if let Some(bad) = walks.iter().flatten().find(|&&v| v >= num_nodes) {
        return Err(Error::InvalidInput(format!("walk visits node {bad} outside 0..{num_nodes}")));
    }
    let mut counts = vec![0u64; num_nodes];
    for &v in walks.iter().flatten() {
        counts[v] += 1;
    }
    let negatives = unigram_table(&counts).ok_or_else(|| Error::Empty("walks are empty".into()))?;
    let d = params.dim;
    let mut r = rng::named(params.seed, "skipgram");
    let half = 0.5 / d as f64;
    let mut input: Vec<f64> = (0..num_nodes * d).map(|_| r.random_range(-half..half)).collect();
    let mut output = vec![0.0; num_nodes * d];

    // expected number of steps, used only to drive the learning-rate decay
    let positions: u64 = walks.iter().map(|w| w.len() as u64).sum();
    let total = positions * params.epochs as u64;
    let mut order: Vec<usize> = (0..walks.len()).collect();
    let mut negs = vec![0usize; params.negative];
    let mut step = 0u64;
    let mut epoch_loss = Vec::with_capacity(params.epochs);
    let mut pairs_per_epoch = 0;
    for _ in 0..params.epochs {
        order.shuffle(&mut r);
        let mut loss = 0.0;
        let mut pairs = 0u64;
        for &wi in &order {
            let walk = &walks[wi];
            for (i, &center) in walk.iter().enumerate() {
                let lr = decayed_lr(params.alpha, params.min_alpha, step, total);
                step += 1;
                let radius = r.random_range(1..=params.window);
                let lo = i.saturating_sub(radius);
                let hi = (i + radius).min(walk.len() - 1);
                for (j, &context) in walk.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    for n in negs.iter_mut() {
                        *n = negatives.sample(&mut r);
                    }
                    loss += sgns_step(&mut input, &mut output, d, center, context, &negs, lr);
                    pairs += 1;
                }
            }
        }
        pairs_per_epoch = pairs;
        epoch_loss.push(if pairs > 0 { loss / pairs as f64 } else { 0.0 });
    }
    let vectors = Matrix::from_shape_vec((num_nodes, d), input).expect("shape matches allocation");
    Ok(SkipGramOutput {
        vectors,
        epoch_loss,
        pairs_per_epoch,
    })
}
