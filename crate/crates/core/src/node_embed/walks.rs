//! Uniform (DeepWalk) and second-order p/q-biased (node2vec) random walks.

use std::io::{BufRead, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WalkKind {
    DeepWalk,
    Node2vec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WalkConfig {
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub window: usize,
    /// Return parameter; only read by node2vec.
    pub p: f64,
    /// In-out parameter; only read by node2vec.
    pub q: f64,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            walks_per_node: 10,
            walk_length: 80,
            window: 10,
            p: 1.0,
            q: 1.0,
            seed: 0,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.walks_per_node == 0 || self.walk_length == 0 || self.window == 0 {
            return Err(Error::InvalidInput(
                "walks_per_node, walk_length and window must be at least 1".into(),
            ));
        }
        if !(self.p > 0.0 && self.q > 0.0 && self.p.is_finite() && self.q.is_finite()) {
            return Err(Error::InvalidInput("p and q must be positive and finite".into()));
        }
        Ok(())
    }
}

fn weighted_pick(r: &mut rng::Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = r.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if x < w {
            return i;
        }
        x -= w;
    }
    // rounding left x just above the last cumulative boundary
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

fn walk_from(g: &DirectedGraph, start: usize, cfg: &WalkConfig, kind: WalkKind, r: &mut rng::Rng) -> Vec<usize> {
    let mut walk = Vec::with_capacity(cfg.walk_length);
    walk.push(start);
    let mut scratch = Vec::new();
    while walk.len() < cfg.walk_length {
        let cur = *walk.last().expect("walk is nonempty");
        let nbrs = g.out_neighbors(cur);
        if nbrs.is_empty() {
            break;
        }
        let next = match (kind, walk.len()) {
            (WalkKind::DeepWalk, _) => nbrs[r.random_range(0..nbrs.len())],
            (WalkKind::Node2vec, 1) => nbrs[weighted_pick(r, g.out_weights(cur))],
            (WalkKind::Node2vec, len) => {
                let prev = walk[len - 2];
                scratch.clear();
                scratch.extend(nbrs.iter().zip(g.out_weights(cur)).map(|(&x, &w)| {
                    let bias = if x == prev {
                        1.0 / cfg.p
                    } else if g.has_edge(prev, x) {
                        1.0
                    } else {
                        1.0 / cfg.q
                    };
                    w * bias
                }));
                nbrs[weighted_pick(r, &scratch)]
            }
        };
        walk.push(next);
    }
    walk
}

/// `walks_per_node` walks from every node, ordered by (start node, walk
/// index). Each walk draws from its own stream keyed by (seed, node, walk), so
/// the output does not depend on thread scheduling. Walks stop early at sinks.
pub fn generate_walks(g: &DirectedGraph, cfg: &WalkConfig, kind: WalkKind) -> Result<Vec<Vec<usize>>> {
    cfg.validate()?;
    if g.num_nodes() == 0 {
        return Err(Error::Empty("cannot walk an empty graph".into()));
    }
    let stream = rng::substream(cfg.seed, "walks");
    Ok((0..g.num_nodes())
        .into_par_iter()
        .flat_map_iter(|node| {
            (0..cfg.walks_per_node).map(move |k| {
                let mut r = rng::rng(rng::indexed(stream, &[node as u64, k as u64]));
                walk_from(g, node, cfg, kind, &mut r)
            })
        })
        .collect())
}

/// One walk per line, node ids separated by spaces.
pub fn write_walks(walks: &[Vec<usize>], mut w: impl Write) -> Result<()> {
    for walk in walks {
        let line: Vec<String> = walk.iter().map(usize::to_string).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn read_walks(reader: impl BufRead, origin: &str) -> Result<Vec<Vec<usize>>> {
    let mut walks = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let walk = line
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>().map_err(|_| Error::Parse {
                    path: origin.to_owned(),
                    line: i + 1,
                    message: format!("bad node id {t:?}"),
                })
            })
            .collect::<Result<Vec<usize>>>()?;
        if !walk.is_empty() {
            walks.push(walk);
        }
    }
    Ok(walks)
}
