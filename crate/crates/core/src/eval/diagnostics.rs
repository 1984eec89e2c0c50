//! Probes of what a trained classifier relies on.

use std::collections::{HashSet, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::posthoc::Lexicon;
use crate::text::Post;
use crate::{Matrix, HATEFUL, NON_HATEFUL};

/// Fraction of `nodes` predicted `class` in `original` that are still
/// predicted `class` in `modified`; `None` if none were predicted `class`.
pub fn retained_fraction(original: &[u8], modified: &[u8], nodes: &[usize], class: u8) -> Option<f64> {
    let correct: Vec<usize> = nodes.iter().copied().filter(|&v| original[v] == class).collect();
    if correct.is_empty() {
        return None;
    }
    let kept = correct.iter().filter(|&&v| modified[v] == class).count();
    Some(kept as f64 / correct.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwapOutcome {
    /// Hateful test nodes correctly classified before the swap.
    pub hateful_correct: usize,
    pub non_hateful_correct: usize,
    /// Share of those still correct after their features were replaced by the
    /// mean feature row of the other class.
    pub hateful_retained: Option<f64>,
    pub non_hateful_retained: Option<f64>,
}

fn mean_row(x: &Matrix, nodes: &[usize]) -> ndarray::Array1<f64> {
    x.select(ndarray::Axis(0), nodes)
        .mean_axis(ndarray::Axis(0))
        .unwrap_or_else(|| ndarray::Array1::zeros(x.ncols()))
}

/// Replaces every hateful test node's features with the mean features of the
/// non-hateful test nodes and measures how many correct hateful predictions
/// survive, then does the same with the classes exchanged. The two swaps are
/// run separately; the graph is untouched.
pub fn embedding_swap_diagnostic(
    predict: impl Fn(&Matrix) -> Result<Vec<u8>>,
    x: &Matrix,
    hateful: &[usize],
    non_hateful: &[usize],
) -> Result<SwapOutcome> {
    if hateful.is_empty() || non_hateful.is_empty() {
        return Err(Error::Empty("swap diagnostic needs test nodes of both classes".into()));
    }
    let original = predict(x)?;
    let swapped = |targets: &[usize], donors: &[usize]| -> Result<Vec<u8>> {
        let mean = mean_row(x, donors);
        let mut xs = x.clone();
        for &v in targets {
            xs.row_mut(v).assign(&mean);
        }
        predict(&xs)
    };
    let after_h = swapped(hateful, non_hateful)?;
    let after_n = swapped(non_hateful, hateful)?;
    let correct = |nodes: &[usize], class| nodes.iter().filter(|&&v| original[v] == class).count();
    Ok(SwapOutcome {
        hateful_correct: correct(hateful, HATEFUL),
        non_hateful_correct: correct(non_hateful, NON_HATEFUL),
        hateful_retained: retained_fraction(&original, &after_h, hateful, HATEFUL),
        non_hateful_retained: retained_fraction(&original, &after_n, non_hateful, NON_HATEFUL),
    })
}

/// Share of hateful nodes among those within `radius` hops of `node`,
/// following edges in either direction, `node` itself excluded. `None` when
/// the node has no neighbors.
pub fn neighbor_composition(g: &DirectedGraph, labels: &[u8], node: usize, radius: usize) -> Option<f64> {
    if node >= g.num_nodes() {
        return None;
    }
    let rev = g.reverse();
    let mut seen = HashSet::from([node]);
    let mut queue = VecDeque::from([(node, 0usize)]);
    let (mut total, mut hateful) = (0usize, 0usize);
    while let Some((u, d)) = queue.pop_front() {
        if d == radius {
            continue;
        }
        for &v in g.out_neighbors(u).iter().chain(rev.out_neighbors(u)) {
            if seen.insert(v) {
                total += 1;
                hateful += usize::from(labels.get(v) == Some(&HATEFUL));
                queue.push_back((v, d + 1));
            }
        }
    }
    (total > 0).then(|| hateful as f64 / total as f64)
}

/// Percent of `posts` containing any lexicon term.
pub fn hl_post_rate(posts: &[Post], lexicon: &Lexicon) -> Result<f64> {
    if posts.is_empty() {
        return Err(Error::Empty("user has no posts".into()));
    }
    let hits = posts.iter().filter(|p| lexicon.hits(&p.text)).count();
    Ok(100.0 * hits as f64 / posts.len() as f64)
}
