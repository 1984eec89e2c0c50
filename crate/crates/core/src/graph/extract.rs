use super::DirectedGraph;
use crate::error::{Error, Result};

/// A subgraph together with the original id of each of its nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Subgraph {
    pub graph: DirectedGraph,
    /// `original[i]` is the id in the parent graph of subgraph node `i`.
    pub original: Vec<usize>,
}

/// The 1.5-degree network around `seeds`: seeds plus their in- and
/// out-neighbors, minus non-seed nodes with fewer than `min_posts` posts, and
/// every edge between retained nodes.
pub fn extract_1_5_degree(
    g: &DirectedGraph,
    seeds: &[usize],
    min_posts: usize,
    post_counts: &[usize],
) -> Result<Subgraph> {
    let n = g.num_nodes();
    if post_counts.len() != n {
        return Err(Error::Shape(format!(
            "{} post counts for {} nodes",
            post_counts.len(),
            n
        )));
    }
    let mut is_seed = vec![false; n];
    for &s in seeds {
        if s >= n {
            return Err(Error::InvalidInput(format!("seed {s} not in graph")));
        }
        is_seed[s] = true;
    }
    let rev = g.reverse();
    let mut keep = is_seed.clone();
    for &s in seeds {
        for &v in g.out_neighbors(s).iter().chain(rev.out_neighbors(s)) {
            keep[v] = true;
        }
    }
    let kept: Vec<usize> = (0..n)
        .filter(|&u| keep[u] && (is_seed[u] || post_counts[u] >= min_posts))
        .collect();
    if kept.is_empty() {
        return Err(Error::Empty("1.5-degree network has no nodes".into()));
    }
    Ok(Subgraph {
        graph: g.induced(&kept),
        original: kept,
    })
}
