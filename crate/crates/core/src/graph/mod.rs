//! Directed sparse graphs over dense node ids.

mod extract;
pub mod io;
mod sparse;

use std::collections::{BTreeSet, HashMap};

use crate::error::{invalid, Result};

pub use extract::{extract_1_5_degree, Subgraph};
pub use sparse::{normalize, spmm, CsrMatrix, NormKind, NormalizedAdjacency};

/// Bidirectional table between external string ids and dense `0..n` ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IdMap {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl IdMap {
    pub fn new(names: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(invalid(format!("duplicate node id {name:?}")));
            }
        }
        Ok(Self { names, index })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Directed graph in compressed sparse row form.
///
/// Column indices are strictly increasing within each row, weights are finite
/// and non-negative, and every `(src, dst)` pair appears at most once.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedGraph {
    num_nodes: usize,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
    ids: Option<IdMap>,
}

impl DirectedGraph {
    /// Builds a graph over dense ids `0..num_nodes`. Duplicate edges merge by
    /// summing their weights; self-loops are kept as given.
    pub fn from_edges(num_nodes: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        for &(s, d, w) in edges {
            if s >= num_nodes || d >= num_nodes {
                return Err(invalid(format!(
                    "edge ({s},{d}) out of range for {num_nodes} nodes"
                )));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(invalid(format!("edge ({s},{d}) has invalid weight {w}")));
            }
        }
        let mut sorted = edges.to_vec();
        sorted.sort_by_key(|a| (a.0, a.1));
        Ok(Self::from_sorted(num_nodes, sorted.into_iter(), |a, b| a + b))
    }

    /// Builds a graph from edges keyed by external ids. Nodes are the union of
    /// `nodes` and edge endpoints; dense ids follow the sorted external ids so
    /// the result does not depend on input order. Missing weights count as 1.
    pub fn from_labeled_edges<S: AsRef<str>>(
        nodes: impl IntoIterator<Item = S>,
        edges: &[(S, S, Option<f64>)],
    ) -> Result<Self> {
        let mut all: BTreeSet<String> = nodes.into_iter().map(|s| s.as_ref().to_owned()).collect();
        for (s, d, _) in edges {
            all.insert(s.as_ref().to_owned());
            all.insert(d.as_ref().to_owned());
        }
        let ids = IdMap::new(all.into_iter().collect())?;
        let dense: Vec<(usize, usize, f64)> = edges
            .iter()
            .map(|(s, d, w)| {
                (
                    ids.get(s.as_ref()).expect("inserted above"),
                    ids.get(d.as_ref()).expect("inserted above"),
                    w.unwrap_or(1.0),
                )
            })
            .collect();
        let mut g = Self::from_edges(ids.len(), &dense)?;
        g.ids = Some(ids);
        Ok(g)
    }

    fn from_sorted(
        num_nodes: usize,
        edges: impl Iterator<Item = (usize, usize, f64)>,
        merge: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let mut offsets = vec![0usize; num_nodes + 1];
        let mut targets = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for (s, d, w) in edges {
            if last == Some((s, d)) {
                let lw = weights.last_mut().expect("previous edge");
                *lw = merge(*lw, w);
                continue;
            }
            offsets[s + 1] += 1;
            targets.push(d);
            weights.push(w);
            last = Some((s, d));
        }
        for i in 0..num_nodes {
            offsets[i + 1] += offsets[i];
        }
        Self {
            num_nodes,
            offsets,
            targets,
            weights,
            ids: None,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.targets.len()
    }

    pub fn ids(&self) -> Option<&IdMap> {
        self.ids.as_ref()
    }

    /// Attaches an external id table; its length must equal the node count.
    pub fn with_ids(mut self, ids: IdMap) -> Result<Self> {
        if ids.len() != self.num_nodes {
            return Err(invalid(format!(
                "id table has {} entries for {} nodes",
                ids.len(),
                self.num_nodes
            )));
        }
        self.ids = Some(ids);
        Ok(self)
    }

    /// External name of a node, or its dense id rendered as text.
    pub fn node_name(&self, id: usize) -> String {
        match &self.ids {
            Some(m) => m.name(id).to_owned(),
            None => id.to_string(),
        }
    }

    pub fn out_neighbors(&self, u: usize) -> &[usize] {
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn out_weights(&self, u: usize) -> &[f64] {
        &self.weights[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn out_degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.out_neighbors(u).binary_search(&v).is_ok()
    }

    pub fn edge_weight(&self, u: usize, v: usize) -> Option<f64> {
        self.out_neighbors(u)
            .binary_search(&v)
            .ok()
            .map(|i| self.out_weights(u)[i])
    }

    /// All edges as `(src, dst, weight)` in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.num_nodes).flat_map(move |u| {
            self.out_neighbors(u)
                .iter()
                .zip(self.out_weights(u))
                .map(move |(&v, &w)| (u, v, w))
        })
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_nodes];
        for &v in &self.targets {
            deg[v] += 1;
        }
        deg
    }

    /// Graph with every edge `(u, v, w)` replaced by `(v, u, w)`.
    pub fn reverse(&self) -> Self {
        let mut rev: Vec<(usize, usize, f64)> = self.edges().map(|(u, v, w)| (v, u, w)).collect();
        rev.sort_by_key(|a| (a.0, a.1));
        let mut g = Self::from_sorted(self.num_nodes, rev.into_iter(), |a, b| a + b);
        g.ids = self.ids.clone();
        g
    }

    /// Undirected view: `(u, v)` is present iff `(u, v)` or `(v, u)` is. When
    /// both directions exist the larger weight wins.
    pub fn symmetrize(&self) -> Self {
        let mut both: Vec<(usize, usize, f64)> = self
            .edges()
            .flat_map(|(u, v, w)| [(u, v, w), (v, u, w)])
            .collect();
        both.sort_by_key(|a| (a.0, a.1));
        let mut g = Self::from_sorted(self.num_nodes, both.into_iter(), f64::max);
        g.ids = self.ids.clone();
        g
    }

    /// Copy of the graph where every node has a self-loop; existing self-loops
    /// are left untouched.
    pub fn with_self_loops(&self) -> Self {
        let mut all: Vec<(usize, usize, f64)> = self.edges().collect();
        for u in 0..self.num_nodes {
            if !self.has_edge(u, u) {
                all.push((u, u, 1.0));
            }
        }
        all.sort_by_key(|a| (a.0, a.1));
        let mut g = Self::from_sorted(self.num_nodes, all.into_iter(), |a, _| a);
        g.ids = self.ids.clone();
        g
    }

    /// Copy without self-loops.
    pub fn without_self_loops(&self) -> Self {
        let kept = self.edges().filter(|&(u, v, _)| u != v);
        let mut g = Self::from_sorted(self.num_nodes, kept, |a, _| a);
        g.ids = self.ids.clone();
        g
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.num_nodes {
            return Err(invalid("permutation length differs from node count"));
        }
        let edges: Vec<_> = self.edges().map(|(u, v, w)| (perm[u], perm[v], w)).collect();
        Self::from_edges(self.num_nodes, &edges)
    }

    /// Induced subgraph on `keep` (sorted, unique). Node `i` of the result is
    /// `keep[i]` of the input.
    pub fn induced(&self, keep: &[usize]) -> Self {
        let mut new_id = vec![usize::MAX; self.num_nodes];
        for (i, &u) in keep.iter().enumerate() {
            new_id[u] = i;
        }
        let edges = keep.iter().flat_map(|&u| {
            let nu = new_id[u];
            let new_id = &new_id;
            self.out_neighbors(u)
                .iter()
                .zip(self.out_weights(u))
                .filter(move |(&v, _)| new_id[v] != usize::MAX)
                .map(move |(&v, &w)| (nu, new_id[v], w))
        });
        let collected: Vec<_> = edges.collect();
        let mut g = Self::from_sorted(keep.len(), collected.into_iter(), |a, _| a);
        if let Some(ids) = &self.ids {
            let names = keep.iter().map(|&u| ids.name(u).to_owned()).collect();
            g.ids = Some(IdMap::new(names).expect("subset of unique ids"));
        }
        g
    }

    /// Raw CSR arrays `(offsets, targets, weights)`.
    pub fn csr(&self) -> (&[usize], &[usize], &[f64]) {
        (&self.offsets, &self.targets, &self.weights)
    }

    /// Undirected neighbors (in or out), excluding `u` itself, sorted.
    pub fn undirected_neighbors(&self, u: usize, reverse: &DirectedGraph) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .out_neighbors(u)
            .iter()
            .chain(reverse.out_neighbors(u))
            .copied()
            .filter(|&v| v != u)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}
