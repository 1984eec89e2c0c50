//! Belief-diffusion seed sampling.
//!
//! A repost graph is turned into a row-stochastic belief operator, hate-belief
//! scores diffuse from seed users for a fixed number of synchronous steps, the
//! scores are split into low/medium/high tiers by exact 1-D k-means, and a
//! fixed number of sufficiently active users is sampled from each tier.

use std::io::Write;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::graph::{normalize, DirectedGraph, NormKind, NormalizedAdjacency};
use crate::rng;

/// Per-node belief scores after `iteration` diffusion steps.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefVector {
    pub values: Vec<f64>,
    pub iteration: usize,
}

/// Reverses the repost edges and row-normalizes them. Rows left empty get a
/// unit self-loop.
pub fn build_belief_network(repost_graph: &DirectedGraph) -> NormalizedAdjacency {
    normalize(&repost_graph.reverse(), NormKind::RowStochastic)
}

/// Synchronous diffusion `b <- W b` starting from the seed indicator. No
/// clamping and no damping.
pub fn diffuse(op: &NormalizedAdjacency, seeds: &[usize], iterations: usize) -> Result<BeliefVector> {
    if op.kind != NormKind::RowStochastic {
        return Err(Error::InvalidInput("diffusion needs a row-stochastic operator".into()));
    }
    if iterations == 0 {
        return Err(Error::InvalidInput("iterations must be at least 1".into()));
    }
    let n = op.num_nodes();
    let mut b = vec![0.0; n];
    for &s in seeds {
        if s >= n {
            return Err(Error::InvalidInput(format!("seed {s} not in graph")));
        }
        b[s] = 1.0;
    }
    for _ in 0..iterations {
        b = op.matrix.matvec(&b);
    }
    Ok(BeliefVector {
        values: b,
        iteration: iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Tier {
    Low,
    Medium,
    High,
}

impl Tier {
    pub fn from_index(i: usize) -> Option<Self> {
        [Tier::Low, Tier::Medium, Tier::High].get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Tier::Low => "low",
            Tier::Medium => "medium",
            Tier::High => "high",
        }
    }
}

/// Cluster index per node plus ascending centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct TierAssignment {
    pub tier: Vec<usize>,
    pub centroids: Vec<f64>,
    /// Within-cluster sum of squared deviations.
    pub cost: f64,
}

impl TierAssignment {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn members(&self, t: usize) -> Vec<usize> {
        (0..self.tier.len()).filter(|&i| self.tier[i] == t).collect()
    }

    pub fn label(&self, t: usize) -> String {
        match (self.k(), Tier::from_index(t)) {
            (3, Some(tier)) => tier.name().to_owned(),
            _ => format!("tier{t}"),
        }
    }
}

/// Weighted prefix sums over sorted distinct values, for O(1) segment costs.
struct Segments {
    w: Vec<f64>,
    s1: Vec<f64>,
    s2: Vec<f64>,
}

impl Segments {
    fn new(values: &[f64], weights: &[f64], shift: f64) -> Self {
        let m = values.len();
        let (mut w, mut s1, mut s2) = (vec![0.0; m + 1], vec![0.0; m + 1], vec![0.0; m + 1]);
        for i in 0..m {
            let x = values[i] - shift;
            w[i + 1] = w[i] + weights[i];
            s1[i + 1] = s1[i] + weights[i] * x;
            s2[i + 1] = s2[i] + weights[i] * x * x;
        }
        Self { w, s1, s2 }
    }

    /// Cost of the inclusive segment `i..=j`.
    fn cost(&self, i: usize, j: usize) -> f64 {
        let w = self.w[j + 1] - self.w[i];
        let s1 = self.s1[j + 1] - self.s1[i];
        let s2 = self.s2[j + 1] - self.s2[i];
        (s2 - s1 * s1 / w).max(0.0)
    }

    fn mean(&self, i: usize, j: usize, shift: f64) -> f64 {
        (self.s1[j + 1] - self.s1[i]) / (self.w[j + 1] - self.w[i]) + shift
    }
}

/// Globally optimal 1-D k-means by dynamic programming over the sorted
/// distinct values (divide-and-conquer over the monotone split points).
/// Equal values never straddle clusters, so centroids are strictly increasing.
/// Each score is then assigned to its nearest centroid, ties going to the
/// lower cluster.
pub fn kmeans_1d(scores: &[f64], k: usize) -> Result<TierAssignment> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if scores.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("scores must be finite".into()));
    }
    let mut sorted: Vec<f64> = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut values: Vec<f64> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for x in sorted {
        if values.last() == Some(&x) {
            *weights.last_mut().expect("nonempty") += 1.0;
        } else {
            values.push(x);
            weights.push(1.0);
        }
    }
    let m = values.len();
    if m < k {
        return Err(Error::InvalidInput(format!(
            "need at least {k} distinct values, got {m}"
        )));
    }
    let shift = scores.iter().sum::<f64>() / scores.len() as f64;
    let seg = Segments::new(&values, &weights, shift);

    // cost[l][j]: best cost of splitting values[0..=j] into l+1 clusters
    let mut cost = vec![vec![f64::INFINITY; m]; k];
    let mut split = vec![vec![0usize; m]; k];
    for j in 0..m {
        cost[0][j] = seg.cost(0, j);
    }
    for l in 1..k {
        let (prev, cur) = cost.split_at_mut(l);
        fill_layer(
            &prev[l - 1],
            &mut cur[0],
            &mut split[l],
            &seg,
            l,
            l,
            m - 1,
            l,
            m - 1,
        );
    }

    let mut bounds = vec![0usize; k + 1];
    bounds[k] = m;
    let mut j = m - 1;
    for l in (1..k).rev() {
        let i = split[l][j];
        bounds[l] = i;
        j = i - 1;
    }
    let centroids: Vec<f64> = (0..k)
        .map(|l| seg.mean(bounds[l], bounds[l + 1] - 1, shift))
        .collect();
    let tier: Vec<usize> = scores.iter().map(|&x| nearest(&centroids, x)).collect();
    // The prefix-sum costs cancel badly for tight clusters; report a two-pass sum.
    let cost = scores
        .iter()
        .zip(&tier)
        .map(|(&x, &t)| (x - centroids[t]).powi(2))
        .sum();
    Ok(TierAssignment { tier, centroids, cost })
}

#[allow(clippy::too_many_arguments)]
fn fill_layer(
    prev: &[f64],
    cur: &mut [f64],
    arg: &mut [usize],
    seg: &Segments,
    l: usize,
    jlo: usize,
    jhi: usize,
    ilo: usize,
    ihi: usize,
) {
    if jlo > jhi {
        return;
    }
    let j = (jlo + jhi) / 2;
    let mut best = f64::INFINITY;
    let mut best_i = ilo.max(l);
    for i in ilo.max(l)..=ihi.min(j) {
        let c = prev[i - 1] + seg.cost(i, j);
        if c < best {
            best = c;
            best_i = i;
        }
    }
    cur[j] = best;
    arg[j] = best_i;
    if j > jlo {
        fill_layer(prev, cur, arg, seg, l, jlo, j - 1, ilo, best_i);
    }
    fill_layer(prev, cur, arg, seg, l, j + 1, jhi, best_i, ihi);
}

fn nearest(centroids: &[f64], x: f64) -> usize {
    let mut best = 0;
    let mut best_d = (x - centroids[0]).abs();
    for (t, &c) in centroids.iter().enumerate().skip(1) {
        let d = (x - c).abs();
        if d < best_d {
            best = t;
            best_d = d;
        }
    }
    best
}

/// Nodes sampled per tier and how far each tier fell short of the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TierSample {
    pub per_tier: Vec<Vec<usize>>,
    pub shortfall: Vec<usize>,
}

impl TierSample {
    pub fn all(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.per_tier.iter().flatten().copied().collect();
        v.sort_unstable();
        v
    }
}

/// Uniformly samples up to `per_tier` nodes without replacement from each
/// tier, considering only nodes with at least `min_posts` posts.
pub fn sample_tiers(
    tiers: &TierAssignment,
    per_tier: usize,
    min_posts: usize,
    post_counts: &[usize],
    rng_seed: u64,
) -> Result<TierSample> {
    if post_counts.len() != tiers.tier.len() {
        return Err(Error::Shape(format!(
            "{} post counts for {} scored nodes",
            post_counts.len(),
            tiers.tier.len()
        )));
    }
    let mut per = Vec::with_capacity(tiers.k());
    let mut shortfall = Vec::with_capacity(tiers.k());
    for t in 0..tiers.k() {
        let mut eligible: Vec<usize> = tiers
            .members(t)
            .into_iter()
            .filter(|&u| post_counts[u] >= min_posts)
            .collect();
        let mut r = rng::rng(rng::indexed(rng_seed, &[t as u64]));
        let take = per_tier.min(eligible.len());
        let (chosen, _) = eligible.partial_shuffle(&mut r, take);
        let mut chosen = chosen.to_vec();
        chosen.sort_unstable();
        if take < per_tier {
            log::warn!(
                "tier {} has {} eligible nodes, short by {}",
                tiers.label(t),
                take,
                per_tier - take
            );
        }
        shortfall.push(per_tier - take);
        per.push(chosen);
    }
    Ok(TierSample {
        per_tier: per,
        shortfall,
    })
}

/// Writes `node_id,score,tier` rows.
pub fn write_beliefs(
    names: impl Fn(usize) -> String,
    beliefs: &BeliefVector,
    tiers: &TierAssignment,
    w: impl Write,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["node_id", "score", "tier"])?;
    for (i, &b) in beliefs.values.iter().enumerate() {
        out.write_record([names(i), format!("{b}"), tiers.label(tiers.tier[i])])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn dense(op: &NormalizedAdjacency) -> Vec<Vec<f64>> {
        let d = op.matrix.to_dense();
        d.outer_iter().map(|r| r.to_vec()).collect()
    }

    #[test]
    fn repost_chain_points_back_to_reposter() {
        // node 0 reposts node 1
        let g = DirectedGraph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        let w = dense(&build_belief_network(&g));
        assert_eq!(w[1], vec![1.0, 0.0]);
        assert_eq!(w[0], vec![1.0, 0.0]);
    }

    #[test]
    fn two_cycle_gives_permutation() {
        let g = DirectedGraph::from_edges(2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        assert_eq!(dense(&build_belief_network(&g)), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn weighted_fan_out_reverses_to_three_quarters() {
        // 1 reposts 0 three times, 2 reposts 0 once
        let g = DirectedGraph::from_edges(3, &[(1, 0, 3.0), (2, 0, 1.0)]).unwrap();
        let w = dense(&build_belief_network(&g));
        assert_eq!(w[0], vec![0.0, 0.75, 0.25]);
    }

    #[test]
    fn chain_diffusion_reaches_one() {
        let g = DirectedGraph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        let op = build_belief_network(&g);
        // five dense mat-vec steps by hand
        let w = dense(&op);
        let mut b = vec![1.0, 0.0];
        for _ in 0..5 {
            b = (0..2).map(|i| w[i][0] * b[0] + w[i][1] * b[1]).collect();
        }
        let got = diffuse(&op, &[0], 5).unwrap();
        assert_eq!(got.values, b);
        assert_eq!(got.values, vec![1.0, 1.0]);
    }

    #[test]
    fn no_seeds_all_zero_and_all_seeds_all_one() {
        let g = DirectedGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 2.0), (2, 0, 1.0)]).unwrap();
        let op = build_belief_network(&g);
        assert_eq!(diffuse(&op, &[], 5).unwrap().values, vec![0.0; 3]);
        for it in 1..6 {
            let b = diffuse(&op, &[0, 1, 2], it).unwrap();
            assert!(b.values.iter().all(|&x| (x - 1.0).abs() < 1e-15));
        }
    }

    #[test]
    fn zero_iterations_rejected() {
        let op = build_belief_network(&DirectedGraph::from_edges(1, &[]).unwrap());
        assert!(diffuse(&op, &[0], 0).is_err());
    }

    /// Exhaustive search over contiguous partitions of the sorted scores.
    fn brute_kmeans(scores: &[f64], k: usize) -> f64 {
        let mut s = scores.to_vec();
        s.sort_by(f64::total_cmp);
        fn seg_cost(x: &[f64]) -> f64 {
            let m = x.iter().sum::<f64>() / x.len() as f64;
            x.iter().map(|v| (v - m) * (v - m)).sum()
        }
        fn rec(x: &[f64], k: usize) -> f64 {
            if k == 1 {
                return seg_cost(x);
            }
            (1..=x.len() - (k - 1))
                .map(|cut| seg_cost(&x[..cut]) + rec(&x[cut..], k - 1))
                .fold(f64::INFINITY, f64::min)
        }
        rec(&s, k)
    }

    #[test]
    fn six_scores_three_tiers() {
        let s = [0.0, 0.1, 0.5, 0.55, 0.9, 1.0];
        let t = kmeans_1d(&s, 3).unwrap();
        let expect = [0.05, 0.525, 0.95];
        for (c, e) in t.centroids.iter().zip(expect) {
            assert!((c - e).abs() < 1e-12);
        }
        assert_eq!(t.tier, vec![0, 0, 1, 1, 2, 2]);
        assert!((t.cost - brute_kmeans(&s, 3)).abs() < 1e-12);
    }

    #[test]
    fn repeated_values_zero_cost() {
        let t = kmeans_1d(&[0.0, 0.0, 1.0, 1.0, 2.0, 2.0], 3).unwrap();
        assert_eq!(t.centroids, vec![0.0, 1.0, 2.0]);
        assert!(t.cost.abs() < 1e-15);
    }

    #[test]
    fn too_few_distinct_values() {
        assert!(kmeans_1d(&[1.0, 1.0, 2.0], 3).is_err());
    }

    #[test]
    fn tie_goes_to_lower_tier() {
        let c = [0.0, 1.0, 2.0];
        assert_eq!(nearest(&c, 0.5), 0);
        assert_eq!(nearest(&c, 1.5), 1);
    }

    #[test]
    fn random_fifty_matches_exhaustive() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let s: Vec<f64> = (0..50).map(|_| rng.random::<f64>()).collect();
            let t = kmeans_1d(&s, 3).unwrap();
            let b = brute_kmeans(&s, 3);
            assert!((t.cost - b).abs() <= 1e-9 * b.max(1e-12), "{} vs {}", t.cost, b);
        }
    }

    fn fixture_tiers() -> TierAssignment {
        TierAssignment {
            tier: vec![0, 0, 0, 1, 1, 2],
            centroids: vec![0.0, 0.5, 1.0],
            cost: 0.0,
        }
    }

    #[test]
    fn small_tier_reports_shortfall() {
        let t = fixture_tiers();
        let s = sample_tiers(&t, 300, 0, &[10; 6], 1).unwrap();
        assert_eq!(s.per_tier[1], vec![3, 4]);
        assert_eq!(s.shortfall, vec![297, 298, 299]);
    }

    #[test]
    fn nobody_eligible() {
        let t = fixture_tiers();
        let s = sample_tiers(&t, 300, 10, &[3; 6], 1).unwrap();
        assert!(s.all().is_empty());
        assert_eq!(s.shortfall, vec![300; 3]);
    }

    #[test]
    fn sampling_is_deterministic() {
        let n = 500;
        let t = TierAssignment {
            tier: (0..n).map(|i| i % 3).collect(),
            centroids: vec![0.0, 0.5, 1.0],
            cost: 0.0,
        };
        let posts: Vec<usize> = (0..n).map(|i| i % 20).collect();
        let a = sample_tiers(&t, 40, 10, &posts, 99).unwrap();
        let b = sample_tiers(&t, 40, 10, &posts, 99).unwrap();
        assert_eq!(a, b);
        assert!(a.all().iter().all(|&u| posts[u] >= 10));
        assert_ne!(a, sample_tiers(&t, 40, 10, &posts, 100).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn diffusion_stays_in_seed_hull(n in 1usize..64, p in 0.0f64..0.3, seed in any::<u64>(), it in 1usize..8) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut e = Vec::new();
            for u in 0..n { for v in 0..n {
                if rng.random::<f64>() < p { e.push((u, v, rng.random_range(0.1..3.0))); }
            }}
            let g = DirectedGraph::from_edges(n, &e).unwrap();
            let op = build_belief_network(&g);
            let seeds: Vec<usize> = (0..n).filter(|_| rng.random::<f64>() < 0.3).collect();
            let got = diffuse(&op, &seeds, it).unwrap();
            // dense iteration oracle
            let w = op.matrix.to_dense();
            let mut b: Vec<f64> = (0..n).map(|i| if seeds.contains(&i) { 1.0 } else { 0.0 }).collect();
            let (lo, hi) = b.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, c), &x| (a.min(x), c.max(x)));
            for _ in 0..it {
                b = (0..n).map(|i| (0..n).map(|j| w[[i, j]] * b[j]).sum()).collect();
            }
            for (x, y) in got.values.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-9 * y.abs().max(1e-12) + 1e-15);
                prop_assert!(*x >= lo - 1e-12 && *x <= hi + 1e-12);
            }
        }

        #[test]
        fn kmeans_clusters_are_contiguous(s in prop::collection::vec(0.0f64..1.0, 3..200)) {
            let t = kmeans_1d(&s, 3).unwrap();
            prop_assert!(t.centroids.windows(2).all(|w| w[0] < w[1]));
            let mut order: Vec<usize> = (0..s.len()).collect();
            order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
            let labels: Vec<usize> = order.iter().map(|&i| t.tier[i]).collect();
            prop_assert!(labels.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn kmeans_matches_brute_force(s in prop::collection::vec(-5.0f64..5.0, 3..14), k in 1usize..4) {
            let mut distinct = s.clone();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            prop_assume!(distinct.len() >= k);
            let t = kmeans_1d(&s, k).unwrap();
            let b = brute_kmeans(&s, k);
            prop_assert!((t.cost - b).abs() <= 1e-9 * b + 1e-12, "{} vs {}", t.cost, b);
        }
    }
}
