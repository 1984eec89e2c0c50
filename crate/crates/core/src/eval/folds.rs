//! Stratified k-fold plans with nested label-fraction subsets.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub const DEFAULT_FRACTIONS: [f64; 6] = [5.0, 10.0, 15.0, 20.0, 50.0, 80.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    /// Held-out nodes, sorted.
    pub test: Vec<usize>,
    /// Training side in class-interleaved order; every m-subset is a prefix.
    pub train_order: Vec<usize>,
    /// `(m, size)` for every fraction of the plan.
    pub subset_sizes: Vec<(f64, usize)>,
}

impl Fold {
    /// Training nodes for fraction `m`, or `None` if `m` is not in the plan.
    pub fn train_subset(&self, m: f64) -> Option<&[usize]> {
        self.subset_sizes
            .iter()
            .find(|(f, _)| *f == m)
            .map(|&(_, s)| &self.train_order[..s])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub fractions: Vec<f64>,
    pub folds: Vec<Fold>,
}

/// Splits `labeled` `(node, class)` pairs into `k` stratified test folds. Each
/// class is shuffled and dealt round-robin, continuing the deal across
/// classes, so every fold holds within one instance of each class's share.
/// For fraction `m` (percent) the fold trains on `floor(m * N / 100)` nodes of
/// its training side, capped at the side's size, where `N` is the full labeled
/// count. Subsets are prefixes of one ordering that interleaves classes in
/// proportion, so they are stratified and nested.
pub fn make_fold_plan(labeled: &[(usize, u8)], k: usize, fractions: &[f64], seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidInput("k must be at least 2".into()));
    }
    if let Some(f) = fractions.iter().find(|f| !(**f > 0.0 && **f <= 100.0)) {
        return Err(Error::InvalidInput(format!("fraction {f} outside (0, 100]")));
    }
    let mut sorted = labeled.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidInput("node labeled twice".into()));
    }
    let classes = class_lists(&sorted);
    for (c, members) in classes.iter().enumerate() {
        if !members.is_empty() && members.len() < k {
            return Err(Error::InvalidInput(format!(
                "class {c} has {} members, fewer than k = {k}",
                members.len()
            )));
        }
    }
    let mut r = rng::named(seed, "folds");
    let mut fold_of = std::collections::HashMap::new();
    let mut next = 0usize;
    for members in &classes {
        let mut members = members.clone();
        members.shuffle(&mut r);
        for node in members {
            fold_of.insert(node, next % k);
            next += 1;
        }
    }
    let n = sorted.len();
    let folds = (0..k)
        .map(|f| {
            let test: Vec<usize> = sorted.iter().map(|e| e.0).filter(|v| fold_of[v] == f).collect();
            let mut per_class: Vec<Vec<usize>> = classes
                .iter()
                .map(|m| m.iter().copied().filter(|v| fold_of[v] != f).collect())
                .collect();
            let mut fr = rng::rng(rng::indexed(rng::substream(seed, "fold-train"), &[f as u64]));
            for list in &mut per_class {
                list.shuffle(&mut fr);
            }
            let train_order = interleave(&per_class);
            let subset_sizes = fractions
                .iter()
                .map(|&m| (m, ((m * n as f64 / 100.0).floor() as usize).min(train_order.len())))
                .collect();
            Fold {
                test,
                train_order,
                subset_sizes,
            }
        })
        .collect();
    Ok(FoldPlan {
        k,
        seed,
        fractions: fractions.to_vec(),
        folds,
    })
}

fn class_lists(sorted: &[(usize, u8)]) -> Vec<Vec<usize>> {
    let num = sorted.iter().map(|e| usize::from(e.1) + 1).max().unwrap_or(0);
    let mut out = vec![Vec::new(); num];
    for &(v, c) in sorted {
        out[usize::from(c)].push(v);
    }
    out
}

/// Merges class lists so every prefix is as close to the overall class
/// proportions as possible: the next element comes from the class with the
/// smallest `(taken + 1/2) / size`, ties to the lower class.
fn interleave(lists: &[Vec<usize>]) -> Vec<usize> {
    let total: usize = lists.iter().map(Vec::len).sum();
    let mut taken = vec![0usize; lists.len()];
    let mut out = Vec::with_capacity(total);
    while out.len() < total {
        let c = (0..lists.len())
            .filter(|&c| taken[c] < lists[c].len())
            .min_by(|&a, &b| {
                let ka = (taken[a] as f64 + 0.5) / lists[a].len() as f64;
                let kb = (taken[b] as f64 + 0.5) / lists[b].len() as f64;
                ka.total_cmp(&kb).then(a.cmp(&b))
            })
            .expect("some class has elements left");
        out.push(lists[c][taken[c]]);
        taken[c] += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labeled(pos: usize, neg: usize) -> Vec<(usize, u8)> {
        (0..pos).map(|i| (i, 1)).chain((pos..pos + neg).map(|i| (i, 0))).collect()
    }

    #[test]
    fn balanced_twenty_gives_two_and_two() {
        let l = labeled(10, 10);
        let plan = make_fold_plan(&l, 5, &DEFAULT_FRACTIONS, 1).unwrap();
        for f in &plan.folds {
            let pos = f.test.iter().filter(|&&v| v < 10).count();
            assert_eq!((pos, f.test.len() - pos), (2, 2));
        }
    }

    #[test]
    fn subset_size_for_798_labels() {
        let l = labeled(300, 498);
        let plan = make_fold_plan(&l, 5, &DEFAULT_FRACTIONS, 2).unwrap();
        for f in &plan.folds {
            let s = f.train_subset(5.0).unwrap();
            assert_eq!(s.len(), 39);
            // 300/798 of 39 is 14.66
            let pos = s.iter().filter(|&&v| v < 300).count();
            assert!(pos == 14 || pos == 15, "{pos}");
        }
    }

    #[test]
    fn too_small_class_rejected() {
        assert!(make_fold_plan(&labeled(4, 10), 5, &[5.0], 0).is_err());
    }

    #[test]
    fn deterministic_under_seed() {
        let l = labeled(40, 60);
        assert_eq!(
            make_fold_plan(&l, 5, &DEFAULT_FRACTIONS, 9).unwrap(),
            make_fold_plan(&l, 5, &DEFAULT_FRACTIONS, 9).unwrap()
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn plan_invariants(
            n in 10usize..3000,
            pos_share in 0.05f64..0.95,
            k in 2usize..8,
            seed in any::<u64>(),
        ) {
            let pos = ((n as f64 * pos_share) as usize).clamp(k, n - k);
            let l: Vec<(usize, u8)> = (0..n).map(|i| (i * 3 + 1, u8::from(i < pos))).collect();
            let plan = make_fold_plan(&l, k, &DEFAULT_FRACTIONS, seed).unwrap();
            let is_pos = |v: usize| (v - 1) / 3 < pos;
            let mut all: Vec<usize> = plan.folds.iter().flat_map(|f| f.test.clone()).collect();
            all.sort_unstable();
            let expect: Vec<usize> = l.iter().map(|e| e.0).collect();
            prop_assert_eq!(all, expect);
            for f in &plan.folds {
                let p = f.test.iter().filter(|&&v| is_pos(v)).count();
                let ideal = pos as f64 * f.test.len() as f64 / n as f64;
                prop_assert!((p as f64 - ideal).abs() <= 1.0 + 1e-9, "{} vs {}", p, ideal);
                let test: std::collections::HashSet<usize> = f.test.iter().copied().collect();
                prop_assert!(f.train_order.iter().all(|v| !test.contains(v)));
                prop_assert_eq!(f.train_order.len() + f.test.len(), n);
                let mut prev: &[usize] = &[];
                for &m in &DEFAULT_FRACTIONS {
                    let s = f.train_subset(m).unwrap();
                    prop_assert!(s.starts_with(prev));
                    prop_assert_eq!(s.len(), ((m * n as f64 / 100.0).floor() as usize).min(f.train_order.len()));
                    prev = s;
                }
            }
        }
    }
}
