//! Sticky labels, target communities, exclusive joint buckets and trending
//! hashtags.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::lexicon::Lexicon;
use super::snapshots::SnapshotSeries;
use crate::error::{Error, Result};
use crate::text::{Post, UserCorpus};
use crate::HATEFUL;

pub const DEFAULT_TRACKED: [&str; 3] = ["Jews", "Muslims", "Blacks"];
pub const NONE_BUCKET: &str = "none";

/// `raw[t][u]` is the prediction for user `u` in month `t`. The result marks a
/// user hateful in month `t` iff any prediction up to `t` was hateful.
pub fn sticky_labels(raw: &[Vec<u8>]) -> Result<Vec<Vec<u8>>> {
    let Some(first) = raw.first() else {
        return Ok(Vec::new());
    };
    if let Some(row) = raw.iter().find(|r| r.len() != first.len()) {
        return Err(Error::Shape(format!("month with {} users, expected {}", row.len(), first.len())));
    }
    let mut state = vec![false; first.len()];
    Ok(raw
        .iter()
        .map(|row| {
            state
                .iter_mut()
                .zip(row)
                .map(|(s, &r)| {
                    *s |= r == HATEFUL;
                    u8::from(*s)
                })
                .collect()
        })
        .collect())
}

/// Communities whose lexicon terms appear in any of `posts`.
pub fn attribute_targets(posts: &[Post], lexicon: &Lexicon) -> BTreeSet<String> {
    posts.iter().flat_map(|p| lexicon.communities_in(&p.text)).collect()
}

/// Name of the bucket for exactly `set` among `tracked`, in tracked order.
pub fn bucket_name(set: &BTreeSet<String>, tracked: &[String]) -> String {
    let parts: Vec<&str> = tracked.iter().filter(|c| set.contains(*c)).map(String::as_str).collect();
    if parts.is_empty() {
        NONE_BUCKET.to_owned()
    } else {
        parts.join("-")
    }
}

/// Every nonempty subset of `tracked` as a bucket name: singletons first, then
/// pairs, and so on, each size in tracked order.
pub fn all_buckets(tracked: &[String]) -> Vec<String> {
    let k = tracked.len();
    let mut masks: Vec<u32> = (1..(1u32 << k)).collect();
    masks.sort_by_key(|&m| {
        let bits: Vec<usize> = (0..k).filter(|i| m & (1 << i) != 0).collect();
        (bits.len(), bits)
    });
    masks
        .into_iter()
        .map(|m| {
            (0..k)
                .filter(|i| m & (1 << i) != 0)
                .map(|i| tracked[i].as_str())
                .collect::<Vec<_>>()
                .join("-")
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JointCounts {
    /// Every nonempty combination of tracked communities, zero counts included.
    pub buckets: Vec<(String, usize)>,
    /// Users targeting none of the tracked communities.
    pub none: usize,
}

impl JointCounts {
    /// Users with at least one tracked target.
    pub fn total(&self) -> usize {
        self.buckets.iter().map(|b| b.1).sum()
    }
}

/// Places each user in the single bucket naming exactly the tracked
/// communities it targets.
pub fn joint_target_counts(sets: &[BTreeSet<String>], tracked: &[String]) -> JointCounts {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut none = 0;
    for s in sets {
        let name = bucket_name(s, tracked);
        if name == NONE_BUCKET {
            none += 1;
        } else {
            *counts.entry(name).or_default() += 1;
        }
    }
    let buckets = all_buckets(tracked)
        .into_iter()
        .map(|b| {
            let c = counts.get(&b).copied().unwrap_or(0);
            (b, c)
        })
        .collect();
    JointCounts { buckets, none }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct TrendingParams {
    pub min_count: usize,
    pub ratio: f64,
}

impl Default for TrendingParams {
    fn default() -> Self {
        Self { min_count: 10, ratio: 0.2 }
    }
}

/// Hashtags with `freq_t >= min_count` and `freq_prev <= ratio * freq_t`,
/// most frequent first, ties by name.
pub fn trending_hashtags(
    freq_t: &BTreeMap<String, usize>,
    freq_prev: &BTreeMap<String, usize>,
    params: TrendingParams,
) -> Vec<(String, usize)> {
    let mut out: Vec<(String, usize)> = freq_t
        .iter()
        .filter(|(h, &f)| {
            let prev = freq_prev.get(*h).copied().unwrap_or(0);
            f >= params.min_count && prev as f64 <= params.ratio * f as f64
        })
        .map(|(h, &f)| (h.clone(), f))
        .collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

pub fn hashtag_counts<'a>(posts: impl IntoIterator<Item = &'a Post>) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for p in posts {
        for h in &p.hashtags {
            *out.entry(h.clone()).or_default() += 1;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommunityCount {
    pub community: String,
    /// Posts made in this month by hateful users that mention the community.
    pub post_count: usize,
    /// Hateful users whose posts so far mention the community.
    pub user_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonthReport {
    pub month: String,
    pub eligible_users: usize,
    pub hateful_users: usize,
    pub communities: Vec<CommunityCount>,
    pub joint: JointCounts,
    pub trending: Vec<(String, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetReport {
    pub tracked: Vec<String>,
    pub trending_params: TrendingParams,
    pub months: Vec<MonthReport>,
}

/// Per-month analytics over the eligible users that the sticky labels mark
/// hateful. Trending hashtags compare hateful users' posts of each month with
/// their posts of the month before.
pub fn target_report(
    series: &SnapshotSeries,
    corpus: &UserCorpus,
    lexicon: &Lexicon,
    sticky: &[Vec<u8>],
    tracked: &[String],
    trending: TrendingParams,
) -> Result<TargetReport> {
    if sticky.len() != series.len() {
        return Err(Error::Shape(format!("{} label months for {} snapshots", sticky.len(), series.len())));
    }
    if let Some(row) = sticky.iter().find(|r| r.len() != series.num_nodes()) {
        return Err(Error::Shape(format!("{} labels for {} nodes", row.len(), series.num_nodes())));
    }
    let communities = lexicon.communities();
    let hateful_in = |t: usize| -> Vec<usize> {
        series.eligible(t).into_iter().filter(|&u| sticky[t][u] == HATEFUL).collect()
    };
    let tag_counts = |t: usize, users: &[usize]| hashtag_counts(users.iter().flat_map(|&u| series.new_posts(t, corpus, u)));
    let months = (0..series.len())
        .into_par_iter()
        .map(|t| {
            let hateful = hateful_in(t);
            let targets: Vec<BTreeSet<String>> =
                hateful.iter().map(|&u| attribute_targets(series.posts(t, corpus, u), lexicon)).collect();
            let mut post_counts: BTreeMap<&str, usize> = BTreeMap::new();
            for &u in &hateful {
                for p in series.new_posts(t, corpus, u) {
                    for c in lexicon.communities_in(&p.text) {
                        if let Some(k) = communities.iter().find(|k| **k == c) {
                            *post_counts.entry(k.as_str()).or_default() += 1;
                        }
                    }
                }
            }
            let community_rows = communities
                .iter()
                .map(|c| CommunityCount {
                    community: c.clone(),
                    post_count: post_counts.get(c.as_str()).copied().unwrap_or(0),
                    user_count: targets.iter().filter(|s| s.contains(c)).count(),
                })
                .collect();
            let now = tag_counts(t, &hateful);
            let prev = if t == 0 { BTreeMap::new() } else { tag_counts(t - 1, &hateful_in(t - 1)) };
            MonthReport {
                month: series.months[t].to_string(),
                eligible_users: series.eligible(t).len(),
                hateful_users: hateful.len(),
                communities: community_rows,
                joint: joint_target_counts(&targets, tracked),
                trending: trending_hashtags(&now, &prev, trending),
            }
        })
        .collect();
    Ok(TargetReport {
        tracked: tracked.to_vec(),
        trending_params: trending,
        months,
    })
}

/// CSV `month,community,post_count,user_count`.
pub fn write_community_csv(report: &TargetReport, w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["month", "community", "post_count", "user_count"])?;
    for m in &report.months {
        for c in &m.communities {
            out.write_record([&m.month, &c.community, &c.post_count.to_string(), &c.user_count.to_string()])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// CSV `month,bucket,user_count`; the none bucket is listed last.
pub fn write_joint_csv(report: &TargetReport, w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["month", "bucket", "user_count"])?;
    for m in &report.months {
        for (b, c) in &m.joint.buckets {
            out.write_record([&m.month, b, &c.to_string()])?;
        }
        out.write_record([m.month.as_str(), NONE_BUCKET, &m.joint.none.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// CSV `month,hashtag,count`.
pub fn write_trending_csv(report: &TargetReport, w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["month", "hashtag", "count"])?;
    for m in &report.months {
        for (h, c) in &m.trending {
            out.write_record([&m.month, h, &c.to_string()])?;
        }
    }
    out.flush()?;
    Ok(())
}
