//! Cumulative monthly snapshots of a timestamped graph and corpus.

use std::fmt;

use chrono::{DateTime, Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::text::{Post, UserCorpus};

/// Users need this many posts up to a snapshot to be analyzed in it.
pub const MIN_POSTS: usize = 10;

/// A calendar month in UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Month {
    pub year: i32,
    /// 1..=12
    pub month: u32,
}

impl Month {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidInput(format!("month {month} outside 1..=12")));
        }
        Ok(Self { year, month })
    }

    pub fn of_timestamp(ts: i64) -> Result<Self> {
        let d = DateTime::from_timestamp(ts, 0)
            .ok_or_else(|| Error::InvalidInput(format!("timestamp {ts} out of range")))?;
        Ok(Self {
            year: d.year(),
            month: d.month(),
        })
    }

    pub fn next(self) -> Self {
        if self.month == 12 {
            Self { year: self.year + 1, month: 1 }
        } else {
            Self { year: self.year, month: self.month + 1 }
        }
    }

    /// UTC seconds of the first instant of the month.
    pub fn start(self) -> i64 {
        NaiveDate::from_ymd_opt(self.year, self.month, 1)
            .and_then(|d| d.and_hms_opt(0, 0, 0))
            .map(|t| t.and_utc().timestamp())
            .unwrap_or(i64::MAX)
    }

    /// UTC seconds of the last instant of the month.
    pub fn end(self) -> i64 {
        self.next().start() - 1
    }

    pub fn parse(s: &str) -> Result<Self> {
        let (y, m) = s
            .split_once('-')
            .ok_or_else(|| Error::InvalidInput(format!("month {s:?} is not YYYY-MM")))?;
        let year = y.parse().map_err(|_| Error::InvalidInput(format!("bad year in {s:?}")))?;
        let month = m.parse().map_err(|_| Error::InvalidInput(format!("bad month in {s:?}")))?;
        Self::new(year, month)
    }

    /// `count` consecutive months starting at `self`.
    pub fn range(self, count: usize) -> Vec<Month> {
        std::iter::successors(Some(self), |m| Some(m.next())).take(count).collect()
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimedEdge {
    pub src: usize,
    pub dst: usize,
    pub ts: i64,
}

/// Snapshot `t` holds every post and edge with a timestamp at or before the
/// end of month `t`. Posts are stored once in the corpus; a snapshot keeps
/// per-user prefix lengths into each user's time-sorted post list.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSeries {
    pub months: Vec<Month>,
    num_nodes: usize,
    edges: Vec<TimedEdge>,
    edge_counts: Vec<usize>,
    post_counts: Vec<Vec<usize>>,
}

/// Builds the series for contiguous `months`. User `i` of the corpus is node
/// `i` of the graph. Items dated before the first month fall into the first
/// snapshot; items after the last month appear in none.
pub fn build_snapshots(
    corpus: &UserCorpus,
    num_nodes: usize,
    edges: &[TimedEdge],
    months: &[Month],
) -> Result<SnapshotSeries> {
    if months.is_empty() {
        return Err(Error::InvalidInput("no months requested".into()));
    }
    if months.windows(2).any(|w| w[1] != w[0].next()) {
        return Err(Error::InvalidInput("months must be contiguous and ascending".into()));
    }
    if corpus.users().len() > num_nodes {
        return Err(Error::Shape(format!(
            "{} corpus users for {num_nodes} nodes",
            corpus.users().len()
        )));
    }
    if let Some(e) = edges.iter().find(|e| e.src >= num_nodes || e.dst >= num_nodes) {
        return Err(Error::InvalidInput(format!("edge ({}, {}) outside 0..{num_nodes}", e.src, e.dst)));
    }
    let first = months[0].start();
    let early_posts = corpus
        .users()
        .iter()
        .flat_map(|u| &u.posts)
        .filter(|p| p.ts < first)
        .count();
    let early_edges = edges.iter().filter(|e| e.ts < first).count();
    if early_posts + early_edges > 0 {
        log::warn!("{early_posts} posts and {early_edges} edges predate {}; assigned to it", months[0]);
    }
    let mut sorted = edges.to_vec();
    sorted.sort_by_key(|e| (e.ts, e.src, e.dst));
    let ends: Vec<i64> = months.iter().map(|m| m.end()).collect();
    let edge_counts = ends.iter().map(|&end| sorted.partition_point(|e| e.ts <= end)).collect();
    let post_counts = ends
        .iter()
        .map(|&end| {
            let mut counts: Vec<usize> = corpus.users().iter().map(|u| u.posts.partition_point(|p| p.ts <= end)).collect();
            counts.resize(num_nodes, 0);
            counts
        })
        .collect();
    Ok(SnapshotSeries {
        months: months.to_vec(),
        num_nodes,
        edges: sorted,
        edge_counts,
        post_counts,
    })
}

impl SnapshotSeries {
    pub fn len(&self) -> usize {
        self.months.len()
    }

    pub fn is_empty(&self) -> bool {
        self.months.is_empty()
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Edges of snapshot `t`, ordered by timestamp.
    pub fn edges(&self, t: usize) -> &[TimedEdge] {
        &self.edges[..self.edge_counts[t]]
    }

    /// Unweighted graph of snapshot `t` over all nodes; repeated edges collapse.
    pub fn graph(&self, t: usize) -> Result<DirectedGraph> {
        let mut list: Vec<(usize, usize, f64)> = self.edges(t).iter().map(|e| (e.src, e.dst, 1.0)).collect();
        list.sort_by_key(|e| (e.0, e.1));
        list.dedup_by_key(|e| (e.0, e.1));
        DirectedGraph::from_edges(self.num_nodes, &list)
    }

    pub fn post_count(&self, t: usize, user: usize) -> usize {
        self.post_counts[t][user]
    }

    /// Posts of `user` visible in snapshot `t`.
    pub fn posts<'a>(&self, t: usize, corpus: &'a UserCorpus, user: usize) -> &'a [Post] {
        corpus
            .users()
            .get(user)
            .map_or(&[][..], |u| &u.posts[..self.post_counts[t][user]])
    }

    /// Posts of `user` dated inside month `t` (earlier snapshots excluded).
    pub fn new_posts<'a>(&self, t: usize, corpus: &'a UserCorpus, user: usize) -> &'a [Post] {
        let lo = if t == 0 { 0 } else { self.post_counts[t - 1][user] };
        corpus
            .users()
            .get(user)
            .map_or(&[][..], |u| &u.posts[lo..self.post_counts[t][user]])
    }

    /// Users with at least [`MIN_POSTS`] posts in snapshot `t`.
    pub fn eligible(&self, t: usize) -> Vec<usize> {
        (0..self.num_nodes).filter(|&u| self.post_counts[t][u] >= MIN_POSTS).collect()
    }
}
