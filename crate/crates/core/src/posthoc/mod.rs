//! Temporal analytics over monthly snapshots.
//!
//! Snapshots are cumulative. A per-month prediction becomes sticky once
//! hateful; target communities come from lexicon hits with hashtags kept as
//! tokens; multi-target users are counted only in their exact joint bucket.

pub mod lexicon;
pub mod snapshots;
pub mod targets;

pub use lexicon::{Lexicon, LexiconEntry};
pub use snapshots::{build_snapshots, Month, SnapshotSeries, TimedEdge, MIN_POSTS};
pub use targets::{
    attribute_targets, hashtag_counts, joint_target_counts, sticky_labels, target_report, trending_hashtags,
    write_community_csv, write_joint_csv, write_trending_csv, JointCounts, MonthReport, TargetReport,
    TrendingParams, DEFAULT_TRACKED,
};
