//! Synthetic social graphs with a planted hateful community.
//!
//! The graph is a directed two-block stochastic block model with log-normal
//! per-node activity, so degrees can be skewed per class. Every post mixes
//! Zipf-distributed background words with words from the author's interest
//! topic. Posts that carry a lexicon term (HL posts) also draw part of their
//! body from a shared hate-discourse vocabulary. A configurable share of
//! hateful users writes in that vocabulary all the time.

use std::path::Path;

use rand::seq::IndexedRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Geometric, Zipf};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{io::write_file, DirectedGraph};
use crate::labels::{write_labels, LabelRow};
use crate::posthoc::{Lexicon, LexiconEntry, Month, TimedEdge};
use crate::rng::{self, Rng};
use crate::text::{io::write_posts, RawPost};
use crate::{HATEFUL, NON_HATEFUL};

/// Communities of the default lexicon and the prefix of their placeholder
/// terms.
pub const DEFAULT_COMMUNITIES: [(&str, &str); 5] = [
    ("Jews", "hxjew"),
    ("Muslims", "hxmus"),
    ("Blacks", "hxblk"),
    ("Women", "hxfem"),
    ("Immigrants", "hximm"),
];

/// Placeholder lexicon: nine terms per default community.
pub fn default_lexicon() -> Vec<LexiconEntry> {
    DEFAULT_COMMUNITIES
        .iter()
        .flat_map(|(c, prefix)| {
            (0..9).map(move |i| LexiconEntry {
                term: format!("{prefix}{i}"),
                community: (*c).to_owned(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n: usize,
    pub hateful_fraction: f64,
    pub p_in: f64,
    pub p_out: f64,
    /// Target share of edges whose reverse edge is also present.
    pub reciprocity: f64,
    /// Log-normal spread of per-node activity in each class. A node pair's
    /// edge probability is scaled by the product of both activities and
    /// capped at one; a per-block factor compensates for the cap so expected
    /// block densities stay at `p_in`/`p_out`.
    pub degree_sigma_hateful: f64,
    pub degree_sigma_non_hateful: f64,
    /// Per-post probability of an HL post for hateful users.
    pub hl_rate_hateful: f64,
    pub hl_rate_non_hateful: f64,
    pub posts_min: usize,
    pub posts_max: usize,
    pub words_min: usize,
    pub words_max: usize,
    pub neutral_vocab: usize,
    pub zipf_exponent: f64,
    pub topics: usize,
    pub topic_vocab: usize,
    /// Share of a post's words drawn from the author's topic.
    pub topic_share: f64,
    pub discourse_vocab: usize,
    /// Share of an HL post's words drawn from the hate-discourse vocabulary.
    pub hl_discourse_share: f64,
    /// Share of hateful users whose topic is the hate-discourse vocabulary.
    pub loud_fraction: f64,
    pub hashtag_rate: f64,
    /// Per-post probability of carrying one of the month's event hashtags.
    pub event_rate: f64,
    pub mention_rate: f64,
    pub url_rate: f64,
    pub lexicon: Vec<LexiconEntry>,
    /// First month as `YYYY-MM`.
    pub start_month: String,
    pub months: usize,
    /// Users join in month `j` with weight `growth^j`.
    pub growth: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 2000,
            hateful_fraction: 0.3,
            p_in: 0.02,
            p_out: 0.002,
            reciprocity: 0.3,
            degree_sigma_hateful: 1.0,
            degree_sigma_non_hateful: 3.5,
            hl_rate_hateful: 0.05,
            hl_rate_non_hateful: 0.02,
            posts_min: 10,
            posts_max: 40,
            words_min: 6,
            words_max: 18,
            neutral_vocab: 2000,
            zipf_exponent: 1.05,
            topics: 12,
            topic_vocab: 40,
            topic_share: 0.3,
            discourse_vocab: 60,
            hl_discourse_share: 0.5,
            loud_fraction: 0.6,
            hashtag_rate: 0.2,
            event_rate: 0.1,
            mention_rate: 0.1,
            url_rate: 0.05,
            lexicon: default_lexicon(),
            start_month: "2017-10".into(),
            months: 6,
            growth: 1.2,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        let probs = [
            ("hateful_fraction", self.hateful_fraction),
            ("p_in", self.p_in),
            ("p_out", self.p_out),
            ("reciprocity", self.reciprocity),
            ("hl_rate_hateful", self.hl_rate_hateful),
            ("hl_rate_non_hateful", self.hl_rate_non_hateful),
            ("topic_share", self.topic_share),
            ("hl_discourse_share", self.hl_discourse_share),
            ("loud_fraction", self.loud_fraction),
            ("hashtag_rate", self.hashtag_rate),
            ("event_rate", self.event_rate),
            ("mention_rate", self.mention_rate),
            ("url_rate", self.url_rate),
        ];
        if let Some((name, p)) = probs.iter().find(|(_, p)| !(0.0..=1.0).contains(p)) {
            return bad(format!("{name} = {p} is not a probability"));
        }
        if self.n < 2 {
            return bad("n must be at least 2".into());
        }
        if self.num_hateful() == 0 && (self.hl_rate_hateful > 0.0 || self.loud_fraction > 0.0) {
            return bad("hateful behaviour requested but no user is hateful".into());
        }
        if self.posts_min == 0 || self.posts_max < self.posts_min {
            return bad(format!("posts range {}..={} is empty", self.posts_min, self.posts_max));
        }
        if self.words_min == 0 || self.words_max < self.words_min {
            return bad(format!("words range {}..={} is empty", self.words_min, self.words_max));
        }
        if self.neutral_vocab == 0 || self.topics == 0 || self.topic_vocab == 0 || self.discourse_vocab == 0 {
            return bad("vocabulary sizes must be positive".into());
        }
        if !(self.degree_sigma_hateful >= 0.0 && self.degree_sigma_non_hateful >= 0.0) {
            return bad("degree spreads must be non-negative".into());
        }
        if !(self.zipf_exponent > 0.0) {
            return bad("zipf_exponent must be positive".into());
        }
        if self.months == 0 || !(self.growth > 0.0) {
            return bad("months and growth must be positive".into());
        }
        if self.lexicon.is_empty() && (self.hl_rate_hateful > 0.0 || self.hl_rate_non_hateful > 0.0) {
            return bad("HL posts requested with an empty lexicon".into());
        }
        Month::parse(&self.start_month)?;
        Lexicon::new(self.lexicon.clone())?;
        Ok(())
    }

    pub fn num_hateful(&self) -> usize {
        (self.hateful_fraction * self.n as f64).round() as usize
    }

    pub fn month_range(&self) -> Result<Vec<Month>> {
        Ok(Month::parse(&self.start_month)?.range(self.months))
    }
}

/// A generated dataset. Node `i` is named `node_name(i)`; dense ids, corpus
/// order and label order agree.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub config: SynthConfig,
    pub graph: DirectedGraph,
    pub edge_times: Vec<TimedEdge>,
    pub posts: Vec<RawPost>,
    pub labels: Vec<u8>,
    pub lexicon: Lexicon,
    /// Communities each user draws HL terms from.
    pub targets: Vec<Vec<String>>,
    pub months: Vec<Month>,
}

pub fn node_name(i: usize) -> String {
    format!("u{i:06}")
}

fn neutral_word(i: usize) -> String {
    format!("w{i}")
}

fn topic_word(t: usize, j: usize) -> String {
    format!("t{t}w{j}")
}

fn discourse_word(j: usize) -> String {
    format!("hd{j}")
}

/// Scale `s` with `mean(min(s * p * a * b, 1)) = p` over all pairs `(a, b)`
/// of source and target activities, so that capping edge probabilities at
/// one does not thin out the block.
fn calibrate_scale(p: f64, src: &[f64], dst: &[f64]) -> f64 {
    if p <= 0.0 || p >= 1.0 || src.is_empty() || dst.is_empty() {
        return 1.0;
    }
    let mut sorted = dst.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut prefix = vec![0.0; sorted.len() + 1];
    for (i, b) in sorted.iter().enumerate() {
        prefix[i + 1] = prefix[i] + b;
    }
    let density = |s: f64| {
        let total: f64 = src
            .iter()
            .map(|&a| {
                let c = s * p * a;
                let below = sorted.partition_point(|&b| c * b < 1.0);
                c * prefix[below] + (sorted.len() - below) as f64
            })
            .sum();
        total / (src.len() * sorted.len()) as f64
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while density(hi) < p {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return hi;
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if density(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Draws the successes of `count` Bernoulli(p) trials by geometric skipping.
fn bernoulli_hits(r: &mut Rng, count: usize, p: f64, mut hit: impl FnMut(usize)) {
    if p <= 0.0 || count == 0 {
        return;
    }
    if p >= 1.0 {
        (0..count).for_each(hit);
        return;
    }
    let geo = Geometric::new(p).expect("p in (0,1)");
    let mut i = 0usize;
    loop {
        let skip = geo.sample(r);
        i = match usize::try_from(skip).ok().and_then(|s| i.checked_add(s)) {
            Some(v) => v,
            None => return,
        };
        if i >= count {
            return;
        }
        hit(i);
        i += 1;
    }
}

fn pick_weighted(r: &mut Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = r.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return i;
        }
        x -= w;
    }
    weights.len() - 1
}

struct Vocabulary {
    zipf: Zipf<f64>,
    neutral: usize,
}

impl Vocabulary {
    fn neutral(&self, r: &mut Rng) -> String {
        let k = self.zipf.sample(r) as usize;
        neutral_word(k.clamp(1, self.neutral) - 1)
    }
}

#[derive(Clone, Copy)]
enum Voice {
    Topic(usize),
    Discourse,
}

/// Generates a dataset. Deterministic in `config.seed`.
pub fn generate(config: &SynthConfig) -> Result<SynthData> {
    config.validate()?;
    let c = config;
    let n = c.n;
    let months = c.month_range()?;
    let lexicon = Lexicon::new(c.lexicon.clone())?;

    // Labels: a random subset of the right size is hateful.
    let mut r = rng::named(c.seed, "labels");
    let mut order: Vec<usize> = (0..n).collect();
    rand::seq::SliceRandom::shuffle(&mut order[..], &mut r);
    let mut labels = vec![NON_HATEFUL; n];
    for &v in &order[..c.num_hateful()] {
        labels[v] = HATEFUL;
    }
    let blocks: [Vec<usize>; 2] = [
        (0..n).filter(|&v| labels[v] == NON_HATEFUL).collect(),
        (0..n).filter(|&v| labels[v] == HATEFUL).collect(),
    ];

    // Join months.
    let mut r = rng::named(c.seed, "growth");
    let weights: Vec<f64> = (0..c.months).map(|j| c.growth.powi(j as i32)).collect();
    let join: Vec<usize> = (0..n).map(|_| pick_weighted(&mut r, &weights)).collect();

    // SBM edges, then reciprocation. Adding each reverse edge with probability
    // rho gives a reciprocated share of 2 rho / (1 + rho), so rho is chosen to
    // hit the configured share.
    let mut r = rng::named(c.seed, "edges");
    let rho = c.reciprocity / (2.0 - c.reciprocity);
    let sigma = |v: usize| if labels[v] == HATEFUL { c.degree_sigma_hateful } else { c.degree_sigma_non_hateful };
    let activity: Vec<f64> = (0..n)
        .map(|v| {
            let s = sigma(v);
            if s == 0.0 {
                1.0
            } else {
                let z: f64 = rand_distr::StandardNormal.sample(&mut r);
                (s * z - 0.5 * s * s).exp()
            }
        })
        .collect();
    let uniform = activity.iter().all(|&a| a == 1.0);
    let block_activity: Vec<Vec<f64>> = blocks.iter().map(|b| b.iter().map(|&v| activity[v]).collect()).collect();
    let mut scale = [[1.0; 2]; 2];
    if !uniform {
        for (from, row) in scale.iter_mut().enumerate() {
            for (to, s) in row.iter_mut().enumerate() {
                let p = if from == to { c.p_in } else { c.p_out };
                *s = calibrate_scale(p, &block_activity[from], &block_activity[to]);
            }
        }
    }
    let mut base: Vec<(usize, usize)> = Vec::new();
    for u in 0..n {
        for (class, block) in blocks.iter().enumerate() {
            let p = if usize::from(labels[u]) == class { c.p_in } else { c.p_out };
            let p_scaled = p * scale[usize::from(labels[u])][class];
            if uniform {
                bernoulli_hits(&mut r, block.len(), p, |i| {
                    let v = block[i];
                    if v != u {
                        base.push((u, v));
                    }
                });
            } else {
                for &v in block {
                    let q = (p_scaled * activity[u] * activity[v]).min(1.0);
                    if r.random::<f64>() < q && v != u {
                        base.push((u, v));
                    }
                }
            }
        }
    }
    let mut edges = base.clone();
    for &(u, v) in &base {
        if r.random_bool(rho) {
            edges.push((v, u));
        }
    }
    edges.sort_unstable();
    edges.dedup();

    // Edge times: uniform after both endpoints have joined.
    let mut r = rng::named(c.seed, "edge-times");
    let last_end = months[months.len() - 1].end();
    let edge_times: Vec<TimedEdge> = edges
        .iter()
        .map(|&(u, v)| {
            let start = months[join[u].max(join[v])].start();
            TimedEdge {
                src: u,
                dst: v,
                ts: r.random_range(start..=last_end),
            }
        })
        .collect();
    let names: Vec<String> = (0..n).map(node_name).collect();
    let named: Vec<(&str, &str, Option<f64>)> =
        edges.iter().map(|&(u, v)| (names[u].as_str(), names[v].as_str(), None)).collect();
    let graph = DirectedGraph::from_labeled_edges(names.iter().map(String::as_str), &named)?;

    // Users: voice and target communities.
    let mut r = rng::named(c.seed, "users");
    let communities = lexicon.communities();
    let voices: Vec<Voice> = (0..n)
        .map(|v| {
            if labels[v] == HATEFUL && r.random_bool(c.loud_fraction) {
                Voice::Discourse
            } else {
                Voice::Topic(r.random_range(0..c.topics))
            }
        })
        .collect();
    let targets: Vec<Vec<String>> = (0..n)
        .map(|v| {
            if labels[v] != HATEFUL || communities.is_empty() {
                return Vec::new();
            }
            let k = match r.random::<f64>() {
                x if x < 0.6 => 1,
                x if x < 0.9 => 2,
                _ => 3,
            }
            .min(communities.len());
            let mut picked: Vec<String> = communities.choose_multiple(&mut r, k).cloned().collect();
            picked.sort_by_key(|p| communities.iter().position(|c| c == p));
            picked
        })
        .collect();

    // Posts.
    let vocab = Vocabulary {
        zipf: Zipf::new(c.neutral_vocab as f64, c.zipf_exponent)
            .map_err(|e| Error::InvalidInput(format!("zipf: {e}")))?,
        neutral: c.neutral_vocab,
    };
    let mut r = rng::named(c.seed, "posts");
    let mut posts = Vec::new();
    let mut url_counter = 0usize;
    for v in 0..n {
        let count = r.random_range(c.posts_min..=c.posts_max);
        let rate = if labels[v] == HATEFUL { c.hl_rate_hateful } else { c.hl_rate_non_hateful };
        let start = months[join[v]].start();
        let mut out_nb = graph.out_neighbors(v).to_vec();
        out_nb.sort_unstable();
        for _ in 0..count {
            let ts = r.random_range(start..=last_end);
            let hl = r.random_bool(rate);
            let len = r.random_range(c.words_min..=c.words_max);
            let mut words: Vec<String> = (0..len)
                .map(|_| {
                    if hl && r.random_bool(c.hl_discourse_share) {
                        discourse_word(r.random_range(0..c.discourse_vocab))
                    } else if r.random_bool(c.topic_share) {
                        match voices[v] {
                            Voice::Topic(t) => topic_word(t, r.random_range(0..c.topic_vocab)),
                            Voice::Discourse => discourse_word(r.random_range(0..c.discourse_vocab)),
                        }
                    } else {
                        vocab.neutral(&mut r)
                    }
                })
                .collect();
            if hl {
                let pool: Vec<&LexiconEntry> = if targets[v].is_empty() {
                    lexicon.entries().iter().collect()
                } else {
                    lexicon.entries().iter().filter(|e| targets[v].contains(&e.community)).collect()
                };
                if let Some(e) = pool.choose(&mut r) {
                    let at = r.random_range(0..=words.len());
                    words.insert(at, e.term.clone());
                }
            }
            if r.random_bool(c.hashtag_rate) {
                let tag = match voices[v] {
                    Voice::Topic(t) => topic_word(t, r.random_range(0..c.topic_vocab.min(5))),
                    Voice::Discourse => discourse_word(r.random_range(0..c.discourse_vocab.min(5))),
                };
                words.push(format!("#{tag}"));
            }
            if r.random_bool(c.event_rate) {
                let m = months.partition_point(|m| m.end() < ts).min(months.len() - 1);
                words.push(format!("#event{}x{}", months[m].to_string().replace('-', ""), r.random_range(0..3)));
            }
            if !out_nb.is_empty() && r.random_bool(c.mention_rate) {
                let target = out_nb[r.random_range(0..out_nb.len())];
                words.insert(0, format!("@{}", names[target]));
            }
            if r.random_bool(c.url_rate) {
                url_counter += 1;
                words.push(format!("https://example.org/p/{url_counter}"));
            }
            posts.push(RawPost {
                user: names[v].clone(),
                ts,
                text: words.join(" "),
            });
        }
    }
    posts.sort_by(|a, b| (a.user.as_str(), a.ts).cmp(&(b.user.as_str(), b.ts)));

    Ok(SynthData {
        config: c.clone(),
        graph,
        edge_times,
        posts,
        labels,
        lexicon,
        targets,
        months,
    })
}

impl SynthData {
    pub fn label_rows(&self) -> Vec<LabelRow> {
        self.labels
            .iter()
            .enumerate()
            .map(|(i, &l)| LabelRow {
                user: node_name(i),
                label: l,
            })
            .collect()
    }

    /// `(node, label)` for every node.
    pub fn labeled(&self) -> Vec<(usize, u8)> {
        self.labels.iter().copied().enumerate().collect()
    }

    /// Writes `edges.tsv`, `edge_times.tsv`, `posts.jsonl`, `labels.csv`,
    /// `lexicon.csv` and `config.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let path = |f: &str| dir.join(f);
        write_file(&path(EDGES_FILE), |w| crate::graph::io::write_edges(&self.graph, w))?;
        write_file(&path(EDGE_TIMES_FILE), |w| write_edge_times(&self.graph, &self.edge_times, w))?;
        write_file(&path(POSTS_FILE), |w| write_posts(&self.posts, w))?;
        write_file(&path(LABELS_FILE), |w| write_labels(&self.label_rows(), w))?;
        write_file(&path(LEXICON_FILE), |w| self.lexicon.write_csv(w))?;
        write_file(&path(CONFIG_FILE), |w| {
            serde_json::to_writer_pretty(&mut *w, &self.config)?;
            std::io::Write::write_all(w, b"\n")?;
            Ok(())
        })?;
        Ok([EDGES_FILE, EDGE_TIMES_FILE, POSTS_FILE, LABELS_FILE, LEXICON_FILE, CONFIG_FILE]
            .iter()
            .map(|f| path(f))
            .collect())
    }
}

pub const EDGES_FILE: &str = "edges.tsv";
pub const EDGE_TIMES_FILE: &str = "edge_times.tsv";
pub const POSTS_FILE: &str = "posts.jsonl";
pub const LABELS_FILE: &str = "labels.csv";
pub const LEXICON_FILE: &str = "lexicon.csv";
pub const CONFIG_FILE: &str = "config.json";

/// TSV `src<TAB>dst<TAB>unix_seconds` using external names, ordered by time.
pub fn write_edge_times(g: &DirectedGraph, edges: &[TimedEdge], mut w: impl std::io::Write) -> Result<()> {
    let mut sorted = edges.to_vec();
    sorted.sort_by_key(|e| (e.ts, e.src, e.dst));
    for e in sorted {
        writeln!(w, "{}\t{}\t{}", g.node_name(e.src), g.node_name(e.dst), e.ts)?;
    }
    Ok(())
}

/// Reads timestamped edges, resolving names against `g`.
pub fn read_edge_times(path: &Path, g: &DirectedGraph) -> Result<Vec<TimedEdge>> {
    let raw = crate::graph::io::read_edges(path)?;
    let ids = g
        .ids()
        .ok_or_else(|| Error::InvalidInput("graph has no external ids".into()))?;
    raw.into_iter()
        .enumerate()
        .map(|(i, (s, d, t))| {
            let err = |m: String| Error::Parse {
                path: path.display().to_string(),
                line: i + 1,
                message: m,
            };
            let ts = t.ok_or_else(|| err("missing timestamp".into()))?;
            if ts.fract() != 0.0 {
                return Err(err(format!("timestamp {ts} is not whole seconds")));
            }
            let node = |name: &str| ids.get(name).ok_or_else(|| err(format!("unknown node {name:?}")));
            Ok(TimedEdge {
                src: node(&s)?,
                dst: node(&d)?,
                ts: ts as i64,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests;
