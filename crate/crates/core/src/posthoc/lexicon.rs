//! Hate lexicon with community tags and whole-token matching.

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{preprocess_with, Profile};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub term: String,
    pub community: String,
}

/// Terms are matched as whole tokens or token sequences after hashtag-keeping
/// preprocessing. The final token of a term also matches with a plural `s` or
/// `es` suffix.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Lexicon {
    entries: Vec<LexiconEntry>,
    tokens: Vec<Vec<String>>,
    by_first: HashMap<String, Vec<usize>>,
}

impl Lexicon {
    pub fn new(entries: Vec<LexiconEntry>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut tokens = Vec::with_capacity(entries.len());
        let mut by_first: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            if e.community.trim().is_empty() {
                return Err(Error::InvalidInput(format!("lexicon term {:?} has an empty community", e.term)));
            }
            let toks = preprocess_with(&e.term, Profile::KeepHashtags);
            if toks.is_empty() {
                return Err(Error::InvalidInput(format!("lexicon term {:?} has no tokens", e.term)));
            }
            if !seen.insert(toks.join(" ")) {
                return Err(Error::InvalidInput(format!("duplicate lexicon term {:?}", e.term)));
            }
            by_first.entry(toks[0].clone()).or_default().push(i);
            tokens.push(toks);
        }
        Ok(Self {
            entries,
            tokens,
            by_first,
        })
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distinct communities in entry order.
    pub fn communities(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for e in &self.entries {
            if !out.contains(&e.community) {
                out.push(e.community.clone());
            }
        }
        out
    }

    /// Reads CSV `term,community` with a header row.
    pub fn read_csv(r: impl Read, origin: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let mut entries = Vec::new();
        for (i, rec) in rdr.deserialize::<LexiconEntry>().enumerate() {
            let e = rec.map_err(|e| Error::Parse {
                path: origin.to_owned(),
                line: i + 2,
                message: e.to_string(),
            })?;
            entries.push(e);
        }
        Self::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = crate::graph::io::open(path)?;
        Self::read_csv(f, &path.display().to_string())
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for e in &self.entries {
            out.serialize(e)?;
        }
        out.flush()?;
        Ok(())
    }

    fn token_matches(term: &str, token: &str, last: bool) -> bool {
        token == term
            || (last
                && token
                    .strip_prefix(term)
                    .is_some_and(|rest| rest == "s" || rest == "es"))
    }

    /// Indices of entries occurring in `tokens`.
    pub fn matching_entries(&self, tokens: &[String]) -> BTreeSet<usize> {
        let mut hits = BTreeSet::new();
        for (start, tok) in tokens.iter().enumerate() {
            // Plural forms are looked up by their stem; the full match below
            // only allows the suffix on a term's last token.
            let mut keys = vec![tok.as_str()];
            keys.extend(tok.strip_suffix("es"));
            keys.extend(tok.strip_suffix('s'));
            let mut candidates: Vec<usize> = keys
                .iter()
                .filter_map(|k| self.by_first.get(*k))
                .flatten()
                .copied()
                .collect();
            candidates.sort_unstable();
            candidates.dedup();
            for id in candidates {
                let term = &self.tokens[id];
                if start + term.len() > tokens.len() {
                    continue;
                }
                let ok = term
                    .iter()
                    .enumerate()
                    .all(|(j, t)| Self::token_matches(t, &tokens[start + j], j + 1 == term.len()));
                if ok {
                    hits.insert(id);
                }
            }
        }
        hits
    }

    /// Communities whose terms occur in `text`.
    pub fn communities_in(&self, text: &str) -> BTreeSet<String> {
        let tokens = preprocess_with(text, Profile::KeepHashtags);
        self.matching_entries(&tokens)
            .into_iter()
            .map(|i| self.entries[i].community.clone())
            .collect()
    }

    /// Whether any term occurs in `text`.
    pub fn hits(&self, text: &str) -> bool {
        !self.is_empty() && !self.matching_entries(&preprocess_with(text, Profile::KeepHashtags)).is_empty()
    }
}
