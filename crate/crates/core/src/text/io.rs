//! Posts as JSON lines: `{"user": str, "ts": int, "text": str}`.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{RawPost, UserCorpus};
use crate::error::{Error, Result};
use crate::graph::io::open;

pub fn parse_posts(reader: impl BufRead, origin: &str) -> Result<Vec<RawPost>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let post: RawPost = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: origin.to_owned(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(post);
    }
    Ok(out)
}

pub fn read_corpus(path: &Path) -> Result<UserCorpus> {
    let posts = parse_posts(BufReader::new(open(path)?), &path.display().to_string())?;
    Ok(UserCorpus::from_posts(posts))
}

pub fn write_posts<'a>(posts: impl IntoIterator<Item = &'a RawPost>, mut w: impl Write) -> Result<()> {
    for p in posts {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
