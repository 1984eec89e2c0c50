//! Edge-list and node-mapping TSV files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::DirectedGraph;
use crate::error::{Error, Result};

/// One parsed edge line: `src<TAB>dst[<TAB>value]`.
pub type RawEdge = (String, String, Option<f64>);

pub fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

/// Parses edge TSV lines. Blank lines and lines starting with `#` are skipped.
pub fn parse_edges(reader: impl BufRead, origin: &str) -> Result<Vec<RawEdge>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = trimmed.split('\t').collect();
        let err = |message: String| Error::Parse {
            path: origin.to_owned(),
            line: i + 1,
            message,
        };
        match parts.as_slice() {
            [s, d] => out.push(((*s).to_owned(), (*d).to_owned(), None)),
            [s, d, w] => {
                let w: f64 = w.trim().parse().map_err(|_| err(format!("bad number {w:?}")))?;
                out.push(((*s).to_owned(), (*d).to_owned(), Some(w)));
            }
            _ => return Err(err(format!("expected 2 or 3 tab-separated fields, got {}", parts.len()))),
        }
    }
    Ok(out)
}

pub fn read_edges(path: &Path) -> Result<Vec<RawEdge>> {
    parse_edges(BufReader::new(open(path)?), &path.display().to_string())
}

/// Reads an edge-list file into a graph. `extra_nodes` declares isolated nodes.
pub fn read_graph(path: &Path, extra_nodes: &[String]) -> Result<DirectedGraph> {
    let edges = read_edges(path)?;
    DirectedGraph::from_labeled_edges(extra_nodes.iter().map(String::as_str), &as_refs(&edges))
}

fn as_refs(edges: &[RawEdge]) -> Vec<(&str, &str, Option<f64>)> {
    edges
        .iter()
        .map(|(s, d, w)| (s.as_str(), d.as_str(), *w))
        .collect()
}

/// Writes `src<TAB>dst<TAB>weight` using external names when present. The
/// weight column is omitted when every weight equals one.
pub fn write_edges(g: &DirectedGraph, mut w: impl Write) -> Result<()> {
    let unit = g.edges().all(|(_, _, x)| x == 1.0);
    for (u, v, x) in g.edges() {
        if unit {
            writeln!(w, "{}\t{}", g.node_name(u), g.node_name(v))?;
        } else {
            writeln!(w, "{}\t{}\t{}", g.node_name(u), g.node_name(v), x)?;
        }
    }
    Ok(())
}

/// Two-column `dense_id<TAB>external_id` mapping.
pub fn write_mapping(g: &DirectedGraph, mut w: impl Write) -> Result<()> {
    for u in 0..g.num_nodes() {
        writeln!(w, "{}\t{}", u, g.node_name(u))?;
    }
    Ok(())
}

pub fn read_mapping(reader: impl BufRead) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (a, b) = line.split_once('\t').ok_or_else(|| Error::Parse {
            path: "mapping".into(),
            line: i + 1,
            message: "expected two columns".into(),
        })?;
        let id = a.parse().map_err(|_| Error::Parse {
            path: "mapping".into(),
            line: i + 1,
            message: format!("bad id {a:?}"),
        })?;
        out.push((id, b.to_owned()));
    }
    Ok(out)
}

pub fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}
