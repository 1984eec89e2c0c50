//! Node labels as CSV `user,label` with label 0 (non-hateful) or 1 (hateful).

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRow {
    pub user: String,
    pub label: u8,
}

pub fn parse_labels(r: impl Read, origin: &str) -> Result<Vec<LabelRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<LabelRow>().enumerate() {
        let err = |message: String| Error::Parse {
            path: origin.to_owned(),
            line: i + 2,
            message,
        };
        let row = rec.map_err(|e| err(e.to_string()))?;
        if row.label > 1 {
            return Err(err(format!("label {} is not 0 or 1", row.label)));
        }
        out.push(row);
    }
    Ok(out)
}

pub fn read_labels(path: &Path) -> Result<Vec<LabelRow>> {
    parse_labels(crate::graph::io::open(path)?, &path.display().to_string())
}

pub fn write_labels(rows: &[LabelRow], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// Resolves label rows to `(node, label)` pairs sorted by node. Users absent
/// from the graph are an error, as are conflicting duplicates.
pub fn resolve(rows: &[LabelRow], g: &DirectedGraph) -> Result<Vec<(usize, u8)>> {
    let ids = g
        .ids()
        .ok_or_else(|| Error::InvalidInput("graph has no external ids".into()))?;
    let mut out: Vec<(usize, u8)> = rows
        .iter()
        .map(|r| {
            ids.get(&r.user)
                .map(|v| (v, r.label))
                .ok_or_else(|| Error::InvalidInput(format!("labeled user {:?} is not in the graph", r.user)))
        })
        .collect::<Result<_>>()?;
    out.sort_unstable();
    out.dedup();
    if let Some(w) = out.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidInput(format!("user {:?} has two labels", ids.name(w[0].0))));
    }
    Ok(out)
}
