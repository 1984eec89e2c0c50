//! Versioned binary containers.
//!
//! `HGEMB1` (embeddings), all integers little-endian:
//!
//! ```text
//! magic "HGEMB1" | u32 dim | u32 vocab_size
//! vocab_size x (u32 len, utf8 word, u64 count)
//! u32 len, JSON metadata
//! u32 n_tags, n_tags x (u32 len, utf8 tag)
//! u32 n_matrices, n x (u32 len, utf8 name, u32 rows, u32 cols, rows*cols f32)
//! ```
//!
//! `HGGNN1` (model checkpoints):
//!
//! ```text
//! magic "HGGNN1" | u32 len, JSON config
//! u32 n_tensors, n x (u32 len, utf8 name, u32 rows, u32 cols, rows*cols f64)
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const EMB_MAGIC: &[u8; 6] = b"HGEMB1";
pub const GNN_MAGIC: &[u8; 6] = b"HGGNN1";

#[derive(Debug, Clone, PartialEq)]
pub struct NamedMatrix<T> {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingContainer {
    pub dim: usize,
    pub vocab: Vec<(String, u64)>,
    pub meta: serde_json::Value,
    pub tags: Vec<String>,
    pub matrices: Vec<NamedMatrix<f32>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointContainer {
    pub config: serde_json::Value,
    pub tensors: Vec<NamedMatrix<f64>>,
}

fn put_u32(w: &mut impl Write, x: usize) -> Result<()> {
    let x = u32::try_from(x).map_err(|_| Error::Container(format!("{x} exceeds u32")))?;
    w.write_all(&x.to_le_bytes())?;
    Ok(())
}

fn put_str(w: &mut impl Write, s: &str) -> Result<()> {
    put_u32(w, s.len())?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn get_u32(r: &mut impl Read) -> Result<usize> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b) as usize)
}

fn get_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn get_str(r: &mut impl Read) -> Result<String> {
    let n = get_u32(r)?;
    let mut b = vec![0u8; n];
    r.read_exact(&mut b)?;
    String::from_utf8(b).map_err(|_| Error::Container("invalid utf-8".into()))
}

fn check_magic(r: &mut impl Read, magic: &[u8; 6]) -> Result<()> {
    let mut m = [0u8; 6];
    r.read_exact(&mut m)?;
    if &m != magic {
        return Err(Error::Container(format!(
            "expected magic {:?}, found {:?}",
            String::from_utf8_lossy(magic),
            String::from_utf8_lossy(&m)
        )));
    }
    Ok(())
}

fn check_shape<T>(m: &NamedMatrix<T>) -> Result<()> {
    if m.rows * m.cols != m.data.len() {
        return Err(Error::Container(format!(
            "matrix {} declares {}x{} but holds {} values",
            m.name,
            m.rows,
            m.cols,
            m.data.len()
        )));
    }
    Ok(())
}

impl EmbeddingContainer {
    pub fn matrix(&self, name: &str) -> Option<&NamedMatrix<f32>> {
        self.matrices.iter().find(|m| m.name == name)
    }

    pub fn write(&self, mut w: impl Write) -> Result<()> {
        w.write_all(EMB_MAGIC)?;
        put_u32(&mut w, self.dim)?;
        put_u32(&mut w, self.vocab.len())?;
        for (word, count) in &self.vocab {
            put_str(&mut w, word)?;
            w.write_all(&count.to_le_bytes())?;
        }
        put_str(&mut w, &serde_json::to_string(&self.meta)?)?;
        put_u32(&mut w, self.tags.len())?;
        for t in &self.tags {
            put_str(&mut w, t)?;
        }
        put_u32(&mut w, self.matrices.len())?;
        for m in &self.matrices {
            check_shape(m)?;
            put_str(&mut w, &m.name)?;
            put_u32(&mut w, m.rows)?;
            put_u32(&mut w, m.cols)?;
            for x in &m.data {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read(mut r: impl Read) -> Result<Self> {
        check_magic(&mut r, EMB_MAGIC)?;
        let dim = get_u32(&mut r)?;
        let n_vocab = get_u32(&mut r)?;
        let mut vocab = Vec::with_capacity(n_vocab);
        for _ in 0..n_vocab {
            let w = get_str(&mut r)?;
            vocab.push((w, get_u64(&mut r)?));
        }
        let meta = serde_json::from_str(&get_str(&mut r)?)?;
        let n_tags = get_u32(&mut r)?;
        let tags = (0..n_tags).map(|_| get_str(&mut r)).collect::<Result<_>>()?;
        let n_mat = get_u32(&mut r)?;
        let mut matrices = Vec::with_capacity(n_mat);
        for _ in 0..n_mat {
            let name = get_str(&mut r)?;
            let rows = get_u32(&mut r)?;
            let cols = get_u32(&mut r)?;
            let mut bytes = vec![0u8; rows * cols * 4];
            r.read_exact(&mut bytes)?;
            let data = bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            matrices.push(NamedMatrix { name, rows, cols, data });
        }
        Ok(Self {
            dim,
            vocab,
            meta,
            tags,
            matrices,
        })
    }
}

impl CheckpointContainer {
    pub fn tensor(&self, name: &str) -> Option<&NamedMatrix<f64>> {
        self.tensors.iter().find(|m| m.name == name)
    }

    pub fn write(&self, mut w: impl Write) -> Result<()> {
        w.write_all(GNN_MAGIC)?;
        put_str(&mut w, &serde_json::to_string(&self.config)?)?;
        put_u32(&mut w, self.tensors.len())?;
        for t in &self.tensors {
            check_shape(t)?;
            put_str(&mut w, &t.name)?;
            put_u32(&mut w, t.rows)?;
            put_u32(&mut w, t.cols)?;
            for x in &t.data {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read(mut r: impl Read) -> Result<Self> {
        check_magic(&mut r, GNN_MAGIC)?;
        let config = serde_json::from_str(&get_str(&mut r)?)?;
        let n = get_u32(&mut r)?;
        let mut tensors = Vec::with_capacity(n);
        for _ in 0..n {
            let name = get_str(&mut r)?;
            let rows = get_u32(&mut r)?;
            let cols = get_u32(&mut r)?;
            let mut bytes = vec![0u8; rows * cols * 8];
            r.read_exact(&mut bytes)?;
            let data = bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            tensors.push(NamedMatrix { name, rows, cols, data });
        }
        Ok(Self { config, tensors })
    }
}
