//! Pretrained word vectors in the plain-text `word v1 ... vd` format, with an
//! optional `count dim` header line.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::io::open;

#[derive(Debug, Clone, PartialEq)]
pub struct WordVectors {
    pub dim: usize,
    pub words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
}

impl WordVectors {
    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index
            .get(word)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn parse(reader: impl BufRead, origin: &str) -> Result<Self> {
        let mut dim: Option<usize> = None;
        let mut words = Vec::new();
        let mut index = HashMap::new();
        let mut data = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: origin.to_owned(),
                line: i + 1,
                message,
            };
            if i == 0 && fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok()) {
                continue;
            }
            let values = fields[1..]
                .iter()
                .map(|f| f.parse::<f64>().map_err(|_| err(format!("bad number {f:?}"))))
                .collect::<Result<Vec<f64>>>()?;
            match dim {
                None if values.is_empty() => return Err(err("word has no vector".into())),
                None => dim = Some(values.len()),
                Some(d) if d != values.len() => {
                    return Err(err(format!("expected {d} values, found {}", values.len())))
                }
                Some(_) => {}
            }
            if index.insert(fields[0].to_owned(), words.len()).is_some() {
                return Err(err(format!("duplicate word {:?}", fields[0])));
            }
            words.push(fields[0].to_owned());
            data.extend(values);
        }
        Ok(Self {
            dim: dim.unwrap_or(0),
            words,
            index,
            data,
        })
    }

    pub fn write(&self, mut w: impl Write) -> Result<()> {
        for (i, word) in self.words.iter().enumerate() {
            write!(w, "{word}")?;
            for x in &self.data[i * self.dim..(i + 1) * self.dim] {
                write!(w, " {x}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

pub fn load_word_embeddings(path: &Path) -> Result<WordVectors> {
    WordVectors::parse(BufReader::new(open(path)?), &path.display().to_string())
}

/// Mean of the vectors of in-vocabulary tokens; zero when none are known.
pub fn mean_pool(tokens: &[String], vectors: &WordVectors) -> Vec<f64> {
    let mut acc = vec![0.0; vectors.dim];
    let mut n = 0usize;
    for t in tokens {
        if let Some(v) = vectors.get(t) {
            for (a, x) in acc.iter_mut().zip(v) {
                *a += x;
            }
            n += 1;
        }
    }
    if n > 0 {
        acc.iter_mut().for_each(|a| *a /= n as f64);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_words() -> WordVectors {
        WordVectors::parse("a 1 0\nb 0 1\n".as_bytes(), "mem").unwrap()
    }

    fn toks(s: &[&str]) -> Vec<String> {
        s.iter().map(|t| (*t).to_owned()).collect()
    }

    #[test]
    fn mean_of_two() {
        assert_eq!(mean_pool(&toks(&["a", "b"]), &two_words()), vec![0.5, 0.5]);
    }

    #[test]
    fn all_oov_is_zero() {
        assert_eq!(mean_pool(&toks(&["x", "y"]), &two_words()), vec![0.0, 0.0]);
    }

    #[test]
    fn fixture_file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vecs.txt");
        let original = WordVectors::parse("cat 0.5 -1.25\ndog 2 0.125\nemu -3 4\n".as_bytes(), "mem").unwrap();
        crate::graph::io::write_file(&path, |w| original.write(w)).unwrap();
        assert_eq!(load_word_embeddings(&path).unwrap(), original);
    }

    #[test]
    fn header_line_skipped() {
        let v = WordVectors::parse("2 2\na 1 0\nb 0 1\n".as_bytes(), "mem").unwrap();
        assert_eq!(v.len(), 2);
    }

    #[test]
    fn inconsistent_dimension_rejected() {
        let err = WordVectors::parse("a 1 0\nb 0 1 2\n".as_bytes(), "mem").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    proptest! {
        #[test]
        fn mean_pool_ignores_order(mut t in prop::collection::vec(prop::sample::select(vec!["a", "b", "z"]), 0..10), seed in any::<u64>()) {
            let v = two_words();
            let before = mean_pool(&toks(&t), &v);
            use rand::seq::SliceRandom;
            t.shuffle(&mut crate::rng::rng(seed));
            let after = mean_pool(&toks(&t), &v);
            for (x, y) in before.iter().zip(&after) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
