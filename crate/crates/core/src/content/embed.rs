use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Article embeddings of a fixed dimension.
///
/// File grammar: a header line `d=<dim>`, then one line per article holding
/// the article id followed by `dim` decimal components, all separated by
/// single spaces. Blank lines are ignored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Self {
        EmbeddingStore {
            dim,
            vectors: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.vectors.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn insert(&mut self, id: impl Into<String>, v: Vec<f64>) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "vector has dimension {}, store has {}",
                v.len(),
                self.dim
            )));
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("embedding components must be finite".into()));
        }
        self.vectors.insert(id.into(), v);
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let header = loop {
            match lines.next() {
                Some((i, line)) => {
                    let line = line.map_err(|e| Error::InvalidInput(format!("read failure at line {}: {e}", i + 1)))?;
                    if !line.trim().is_empty() {
                        break line;
                    }
                }
                None => return Err(Error::InvalidInput("embedding file is empty".into())),
            }
        };
        let dim: usize = header
            .trim()
            .strip_prefix("d=")
            .and_then(|d| d.trim().parse().ok())
            .filter(|d| *d > 0)
            .ok_or_else(|| Error::InvalidInput(format!("embedding header must be d=<dim>, got {header:?}")))?;
        let mut store = EmbeddingStore::new(dim);
        for (i, line) in lines {
            let line = line.map_err(|e| Error::InvalidInput(format!("read failure at line {}: {e}", i + 1)))?;
            let mut parts = line.split_whitespace();
            let Some(id) = parts.next() else { continue };
            let v: Vec<f64> = parts
                .map(|p| p.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidInput(format!("line {}: bad component: {e}", i + 1)))?;
            if v.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "line {}: expected {dim} components, found {}",
                    i + 1,
                    v.len()
                )));
            }
            store
                .insert(id, v)
                .map_err(|e| Error::InvalidInput(format!("line {}: {e}", i + 1)))?;
        }
        Ok(store)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file))
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "d={}", self.dim)?;
        for (id, v) in &self.vectors {
            write!(w, "{id}")?;
            for c in v {
                write!(w, " {c}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Deterministic bag-of-words embedding: each lower-cased alphanumeric token
/// adds 1 at index `fnv1a(token) mod d`; the result is L2-normalised.
///
/// A hermetic stand-in for a sentence encoder in tests and demos.
pub fn hash_embed(text: &str, d: usize) -> Result<Vec<f64>> {
    if d < 8 {
        return Err(Error::InvalidInput(format!(
            "hash embedding dimension must be >= 8, got {d}"
        )));
    }
    let mut v = vec![0.0; d];
    let lower = text.to_lowercase();
    let mut any = false;
    for token in lower.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
        v[(fnv1a(token.as_bytes()) % d as u64) as usize] += 1.0;
        any = true;
    }
    if !any {
        return Err(Error::InvalidInput(
            "cannot embed text without tokens (zero vector)".into(),
        ));
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::content::cosine_similarity;

    #[test]
    fn hash_embed_is_deterministic() {
        let a = hash_embed("Storm hits the coast", 64).unwrap();
        let b = hash_embed("Storm hits the coast", 64).unwrap();
        assert_eq!(a, b);
        assert!((cosine_similarity(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_vocabulary_is_orthogonal() {
        let a = hash_embed("alpha beta gamma", 4096).unwrap();
        let b = hash_embed("delta epsilon zeta", 4096).unwrap();
        let supp = |v: &[f64]| {
            v.iter()
                .enumerate()
                .filter(|(_, x)| **x > 0.0)
                .map(|(i, _)| i)
                .collect::<Vec<_>>()
        };
        let (sa, sb) = (supp(&a), supp(&b));
        assert!(sa.iter().all(|i| !sb.contains(i)), "fixture vocabulary collides");
        assert_eq!(cosine_similarity(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn hash_embed_rejects_empty_and_small_dim() {
        assert!(hash_embed("   ", 64).is_err());
        assert!(hash_embed("word", 4).is_err());
    }

    #[test]
    fn file_round_trip() {
        let mut store = EmbeddingStore::new(3);
        store.insert("N1", vec![0.1, -2.5, 3.0]).unwrap();
        store.insert("N2", vec![1e-7, 0.0, 1.0 / 3.0]).unwrap();
        let mut buf = Vec::new();
        store.write(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("d=3\nN1 0.1 -2.5 3\n"));
        let back = EmbeddingStore::read(buf.as_slice()).unwrap();
        assert_eq!(back, store);
    }

    #[test]
    fn loader_rejects_bad_rows() {
        assert!(EmbeddingStore::read("d=2\nA 1 2 3\n".as_bytes()).is_err());
        assert!(EmbeddingStore::read("dim 2\nA 1 2\n".as_bytes()).is_err());
        assert!(EmbeddingStore::read("d=2\nA 1 NaN\n".as_bytes()).is_err());
    }
}
