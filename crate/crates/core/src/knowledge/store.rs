use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};

use super::{parse_err, KnowledgeError, Modality};
use crate::corpus::Decade;
use crate::scalar::Scalar;

/// Decade a vector belongs to; `All` marks time-invariant vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DecadeKey {
    All,
    At(Decade),
}

impl fmt::Display for DecadeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecadeKey::All => f.write_str("ALL"),
            DecadeKey::At(d) => write!(f, "{d}"),
        }
    }
}

impl std::str::FromStr for DecadeKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") {
            Ok(DecadeKey::All)
        } else {
            s.parse::<Decade>()
                .map(|y| DecadeKey::At(crate::corpus::decade_of(y)))
                .map_err(|_| format!("{s:?} is neither a decade nor ALL"))
        }
    }
}

/// Dense vectors keyed by `(token, decade)`, all of one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore<T> {
    modality: Modality,
    dim: usize,
    vectors: BTreeMap<(String, DecadeKey), Vec<T>>,
}

impl<T: Scalar> EmbeddingStore<T> {
    pub fn new(modality: Modality, dim: usize) -> Self {
        Self {
            modality,
            dim,
            vectors: BTreeMap::new(),
        }
    }

    pub fn modality(&self) -> Modality {
        self.modality
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

    pub fn insert(&mut self, token: &str, key: DecadeKey, v: Vec<T>) -> Result<(), KnowledgeError> {
        if v.len() != self.dim {
            return Err(KnowledgeError::DimensionMismatch {
                token: token.to_string(),
                expected: self.dim,
                found: v.len(),
            });
        }
        if !crate::scalar::all_finite(&v) {
            return Err(KnowledgeError::NonFinite {
                token: token.to_string(),
            });
        }
        self.vectors.insert((token.to_string(), key), v);
        Ok(())
    }

    /// Vector for `token` at decade `t`, falling back to a time-invariant
    /// entry. `None` is a miss, never a zero vector.
    pub fn get(&self, token: &str, t: Decade) -> Option<&[T]> {
        self.get_exact(token, DecadeKey::At(t))
            .or_else(|| self.get_exact(token, DecadeKey::All))
    }

    pub fn get_exact(&self, token: &str, key: DecadeKey) -> Option<&[T]> {
        self.vectors
            .get(&(token.to_string(), key))
            .map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, DecadeKey, &[T])> {
        self.vectors
            .iter()
            .map(|((t, k), v)| (t.as_str(), *k, v.as_slice()))
    }

    /// Merges another store of the same modality and dimension.
    pub fn extend(&mut self, other: EmbeddingStore<T>) -> Result<(), KnowledgeError> {
        for ((tok, key), v) in other.vectors {
            self.insert(&tok, key, v)?;
        }
        Ok(())
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "dim={}", self.dim)?;
        for ((tok, key), v) in &self.vectors {
            write!(w, "{tok} {key}")?;
            for x in v {
                write!(w, " {}", x.exact_string())?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Reads `dim=<d>` followed by `token decade|ALL f1 .. fd` rows.
    pub fn read<R: BufRead>(
        reader: R,
        modality: Modality,
        expected_dim: usize,
    ) -> Result<Self, KnowledgeError> {
        let mut lines = reader.lines().enumerate();
        let dim = loop {
            let Some((i, line)) = lines.next() else {
                return Err(parse_err(0, "missing dim= header"));
            };
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let d: usize = t
                .strip_prefix("dim=")
                .and_then(|d| d.trim().parse().ok())
                .ok_or_else(|| parse_err(i + 1, format!("expected dim=<d> header, found {t:?}")))?;
            break d;
        };
        if dim != expected_dim {
            return Err(KnowledgeError::DimensionMismatch {
                token: "<header>".into(),
                expected: expected_dim,
                found: dim,
            });
        }
        let mut store = Self::new(modality, dim);
        for (i, line) in lines {
            let line = line?;
            let mut cols = line.split_whitespace();
            let Some(tok) = cols.next() else { continue };
            if tok.starts_with('#') {
                continue;
            }
            let tok = tok.to_lowercase();
            let key: DecadeKey = cols
                .next()
                .ok_or_else(|| parse_err(i + 1, "missing decade column"))?
                .parse()
                .map_err(|e: String| parse_err(i + 1, e))?;
            let v = cols
                .map(|c| {
                    c.parse::<T>()
                        .map_err(|_| parse_err(i + 1, format!("{c:?} is not a number")))
                })
                .collect::<Result<Vec<T>, _>>()?;
            store.insert(&tok, key, v)?;
        }
        Ok(store)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_header_and_rows() {
        let s = EmbeddingStore::<f64>::read(
            "dim=3\ncar 1880 0.1 0.2 0.3\n".as_bytes(),
            Modality::Linguistic,
            3,
        )
        .unwrap();
        assert_eq!(s.get("car", 1880), Some(&[0.1, 0.2, 0.3][..]));
        assert_eq!(s.get("car", 1890), None);
    }

    #[test]
    fn time_invariant_fallback() {
        let s = EmbeddingStore::<f32>::read(
            "dim=2\nhorse ALL 1 2\nhorse 1900 3 4\n".as_bytes(),
            Modality::Perceptual,
            2,
        )
        .unwrap();
        assert_eq!(s.get("horse", 1850), Some(&[1.0f32, 2.0][..]));
        assert_eq!(s.get("horse", 1900), Some(&[3.0f32, 4.0][..]));
    }

    #[test]
    fn dimension_and_value_errors() {
        let e = EmbeddingStore::<f64>::read(
            "dim=3\ncar 1880 0.1 0.2\n".as_bytes(),
            Modality::Linguistic,
            3,
        );
        match e {
            Err(KnowledgeError::DimensionMismatch {
                token,
                expected: 3,
                found: 2,
            }) => assert_eq!(token, "car"),
            other => panic!("{other:?}"),
        }
        let e = EmbeddingStore::<f64>::read(
            "dim=1\ncar 1880 NaN\n".as_bytes(),
            Modality::Linguistic,
            1,
        );
        assert!(matches!(e, Err(KnowledgeError::NonFinite { .. })));
        let e = EmbeddingStore::<f64>::read("dim=2\n".as_bytes(), Modality::Linguistic, 3);
        assert!(matches!(e, Err(KnowledgeError::DimensionMismatch { .. })));
    }

    #[test]
    fn write_read_is_bit_exact() {
        let mut s = EmbeddingStore::<f64>::new(Modality::Conceptual, 2);
        s.insert("a", DecadeKey::At(1900), vec![1.0 / 3.0, -2e-17])
            .unwrap();
        s.insert("b", DecadeKey::All, vec![0.1, 7.0]).unwrap();
        let mut buf = Vec::new();
        s.write(&mut buf).unwrap();
        let back = EmbeddingStore::read(buf.as_slice(), Modality::Conceptual, 2).unwrap();
        assert_eq!(back, s);
    }
}
