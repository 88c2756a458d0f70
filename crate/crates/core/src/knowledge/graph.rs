use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use ndarray::{Array2, Axis};

use super::{parse_err, DecadeKey, EmbeddingStore, KnowledgeError, Modality};
use crate::corpus::{Decade, TokenFrequencyIndex};
use crate::linalg::{randomized_svd, RandomizedSvdOptions, SparseMatrix, Svd};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct ConceptEdge<T> {
    pub relation: String,
    pub start: String,
    pub end: String,
    pub weight: T,
}

/// Weighted, typed edges between concepts. Construction lower-cases
/// tokens, drops self-loops and merges repeated `(relation, start, end)`
/// edges by summing their weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptGraph<T> {
    edges: Vec<ConceptEdge<T>>,
    index: BTreeMap<String, usize>,
}

impl<T: Scalar> ConceptGraph<T> {
    pub fn new(edges: impl IntoIterator<Item = ConceptEdge<T>>) -> Result<Self, KnowledgeError> {
        let mut merged: BTreeMap<(String, String, String), T> = BTreeMap::new();
        for e in edges {
            if !(e.weight > T::zero() && e.weight.is_finite()) {
                return Err(KnowledgeError::NonFinite {
                    token: format!(
                        "{} {} {} (weight must be positive)",
                        e.relation, e.start, e.end
                    ),
                });
            }
            let (s, t) = (e.start.to_lowercase(), e.end.to_lowercase());
            if s == t {
                continue;
            }
            let w = merged
                .entry((e.relation.to_lowercase(), s, t))
                .or_insert(T::zero());
            *w = *w + e.weight;
        }
        let edges: Vec<ConceptEdge<T>> = merged
            .into_iter()
            .map(|((relation, start, end), weight)| ConceptEdge {
                relation,
                start,
                end,
                weight,
            })
            .collect();
        let mut names: Vec<&str> = edges
            .iter()
            .flat_map(|e| [e.start.as_str(), e.end.as_str()])
            .collect();
        names.sort_unstable();
        names.dedup();
        let index = names
            .into_iter()
            .enumerate()
            .map(|(i, n)| (n.to_string(), i))
            .collect();
        Ok(Self { edges, index })
    }

    pub fn edges(&self) -> &[ConceptEdge<T>] {
        &self.edges
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Concept to node id, ids assigned in sorted token order.
    pub fn concept_index(&self) -> &BTreeMap<String, usize> {
        &self.index
    }

    pub fn concepts(&self) -> impl Iterator<Item = &str> {
        self.index.keys().map(String::as_str)
    }

    /// Number of edges touching each concept.
    pub fn edge_counts(&self) -> HashMap<String, u64> {
        let mut out = HashMap::new();
        for e in &self.edges {
            *out.entry(e.start.clone()).or_insert(0) += 1;
            *out.entry(e.end.clone()).or_insert(0) += 1;
        }
        out
    }

    /// Slice of the graph known at decade `t`: both endpoints must have a
    /// reference-corpus count of at least `min_count` before `t`.
    pub fn truncate(&self, freq: &TokenFrequencyIndex, t: Decade, min_count: u64) -> Self {
        let keep = |c: &str| freq.before(c, t) >= min_count;
        let edges: Vec<ConceptEdge<T>> = self
            .edges
            .iter()
            .filter(|e| min_count == 0 || (keep(&e.start) && keep(&e.end)))
            .cloned()
            .collect();
        Self::new(edges).expect("edges of a valid graph stay valid")
    }

    /// Symmetric co-occurrence matrix: each edge adds its weight to both
    /// `(start, end)` and `(end, start)`.
    pub fn cooccurrence(&self) -> Result<SparseMatrix<T>, KnowledgeError> {
        let n = self.index.len();
        let trip = self.edges.iter().flat_map(|e| {
            let (i, j) = (self.index[&e.start], self.index[&e.end]);
            [(i, j, e.weight), (j, i, e.weight)]
        });
        Ok(SparseMatrix::from_triplets(n, n, trip)?)
    }
}

/// Reads `relation start end weight` TSV rows.
pub fn parse_graph<T: Scalar, R: BufRead>(reader: R) -> Result<ConceptGraph<T>, KnowledgeError> {
    let mut edges = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = t.split('\t').map(str::trim).collect();
        if cols.len() != 4 {
            return Err(parse_err(
                i + 1,
                format!("expected 4 tab-separated columns, found {}", cols.len()),
            ));
        }
        let weight: T = cols[3]
            .parse()
            .map_err(|_| parse_err(i + 1, format!("weight {:?} is not a number", cols[3])))?;
        if !(weight > T::zero()) {
            return Err(parse_err(
                i + 1,
                format!("weight {:?} must be positive", cols[3]),
            ));
        }
        edges.push(ConceptEdge {
            relation: cols[0].to_string(),
            start: cols[1].to_string(),
            end: cols[2].to_string(),
            weight,
        });
    }
    ConceptGraph::new(edges)
}

/// PPMI matrix with the concept label of every row/column.
#[derive(Debug, Clone, PartialEq)]
pub struct PpmiMatrix<T> {
    pub matrix: SparseMatrix<T>,
    pub concepts: Vec<String>,
}

/// `max(0, log(p(i,j) / (p(i) p(j))))` with probabilities taken from the
/// co-occurrence mass; no context smoothing.
pub fn ppmi_from_cooccurrence<T: Scalar>(
    c: &SparseMatrix<T>,
) -> Result<SparseMatrix<T>, KnowledgeError> {
    let mut rows = vec![T::zero(); c.rows()];
    let mut cols = vec![T::zero(); c.cols()];
    let mut total = T::zero();
    for (i, j, v) in c.iter() {
        rows[i] = rows[i] + v;
        cols[j] = cols[j] + v;
        total = total + v;
    }
    if !(total > T::zero()) {
        return Err(KnowledgeError::EmptyGraph);
    }
    let entries: Vec<(usize, usize, T)> = c
        .iter()
        .filter(|(_, _, v)| *v > T::zero())
        .map(|(i, j, v)| {
            let pmi = (v * total / (rows[i] * cols[j])).ln();
            (i, j, pmi.max(T::zero()))
        })
        .collect();
    Ok(SparseMatrix::from_triplets(c.rows(), c.cols(), entries)?)
}

pub fn ppmi<T: Scalar>(graph: &ConceptGraph<T>) -> Result<PpmiMatrix<T>, KnowledgeError> {
    if graph.is_empty() {
        return Err(KnowledgeError::EmptyGraph);
    }
    Ok(PpmiMatrix {
        matrix: ppmi_from_cooccurrence(&graph.cooccurrence()?)?,
        concepts: graph.concepts().map(str::to_string).collect(),
    })
}

/// Truncated SVD with a deterministic sign: each left singular vector is
/// flipped (with its right partner) so its largest-magnitude entry is
/// positive.
pub fn svd_embed<T: Scalar>(
    m: &SparseMatrix<T>,
    rank: usize,
    opts: RandomizedSvdOptions,
) -> Result<(Array2<T>, Svd<T>), KnowledgeError> {
    let mut svd = randomized_svd(m, rank, opts)?;
    for k in 0..svd.s.len() {
        let col = svd.u.column(k);
        let (mut best, mut mag) = (T::zero(), T::neg_infinity());
        for &x in col.iter() {
            if x.abs() > mag {
                mag = x.abs();
                best = x;
            }
        }
        if best < T::zero() {
            svd.u.column_mut(k).mapv_inplace(|x| -x);
            svd.v.column_mut(k).mapv_inplace(|x| -x);
        }
    }
    Ok((symmetric_embedding(&svd), svd))
}

/// Row `i` is `(U_i + V_i) / 2` scaled column-wise by `sqrt(sigma)`.
pub fn symmetric_embedding<T: Scalar>(svd: &Svd<T>) -> Array2<T> {
    let half = T::lit(0.5);
    let mut e = (&svd.u + &svd.v).mapv(|x| x * half);
    for (mut col, &s) in e.axis_iter_mut(Axis(1)).zip(svd.s.iter()) {
        let r = s.sqrt();
        col.mapv_inplace(|x| x * r);
    }
    e
}

/// Conceptual store for one decade from a PPMI matrix. Vectors are always
/// `rank` wide; a graph with fewer concepts than `rank` is factorized at
/// full rank and the remaining coordinates are zero.
pub fn concept_store<T: Scalar>(
    ppmi: &PpmiMatrix<T>,
    rank: usize,
    opts: RandomizedSvdOptions,
    decade: Decade,
) -> Result<EmbeddingStore<T>, KnowledgeError> {
    let effective = rank.min(ppmi.concepts.len());
    let (emb, _) = svd_embed(&ppmi.matrix, effective, opts)?;
    let mut store = EmbeddingStore::new(Modality::Conceptual, rank);
    for (concept, row) in ppmi.concepts.iter().zip(emb.axis_iter(Axis(0))) {
        let mut v = row.to_vec();
        v.resize(rank, T::zero());
        store.insert(concept, DecadeKey::At(decade), v)?;
    }
    Ok(store)
}
