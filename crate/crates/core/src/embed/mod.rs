//! Tokenization, embedding lookup, and word mover's distance between short
//! free-text values such as job titles.

mod store;
mod tokenize;
pub mod transport;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

pub use store::{EmbeddingFormat, EmbeddingStore};
pub use tokenize::{parse_stopwords, tokenize};

#[derive(Debug, Error, PartialEq)]
pub enum EmbedError {
    #[error("embedding file unreadable: {0}")]
    Io(String),
    #[error("malformed embeddings: {0}")]
    Format(String),
    #[error("document has no in-vocabulary tokens")]
    EmptyDoc,
    #[error("invalid distance matrix: {0}")]
    Matrix(String),
}

/// Normalized bag of words over an embedding vocabulary.
///
/// Weights are held as exact integer counts over a common total, so
/// `weight(t) = count(t) / total` and the weights sum to one by
/// construction. Terms are sorted by token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedDoc {
    terms: Vec<Term>,
    total: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Term {
    token: String,
    index: usize,
    count: u32,
}

impl WeightedDoc {
    /// True when no token was in vocabulary; such a document cannot be
    /// compared by transport.
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn weights(&self) -> impl Iterator<Item = (&str, f64)> + '_ {
        self.terms
            .iter()
            .map(move |t| (t.token.as_str(), f64::from(t.count) / f64::from(self.total)))
    }

    pub fn counts(&self) -> impl Iterator<Item = (&str, u32)> + '_ {
        self.terms.iter().map(|t| (t.token.as_str(), t.count))
    }

    pub fn total(&self) -> u32 {
        self.total
    }
}

/// Builds the nBOW for `tokens`. Out-of-vocabulary tokens are dropped (and
/// returned, in first-seen order) and the rest renormalized.
pub fn to_weighted_doc<S: AsRef<str>>(tokens: &[S], store: &EmbeddingStore) -> (WeightedDoc, Vec<String>) {
    let mut counts: BTreeMap<&str, (usize, u32)> = BTreeMap::new();
    let mut oov: Vec<String> = Vec::new();
    for t in tokens {
        let t = t.as_ref();
        match store.index_of(t) {
            Some(idx) => counts.entry(t).or_insert((idx, 0)).1 += 1,
            None => {
                if !oov.iter().any(|o| o == t) {
                    oov.push(t.to_string());
                }
            }
        }
    }
    let terms: Vec<Term> = counts
        .into_iter()
        .map(|(token, (index, count))| Term {
            token: token.to_string(),
            index,
            count,
        })
        .collect();
    let total = terms.iter().map(|t| t.count).sum();
    (WeightedDoc { terms, total }, oov)
}

/// Word mover's distance: the minimum cost of moving one nBOW's mass onto
/// the other's, paying the Euclidean distance between embeddings per unit.
///
/// The arguments are put in a canonical order before solving, so the result
/// is exactly symmetric.
pub fn wmd(a: &WeightedDoc, b: &WeightedDoc, store: &EmbeddingStore) -> Result<f64, EmbedError> {
    if a.is_empty() || b.is_empty() {
        return Err(EmbedError::EmptyDoc);
    }
    if a == b {
        return Ok(0.0);
    }
    let (a, b) = if a.terms <= b.terms { (a, b) } else { (b, a) };
    // scale both sides to the common integer total a.total * b.total
    let supply: Vec<u64> = a.terms.iter().map(|t| u64::from(t.count) * u64::from(b.total)).collect();
    let demand: Vec<u64> = b.terms.iter().map(|t| u64::from(t.count) * u64::from(a.total)).collect();
    let (cost, _) = transport::solve(&supply, &demand, |i, j| store.distance(a.terms[i].index, b.terms[j].index));
    Ok(cost / (f64::from(a.total) * f64::from(b.total)))
}

/// Symmetric, zero-diagonal matrix of pairwise distances between labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    labels: Vec<String>,
    values: Vec<f64>,
    /// Cells `(i, j)`, `i < j`, holding the sentinel instead of a distance.
    flagged: BTreeSet<(usize, usize)>,
    sentinel: Option<f64>,
}

impl DistanceMatrix {
    /// Validates and wraps a row-major `n × n` matrix.
    pub fn new(labels: Vec<String>, values: Vec<f64>) -> Result<Self, EmbedError> {
        let n = labels.len();
        if values.len() != n * n {
            return Err(EmbedError::Matrix(format!("{} values for {n} labels", values.len())));
        }
        let unique: BTreeSet<&String> = labels.iter().collect();
        if unique.len() != n {
            return Err(EmbedError::Matrix("labels are not unique".into()));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(EmbedError::Matrix(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if v.is_nan() {
                    return Err(EmbedError::Matrix(format!("NaN at ({i}, {j})")));
                }
                if !v.is_finite() || v < 0.0 {
                    return Err(EmbedError::Matrix(format!("entry {v} at ({i}, {j})")));
                }
                if v != values[j * n + i] {
                    return Err(EmbedError::Matrix(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(DistanceMatrix {
            labels,
            values,
            flagged: BTreeSet::new(),
            sentinel: None,
        })
    }

    /// Like [`DistanceMatrix::new`], restoring sentinel cells as well.
    pub fn from_parts(
        labels: Vec<String>,
        values: Vec<f64>,
        flagged: BTreeSet<(usize, usize)>,
        sentinel: Option<f64>,
    ) -> Result<Self, EmbedError> {
        let n = labels.len();
        if flagged.iter().any(|&(i, j)| i >= j || j >= n) {
            return Err(EmbedError::Matrix("flagged cell outside the upper triangle".into()));
        }
        if !flagged.is_empty() && sentinel.is_none() {
            return Err(EmbedError::Matrix("flagged cells without a sentinel".into()));
        }
        let mut m = DistanceMatrix::new(labels, values)?;
        m.flagged = flagged;
        m.sentinel = sentinel;
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.labels.len() + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn flagged(&self) -> &BTreeSet<(usize, usize)> {
        &self.flagged
    }

    /// Value used for incomparable pairs, if any were present.
    pub fn sentinel(&self) -> Option<f64> {
        self.sentinel
    }

    /// Labeled CSV: a header of labels, then one labeled row per label.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![String::new()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for (i, label) in self.labels.iter().enumerate() {
            let mut row = vec![label.clone()];
            row.extend((0..self.len()).map(|j| format_float(self.get(i, j))));
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_float(x: f64) -> String {
    let mut s = String::new();
    write!(s, "{x:?}").expect("string write");
    s
}

/// Pairwise WMD between the unique values, which are sorted so results do
/// not depend on input order. Pairs where either side has no in-vocabulary
/// token fall back to string equality: unequal values get the sentinel
/// `1 + max finite distance` and are flagged.
pub fn pairwise_distances<S: AsRef<str>>(values: &[S], store: &EmbeddingStore, stopwords: &HashSet<String>) -> PairwiseOutcome {
    let labels: Vec<String> = values
        .iter()
        .map(|v| v.as_ref().to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n = labels.len();
    let docs: Vec<(WeightedDoc, Vec<String>)> = labels
        .iter()
        .map(|l| to_weighted_doc(&tokenize(l, stopwords), store))
        .collect();

    // each cell is a pure function of its two documents
    let rows: Vec<Vec<Option<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| (i + 1..n).map(|j| wmd(&docs[i].0, &docs[j].0, store).ok()).collect())
        .collect();

    let max_finite = rows.iter().flatten().flatten().copied().fold(0.0f64, f64::max);
    let sentinel_value = 1.0 + max_finite;
    let mut values = vec![0.0; n * n];
    let mut flagged = BTreeSet::new();
    for (i, row) in rows.iter().enumerate() {
        for (off, cell) in row.iter().enumerate() {
            let j = i + 1 + off;
            let v = match cell {
                Some(d) => *d,
                None => {
                    flagged.insert((i, j));
                    sentinel_value
                }
            };
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    let oov = labels
        .iter()
        .zip(&docs)
        .filter(|(_, (_, oov))| !oov.is_empty())
        .map(|(l, (_, oov))| (l.clone(), oov.clone()))
        .collect();
    let empty_docs = labels
        .iter()
        .zip(&docs)
        .filter(|(_, (d, _))| d.is_empty())
        .map(|(l, _)| l.clone())
        .collect();
    let sentinel = (!flagged.is_empty()).then_some(sentinel_value);
    PairwiseOutcome {
        matrix: DistanceMatrix {
            labels,
            values,
            flagged,
            sentinel,
        },
        oov,
        empty_docs,
    }
}

#[derive(Debug, Clone)]
pub struct PairwiseOutcome {
    pub matrix: DistanceMatrix,
    /// Label → its out-of-vocabulary tokens.
    pub oov: BTreeMap<String, Vec<String>>,
    /// Labels with no in-vocabulary token at all.
    pub empty_docs: Vec<String>,
}
