//! Frequent skill sets and association rules over per-ad skill baskets.

mod segment;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::embed::format_float;
use crate::skillnet::SkillVocab;

pub use segment::{segment_ads, segment_baskets, Segment, SegmentConfig, SegmentSelection};

#[derive(Debug, Error, PartialEq)]
pub enum MineError {
    #[error("transaction set is empty")]
    Empty,
    #[error("min_support must be in (0, 1], got {0}")]
    MinSupport(f64),
    #[error("max_len must be at least 1")]
    MaxLen,
    #[error("top_k must be at least 1")]
    TopK,
    #[error("min_lift must be finite and non-negative, got {0}")]
    MinLift(f64),
    #[error("unknown segment '{0}'")]
    UnknownSegment(String),
    #[error("percentile must be in (0, 100], got {0}")]
    Percentile(f64),
}

/// One basket of skill ids per ad, over a fixed universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransactionSet {
    /// Sorted, duplicate-free skill ids.
    pub transactions: Vec<Vec<usize>>,
    pub universe: SkillVocab,
}

impl TransactionSet {
    /// Baskets of `corpus` ads restricted to `universe`. Skills outside the
    /// universe are dropped; ads left empty still count as transactions.
    pub fn from_corpus(corpus: &Corpus, universe: &SkillVocab) -> Self {
        let transactions = corpus
            .iter()
            .map(|ad| {
                let mut t: Vec<usize> = ad.key_skills.iter().filter_map(|s| universe.index_of(s)).collect();
                t.sort_unstable();
                t.dedup();
                t
            })
            .collect();
        TransactionSet {
            transactions,
            universe: universe.clone(),
        }
    }

    /// Builds directly from id baskets; ids are sorted and deduplicated.
    ///
    /// Panics if an id is outside the universe.
    pub fn from_ids(mut transactions: Vec<Vec<usize>>, universe: SkillVocab) -> Self {
        for t in &mut transactions {
            t.sort_unstable();
            t.dedup();
            assert!(t.iter().all(|&i| i < universe.len()), "skill id outside universe");
        }
        TransactionSet { transactions, universe }
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn names(&self, items: &[usize]) -> Vec<&str> {
        items.iter().map(|&i| self.universe.skills[i].as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FrequentItemset {
    pub items: Vec<usize>,
    pub count: usize,
    pub n_transactions: usize,
}

impl FrequentItemset {
    pub fn support(&self) -> f64 {
        self.count as f64 / self.n_transactions as f64
    }
}

/// Smallest count whose support reaches `min_support` over `n` baskets.
/// Products within 1e-9 of an integer are treated as that integer, so
/// `0.07 × 100` asks for 7 and not 8.
pub fn min_count(n: usize, min_support: f64) -> usize {
    let c = min_support * n as f64;
    let r = c.round();
    if (c - r).abs() < 1e-9 {
        r as usize
    } else {
        c.ceil() as usize
    }
}

fn is_subset(small: &[usize], big: &[usize]) -> bool {
    let mut it = big.iter();
    small.iter().all(|x| it.any(|y| y == x))
}

fn count_candidates(t: &TransactionSet, candidates: &[Vec<usize>]) -> Vec<usize> {
    t.transactions
        .par_chunks(256)
        .map(|chunk| {
            let mut counts = vec![0usize; candidates.len()];
            for tx in chunk {
                for (c, cand) in candidates.iter().enumerate() {
                    if cand.len() <= tx.len() && is_subset(cand, tx) {
                        counts[c] += 1;
                    }
                }
            }
            counts
        })
        .reduce(
            || vec![0usize; candidates.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        )
}

/// Level-wise frequent itemset search. Output is sorted by size, then
/// lexicographically by item ids.
pub fn apriori(t: &TransactionSet, min_support: f64, max_len: usize) -> Result<Vec<FrequentItemset>, MineError> {
    if t.is_empty() {
        return Err(MineError::Empty);
    }
    if !(min_support > 0.0 && min_support <= 1.0) {
        return Err(MineError::MinSupport(min_support));
    }
    if max_len == 0 {
        return Err(MineError::MaxLen);
    }
    let n = t.len();
    let threshold = min_count(n, min_support);

    let mut singles = vec![0usize; t.universe.len()];
    for tx in &t.transactions {
        for &i in tx {
            singles[i] += 1;
        }
    }
    let mut level: Vec<(Vec<usize>, usize)> = singles
        .iter()
        .enumerate()
        .filter(|(_, &c)| c >= threshold)
        .map(|(i, &c)| (vec![i], c))
        .collect();

    let mut out = Vec::new();
    let mut size = 1;
    while !level.is_empty() {
        out.extend(level.iter().map(|(items, count)| FrequentItemset {
            items: items.clone(),
            count: *count,
            n_transactions: n,
        }));
        if size == max_len {
            break;
        }
        let frequent: std::collections::HashSet<&[usize]> = level.iter().map(|(i, _)| i.as_slice()).collect();
        let mut candidates = Vec::new();
        for (a, (x, _)) in level.iter().enumerate() {
            for (y, _) in &level[a + 1..] {
                if x[..size - 1] != y[..size - 1] {
                    // level is sorted, so no later y shares the prefix
                    break;
                }
                let mut cand = x.clone();
                cand.push(y[size - 1]);
                let all_frequent = (0..cand.len()).all(|skip| {
                    let sub: Vec<usize> = cand.iter().enumerate().filter(|&(k, _)| k != skip).map(|(_, &v)| v).collect();
                    frequent.contains(sub.as_slice())
                });
                if all_frequent {
                    candidates.push(cand);
                }
            }
        }
        let counts = count_candidates(t, &candidates);
        level = candidates.into_iter().zip(counts).filter(|(_, c)| *c >= threshold).collect();
        size += 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationRule {
    pub antecedent: Vec<usize>,
    pub consequent: Vec<usize>,
    /// Baskets holding antecedent ∪ consequent.
    pub count: usize,
    pub antecedent_count: usize,
    pub consequent_count: usize,
    pub n_transactions: usize,
    pub support: f64,
    pub confidence: f64,
    pub lift: f64,
}

impl AssociationRule {
    pub fn consequent_support(&self) -> f64 {
        self.consequent_count as f64 / self.n_transactions as f64
    }

    /// `python → {machine learning} 3.266`; several antecedent items are
    /// parenthesized.
    pub fn display(&self, universe: &SkillVocab) -> String {
        let name = |i: &usize| universe.skills[*i].as_str();
        let lhs: Vec<&str> = self.antecedent.iter().map(name).collect();
        let rhs: Vec<&str> = self.consequent.iter().map(name).collect();
        let lhs = if lhs.len() == 1 {
            lhs[0].to_string()
        } else {
            format!("({})", lhs.join(", "))
        };
        format!("{lhs} → {{{}}} {:.3}", rhs.join(", "), self.lift)
    }
}

/// Rules `X → Z∖X` for every frequent `Z` and nonempty proper `X ⊂ Z`,
/// kept when lift ≥ `min_lift`. Lift is computed as
/// `count(Z)·n / (count(X)·count(Y))`, which is symmetric in X and Y.
pub fn generate_rules(itemsets: &[FrequentItemset], min_lift: f64) -> Result<Vec<AssociationRule>, MineError> {
    if !(min_lift.is_finite() && min_lift >= 0.0) {
        return Err(MineError::MinLift(min_lift));
    }
    let counts: HashMap<&[usize], usize> = itemsets.iter().map(|f| (f.items.as_slice(), f.count)).collect();
    let mut rules = Vec::new();
    for z in itemsets.iter().filter(|z| z.items.len() >= 2) {
        let k = z.items.len();
        let n = z.n_transactions;
        for mask in 1..(1u64 << k) - 1 {
            let (mut x, mut y) = (Vec::new(), Vec::new());
            for (b, &item) in z.items.iter().enumerate() {
                if mask & (1 << b) != 0 {
                    x.push(item);
                } else {
                    y.push(item);
                }
            }
            let cx = *counts.get(x.as_slice()).expect("itemsets closed under subsets");
            let cy = *counts.get(y.as_slice()).expect("itemsets closed under subsets");
            let lift = (z.count as f64 * n as f64) / (cx as f64 * cy as f64);
            if lift >= min_lift {
                rules.push(AssociationRule {
                    antecedent: x,
                    consequent: y,
                    count: z.count,
                    antecedent_count: cx,
                    consequent_count: cy,
                    n_transactions: n,
                    support: z.support(),
                    confidence: z.count as f64 / cx as f64,
                    lift,
                });
            }
        }
    }
    rules.sort_by(|a, b| a.antecedent.cmp(&b.antecedent).then_with(|| a.consequent.cmp(&b.consequent)));
    Ok(rules)
}

/// Per antecedent, the `k` rules with highest lift; ties go to higher
/// support, then to the lexicographically smaller consequent.
pub fn top_recommendations(rules: &[AssociationRule], k: usize) -> Result<BTreeMap<Vec<usize>, Vec<AssociationRule>>, MineError> {
    if k == 0 {
        return Err(MineError::TopK);
    }
    let mut by_lhs: BTreeMap<Vec<usize>, Vec<AssociationRule>> = BTreeMap::new();
    for r in rules {
        by_lhs.entry(r.antecedent.clone()).or_default().push(r.clone());
    }
    for list in by_lhs.values_mut() {
        list.sort_by(|a, b| {
            b.lift
                .total_cmp(&a.lift)
                .then_with(|| b.count.cmp(&a.count))
                .then_with(|| a.consequent.cmp(&b.consequent))
        });
        list.truncate(k);
    }
    Ok(by_lhs)
}

fn join(t: &SkillVocab, items: &[usize]) -> String {
    items.iter().map(|&i| t.skills[i].as_str()).collect::<Vec<_>>().join(" | ")
}

/// `items,size,count,support`.
pub fn itemsets_to_csv(itemsets: &[FrequentItemset], universe: &SkillVocab) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["items", "size", "count", "support"])
        .expect("in-memory write");
    for f in itemsets {
        w.write_record([
            join(universe, &f.items),
            f.items.len().to_string(),
            f.count.to_string(),
            format_float(f.support()),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

/// `antecedent,consequent,support,confidence,lift`.
pub fn rules_to_csv(rules: &[AssociationRule], universe: &SkillVocab) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["antecedent", "consequent", "support", "confidence", "lift"])
        .expect("in-memory write");
    for r in rules {
        w.write_record([
            join(universe, &r.antecedent),
            join(universe, &r.consequent),
            format_float(r.support),
            format_float(r.confidence),
            format_float(r.lift),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

/// One display line per recommendation, grouped by antecedent.
pub fn render_recommendations(top: &BTreeMap<Vec<usize>, Vec<AssociationRule>>, universe: &SkillVocab) -> String {
    let mut out = String::new();
    for rules in top.values() {
        for r in rules {
            let _ = writeln!(out, "{}", r.display(universe));
        }
    }
    out
}
