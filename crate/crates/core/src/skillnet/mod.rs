//! Skill vocabulary, job-skill incidence, L2 normalization, the skill-skill
//! cosine matrix, and resolution-based clustering of that matrix.

mod cluster;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::corpus::Corpus;
use crate::embed::format_float;

pub use cluster::{apply_names, cluster_skills, parse_names, partition_quality, ClusterRun, SkillCluster, SkillClusterSet};

#[derive(Debug, Error, PartialEq)]
pub enum SkillnetError {
    #[error("min_occurrence must be at least 1")]
    Threshold,
    #[error("no skill appears in {0} or more ads; lower the occurrence threshold")]
    EmptyVocab(usize),
    #[error("resolution must be finite and positive, got {0}")]
    Resolution(f64),
    #[error("restarts must be at least 1")]
    Restarts,
    #[error("names file: {0}")]
    Names(String),
}

/// Skills kept after the occurrence threshold, in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkillVocab {
    pub skills: Vec<String>,
    /// Distinct-ad counts, aligned with `skills`.
    pub occurrence: Vec<usize>,
    pub min_occurrence: usize,
}

impl SkillVocab {
    pub fn len(&self) -> usize {
        self.skills.len()
    }

    pub fn is_empty(&self) -> bool {
        self.skills.is_empty()
    }

    pub fn index_of(&self, skill: &str) -> Option<usize> {
        self.skills.binary_search_by(|s| s.as_str().cmp(skill)).ok()
    }

    /// Vocabulary over every skill in the corpus, without a threshold.
    pub fn all(corpus: &Corpus) -> SkillVocab {
        build_vocab(corpus, 1)
    }
}

fn build_vocab(corpus: &Corpus, min_occurrence: usize) -> SkillVocab {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for ad in corpus {
        // key_skills are already unique per ad
        for s in &ad.key_skills {
            *counts.entry(s).or_insert(0) += 1;
        }
    }
    let (skills, occurrence) = counts
        .into_iter()
        .filter(|(_, c)| *c >= min_occurrence)
        .map(|(s, c)| (s.to_string(), c))
        .unzip();
    SkillVocab {
        skills,
        occurrence,
        min_occurrence,
    }
}

/// Keeps skills listed by at least `min_occurrence` distinct ads.
pub fn filter_skills(corpus: &Corpus, min_occurrence: usize) -> Result<SkillVocab, SkillnetError> {
    if min_occurrence == 0 {
        return Err(SkillnetError::Threshold);
    }
    let vocab = build_vocab(corpus, min_occurrence);
    if vocab.is_empty() {
        return Err(SkillnetError::EmptyVocab(min_occurrence));
    }
    Ok(vocab)
}

/// Sparse binary job × skill incidence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobSkillMatrix {
    pub vocab: SkillVocab,
    /// Per job, the sorted column indices holding a 1.
    pub rows: Vec<Vec<usize>>,
    /// Jobs whose skills were all filtered out.
    pub zero_rows: Vec<usize>,
}

impl JobSkillMatrix {
    pub fn n_jobs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_skills(&self) -> usize {
        self.vocab.len()
    }

    pub fn get(&self, job: usize, skill: usize) -> u8 {
        u8::from(self.rows[job].binary_search(&skill).is_ok())
    }

    pub fn column_sums(&self) -> Vec<usize> {
        let mut sums = vec![0; self.n_skills()];
        for row in &self.rows {
            for &j in row {
                sums[j] += 1;
            }
        }
        sums
    }

    /// The skill-major view: row j lists the jobs containing skill j.
    pub fn skill_profiles(&self) -> Vec<Vec<usize>> {
        let mut cols = vec![Vec::new(); self.n_skills()];
        for (i, row) in self.rows.iter().enumerate() {
            for &j in row {
                cols[j].push(i);
            }
        }
        cols
    }
}

/// Binary incidence of `corpus` ads over `vocab`.
pub fn build_matrix(corpus: &Corpus, vocab: &SkillVocab) -> JobSkillMatrix {
    let mut rows = Vec::with_capacity(corpus.len());
    let mut zero_rows = Vec::new();
    for (i, ad) in corpus.iter().enumerate() {
        let row: BTreeSet<usize> = ad.key_skills.iter().filter_map(|s| vocab.index_of(s)).collect();
        if row.is_empty() {
            zero_rows.push(i);
        }
        rows.push(row.into_iter().collect());
    }
    JobSkillMatrix {
        vocab: vocab.clone(),
        rows,
        zero_rows,
    }
}

/// Sparse real matrix whose nonzero rows have unit L2 norm.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedMatrix {
    pub n_cols: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
    pub zero_rows: Vec<usize>,
}

impl NormalizedMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn row_norm(&self, i: usize) -> f64 {
        self.rows[i].iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }
}

/// Divides each row of a binary incidence by its L2 norm
/// `sqrt(Σ_j a_ij²)`. Zero rows stay zero and are listed.
pub fn normalize_binary_rows(rows: &[Vec<usize>], n_cols: usize) -> NormalizedMatrix {
    let mut zero_rows = Vec::new();
    let rows = rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            if row.is_empty() {
                zero_rows.push(i);
                return Vec::new();
            }
            let norm = (row.iter().map(|_| 1.0f64).sum::<f64>()).sqrt();
            row.iter().map(|&j| (j, 1.0 / norm)).collect()
        })
        .collect();
    NormalizedMatrix { n_cols, rows, zero_rows }
}

/// Row-normalized job-skill matrix.
pub fn normalize_rows(m: &JobSkillMatrix) -> NormalizedMatrix {
    normalize_binary_rows(&m.rows, m.n_skills())
}

/// Symmetric skill × skill similarity with its vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct SkillSimilarity {
    pub vocab: SkillVocab,
    values: Vec<f64>,
    /// Skills with no occurrence in the matrix (zero diagonal).
    pub flagged: Vec<usize>,
}

impl SkillSimilarity {
    pub fn from_dense(vocab: SkillVocab, values: Vec<f64>) -> Self {
        let m = vocab.len();
        assert_eq!(values.len(), m * m, "dense similarity must be m × m");
        let flagged = (0..m).filter(|&j| values[j * m + j] == 0.0).collect();
        SkillSimilarity { vocab, values, flagged }
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[j * self.len() + k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mean similarity over distinct unflagged pairs.
    pub fn mean_off_diagonal(&self) -> f64 {
        let m = self.len();
        let live: Vec<usize> = (0..m).filter(|j| !self.flagged.contains(j)).collect();
        let mut sum = 0.0;
        let mut count = 0usize;
        for (a, &j) in live.iter().enumerate() {
            for &k in &live[a + 1..] {
                sum += self.get(j, k);
                count += 1;
            }
        }
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![String::new()];
        header.extend(self.vocab.skills.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for (j, skill) in self.vocab.skills.iter().enumerate() {
            let mut row = vec![skill.clone()];
            row.extend((0..self.len()).map(|k| format_float(self.get(j, k))));
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }

    /// `skill_a,skill_b,similarity,above_cutoff` for every pair `a < b` with
    /// nonzero similarity.
    pub fn to_edge_list(&self, cutoff: f64) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["skill_a", "skill_b", "similarity", "above_cutoff"])
            .expect("in-memory write");
        let m = self.len();
        for j in 0..m {
            for k in j + 1..m {
                let v = self.get(j, k);
                if v > 0.0 {
                    w.write_record([
                        self.vocab.skills[j].as_str(),
                        self.vocab.skills[k].as_str(),
                        &format_float(v),
                        if v >= cutoff { "true" } else { "false" },
                    ])
                    .expect("in-memory write");
                }
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

/// Gram matrix of the rows of `n`: entry `(j, k)` is the dot product of
/// rows `j` and `k`. With `n` holding L2-normalized skill profiles (the
/// columns of the incidence), this is the cosine similarity between skills.
/// Entries are accumulated column by column in ascending order and
/// mirrored, so the result is exactly symmetric.
pub fn cosine_matrix(n: &NormalizedMatrix, vocab: &SkillVocab) -> SkillSimilarity {
    let m = n.n_rows();
    assert_eq!(m, vocab.len(), "one normalized row per vocabulary skill");
    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n.n_cols];
    for (j, row) in n.rows.iter().enumerate() {
        for &(c, v) in row {
            by_col[c].push((j, v));
        }
    }
    let mut values = vec![0.0; m * m];
    for col in &by_col {
        for (x, &(j, vj)) in col.iter().enumerate() {
            for &(k, vk) in &col[x..] {
                values[j * m + k] += vj * vk;
            }
        }
    }
    for j in 0..m {
        for k in j..m {
            let v = values[j * m + k].clamp(0.0, 1.0);
            values[j * m + k] = v;
            values[k * m + j] = v;
        }
    }
    SkillSimilarity::from_dense(vocab.clone(), values)
}

/// Skill-skill cosine similarity of a job-skill incidence.
pub fn skill_similarity(m: &JobSkillMatrix) -> SkillSimilarity {
    let profiles = normalize_binary_rows(&m.skill_profiles(), m.n_jobs());
    cosine_matrix(&profiles, &m.vocab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::JobAd;

    fn corpus(skill_sets: &[&[&str]]) -> Corpus {
        let ads = skill_sets
            .iter()
            .enumerate()
            .map(|(i, s)| JobAd {
                id: i.to_string(),
                job_name: "x".into(),
                key_skills: s.iter().map(|x| x.to_string()).collect(),
                ..Default::default()
            })
            .collect();
        Corpus::new(ads, "t")
    }

    #[test]
    fn threshold_one_keeps_everything() {
        let c = corpus(&[&["a", "b"], &["c"]]);
        assert_eq!(filter_skills(&c, 1).unwrap().skills, vec!["a", "b", "c"]);
    }

    #[test]
    fn threshold_boundary() {
        let mut sets: Vec<&[&str]> = vec![&["q", "p"]; 19];
        sets.push(&["p"]);
        let c = corpus(&sets);
        let v = filter_skills(&c, 20).unwrap();
        assert_eq!(v.skills, vec!["p"]);
        assert_eq!(v.occurrence, vec![20]);
        assert_eq!(filter_skills(&c, 21), Err(SkillnetError::EmptyVocab(21)));
        assert_eq!(filter_skills(&c, 0), Err(SkillnetError::Threshold));
    }

    #[test]
    fn matrix_rows() {
        let c = corpus(&[&["a", "b"], &["z"], &["b"]]);
        let mut v = filter_skills(&c, 1).unwrap();
        v.skills.retain(|s| s != "z");
        v.occurrence.truncate(2);
        let m = build_matrix(&c, &v);
        assert_eq!(m.rows, vec![vec![0, 1], vec![], vec![1]]);
        assert_eq!(m.zero_rows, vec![1]);
        assert_eq!(m.column_sums(), vec![1, 2]);
    }

    #[test]
    fn unit_rows() {
        let n = normalize_binary_rows(&[vec![0], vec![0, 1, 2, 3], vec![]], 4);
        assert_eq!(n.rows[0], vec![(0, 1.0)]);
        assert_eq!(n.rows[1], vec![(0, 0.5), (1, 0.5), (2, 0.5), (3, 0.5)]);
        assert!(n.rows[2].is_empty());
        assert_eq!(n.zero_rows, vec![2]);
    }

    #[test]
    fn cosine_cases() {
        // s1 in jobs {1,2}, s2 in {2,3}: c12 = 1, c11 = c22 = 2 -> 0.5
        let c = corpus(&[&["s1"], &["s1", "s2"], &["s2"]]);
        let m = build_matrix(&c, &filter_skills(&c, 1).unwrap());
        let s = skill_similarity(&m);
        assert!((s.get(0, 1) - 0.5).abs() < 1e-15);
        assert_eq!(s.get(0, 1), s.get(1, 0));
        assert!((s.get(0, 0) - 1.0).abs() < 1e-15);

        let same = corpus(&[&["a", "b"], &["a", "b"], &["c"]]);
        let s = skill_similarity(&build_matrix(&same, &filter_skills(&same, 1).unwrap()));
        assert!((s.get(0, 1) - 1.0).abs() < 1e-15);
        assert_eq!(s.get(0, 2), 0.0);
    }

    #[test]
    fn zero_occurrence_flagged() {
        let c = corpus(&[&["a"], &["b"]]);
        let v = filter_skills(&c, 1).unwrap();
        let only_a = corpus(&[&["a"]]);
        let s = skill_similarity(&build_matrix(&only_a, &v));
        assert_eq!(s.flagged, vec![1]);
        assert_eq!(s.get(1, 1), 0.0);
    }

    #[test]
    fn edge_list_cutoff() {
        let c = corpus(&[&["a", "b"], &["a"], &["c", "b"]]);
        let s = skill_similarity(&build_matrix(&c, &filter_skills(&c, 1).unwrap()));
        let edges = s.to_edge_list(0.6);
        assert!(edges.starts_with("skill_a,skill_b,similarity,above_cutoff\n"));
        assert!(edges.contains("b,c,0.7071067811865475"), "{edges}");
        assert!(
            edges.contains("a,b,0.4999999999999999,false") || edges.contains("a,b,0.5,false"),
            "{edges}"
        );
    }
}
