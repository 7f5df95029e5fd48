//! Frequency tables, skill-cluster distributions and offline geocoding.

mod geo;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::embed::format_float;
use crate::semgroup::SemanticClustering;
use crate::skillnet::SkillClusterSet;

pub use geo::{geo_aggregate, geocode, split_locations, Gazetteer, GeoAggregate, GeoBucket, Geocoded, Place};

#[derive(Debug, Error, PartialEq)]
pub enum AnalyzeError {
    #[error("unknown frequency field '{0}' (expected job_leader, skill, industry or role_category)")]
    UnknownField(String),
    #[error("job_leader counts need a title clustering")]
    MissingClustering,
    #[error("title '{0}' is not covered by the clustering")]
    Unassigned(String),
    #[error("gazetteer line {line}: {reason}")]
    Gazetteer { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    JobLeader,
    Skill,
    Industry,
    RoleCategory,
}

impl Field {
    pub fn as_str(self) -> &'static str {
        match self {
            Field::JobLeader => "job_leader",
            Field::Skill => "skill",
            Field::Industry => "industry",
            Field::RoleCategory => "role_category",
        }
    }
}

impl FromStr for Field {
    type Err = AnalyzeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "job_leader" => Ok(Field::JobLeader),
            "skill" => Ok(Field::Skill),
            "industry" => Ok(Field::Industry),
            "role_category" => Ok(Field::RoleCategory),
            other => Err(AnalyzeError::UnknownField(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub rank: usize,
    pub label: String,
    pub count: u64,
    pub share: f64,
}

/// Ranked counts: count descending, label ascending on ties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub field: Field,
    pub rows: Vec<FrequencyRow>,
    pub total: u64,
}

impl FrequencyTable {
    pub fn from_counts(field: Field, counts: BTreeMap<String, u64>) -> Self {
        let total: u64 = counts.values().sum();
        let mut pairs: Vec<(String, u64)> = counts.into_iter().collect();
        pairs.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let rows = pairs
            .into_iter()
            .enumerate()
            .map(|(i, (label, count))| FrequencyRow {
                rank: i + 1,
                share: count as f64 / total as f64,
                label,
                count,
            })
            .collect();
        FrequencyTable { field, rows, total }
    }

    pub fn top(&self, n: usize) -> &[FrequencyRow] {
        &self.rows[..n.min(self.rows.len())]
    }

    /// `rank,label,count,share`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["rank", "label", "count", "share"]).expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.rank.to_string(),
                r.label.clone(),
                r.count.to_string(),
                format_float(r.share),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }

    /// Fixed-width text table with a `Rank  Label  Count` header.
    pub fn render(&self, limit: usize) -> String {
        let rows = self.top(limit);
        let width = rows.iter().map(|r| r.label.chars().count()).max().unwrap_or(0).max(5);
        let mut out = String::new();
        let _ = writeln!(out, "{:<4}  {:<width$}  {:>7}", "Rank", "Label", "Count");
        for r in rows {
            let _ = writeln!(out, "{:<4}  {:<width$}  {:>7}", r.rank, r.label, r.count);
        }
        out
    }
}

fn optional_field(corpus: &Corpus, get: impl Fn(&crate::JobAd) -> Option<&String>) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for ad in corpus {
        if let Some(v) = get(ad) {
            let v = v.trim();
            if !v.is_empty() {
                *counts.entry(v.to_string()).or_insert(0) += 1;
            }
        }
    }
    counts
}

/// Ad-level counts of `field` over `corpus`. Job titles are folded onto
/// their cluster leader, so `clustering` is required for `job_leader`.
pub fn frequency_table(
    corpus: &Corpus,
    field: Field,
    clustering: Option<&SemanticClustering>,
) -> Result<FrequencyTable, AnalyzeError> {
    let counts = match field {
        Field::JobLeader => {
            let cl = clustering.ok_or(AnalyzeError::MissingClustering)?;
            let mut counts = BTreeMap::new();
            for ad in corpus {
                let title = ad.normalized_title();
                let c = *cl.assignments.get(&title).ok_or(AnalyzeError::Unassigned(title))?;
                let cluster = &cl.clusters[c];
                let leader = cluster.leader.as_ref().unwrap_or(&cluster.exemplar);
                *counts.entry(leader.clone()).or_insert(0) += 1;
            }
            counts
        }
        Field::Skill => {
            let mut counts = BTreeMap::new();
            for ad in corpus {
                for s in &ad.key_skills {
                    *counts.entry(s.clone()).or_insert(0) += 1;
                }
            }
            counts
        }
        Field::Industry => optional_field(corpus, |ad| ad.industry.as_ref()),
        Field::RoleCategory => optional_field(corpus, |ad| ad.role_category.as_ref()),
    };
    Ok(FrequencyTable::from_counts(field, counts))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterShare {
    pub count: u64,
    pub share: f64,
}

/// Ads touching each skill cluster. An ad counts once for every cluster in
/// which it lists at least one skill; shares divide by the sum of those
/// contributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterDistribution {
    pub clusters: BTreeMap<String, ClusterShare>,
    pub total_contributions: u64,
    pub ads_considered: usize,
    pub ads_without_cluster: usize,
    pub rule: String,
}

/// Per-ad set of cluster names touched.
pub(crate) fn clusters_touched(ad: &crate::JobAd, names: &BTreeMap<&str, String>) -> std::collections::BTreeSet<String> {
    ad.key_skills.iter().filter_map(|s| names.get(s.as_str()).cloned()).collect()
}

pub(crate) fn skill_to_cluster_name(clusters: &SkillClusterSet) -> BTreeMap<&str, String> {
    clusters
        .clusters
        .iter()
        .flat_map(|c| {
            let name = c.display_name();
            c.members.iter().map(move |m| (m.as_str(), name.clone()))
        })
        .collect()
}

/// Distribution over the ads of `corpus`, or the subset `ads` if given.
pub fn cluster_distribution(corpus: &Corpus, clusters: &SkillClusterSet, ads: Option<&[usize]>) -> ClusterDistribution {
    let names = skill_to_cluster_name(clusters);
    let all: Vec<usize>;
    let idx = match ads {
        Some(a) => a,
        None => {
            all = (0..corpus.len()).collect();
            &all
        }
    };
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut without = 0;
    for &i in idx {
        let touched = clusters_touched(&corpus.ads[i], &names);
        if touched.is_empty() {
            without += 1;
        }
        for c in touched {
            *counts.entry(c).or_insert(0) += 1;
        }
    }
    let total: u64 = counts.values().sum();
    let clusters = counts
        .into_iter()
        .map(|(k, count)| {
            (
                k,
                ClusterShare {
                    count,
                    share: count as f64 / total as f64,
                },
            )
        })
        .collect();
    ClusterDistribution {
        clusters,
        total_contributions: total,
        ads_considered: idx.len(),
        ads_without_cluster: without,
        rule: "an ad counts once for each cluster containing at least one of its skills".into(),
    }
}
