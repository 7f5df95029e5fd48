//! Ad segments used to compare skill baskets across market slices.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{MineError, TransactionSet};
use crate::corpus::Corpus;
use crate::skillnet::SkillVocab;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    HighVacancy,
    HighApplication,
    Fresher,
    Experienced,
}

impl Segment {
    pub const ALL: [Segment; 4] = [
        Segment::Experienced,
        Segment::Fresher,
        Segment::HighApplication,
        Segment::HighVacancy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Segment::HighVacancy => "high_vacancy",
            Segment::HighApplication => "high_application",
            Segment::Fresher => "fresher",
            Segment::Experienced => "experienced",
        }
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Segment {
    type Err = MineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().replace('-', "_").as_str() {
            "high_vacancy" => Ok(Segment::HighVacancy),
            "high_application" => Ok(Segment::HighApplication),
            "fresher" => Ok(Segment::Fresher),
            "experienced" => Ok(Segment::Experienced),
            _ => Err(MineError::UnknownSegment(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentConfig {
    /// Ads with more vacancies than this are high-vacancy.
    pub vacancy_threshold: u32,
    /// Nearest-rank percentile of apply_count marking high-application ads.
    pub application_percentile: f64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig {
            vacancy_threshold: 4,
            application_percentile: 90.0,
        }
    }
}

impl SegmentConfig {
    pub fn validate(&self) -> Result<(), MineError> {
        let p = self.application_percentile;
        if !(p > 0.0 && p <= 100.0) {
            return Err(MineError::Percentile(p));
        }
        Ok(())
    }
}

/// Indices of the selected ads plus the threshold that defined them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSelection {
    pub segment: Segment,
    pub ads: Vec<usize>,
    /// Vacancy limit, apply-count cut, or experience mean; `None` for fresher
    /// and when the field is absent from every ad.
    pub threshold: Option<f64>,
}

fn nearest_rank(sorted: &[u64], p: f64) -> u64 {
    let rank = ((p / 100.0) * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

/// Selects the ads of `corpus` belonging to `segment`.
pub fn segment_ads(corpus: &Corpus, segment: Segment, cfg: &SegmentConfig) -> Result<SegmentSelection, MineError> {
    cfg.validate()?;
    let (ads, threshold): (Vec<usize>, Option<f64>) = match segment {
        Segment::HighVacancy => (
            corpus
                .iter()
                .enumerate()
                .filter(|(_, ad)| ad.vacancy.is_some_and(|v| v > cfg.vacancy_threshold))
                .map(|(i, _)| i)
                .collect(),
            Some(cfg.vacancy_threshold as f64),
        ),
        Segment::Fresher => (
            corpus
                .iter()
                .enumerate()
                .filter(|(_, ad)| ad.min_experience == Some(0))
                .map(|(i, _)| i)
                .collect(),
            None,
        ),
        Segment::Experienced => {
            let present: Vec<u32> = corpus.iter().filter_map(|ad| ad.min_experience).collect();
            if present.is_empty() {
                (Vec::new(), None)
            } else {
                let mean = present.iter().map(|&x| x as f64).sum::<f64>() / present.len() as f64;
                let ads = corpus
                    .iter()
                    .enumerate()
                    .filter(|(_, ad)| ad.min_experience.is_some_and(|x| x as f64 > mean))
                    .map(|(i, _)| i)
                    .collect();
                (ads, Some(mean))
            }
        }
        Segment::HighApplication => {
            let mut present: Vec<u64> = corpus.iter().filter_map(|ad| ad.apply_count).collect();
            if present.is_empty() {
                (Vec::new(), None)
            } else {
                present.sort_unstable();
                let cut = nearest_rank(&present, cfg.application_percentile);
                let ads = corpus
                    .iter()
                    .enumerate()
                    .filter(|(_, ad)| ad.apply_count.is_some_and(|x| x >= cut))
                    .map(|(i, _)| i)
                    .collect();
                (ads, Some(cut as f64))
            }
        }
    };
    if ads.is_empty() {
        log::warn!("segment {segment} is empty");
    }
    Ok(SegmentSelection { segment, ads, threshold })
}

/// Skill baskets of the ads in `segment`, over `universe`.
pub fn segment_baskets(
    corpus: &Corpus,
    universe: &SkillVocab,
    segment: Segment,
    cfg: &SegmentConfig,
) -> Result<(TransactionSet, SegmentSelection), MineError> {
    let sel = segment_ads(corpus, segment, cfg)?;
    let sub = Corpus::new(
        sel.ads.iter().map(|&i| corpus.ads[i].clone()).collect(),
        corpus.source_tag.clone(),
    );
    Ok((TransactionSet::from_corpus(&sub, universe), sel))
}
