//! Advertisement data model, corpus readers, and synthetic corpora.

mod model;
mod parse;
pub mod synth;

use thiserror::Error;

pub use model::{normalize_skill, normalize_skill_list, normalize_text, Corpus, JobAd};
pub use parse::{parse_corpus, parse_date, Diagnostic, InputFormat, ParseOutcome, ParseReport};
pub use synth::{synth_corpus, ExperienceBand, PlantedPair, SkillMarginal, SynthSpec, TitleCluster, Weighted};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus: {0}")]
    Io(#[from] std::io::Error),
    #[error("corpus is not valid UTF-8: {0}")]
    Encoding(String),
    #[error("corpus CSV header unreadable: {0}")]
    Csv(String),
    #[error("unknown corpus format {0:?} (expected jsonlines or csv)")]
    UnknownFormat(String),
    #[error("{skipped} of {total} records malformed; wrong input file? first problem: {first}")]
    Schema { skipped: usize, total: usize, first: String },
    #[error("infeasible synthetic spec: {0}")]
    InfeasibleSpec(String),
}
