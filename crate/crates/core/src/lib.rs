//! Skill-demand analytics over job advertisement corpora.
//!
//! The pipeline groups free-text job titles by word mover's distance and
//! affinity propagation, clusters skills by co-occurrence cosine similarity,
//! mines lift-ranked skill recommendations with Apriori, and aggregates
//! counts by role, skill, industry and city.

pub mod analyze;
pub mod corpus;
pub mod embed;
pub mod mine;
pub mod semgroup;
pub mod skillnet;

pub use corpus::{Corpus, JobAd};
