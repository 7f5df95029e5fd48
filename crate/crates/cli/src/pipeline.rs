//! Stage runner: each stage computes its inputs on demand, writes its
//! artifacts under the output directory and keeps its result in memory.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use skillscope_core::analyze::{
    cluster_distribution, frequency_table, geo_aggregate, ClusterDistribution, Field, FrequencyTable, Gazetteer, GeoAggregate,
};
use skillscope_core::corpus::{parse_corpus, InputFormat, ParseReport};
use skillscope_core::embed::{pairwise_distances, parse_stopwords, DistanceMatrix, EmbeddingFormat, EmbeddingStore};
use skillscope_core::mine::{
    apriori, generate_rules, itemsets_to_csv, render_recommendations, rules_to_csv, segment_baskets, top_recommendations,
    AssociationRule, FrequentItemset, Segment, SegmentSelection, TransactionSet,
};
use skillscope_core::semgroup::{affinity_propagation, value_frequencies, SemanticClustering};
use skillscope_core::skillnet::{
    apply_names, build_matrix, cluster_skills, filter_skills, parse_names, SkillClusterSet, SkillSimilarity, SkillVocab,
};
use skillscope_core::Corpus;
use skillscope_harvest::{crawl, CrawlOutput};

use crate::cache::{digest, Cache};
use crate::config::{PipelineConfig, Source};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Config,
    Harvest,
    Ingest,
    ClusterTitles,
    ClusterSkills,
    Mine,
    Analyze,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Harvest => "harvest",
            Stage::Ingest => "ingest",
            Stage::ClusterTitles => "cluster-titles",
            Stage::ClusterSkills => "cluster-skills",
            Stage::Mine => "mine",
            Stage::Analyze => "analyze",
            Stage::Report => "report",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    /// The configuration is invalid.
    Config,
    /// Input data is missing, unreadable or malformed.
    Data,
    /// A stage could not complete on valid input.
    Stage,
}

#[derive(Debug, thiserror::Error)]
#[error("{stage}: {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub kind: FailureKind,
    pub message: String,
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            FailureKind::Config => 2,
            FailureKind::Data => 3,
            FailureKind::Stage => 4,
        }
    }
}

trait Classify<T> {
    fn or_fail(self, stage: Stage, kind: FailureKind) -> Result<T, PipelineError>;
}

impl<T, E: fmt::Display> Classify<T> for Result<T, E> {
    fn or_fail(self, stage: Stage, kind: FailureKind) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError {
            stage,
            kind,
            message: e.to_string(),
        })
    }
}

fn fail(stage: Stage, kind: FailureKind, message: impl Into<String>) -> PipelineError {
    PipelineError {
        stage,
        kind,
        message: message.into(),
    }
}

/// Cache activity for one run. Kept out of the output tree so warm and cold
/// runs produce identical files.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub cache_hits: Vec<String>,
    pub cache_misses: Vec<String>,
}

pub struct Ingested {
    pub corpus: Corpus,
    pub report: ParseReport,
    pub crawl: Option<CrawlOutput>,
}

pub struct Titles {
    pub matrix: DistanceMatrix,
    pub oov: BTreeMap<String, Vec<String>>,
    pub empty_docs: Vec<String>,
    pub clustering: SemanticClustering,
}

pub struct Skills {
    pub similarity: SkillSimilarity,
    pub clusters: SkillClusterSet,
    pub name_warnings: Vec<String>,
    pub zero_rows: usize,
}

pub struct MineResult {
    pub transactions: TransactionSet,
    pub itemsets: Vec<FrequentItemset>,
    pub rules: Vec<AssociationRule>,
    pub top: BTreeMap<Vec<usize>, Vec<AssociationRule>>,
}

pub struct SegmentMine {
    pub selection: SegmentSelection,
    /// `None` when the segment has no ads.
    pub result: Option<MineResult>,
}

pub struct Mined {
    pub overall: MineResult,
    pub segments: BTreeMap<Segment, SegmentMine>,
}

pub struct SegmentAnalysis {
    pub distribution: ClusterDistribution,
    pub geo: GeoAggregate,
}

pub struct Analysis {
    pub tables: Vec<FrequencyTable>,
    pub distribution: ClusterDistribution,
    pub geo: GeoAggregate,
    pub segments: BTreeMap<Segment, SegmentAnalysis>,
}

#[derive(Serialize, Deserialize)]
struct CachedDistances {
    labels: Vec<String>,
    values: Vec<u64>,
    flagged: Vec<(usize, usize)>,
    sentinel: Option<u64>,
    oov: BTreeMap<String, Vec<String>>,
    empty_docs: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct CachedSimilarity {
    skills: Vec<String>,
    values: Vec<u64>,
}

fn bits(xs: &[f64]) -> Vec<u64> {
    xs.iter().map(|x| x.to_bits()).collect()
}

fn unbits(xs: &[u64]) -> Vec<f64> {
    xs.iter().map(|&x| f64::from_bits(x)).collect()
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn canonical_json(v: &Value) -> String {
    fn sort(v: &Value) -> Value {
        match v {
            Value::Object(m) => {
                let sorted: BTreeMap<&String, Value> = m.iter().map(|(k, v)| (k, sort(v))).collect();
                Value::Object(sorted.into_iter().map(|(k, v)| (k.clone(), v)).collect())
            }
            Value::Array(a) => Value::Array(a.iter().map(sort).collect()),
            other => other.clone(),
        }
    }
    let mut s = serde_json::to_string_pretty(&sort(v)).expect("json value serializes");
    s.push('\n');
    s
}

/// Crawls the configured site and writes `harvest.jsonl` and
/// `crawl_stats.json` into the output directory.
pub fn harvest_to(cfg: &PipelineConfig) -> Result<CrawlOutput, PipelineError> {
    let dir = cfg.output_path();
    let write = |rel: &str, content: &str| -> Result<(), PipelineError> {
        std::fs::create_dir_all(&dir).or_fail(Stage::Harvest, FailureKind::Data)?;
        std::fs::write(dir.join(rel), content).or_fail(Stage::Harvest, FailureKind::Data)
    };
    let out = crawl(&cfg.harvest).map_err(|e| {
        let kind = match e {
            skillscope_harvest::CrawlError::Config(_) => FailureKind::Config,
            _ => FailureKind::Data,
        };
        fail(Stage::Harvest, kind, e.to_string())
    })?;
    write("harvest.jsonl", &out.to_jsonl())?;
    let stats = json!({
        "documents": out.documents.len(),
        "discovered": out.discovered,
        "listing_pages": out.listing_pages,
        "skipped": out.skipped.iter().map(|s| json!({"url": s.url, "reason": s.reason})).collect::<Vec<_>>(),
        "requests": out.stats.request_count(),
        "workers": out.stats.workers,
        "rate_per_worker": out.stats.rate_per_worker,
        "rate_cap": out.stats.rate_cap(),
        "max_requests_in_any_second": out.stats.max_in_any_window(),
        "politeness_holds": out.stats.politeness_holds(),
        "elapsed_ms": out.stats.elapsed.as_millis() as u64,
    });
    write("crawl_stats.json", &canonical_json(&stats))?;
    log::info!(
        "harvested {} ads with {} requests",
        out.documents.len(),
        out.stats.request_count()
    );
    Ok(out)
}

pub struct Pipeline {
    cfg: PipelineConfig,
    out: PathBuf,
    cache: Cache,
    ingested: Option<Ingested>,
    titles: Option<Titles>,
    skills: Option<Skills>,
    mined: Option<Mined>,
    analysis: Option<Analysis>,
}

impl Pipeline {
    /// Validates `cfg` and prepares the output directory.
    pub fn new(cfg: PipelineConfig) -> Result<Self, PipelineError> {
        let problems = cfg.validate();
        if !problems.is_empty() {
            let lines: Vec<String> = problems.iter().map(|d| d.to_string()).collect();
            return Err(fail(Stage::Config, FailureKind::Config, lines.join("; ")));
        }
        let out = cfg.output_path();
        std::fs::create_dir_all(&out).or_fail(Stage::Config, FailureKind::Data)?;
        let cache = Cache::new(out.join("cache"));
        Ok(Pipeline {
            cfg,
            out,
            cache,
            ingested: None,
            titles: None,
            skills: None,
            mined: None,
            analysis: None,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn output_dir(&self) -> &Path {
        &self.out
    }

    pub fn summary(&self) -> RunSummary {
        RunSummary {
            cache_hits: self.cache.hits.clone(),
            cache_misses: self.cache.misses.clone(),
        }
    }

    fn write(&self, stage: Stage, rel: &str, content: &str) -> Result<(), PipelineError> {
        let path = self.out.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).or_fail(stage, FailureKind::Data)?;
        }
        std::fs::write(&path, content).or_fail(stage, FailureKind::Data)
    }

    fn read_bytes(&self, stage: Stage, p: &Path) -> Result<Vec<u8>, PipelineError> {
        let full = self.cfg.resolve(p);
        std::fs::read(&full).map_err(|e| fail(stage, FailureKind::Data, format!("cannot read {}: {e}", full.display())))
    }

    fn read_text(&self, stage: Stage, p: &Path) -> Result<String, PipelineError> {
        let bytes = self.read_bytes(stage, p)?;
        String::from_utf8(bytes).map_err(|e| fail(stage, FailureKind::Data, format!("{}: {e}", p.display())))
    }

    pub fn harvest(&mut self) -> Result<CrawlOutput, PipelineError> {
        harvest_to(&self.cfg)
    }

    pub fn ingest(&mut self) -> Result<&Ingested, PipelineError> {
        if self.ingested.is_none() {
            let ing = self.run_ingest()?;
            self.ingested = Some(ing);
        }
        Ok(self.ingested.as_ref().expect("just set"))
    }

    fn run_ingest(&mut self) -> Result<Ingested, PipelineError> {
        let st = Stage::Ingest;
        let (bytes, format, tag, crawl_out) = match self.cfg.input.source {
            Source::File => {
                let p = self.cfg.input.path.clone().expect("validated");
                let format: InputFormat = self.cfg.input.format.parse().or_fail(st, FailureKind::Config)?;
                let tag = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                (self.read_bytes(st, &p)?, format, tag, None)
            }
            Source::Harvest => {
                let out = self.harvest()?;
                (
                    out.to_jsonl().into_bytes(),
                    InputFormat::JsonLines,
                    "harvest".to_string(),
                    Some(out),
                )
            }
        };
        let parsed = parse_corpus(bytes.as_slice(), format, &tag).or_fail(st, FailureKind::Data)?;
        for d in &parsed.report.skipped {
            log::warn!("skipped {d}");
        }
        if parsed.corpus.is_empty() {
            return Err(fail(st, FailureKind::Data, "corpus has no advertisements"));
        }
        self.write(st, "corpus.jsonl", &parsed.corpus.to_jsonl())?;
        let report = json!({
            "source": tag,
            "format": format.to_string(),
            "total_records": parsed.report.total_records,
            "kept": parsed.corpus.len(),
            "duplicates": parsed.report.duplicates(),
            "skipped": parsed.report.skipped.iter().map(|d| json!({
                "record": d.record,
                "id": d.id,
                "reason": d.reason,
            })).collect::<Vec<_>>(),
        });
        self.write(st, "ingest_report.json", &canonical_json(&report))?;
        Ok(Ingested {
            corpus: parsed.corpus,
            report: parsed.report,
            crawl: crawl_out,
        })
    }

    pub fn cluster_titles(&mut self) -> Result<&Titles, PipelineError> {
        if self.titles.is_none() {
            self.ingest()?;
            let t = self.run_titles()?;
            self.titles = Some(t);
        }
        Ok(self.titles.as_ref().expect("just set"))
    }

    fn run_titles(&mut self) -> Result<Titles, PipelineError> {
        let st = Stage::ClusterTitles;
        let corpus = &self.ingested.as_ref().expect("ingested").corpus;
        let titles: Vec<String> = corpus.iter().map(|a| a.normalized_title()).collect();
        let labels: BTreeSet<&str> = titles.iter().map(String::as_str).collect();
        let label_text = labels.iter().copied().collect::<Vec<_>>().join("\n");

        let e = &self.cfg.embed;
        let emb_path = e.embeddings.clone().expect("validated");
        let emb_bytes = self.read_bytes(st, &emb_path)?;
        let stop_text = match &e.stopwords {
            Some(p) => self.read_text(st, p)?,
            None => String::new(),
        };
        let casefold = if e.casefold { "1" } else { "0" };
        let key = digest(&[
            b"title-distances-v1",
            &emb_bytes,
            e.format.as_bytes(),
            casefold.as_bytes(),
            stop_text.as_bytes(),
            label_text.as_bytes(),
        ]);

        let cached = self.cache.get::<CachedDistances>("title-distances", &key);
        let (matrix, oov, empty_docs) = match cached {
            Some(c) => {
                let m = DistanceMatrix::from_parts(
                    c.labels,
                    unbits(&c.values),
                    c.flagged.into_iter().collect(),
                    c.sentinel.map(f64::from_bits),
                )
                .or_fail(st, FailureKind::Stage)?;
                (m, c.oov, c.empty_docs)
            }
            None => {
                let format: EmbeddingFormat = e.format.parse().or_fail(st, FailureKind::Config)?;
                let store = EmbeddingStore::from_bytes(&emb_bytes, format, e.casefold).or_fail(st, FailureKind::Data)?;
                let stop: HashSet<String> = parse_stopwords(&stop_text);
                let out = pairwise_distances(&titles, &store, &stop);
                let entry = CachedDistances {
                    labels: out.matrix.labels().to_vec(),
                    values: bits(out.matrix.values()),
                    flagged: out.matrix.flagged().iter().copied().collect(),
                    sentinel: out.matrix.sentinel().map(f64::to_bits),
                    oov: out.oov.clone(),
                    empty_docs: out.empty_docs.clone(),
                };
                self.cache
                    .put("title-distances", &key, &entry)
                    .or_fail(st, FailureKind::Data)?;
                (out.matrix, out.oov, out.empty_docs)
            }
        };
        for l in &empty_docs {
            log::warn!("title '{l}' has no in-vocabulary token; compared by string equality");
        }

        let ap = self.cfg.semgroup.ap_config().map_err(|m| fail(st, FailureKind::Config, m))?;
        let mut clustering = affinity_propagation(&matrix, &ap).or_fail(st, FailureKind::Stage)?;
        if !clustering.converged {
            log::warn!(
                "affinity propagation stopped after {} iterations without converging",
                clustering.iterations
            );
        }
        clustering
            .assign_leaders(&value_frequencies(&titles))
            .or_fail(st, FailureKind::Stage)?;

        self.write(st, "title_distances.csv", &matrix.to_csv())?;
        self.write(st, "title_clusters.csv", &clustering.to_csv())?;
        Ok(Titles {
            matrix,
            oov,
            empty_docs,
            clustering,
        })
    }

    pub fn cluster_skills(&mut self) -> Result<&Skills, PipelineError> {
        if self.skills.is_none() {
            self.ingest()?;
            let s = self.run_skills()?;
            self.skills = Some(s);
        }
        Ok(self.skills.as_ref().expect("just set"))
    }

    fn run_skills(&mut self) -> Result<Skills, PipelineError> {
        let st = Stage::ClusterSkills;
        let k = self.cfg.skillnet.clone();
        let corpus = &self.ingested.as_ref().expect("ingested").corpus;
        let vocab = filter_skills(corpus, k.min_occurrence).or_fail(st, FailureKind::Stage)?;
        let matrix = build_matrix(corpus, &vocab);
        let zero_rows = matrix.zero_rows.len();

        let mut rows_bytes = Vec::new();
        for row in &matrix.rows {
            for &j in row {
                rows_bytes.extend_from_slice(&(j as u64).to_le_bytes());
            }
            rows_bytes.extend_from_slice(&u64::MAX.to_le_bytes());
        }
        let skills_text = vocab.skills.join("\n");
        let key = digest(&[b"skill-similarity-v1", skills_text.as_bytes(), &rows_bytes]);
        let similarity = match self.cache.get::<CachedSimilarity>("skill-similarity", &key) {
            Some(c) if c.skills == vocab.skills => SkillSimilarity::from_dense(vocab.clone(), unbits(&c.values)),
            _ => {
                let s = skillscope_core::skillnet::skill_similarity(&matrix);
                let entry = CachedSimilarity {
                    skills: vocab.skills.clone(),
                    values: bits(s.values()),
                };
                self.cache
                    .put("skill-similarity", &key, &entry)
                    .or_fail(st, FailureKind::Data)?;
                s
            }
        };

        let resolution = k.resolution.unwrap_or_else(|| {
            let mean = similarity.mean_off_diagonal();
            if mean > 0.0 {
                mean
            } else {
                1.0
            }
        });
        let mut clusters = cluster_skills(&similarity, resolution, self.cfg.seed, k.restarts).or_fail(st, FailureKind::Stage)?;
        let mut name_warnings = Vec::new();
        if let Some(p) = &k.names {
            let text = self.read_text(st, p)?;
            let names = parse_names(&text).or_fail(st, FailureKind::Data)?;
            name_warnings = apply_names(&mut clusters, &names);
            for w in &name_warnings {
                log::warn!("{w}");
            }
        }

        self.write(st, "skill_similarity.csv", &similarity.to_csv())?;
        self.write(st, "skill_edges.csv", &similarity.to_edge_list(k.edge_cutoff))?;
        self.write(st, "skill_clusters.csv", &clusters.to_csv())?;
        let json = serde_json::to_value(&clusters).or_fail(st, FailureKind::Stage)?;
        self.write(st, "skill_clusters.json", &canonical_json(&json))?;
        Ok(Skills {
            similarity,
            clusters,
            name_warnings,
            zero_rows,
        })
    }

    fn mine_one(&self, t: TransactionSet) -> Result<MineResult, PipelineError> {
        let m = &self.cfg.mine;
        let itemsets = apriori(&t, m.min_support, m.max_len).or_fail(Stage::Mine, FailureKind::Stage)?;
        let rules = generate_rules(&itemsets, m.min_lift).or_fail(Stage::Mine, FailureKind::Stage)?;
        let top = top_recommendations(&rules, m.top_k).or_fail(Stage::Mine, FailureKind::Stage)?;
        Ok(MineResult {
            transactions: t,
            itemsets,
            rules,
            top,
        })
    }

    pub fn mine(&mut self) -> Result<&Mined, PipelineError> {
        if self.mined.is_none() {
            self.ingest()?;
            let m = self.run_mine()?;
            self.mined = Some(m);
        }
        Ok(self.mined.as_ref().expect("just set"))
    }

    fn run_mine(&mut self) -> Result<Mined, PipelineError> {
        let st = Stage::Mine;
        let corpus = &self.ingested.as_ref().expect("ingested").corpus;
        let universe = SkillVocab::all(corpus);
        let overall = self.mine_one(TransactionSet::from_corpus(corpus, &universe))?;
        let seg_cfg = self.cfg.mine.segment_config();
        let list = self
            .cfg
            .analyze
            .segment_list()
            .map_err(|m| fail(st, FailureKind::Config, m))?;
        let mut segments = BTreeMap::new();
        for seg in list {
            let (t, selection) = segment_baskets(corpus, &universe, seg, &seg_cfg).or_fail(st, FailureKind::Stage)?;
            let result = if t.is_empty() { None } else { Some(self.mine_one(t)?) };
            segments.insert(seg, SegmentMine { selection, result });
        }

        self.write(st, "itemsets.csv", &itemsets_to_csv(&overall.itemsets, &universe))?;
        self.write(st, "rules.csv", &rules_to_csv(&overall.rules, &universe))?;
        self.write(st, "recommendations.txt", &render_recommendations(&overall.top, &universe))?;
        for (seg, sm) in &segments {
            let (rules, recs) = match &sm.result {
                Some(r) => (rules_to_csv(&r.rules, &universe), render_recommendations(&r.top, &universe)),
                None => (rules_to_csv(&[], &universe), String::new()),
            };
            self.write(st, &format!("segments/rules_{seg}.csv"), &rules)?;
            self.write(st, &format!("segments/recommendations_{seg}.txt"), &recs)?;
        }
        Ok(Mined { overall, segments })
    }

    pub fn analyze(&mut self) -> Result<&Analysis, PipelineError> {
        if self.analysis.is_none() {
            self.cluster_titles()?;
            self.cluster_skills()?;
            self.mine()?;
            let a = self.run_analyze()?;
            self.analysis = Some(a);
        }
        Ok(self.analysis.as_ref().expect("just set"))
    }

    fn run_analyze(&mut self) -> Result<Analysis, PipelineError> {
        let st = Stage::Analyze;
        let gaz_path = self.cfg.analyze.gazetteer.clone().expect("validated");
        let gaz = Gazetteer::from_csv(&self.read_text(st, &gaz_path)?).or_fail(st, FailureKind::Data)?;
        let corpus = &self.ingested.as_ref().expect("ingested").corpus;
        let titles = &self.titles.as_ref().expect("titles").clustering;
        let clusters = &self.skills.as_ref().expect("skills").clusters;
        let mined = self.mined.as_ref().expect("mined");

        let mut tables = Vec::new();
        for field in [Field::JobLeader, Field::Skill, Field::Industry, Field::RoleCategory] {
            tables.push(frequency_table(corpus, field, Some(titles)).or_fail(st, FailureKind::Stage)?);
        }
        let distribution = cluster_distribution(corpus, clusters, None);
        let geo = geo_aggregate(corpus, &gaz, clusters, None, None);
        let mut segments = BTreeMap::new();
        for (seg, sm) in &mined.segments {
            let ads = sm.selection.ads.as_slice();
            segments.insert(
                *seg,
                SegmentAnalysis {
                    distribution: cluster_distribution(corpus, clusters, Some(ads)),
                    geo: geo_aggregate(corpus, &gaz, clusters, Some(ads), Some(seg.as_str())),
                },
            );
        }

        let top_n = self.cfg.analyze.top_n;
        let mut rendered = String::new();
        for t in &tables {
            rendered.push_str(&format!("== {} ==\n", t.field.as_str()));
            rendered.push_str(&t.render(top_n));
            rendered.push('\n');
            self.write(st, &format!("tables/{}.csv", t.field.as_str()), &t.to_csv())?;
        }
        self.write(st, "tables.txt", &rendered)?;
        self.write(st, "geo.geojson", &canonical_json(&geo.to_geojson()))?;
        for (seg, sa) in &segments {
            self.write(
                st,
                &format!("segments/geo_{seg}.geojson"),
                &canonical_json(&sa.geo.to_geojson()),
            )?;
        }
        if !geo.unresolved.is_empty() {
            log::warn!("{} location mentions could not be geocoded", geo.unresolved_mentions);
        }
        Ok(Analysis {
            tables,
            distribution,
            geo,
            segments,
        })
    }

    /// Runs every stage and writes `report.json`.
    pub fn run_all(&mut self) -> Result<RunSummary, PipelineError> {
        self.analyze()?;
        let report = self.report();
        self.write(Stage::Report, "report.json", &canonical_json(&report))?;
        Ok(self.summary())
    }

    /// The run report. Requires every stage to have run.
    pub fn report(&self) -> Value {
        let ing = self.ingested.as_ref().expect("ingested");
        let titles = self.titles.as_ref().expect("titles");
        let skills = self.skills.as_ref().expect("skills");
        let mined = self.mined.as_ref().expect("mined");
        let analysis = self.analysis.as_ref().expect("analysis");
        let corpus = &ing.corpus;
        let top_n = self.cfg.analyze.top_n;

        let leader_counts: BTreeMap<&str, u64> = analysis.tables[0].rows.iter().map(|r| (r.label.as_str(), r.count)).collect();
        let mut title_clusters: Vec<Value> = titles
            .clustering
            .clusters
            .iter()
            .map(|c| {
                let leader = c.leader.clone().unwrap_or_else(|| c.exemplar.clone());
                json!({
                    "leader": leader,
                    "exemplar": c.exemplar,
                    "members": c.members,
                    "ad_count": leader_counts.get(leader.as_str()).copied().unwrap_or(0),
                })
            })
            .collect();
        title_clusters.sort_by(|a, b| {
            b["ad_count"]
                .as_u64()
                .cmp(&a["ad_count"].as_u64())
                .then_with(|| a["leader"].as_str().cmp(&b["leader"].as_str()))
        });

        let skill_clusters: Vec<Value> = skills
            .clusters
            .clusters
            .iter()
            .map(|c| json!({"id": c.id, "name": c.display_name(), "members": c.members}))
            .collect();

        let tables: BTreeMap<&str, Value> = analysis
            .tables
            .iter()
            .map(|t| {
                (
                    t.field.as_str(),
                    json!({
                        "total": t.total,
                        "distinct": t.rows.len(),
                        "top": t.top(top_n).iter().map(|r| json!({
                            "rank": r.rank, "label": r.label, "count": r.count, "share": r.share,
                        })).collect::<Vec<_>>(),
                    }),
                )
            })
            .collect();

        let recs = |m: &MineResult| -> Value {
            let u = &m.transactions.universe;
            let list: Vec<Value> = m
                .top
                .values()
                .flatten()
                .map(|r| {
                    json!({
                        "antecedent": m.transactions.names(&r.antecedent),
                        "consequent": m.transactions.names(&r.consequent),
                        "support": r.support,
                        "confidence": r.confidence,
                        "lift": r.lift,
                        "line": r.display(u),
                    })
                })
                .collect();
            json!({
                "transactions": m.transactions.len(),
                "itemsets": m.itemsets.len(),
                "rules": m.rules.len(),
                "recommendations": list,
            })
        };

        let geo_summary = |g: &GeoAggregate| -> Value {
            json!({
                "cities": g.buckets.iter().take(top_n).map(|b| json!({
                    "city": b.city,
                    "region": b.region,
                    "ad_count": b.ad_count,
                    "cluster_distribution": b.cluster_distribution,
                })).collect::<Vec<_>>(),
                "resolved_cities": g.buckets.len(),
                "unresolved": g.unresolved,
                "location_mentions": g.location_mentions,
                "unresolved_mentions": g.unresolved_mentions,
                "ads_with_location": g.ads_with_location,
                "ads_resolved": g.ads_resolved,
                "ads_unresolved_only": g.ads_unresolved_only,
            })
        };

        let mut segments = serde_json::Map::new();
        for (seg, sm) in &mined.segments {
            let sa = &analysis.segments[seg];
            let mut v = json!({
                "ads": sm.selection.ads.len(),
                "threshold": sm.selection.threshold,
                "cluster_distribution": sa.distribution,
                "geo": geo_summary(&sa.geo),
            });
            match &sm.result {
                Some(r) => v["mining"] = recs(r),
                None => v["warning"] = json!("segment is empty"),
            }
            segments.insert(seg.to_string(), v);
        }

        let config_hash = digest(&[self.cfg.canonical_json().as_bytes()]);
        json!({
            "metadata": {
                "tool": env!("CARGO_PKG_NAME"),
                "version": env!("CARGO_PKG_VERSION"),
                "config_hash": config_hash,
                "seed": self.cfg.seed,
                "source": corpus.source_tag,
                "counting": {
                    "frequency_tables": "ad level: an ad counts once per distinct value",
                    "cluster_distribution": analysis.distribution.rule,
                    "geo": "location basis: one count per distinct resolved city per ad",
                },
            },
            "corpus": {
                "ads": corpus.len(),
                "records": ing.report.total_records,
                "skipped": ing.report.skipped.len(),
                "duplicates": ing.report.duplicates(),
            },
            "title_clusters": {
                "distinct_titles": titles.matrix.len(),
                "clusters": titles.clustering.len(),
                "converged": titles.clustering.converged,
                "iterations": titles.clustering.iterations,
                "preference": titles.clustering.preference,
                "incomparable_pairs": titles.matrix.flagged().len(),
                "titles_without_vocabulary": titles.empty_docs,
                "titles_with_oov_tokens": titles.oov.len(),
                "groups": title_clusters,
            },
            "skill_clusters": {
                "vocabulary": skills.similarity.len(),
                "min_occurrence": self.cfg.skillnet.min_occurrence,
                "ads_without_vocabulary_skill": skills.zero_rows,
                "resolution": skills.clusters.resolution,
                "quality": skills.clusters.quality,
                "pass_quality": skills.clusters.pass_quality,
                "name_warnings": skills.name_warnings,
                "clusters": skill_clusters,
            },
            "frequency_tables": tables,
            "cluster_distribution": analysis.distribution,
            "geo": geo_summary(&analysis.geo),
            "mining": recs(&mined.overall),
            "segments": segments,
        })
    }
}
