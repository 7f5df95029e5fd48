//! Pipeline configuration: one TOML file with a section per stage.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use skillscope_core::corpus::InputFormat;
use skillscope_core::embed::EmbeddingFormat;
use skillscope_core::mine::{Segment, SegmentConfig};
use skillscope_core::semgroup::{APConfig, Preference};
use skillscope_harvest::CrawlConfig;

/// Every default, as printed by `--print-defaults`.
pub const DEFAULTS: &str = r#"# skillscope pipeline configuration
# Relative paths are resolved against the directory holding this file.

seed = 42
output_dir = "out"

[input]
# "file" reads `path`; "harvest" crawls the site described in [harvest].
source = "file"
# path = "corpus.jsonl"
format = "jsonlines"            # jsonlines | csv

[harvest]
root_url = ""
key_phrase = "software"
max_workers = 4
max_requests_per_worker_per_sec = 2.0
# max_pages = 10
retries = 2
retry_backoff_ms = 100

[embed]
# embeddings = "embeddings.txt"
format = "auto"                 # text | binary | auto
# stopwords = "stopwords.txt"
casefold = true

[semgroup]
damping = 0.7
max_iterations = 400
convergence_window = 30
preference = "median"           # "median" or a number

[skillnet]
min_occurrence = 20
# resolution = 0.1              # default: mean off-diagonal similarity
restarts = 10
# names = "cluster_names.csv"
edge_cutoff = 0.1

[mine]
min_support = 0.02
max_len = 4
min_lift = 1.0
top_k = 2
vacancy_threshold = 4
application_percentile = 90.0

[analyze]
# gazetteer = "gazetteer.csv"
top_n = 20
segments = ["experienced", "fresher", "high_application", "high_vacancy"]
"#;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    File,
    Harvest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputSection {
    pub source: Source,
    pub path: Option<PathBuf>,
    pub format: String,
}

impl Default for InputSection {
    fn default() -> Self {
        InputSection {
            source: Source::File,
            path: None,
            format: "jsonlines".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedSection {
    pub embeddings: Option<PathBuf>,
    pub format: String,
    pub stopwords: Option<PathBuf>,
    pub casefold: bool,
}

impl Default for EmbedSection {
    fn default() -> Self {
        EmbedSection {
            embeddings: None,
            format: "auto".into(),
            stopwords: None,
            casefold: true,
        }
    }
}

/// `"median"` or a fixed number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PreferenceSetting {
    Fixed(f64),
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemgroupSection {
    pub damping: f64,
    pub max_iterations: usize,
    pub convergence_window: usize,
    pub preference: PreferenceSetting,
}

impl Default for SemgroupSection {
    fn default() -> Self {
        let ap = APConfig::default();
        SemgroupSection {
            damping: ap.damping,
            max_iterations: ap.max_iterations,
            convergence_window: ap.convergence_window,
            preference: PreferenceSetting::Named("median".into()),
        }
    }
}

impl SemgroupSection {
    pub fn ap_config(&self) -> Result<APConfig, String> {
        let preference = match &self.preference {
            PreferenceSetting::Fixed(p) => Preference::Fixed(*p),
            PreferenceSetting::Named(n) if n == "median" => Preference::Median,
            PreferenceSetting::Named(n) => return Err(format!("unknown preference '{n}'")),
        };
        let cfg = APConfig {
            damping: self.damping,
            max_iterations: self.max_iterations,
            convergence_window: self.convergence_window,
            preference,
        };
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkillnetSection {
    pub min_occurrence: usize,
    pub resolution: Option<f64>,
    pub restarts: usize,
    pub names: Option<PathBuf>,
    pub edge_cutoff: f64,
}

impl Default for SkillnetSection {
    fn default() -> Self {
        SkillnetSection {
            min_occurrence: 20,
            resolution: None,
            restarts: 10,
            names: None,
            edge_cutoff: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MineSection {
    pub min_support: f64,
    pub max_len: usize,
    pub min_lift: f64,
    pub top_k: usize,
    pub vacancy_threshold: u32,
    pub application_percentile: f64,
}

impl Default for MineSection {
    fn default() -> Self {
        let seg = SegmentConfig::default();
        MineSection {
            min_support: 0.02,
            max_len: 4,
            min_lift: 1.0,
            top_k: 2,
            vacancy_threshold: seg.vacancy_threshold,
            application_percentile: seg.application_percentile,
        }
    }
}

impl MineSection {
    pub fn segment_config(&self) -> SegmentConfig {
        SegmentConfig {
            vacancy_threshold: self.vacancy_threshold,
            application_percentile: self.application_percentile,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeSection {
    pub gazetteer: Option<PathBuf>,
    pub top_n: usize,
    pub segments: Vec<String>,
}

impl Default for AnalyzeSection {
    fn default() -> Self {
        AnalyzeSection {
            gazetteer: None,
            top_n: 20,
            segments: Segment::ALL.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl AnalyzeSection {
    /// Parsed segment names, deduplicated and sorted.
    pub fn segment_list(&self) -> Result<Vec<Segment>, String> {
        let mut out = Vec::new();
        for s in &self.segments {
            out.push(s.parse::<Segment>().map_err(|e| e.to_string())?);
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub input: InputSection,
    pub harvest: CrawlConfig,
    pub embed: EmbedSection,
    pub semgroup: SemgroupSection,
    pub skillnet: SkillnetSection,
    pub mine: MineSection,
    pub analyze: AnalyzeSection,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            output_dir: PathBuf::from("out"),
            input: InputSection::default(),
            harvest: CrawlConfig::default(),
            embed: EmbedSection::default(),
            semgroup: SemgroupSection::default(),
            skillnet: SkillnetSection::default(),
            mine: MineSection::default(),
            analyze: AnalyzeSection::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

/// One configuration problem, keyed by its dotted TOML path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub key: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, Diagnostic> {
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| Diagnostic {
            key: "config".into(),
            message: e.message().to_string(),
        })?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, Diagnostic> {
        let text = std::fs::read_to_string(path).map_err(|e| Diagnostic {
            key: "config".into(),
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let base = if base.as_os_str().is_empty() {
            PathBuf::from(".")
        } else {
            base
        };
        Self::from_toml(&text, &base)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    /// Canonical JSON of the analysis settings, the basis of the config
    /// hash. The output location is left out.
    pub fn canonical_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = v.as_object_mut() {
            map.remove("output_dir");
        }
        serde_json::to_string(&v).expect("json")
    }

    fn check_file(&self, key: &str, p: &Option<PathBuf>, required: bool, out: &mut Vec<Diagnostic>) {
        match p {
            None if required => out.push(diag(key, "required path is not set".into())),
            None => {}
            Some(p) => {
                let full = self.resolve(p);
                if !full.is_file() {
                    out.push(diag(key, format!("file {} does not exist", full.display())));
                }
            }
        }
    }

    /// Every problem found, without stopping at the first.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        match self.input.source {
            Source::File => self.check_file("input.path", &self.input.path, true, &mut out),
            Source::Harvest => out.extend(self.harvest.problems().into_iter().map(|p| diag("harvest", p))),
        }
        if let Err(e) = self.input.format.parse::<InputFormat>() {
            out.push(diag("input.format", e.to_string()));
        }
        self.check_file("embed.embeddings", &self.embed.embeddings, true, &mut out);
        self.check_file("embed.stopwords", &self.embed.stopwords, false, &mut out);
        if let Err(e) = self.embed.format.parse::<EmbeddingFormat>() {
            out.push(diag("embed.format", e.to_string()));
        }

        let s = &self.semgroup;
        if !(0.5..1.0).contains(&s.damping) {
            out.push(diag("semgroup.damping", format!("{} outside [0.5, 1)", s.damping)));
        }
        if s.max_iterations == 0 {
            out.push(diag("semgroup.max_iterations", "must be at least 1".into()));
        }
        if s.convergence_window == 0 || s.convergence_window >= s.max_iterations.max(1) {
            out.push(diag(
                "semgroup.convergence_window",
                format!("{} outside [1, max_iterations)", s.convergence_window),
            ));
        }
        match &s.preference {
            PreferenceSetting::Fixed(p) if !p.is_finite() => out.push(diag("semgroup.preference", "must be finite".into())),
            PreferenceSetting::Named(n) if n != "median" => out.push(diag(
                "semgroup.preference",
                format!("'{n}' is neither \"median\" nor a number"),
            )),
            _ => {}
        }

        let k = &self.skillnet;
        if k.min_occurrence == 0 {
            out.push(diag("skillnet.min_occurrence", "must be at least 1".into()));
        }
        if let Some(r) = k.resolution {
            if !(r.is_finite() && r > 0.0) {
                out.push(diag("skillnet.resolution", format!("must be positive, got {r}")));
            }
        }
        if k.restarts == 0 {
            out.push(diag("skillnet.restarts", "must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&k.edge_cutoff) {
            out.push(diag("skillnet.edge_cutoff", format!("{} outside [0, 1]", k.edge_cutoff)));
        }
        self.check_file("skillnet.names", &k.names, false, &mut out);

        let m = &self.mine;
        if !(m.min_support > 0.0 && m.min_support <= 1.0) {
            out.push(diag("mine.min_support", format!("{} outside (0, 1]", m.min_support)));
        }
        if m.max_len == 0 {
            out.push(diag("mine.max_len", "must be at least 1".into()));
        }
        if !(m.min_lift.is_finite() && m.min_lift >= 0.0) {
            out.push(diag("mine.min_lift", format!("must be non-negative, got {}", m.min_lift)));
        }
        if m.top_k == 0 {
            out.push(diag("mine.top_k", "must be at least 1".into()));
        }
        if !(m.application_percentile > 0.0 && m.application_percentile <= 100.0) {
            out.push(diag(
                "mine.application_percentile",
                format!("{} outside (0, 100]", m.application_percentile),
            ));
        }

        self.check_file("analyze.gazetteer", &self.analyze.gazetteer, true, &mut out);
        if self.analyze.top_n == 0 {
            out.push(diag("analyze.top_n", "must be at least 1".into()));
        }
        if let Err(e) = self.analyze.segment_list() {
            out.push(diag("analyze.segments", e));
        }
        out
    }
}

fn diag(key: &str, message: String) -> Diagnostic {
    Diagnostic {
        key: key.into(),
        message,
    }
}
