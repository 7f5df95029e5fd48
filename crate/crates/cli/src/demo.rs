//! The bundled demonstration inputs: a synthetic corpus with planted title
//! groups and skill pairs, toy embeddings that keep each title group tight,
//! a stop-word list, a small gazetteer and a ready-to-run config.

use std::io;
use std::path::Path;

use skillscope_core::corpus::{synth_corpus, ExperienceBand, PlantedPair, SkillMarginal, SynthSpec, TitleCluster, Weighted};
use skillscope_core::embed::EmbeddingStore;

pub const SEED: u64 = 7;
pub const N_ADS: usize = 500;

/// Title groups; no token is shared between groups.
pub fn title_groups() -> Vec<Vec<&'static str>> {
    vec![
        vec![
            "java developer",
            "java programmer",
            "senior java developer",
            "java developer ii",
        ],
        vec!["data scientist", "data analyst", "analytics scientist"],
        vec!["web designer", "ui designer", "web ui designer"],
        vec!["devops engineer", "cloud engineer", "site reliability engineer"],
        vec!["qa tester", "quality tester", "test automation tester"],
        vec!["project manager", "program manager", "delivery manager"],
    ]
}

pub const STOPWORDS: &str = "# dropped before distances are computed\nsenior\njunior\nthe\nand\nof\n";

pub const GAZETTEER: &str = "name,lat,lon,region
Bangalore,12.9716,77.5946,Karnataka
Pune,18.5204,73.8567,Maharashtra
Mumbai,19.0760,72.8777,Maharashtra
Hyderabad,17.3850,78.4867,Telangana
Chennai,13.0827,80.2707,Tamil Nadu
Delhi NCR,28.6139,77.2090,Delhi
Kolkata,22.5726,88.3639,West Bengal
";

pub const CONFIG: &str = r#"seed = 42
output_dir = "out"

[input]
source = "file"
path = "corpus.jsonl"
format = "jsonlines"

[embed]
embeddings = "embeddings.txt"
format = "text"
stopwords = "stopwords.txt"

[skillnet]
min_occurrence = 20
# above the cosine of independent skills, below that of planted pairs
resolution = 0.4
restarts = 10

[mine]
min_support = 0.02
max_len = 3
min_lift = 1.0
top_k = 2

[analyze]
gazetteer = "gazetteer.csv"
top_n = 10
"#;

pub fn spec() -> SynthSpec {
    let m = |s: &str, p: f64| SkillMarginal { skill: s.into(), p };
    let w = |s: &str, weight: f64| Weighted { value: s.into(), weight };
    SynthSpec {
        n_ads: N_ADS,
        skills: vec![
            m("python", 0.30),
            m("machine learning", 0.25),
            m("java", 0.30),
            m("spring", 0.20),
            m("docker", 0.20),
            m("kubernetes", 0.15),
            m("sql", 0.35),
            m("excel", 0.20),
            m("javascript", 0.25),
            m("html", 0.20),
            m("selenium", 0.10),
            m("agile", 0.15),
            m("git", 0.20),
            m("linux", 0.15),
            m("aws", 0.12),
            m("communication", 0.10),
            m("cobol", 0.02),
            m("fortran", 0.01),
        ],
        pairs: vec![
            PlantedPair {
                a: "python".into(),
                b: "machine learning".into(),
                joint: 0.15,
            },
            PlantedPair {
                a: "java".into(),
                b: "spring".into(),
                joint: 0.14,
            },
            PlantedPair {
                a: "docker".into(),
                b: "kubernetes".into(),
                joint: 0.11,
            },
            PlantedPair {
                a: "javascript".into(),
                b: "html".into(),
                joint: 0.13,
            },
        ],
        title_clusters: title_groups()
            .into_iter()
            .zip([0.25, 0.2, 0.15, 0.15, 0.15, 0.1])
            .map(|(v, weight)| TitleCluster {
                variants: v.into_iter().map(String::from).collect(),
                weight,
            })
            .collect(),
        cities: vec![
            w("Bangalore", 0.30),
            w("Pune", 0.15),
            w("Mumbai", 0.15),
            w("Hyderabad", 0.12),
            w("Chennai", 0.10),
            w("Delhi NCR", 0.10),
            w("Kolkata", 0.05),
            w("Remote", 0.03),
        ],
        second_city_p: 0.2,
        industries: vec![
            w("IT-Software, Software Services", 0.6),
            w("Banking, Financial Services", 0.2),
            w("Education, Training", 0.1),
            w("Recruitment, Staffing", 0.1),
        ],
        role_categories: vec![
            w("Programming & Design", 0.5),
            w("Quality Assurance", 0.2),
            w("Project Management", 0.15),
            w("Analytics", 0.15),
        ],
        experience: vec![
            ExperienceBand {
                min: 0,
                max: 2,
                weight: 0.25,
            },
            ExperienceBand {
                min: 2,
                max: 5,
                weight: 0.45,
            },
            ExperienceBand {
                min: 5,
                max: 10,
                weight: 0.30,
            },
        ],
        vacancy_range: (1, 8),
        apply_range: (0, 400),
        filler_skill: "communication".into(),
    }
}

/// Toy embeddings: each group's tokens sit near their own axis, 10 apart
/// from the others, with a small per-token offset in two extra dimensions.
pub fn embeddings() -> EmbeddingStore {
    let groups = title_groups();
    let dim = groups.len() + 2;
    let mut store = EmbeddingStore::new(dim).expect("positive dimension");
    let stop = skillscope_core::embed::parse_stopwords(STOPWORDS);
    for (g, variants) in groups.iter().enumerate() {
        let mut tokens: Vec<String> = variants
            .iter()
            .flat_map(|v| skillscope_core::embed::tokenize(v, &stop))
            .filter(|t| t != "ii")
            .collect();
        tokens.sort();
        tokens.dedup();
        for (i, t) in tokens.iter().enumerate() {
            let mut v = vec![0.0f32; dim];
            v[g] = 10.0;
            let angle = i as f32;
            v[dim - 2] = 0.3 * angle.cos();
            v[dim - 1] = 0.3 * angle.sin();
            store.insert(t, &v).expect("matching dimension");
        }
    }
    store
}

/// Corpus lines: the synthetic ads plus one duplicate id and one ad with
/// no skills, both of which ingest skips.
pub fn corpus_jsonl() -> String {
    let corpus = synth_corpus(&spec(), SEED).expect("valid demo spec");
    let mut text = corpus.to_jsonl();
    let mut dup = corpus.ads[0].to_json();
    dup["job_name"] = "duplicate listing".into();
    text.push_str(&serde_json::to_string(&dup).expect("json"));
    text.push('\n');
    text.push_str(r#"{"id":"no-skills-1","job_name":"java developer","key_skills":[]}"#);
    text.push('\n');
    text
}

/// Writes every demo input into `dir`.
pub fn write_demo(dir: &Path) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("corpus.jsonl"), corpus_jsonl())?;
    let mut emb = Vec::new();
    embeddings().write_text(&mut emb)?;
    std::fs::write(dir.join("embeddings.txt"), emb)?;
    std::fs::write(dir.join("stopwords.txt"), STOPWORDS)?;
    std::fs::write(dir.join("gazetteer.csv"), GAZETTEER)?;
    std::fs::write(dir.join("config.toml"), CONFIG)?;
    Ok(())
}
