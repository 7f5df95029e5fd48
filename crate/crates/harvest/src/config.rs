use serde::{Deserialize, Serialize};
use url::Url;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrawlConfig {
    /// Site root, `file://` or `http://`.
    pub root_url: String,
    pub key_phrase: String,
    pub max_workers: usize,
    /// Requests per second each worker may issue.
    pub max_requests_per_worker_per_sec: f64,
    /// Listing pages to follow at most.
    pub max_pages: Option<usize>,
    /// Extra attempts after a failed fetch.
    pub retries: u32,
    /// First retry delay; doubled on every further attempt.
    pub retry_backoff_ms: u64,
}

impl Default for CrawlConfig {
    fn default() -> Self {
        CrawlConfig {
            root_url: String::new(),
            key_phrase: "software".into(),
            max_workers: 4,
            max_requests_per_worker_per_sec: 2.0,
            max_pages: None,
            retries: 2,
            retry_backoff_ms: 100,
        }
    }
}

impl CrawlConfig {
    /// Every problem with the configuration, in field order.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Err(e) = root(&self.root_url) {
            out.push(format!("root_url: {e}"));
        }
        if slug(&self.key_phrase).is_empty() {
            out.push("key_phrase: must contain a word".into());
        }
        if self.max_workers == 0 {
            out.push("max_workers: must be at least 1".into());
        }
        let r = self.max_requests_per_worker_per_sec;
        if !(r.is_finite() && r > 0.0) {
            out.push(format!("max_requests_per_worker_per_sec: must be positive, got {r}"));
        }
        if self.max_pages == Some(0) {
            out.push("max_pages: must be at least 1 when set".into());
        }
        out
    }

    /// Aggregate request-rate cap across all workers.
    pub fn rate_cap(&self) -> f64 {
        self.max_workers as f64 * self.max_requests_per_worker_per_sec
    }
}

/// `"Data Science"` → `"data-science"`.
fn slug(phrase: &str) -> String {
    phrase.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join("-")
}

/// Parses the root and makes sure it ends in `/` so joins stay below it.
pub(crate) fn root(root_url: &str) -> Result<Url, String> {
    let mut u = Url::parse(root_url).map_err(|e| format!("'{root_url}' is not a URL: {e}"))?;
    match u.scheme() {
        "file" | "http" | "https" => {}
        s => return Err(format!("unsupported scheme '{s}'")),
    }
    if !u.path().ends_with('/') {
        let p = format!("{}/", u.path());
        u.set_path(&p);
    }
    Ok(u)
}

/// First listing page: `<root>/<slug>-jobs.html`.
pub fn start_url(config: &CrawlConfig) -> Result<Url, String> {
    let base = root(&config.root_url)?;
    base.join(&format!("{}-jobs.html", slug(&config.key_phrase)))
        .map_err(|e| e.to_string())
}
