use std::io::Read;
use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;
use url::Url;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FetchError {
    #[error("{0}: not found")]
    NotFound(String),
    #[error("{url}: {reason}")]
    Failed { url: String, reason: String },
    #[error("{0}: scheme not handled by this fetcher")]
    Scheme(String),
}

/// Retrieves the body of one page.
pub trait Fetcher: Send + Sync {
    fn fetch(&self, url: &Url) -> Result<String, FetchError>;
}

/// Serves `file://` URLs from the local file system.
#[derive(Debug, Clone, Default)]
pub struct DirFetcher;

impl Fetcher for DirFetcher {
    fn fetch(&self, url: &Url) -> Result<String, FetchError> {
        if url.scheme() != "file" {
            return Err(FetchError::Scheme(url.to_string()));
        }
        let path: PathBuf = url.to_file_path().map_err(|_| FetchError::NotFound(url.to_string()))?;
        std::fs::read_to_string(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => FetchError::NotFound(url.to_string()),
            _ => FetchError::Failed {
                url: url.to_string(),
                reason: e.to_string(),
            },
        })
    }
}

/// Plain HTTP client.
pub struct HttpFetcher {
    agent: ureq::Agent,
}

impl HttpFetcher {
    pub fn new(timeout: Duration) -> Self {
        HttpFetcher {
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }
}

impl Default for HttpFetcher {
    fn default() -> Self {
        HttpFetcher::new(Duration::from_secs(10))
    }
}

impl Fetcher for HttpFetcher {
    fn fetch(&self, url: &Url) -> Result<String, FetchError> {
        match self.agent.get(url.as_str()).call() {
            Ok(resp) => {
                let mut body = String::new();
                resp.into_reader()
                    .take(16 << 20)
                    .read_to_string(&mut body)
                    .map_err(|e| FetchError::Failed {
                        url: url.to_string(),
                        reason: e.to_string(),
                    })?;
                Ok(body)
            }
            Err(ureq::Error::Status(404, _)) => Err(FetchError::NotFound(url.to_string())),
            Err(e) => Err(FetchError::Failed {
                url: url.to_string(),
                reason: e.to_string(),
            }),
        }
    }
}

/// Picks the fetcher matching the root URL's scheme.
pub fn fetcher_for(root: &Url) -> Box<dyn Fetcher> {
    match root.scheme() {
        "file" => Box::new(DirFetcher),
        _ => Box::new(HttpFetcher::default()),
    }
}
