use std::collections::{BTreeMap, HashSet, VecDeque};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::Serialize;
use skillscope_core::JobAd;
use thiserror::Error;
use url::Url;

use crate::config::{start_url, CrawlConfig};
use crate::fetch::{fetcher_for, FetchError, Fetcher};
use crate::parse::{parse_ad, parse_listing};
use crate::throttle::TokenBucket;

#[derive(Debug, Error, PartialEq)]
pub enum CrawlError {
    #[error("invalid crawl configuration: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("start page {url} unreachable: {reason}")]
    Unreachable { url: String, reason: String },
}

/// One issued request; `at` is measured from the start of the crawl.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequestRecord {
    pub at: Duration,
    pub worker: usize,
    pub url: String,
    pub attempt: u32,
    pub ok: bool,
}

/// Request log with the politeness audit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrawlStats {
    /// Sorted by issue time.
    pub requests: Vec<RequestRecord>,
    pub workers: usize,
    pub rate_per_worker: f64,
    pub elapsed: Duration,
}

impl CrawlStats {
    pub fn request_count(&self) -> usize {
        self.requests.len()
    }

    pub fn rate_cap(&self) -> f64 {
        self.workers as f64 * self.rate_per_worker
    }

    /// Requests issued in each whole second since the start.
    pub fn per_second(&self) -> Vec<usize> {
        let Some(last) = self.requests.last() else {
            return Vec::new();
        };
        let mut out = vec![0; last.at.as_secs() as usize + 1];
        for r in &self.requests {
            out[r.at.as_secs() as usize] += 1;
        }
        out
    }

    /// Most requests falling in any half-open one-second window.
    pub fn max_in_any_window(&self) -> usize {
        let t: Vec<Duration> = self.requests.iter().map(|r| r.at).collect();
        let mut best = 0;
        let mut hi = 0;
        for lo in 0..t.len() {
            while hi < t.len() && t[hi] < t[lo] + Duration::from_secs(1) {
                hi += 1;
            }
            best = best.max(hi - lo);
        }
        best
    }

    /// `(n − 1) / span` over the issued requests.
    pub fn measured_rate(&self) -> Option<f64> {
        let (first, last) = (self.requests.first()?, self.requests.last()?);
        let span = (last.at - first.at).as_secs_f64();
        (self.requests.len() > 1 && span > 0.0).then(|| (self.requests.len() - 1) as f64 / span)
    }

    /// No one-second window holds more than `workers × rate` requests.
    pub fn politeness_holds(&self) -> bool {
        self.max_in_any_window() as f64 <= self.rate_cap() + 1e-9
    }

    /// URLs fetched successfully more than once.
    pub fn duplicate_fetches(&self) -> usize {
        let mut ok: BTreeMap<&str, usize> = BTreeMap::new();
        for r in self.requests.iter().filter(|r| r.ok) {
            *ok.entry(&r.url).or_insert(0) += 1;
        }
        ok.values().filter(|&&c| c > 1).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Skipped {
    pub url: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct CrawlOutput {
    /// Parsed advertisements in discovery order.
    pub documents: Vec<JobAd>,
    pub skipped: Vec<Skipped>,
    /// Unique advertisement URLs found on listing pages.
    pub discovered: usize,
    pub listing_pages: usize,
    pub stats: CrawlStats,
}

impl CrawlOutput {
    /// JSON lines readable by the corpus parser.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for ad in &self.documents {
            out.push_str(&ad.to_json().to_string());
            out.push('\n');
        }
        out
    }
}

enum Task {
    Listing { url: Url, page: usize },
    Ad { url: Url, index: usize },
}

struct Frontier {
    queue: VecDeque<Task>,
    seen: HashSet<String>,
    in_flight: usize,
    discovered: usize,
    listing_pages: usize,
    fatal: Option<CrawlError>,
}

struct Shared<'a> {
    config: &'a CrawlConfig,
    fetcher: &'a dyn Fetcher,
    start: Instant,
    frontier: Mutex<Frontier>,
    wake: Condvar,
    sink: Mutex<BTreeMap<usize, Result<JobAd, Skipped>>>,
    log: Mutex<Vec<RequestRecord>>,
}

impl Shared<'_> {
    fn next_task(&self) -> Option<Task> {
        let mut f = self.frontier.lock().expect("frontier lock");
        loop {
            if f.fatal.is_some() {
                return None;
            }
            if let Some(t) = f.queue.pop_front() {
                f.in_flight += 1;
                return Some(t);
            }
            if f.in_flight == 0 {
                return None;
            }
            f = self.wake.wait(f).expect("frontier lock");
        }
    }

    fn finish(&self, update: impl FnOnce(&mut Frontier)) {
        let mut f = self.frontier.lock().expect("frontier lock");
        update(&mut f);
        f.in_flight -= 1;
        self.wake.notify_all();
    }

    fn fetch(&self, url: &Url, worker: usize, bucket: &mut TokenBucket) -> Result<String, FetchError> {
        let mut last = None;
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                let backoff = self.config.retry_backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                std::thread::sleep(Duration::from_millis(backoff));
            }
            let at = bucket.acquire() - self.start;
            let result = self.fetcher.fetch(url);
            self.log.lock().expect("log lock").push(RequestRecord {
                at,
                worker,
                url: url.to_string(),
                attempt,
                ok: result.is_ok(),
            });
            match result {
                Ok(body) => return Ok(body),
                Err(e) => {
                    log::debug!("attempt {} of {url} failed: {e}", attempt + 1);
                    last = Some(e);
                }
            }
        }
        Err(last.expect("at least one attempt"))
    }

    fn listing(&self, url: Url, page: usize, worker: usize, bucket: &mut TokenBucket) {
        let body = match self.fetch(&url, worker, bucket) {
            Ok(b) => b,
            Err(e) => {
                log::warn!("listing page {url} skipped: {e}");
                self.finish(|f| {
                    if page == 1 {
                        f.fatal = Some(CrawlError::Unreachable {
                            url: url.to_string(),
                            reason: e.to_string(),
                        });
                    }
                });
                return;
            }
        };
        let listing = match parse_listing(&body, &url) {
            Ok(l) => l,
            Err(e) => {
                log::warn!("listing page {url} not parsed: {e}");
                self.finish(|f| f.listing_pages += 1);
                return;
            }
        };
        self.finish(|f| {
            f.listing_pages += 1;
            for ad in listing.ads.iter() {
                if f.seen.insert(ad.to_string()) {
                    let index = f.discovered;
                    f.discovered += 1;
                    f.queue.push_back(Task::Ad { url: ad.clone(), index });
                }
            }
            let more_pages = self.config.max_pages.is_none_or(|m| page < m);
            if !listing.is_terminal() && more_pages {
                let next = listing.next.clone().expect("non-terminal page has a next link");
                if f.seen.insert(next.to_string()) {
                    f.queue.push_back(Task::Listing {
                        url: next,
                        page: page + 1,
                    });
                }
            }
        });
    }

    fn ad(&self, url: Url, index: usize, worker: usize, bucket: &mut TokenBucket) {
        let outcome = match self.fetch(&url, worker, bucket) {
            Ok(body) => parse_ad(&body, &url).map_err(|e| e.to_string()),
            Err(e) => Err(e.to_string()),
        }
        .map_err(|reason| {
            log::warn!("advertisement {url} skipped: {reason}");
            Skipped {
                url: url.to_string(),
                reason,
            }
        });
        self.sink.lock().expect("sink lock").insert(index, outcome);
        self.finish(|_| {});
    }

    fn work(&self, worker: usize) {
        let mut bucket = TokenBucket::new(self.config.max_requests_per_worker_per_sec);
        while let Some(task) = self.next_task() {
            match task {
                Task::Listing { url, page } => self.listing(url, page, worker, &mut bucket),
                Task::Ad { url, index } => self.ad(url, index, worker, &mut bucket),
            }
        }
        self.wake.notify_all();
    }
}

/// Crawls the site named by `config.root_url`.
pub fn crawl(config: &CrawlConfig) -> Result<CrawlOutput, CrawlError> {
    let problems = config.problems();
    if !problems.is_empty() {
        return Err(CrawlError::Config(problems));
    }
    let root = crate::config::root(&config.root_url).map_err(|e| CrawlError::Config(vec![e]))?;
    let fetcher = fetcher_for(&root);
    crawl_with(config, fetcher.as_ref())
}

/// Crawls with an explicit fetcher.
pub fn crawl_with(config: &CrawlConfig, fetcher: &dyn Fetcher) -> Result<CrawlOutput, CrawlError> {
    let problems = config.problems();
    if !problems.is_empty() {
        return Err(CrawlError::Config(problems));
    }
    let first = start_url(config).map_err(|e| CrawlError::Config(vec![e]))?;
    let shared = Shared {
        config,
        fetcher,
        start: Instant::now(),
        frontier: Mutex::new(Frontier {
            seen: HashSet::from([first.to_string()]),
            queue: VecDeque::from([Task::Listing { url: first, page: 1 }]),
            in_flight: 0,
            discovered: 0,
            listing_pages: 0,
            fatal: None,
        }),
        wake: Condvar::new(),
        sink: Mutex::new(BTreeMap::new()),
        log: Mutex::new(Vec::new()),
    };
    std::thread::scope(|s| {
        for w in 0..config.max_workers {
            let shared = &shared;
            s.spawn(move || shared.work(w));
        }
    });
    let elapsed = shared.start.elapsed();
    let frontier = shared.frontier.into_inner().expect("frontier lock");
    if let Some(e) = frontier.fatal {
        return Err(e);
    }
    let mut requests = shared.log.into_inner().expect("log lock");
    requests.sort_by_key(|r| (r.at, r.worker));
    let mut documents = Vec::new();
    let mut skipped = Vec::new();
    for (_, outcome) in shared.sink.into_inner().expect("sink lock") {
        match outcome {
            Ok(ad) => documents.push(ad),
            Err(s) => skipped.push(s),
        }
    }
    Ok(CrawlOutput {
        documents,
        skipped,
        discovered: frontier.discovered,
        listing_pages: frontier.listing_pages,
        stats: CrawlStats {
            requests,
            workers: config.max_workers,
            rate_per_worker: config.max_requests_per_worker_per_sec,
            elapsed,
        },
    })
}
