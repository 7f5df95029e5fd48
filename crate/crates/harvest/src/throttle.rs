use std::time::{Duration, Instant};

/// Token bucket holding at most one token, refilled at `rate` per second.
///
/// With a single token the bucket reduces to a minimum spacing of `1/rate`
/// between grants, which is what is tracked: the next instant a token is
/// available. Spacing is kept in integer nanoseconds so consecutive grants
/// are never closer than the interval through rounding.
#[derive(Debug, Clone)]
pub struct TokenBucket {
    interval: Duration,
    next: Option<Instant>,
}

impl TokenBucket {
    pub fn new(rate: f64) -> Self {
        assert!(rate.is_finite() && rate > 0.0, "rate must be positive");
        let nanos = (1e9 / rate).ceil() as u64;
        TokenBucket {
            interval: Duration::from_nanos(nanos),
            next: None,
        }
    }

    pub fn interval(&self) -> Duration {
        self.interval
    }

    /// Blocks until a token is available, takes it, and returns the grant
    /// instant.
    pub fn acquire(&mut self) -> Instant {
        if let Some(next) = self.next {
            let now = Instant::now();
            if next > now {
                std::thread::sleep(next - now);
            }
        }
        let mut now = Instant::now();
        // sleep can return a hair early on some platforms
        while self.next.is_some_and(|n| now < n) {
            std::thread::yield_now();
            now = Instant::now();
        }
        self.next = Some(now + self.interval);
        now
    }
}
