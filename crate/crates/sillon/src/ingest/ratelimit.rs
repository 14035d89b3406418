use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use super::ProviderError;

/// Token bucket shared by all requests of a provider.
#[derive(Debug)]
pub struct RateLimiter {
    rate_per_s: f64,
    burst: f64,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    pub fn new(rate_per_s: f64, burst: u32) -> Self {
        let burst = f64::from(burst.max(1));
        Self { rate_per_s: rate_per_s.max(1e-3), burst, state: Mutex::new((burst, Instant::now())) }
    }

    /// Blocks until a token is available and takes it.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut state = self.state.lock().expect("rate limiter lock");
                let now = Instant::now();
                let (tokens, last) = *state;
                let tokens = (tokens + now.duration_since(last).as_secs_f64() * self.rate_per_s).min(self.burst);
                if tokens >= 1.0 {
                    *state = (tokens - 1.0, now);
                    return;
                }
                *state = (tokens, now);
                (1.0 - tokens) / self.rate_per_s
            };
            thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { attempts: 3, base_delay: Duration::from_millis(250) }
    }
}

/// Calls `f` up to `policy.attempts` times, doubling the delay after each
/// transient failure. Other errors are returned at once.
pub fn retry<T>(policy: &RetryPolicy, mut f: impl FnMut() -> Result<T, ProviderError>) -> Result<T, ProviderError> {
    let mut delay = policy.base_delay;
    let mut attempt = 1;
    loop {
        match f() {
            Err(e) if e.is_transient() && attempt < policy.attempts => {
                thread::sleep(delay);
                delay *= 2;
                attempt += 1;
            }
            other => return other,
        }
    }
}
