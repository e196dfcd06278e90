//! Annealer-shaped HTTP transport.
//!
//! `POST <endpoint>/solve` with `{"qubo":…, "num_reads":…, "seed":…}`;
//! the reply is `{"samples":[{"bits":[0|1,…],"energy":…,"count":…}]}`.
//! Status 200 on success, 400 for a malformed request, 503 when the
//! server queue is full.

use std::sync::OnceLock;
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::sa::{report_from_samples, Sample};
use super::{Backend, SolveReport, SolverConfig};
use crate::error::{Error, Result};
use crate::hubo::{Assignment, QuboModel};

pub const MAX_RETRIES: usize = 3;
const BASE_BACKOFF: Duration = Duration::from_millis(50);
pub const ENERGY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveRequest {
    pub qubo: QuboModel,
    pub num_reads: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WireSample {
    pub bits: Vec<u8>,
    pub energy: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveResponse {
    pub samples: Vec<WireSample>,
}

impl From<&Sample> for WireSample {
    fn from(s: &Sample) -> Self {
        WireSample {
            bits: s.bits.to_u8(),
            energy: s.energy,
            count: s.count,
        }
    }
}

fn agent() -> &'static ureq::Agent {
    static AGENT: OnceLock<ureq::Agent> = OnceLock::new();
    AGENT.get_or_init(|| {
        ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(600)))
            .build()
            .into()
    })
}

enum Attempt {
    Done(String),
    Retry(String),
    Fatal(Error),
}

fn post_once(url: &str, body: &str) -> Attempt {
    let resp = agent()
        .post(url)
        .header("Content-Type", "application/json")
        .send(body);
    let mut resp = match resp {
        Ok(r) => r,
        Err(e) => return Attempt::Retry(e.to_string()),
    };
    let status = resp.status().as_u16();
    let text = match resp.body_mut().read_to_string() {
        Ok(t) => t,
        Err(e) => return Attempt::Retry(e.to_string()),
    };
    match status {
        200 => Attempt::Done(text),
        503 => Attempt::Retry(format!("server overloaded: {text}")),
        code => Attempt::Fatal(Error::Protocol(format!("HTTP {code}: {text}"))),
    }
}

fn solve_url(endpoint: &str) -> String {
    format!("{}/solve", endpoint.trim_end_matches('/'))
}

/// Posts the request, retrying transport failures and 503 replies up to
/// [`MAX_RETRIES`] times with doubling backoff.
pub fn post_solve(endpoint: &str, request: &SolveRequest) -> Result<SolveResponse> {
    let url = solve_url(endpoint);
    let body = serde_json::to_string(request)?;
    let mut last = String::new();
    for attempt in 0..=MAX_RETRIES {
        if attempt > 0 {
            let wait = BASE_BACKOFF * (1 << (attempt - 1));
            debug!("retrying {url} in {wait:?} after: {last}");
            thread::sleep(wait);
        }
        match post_once(&url, &body) {
            Attempt::Done(text) => {
                return serde_json::from_str(&text)
                    .map_err(|e| Error::Protocol(format!("undecodable response: {e}")));
            }
            Attempt::Retry(msg) => last = msg,
            Attempt::Fatal(e) => return Err(e),
        }
    }
    warn!("remote solver at {url} failed after {} attempts", MAX_RETRIES + 1);
    Err(Error::Transport {
        attempts: MAX_RETRIES + 1,
        message: last,
    })
}

/// Checks every sample against the local model: bit count, 0/1 entries and
/// energy within [`ENERGY_TOLERANCE`] of a local re-evaluation.
pub fn validate_response(q: &QuboModel, resp: &SolveResponse) -> Result<Vec<Sample>> {
    if resp.samples.is_empty() {
        return Err(Error::Protocol("response contains no samples".into()));
    }
    resp.samples
        .iter()
        .enumerate()
        .map(|(k, s)| {
            if s.bits.len() != q.num_vars() {
                return Err(Error::Protocol(format!(
                    "sample {k} has {} bits, model has {} variables",
                    s.bits.len(),
                    q.num_vars()
                )));
            }
            if s.bits.iter().any(|&b| b > 1) {
                return Err(Error::Protocol(format!("sample {k} has a non-binary entry")));
            }
            let bits = Assignment::from_u8(&s.bits);
            let energy = q.eval(&bits)?;
            let diff = (energy - s.energy).abs();
            if diff.is_nan() || diff > ENERGY_TOLERANCE {
                return Err(Error::Protocol(format!(
                    "sample {k} claims energy {} but evaluates to {energy}",
                    s.energy
                )));
            }
            Ok(Sample {
                bits,
                energy,
                count: s.count,
            })
        })
        .collect()
}

/// Solves `q` on the server at `cfg.remote_endpoint`.
pub fn solve_remote(q: &QuboModel, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let start = Instant::now();
    let endpoint = cfg
        .remote_endpoint
        .as_deref()
        .ok_or_else(|| Error::invalid("remote backend needs an endpoint"))?;
    let request = SolveRequest {
        qubo: q.clone(),
        num_reads: cfg.num_reads,
        seed: cfg.seed,
    };
    let resp = post_solve(endpoint, &request)?;
    let samples = validate_response(q, &resp)?;
    let reads = samples.iter().map(|s| s.count).sum();
    report_from_samples(q, &samples, reads, Backend::Remote, start)
}
