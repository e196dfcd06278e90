//! Reference server for the remote solver protocol, backed by
//! [`sample_sa`](super::sample_sa).

use std::io::Read;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, TrySendError};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use log::{debug, info, warn};
use tiny_http::{Header, Method, Request, Response, Server};

use super::remote::{SolveRequest, SolveResponse, WireSample};
use super::sa::sample_sa;
use super::{Backend, SolverConfig};
use crate::error::{Error, Result};

const MAX_BODY_BYTES: u64 = 64 << 20;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub sweeps: usize,
    pub beta_range: (f64, f64),
    pub workers: usize,
    /// Requests waiting for a worker beyond this are answered with 503.
    pub queue_capacity: usize,
    pub max_reads: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        let solver = SolverConfig::default();
        Self {
            sweeps: solver.sweeps,
            beta_range: solver.beta_range,
            workers: thread::available_parallelism().map_or(4, |n| n.get()),
            queue_capacity: 256,
            max_reads: 1_000_000,
        }
    }
}

pub struct SolverServer {
    addr: SocketAddr,
    server: Arc<Server>,
    stop: Arc<AtomicBool>,
    threads: Vec<JoinHandle<()>>,
}

impl SolverServer {
    /// Binds `addr` (e.g. `127.0.0.1:0`) and starts the acceptor and workers.
    pub fn bind(addr: &str, cfg: ServerConfig) -> Result<Self> {
        let solver = SolverConfig {
            sweeps: cfg.sweeps,
            beta_range: cfg.beta_range,
            ..SolverConfig::default()
        };
        solver.validate()?;
        let server = Server::http(addr).map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        let local = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| Error::invalid("server is not bound to an IP address"))?;
        let server = Arc::new(server);
        let stop = Arc::new(AtomicBool::new(false));
        let (tx, rx) = mpsc::sync_channel::<Request>(cfg.queue_capacity);
        let rx = Arc::new(Mutex::new(rx));

        let mut threads = Vec::new();
        for w in 0..cfg.workers.max(1) {
            let rx = Arc::clone(&rx);
            let solver = solver.clone();
            let max_reads = cfg.max_reads;
            threads.push(
                thread::Builder::new()
                    .name(format!("solve-worker-{w}"))
                    .spawn(move || loop {
                        let next = rx.lock().expect("worker queue poisoned").recv();
                        match next {
                            Ok(req) => handle(req, &solver, max_reads),
                            Err(_) => break,
                        }
                    })?,
            );
        }

        let acceptor_server = Arc::clone(&server);
        let acceptor_stop = Arc::clone(&stop);
        threads.push(
            thread::Builder::new()
                .name("solve-acceptor".into())
                .spawn(move || {
                    while let Ok(req) = acceptor_server.recv() {
                        if acceptor_stop.load(Ordering::SeqCst) {
                            break;
                        }
                        if let Err(TrySendError::Full(req)) = tx.try_send(req) {
                            warn!("solver queue full; rejecting request");
                            respond(req, 503, r#"{"error":"overloaded"}"#.to_string());
                        }
                    }
                })?,
        );
        info!("remote solver listening on http://{local}");
        Ok(Self {
            addr: local,
            server,
            stop,
            threads,
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn endpoint(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Stops accepting, lets workers finish queued requests and joins them.
    pub fn shutdown(mut self) {
        self.stop_threads();
    }

    fn stop_threads(&mut self) {
        if self.threads.is_empty() {
            return;
        }
        self.stop.store(true, Ordering::SeqCst);
        self.server.unblock();
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

impl Drop for SolverServer {
    fn drop(&mut self) {
        self.stop_threads();
    }
}

fn respond(req: Request, status: u16, body: String) {
    let header = Header::from_bytes(&b"Content-Type"[..], &b"application/json"[..])
        .expect("static header is valid");
    let resp = Response::from_string(body)
        .with_status_code(status)
        .with_header(header);
    if let Err(e) = req.respond(resp) {
        debug!("failed to send response: {e}");
    }
}

fn error_body(msg: &str) -> String {
    serde_json::json!({ "error": msg }).to_string()
}

fn handle(mut req: Request, solver: &SolverConfig, max_reads: usize) {
    match (req.method(), req.url()) {
        (Method::Post, "/solve") => {
            let mut body = String::new();
            if let Err(e) = req.as_reader().take(MAX_BODY_BYTES).read_to_string(&mut body) {
                respond(req, 400, error_body(&format!("unreadable body: {e}")));
                return;
            }
            match solve_body(&body, solver, max_reads) {
                Ok(resp) => respond(req, 200, resp),
                Err(msg) => respond(req, 400, error_body(&msg)),
            }
        }
        (Method::Get, "/health") => respond(req, 200, r#"{"status":"ok"}"#.to_string()),
        _ => respond(req, 404, error_body("not found")),
    }
}

/// Decodes a request body, anneals and encodes the response. `Err` carries
/// the message for a 400 reply.
pub fn solve_body(body: &str, solver: &SolverConfig, max_reads: usize) -> std::result::Result<String, String> {
    let request: SolveRequest =
        serde_json::from_str(body).map_err(|e| format!("malformed request: {e}"))?;
    if request.num_reads == 0 || request.num_reads > max_reads {
        return Err(format!("num_reads must be in 1..={max_reads}"));
    }
    let cfg = SolverConfig {
        backend: Backend::Sa,
        num_reads: request.num_reads,
        seed: request.seed,
        ..solver.clone()
    };
    let (samples, _) = sample_sa(&request.qubo, &cfg).map_err(|e| e.to_string())?;
    let resp = SolveResponse {
        samples: samples.iter().map(WireSample::from).collect(),
    };
    serde_json::to_string(&resp).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bad_bodies_are_rejected() {
        let cfg = SolverConfig::default();
        assert!(solve_body("{", &cfg, 10).is_err());
        assert!(solve_body(r#"{"qubo":{"n":1,"offset":0,"linear":{},"quadratic":{}},"num_reads":0,"seed":1}"#, &cfg, 10).is_err());
        assert!(solve_body(r#"{"qubo":{"n":1,"offset":0,"linear":{},"quadratic":{}},"num_reads":11,"seed":1}"#, &cfg, 10).is_err());
        assert!(solve_body(r#"{"qubo":{"n":1,"offset":0,"linear":{"0":-1},"quadratic":{}},"num_reads":3,"seed":1}"#, &cfg, 10).is_ok());
    }
}
