use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::sync::mpsc;
use std::time::Duration;

use log::info;
use serde::Serialize;

use bhtn::bench::{self, CompareTo, NoiseMode, SweepSpec, Vary};
use bhtn::bmf::{factorize, BmfConfig, Init};
use bhtn::bool_core::{parse_tensor, tensor_to_text};
use bhtn::gen::{add_noise, generate, GenSpec};
use bhtn::htn::{decompose, error_rate, reconstruct, HtnConfig, HtnTree};
use bhtn::solvers::{Backend, ServerConfig, SolverConfig, SolverServer};
use bhtn::{seed, BitMatrix, BitTensor, Error};

use crate::args::*;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    msg: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

impl CliError {
    fn new(code: u8, msg: impl Into<String>) -> Self {
        Self { code, msg: msg.into() }
    }

    fn input(path: &Path, e: impl fmt::Display) -> Self {
        Self::new(2, format!("{}: {e}", path.display()))
    }

    fn output(path: Option<&Path>, e: impl fmt::Display) -> Self {
        let target = path.map_or_else(|| "standard output".to_string(), |p| p.display().to_string());
        Self::new(4, format!("writing {target}: {e}"))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidArgument(_) => 1,
            Error::Shape(_) | Error::Parse(_) | Error::Json(_) | Error::Tree(_) => 2,
            Error::ExpansionCap { .. }
            | Error::TooManyVariables { .. }
            | Error::Transport { .. }
            | Error::Protocol(_)
            | Error::Exhausted(_) => 3,
            Error::Io(_) | Error::Csv(_) => 4,
        };
        Self::new(code, e.to_string())
    }
}

type CliResult<T = ()> = Result<T, CliError>;

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Decompose(a) => cmd_decompose(a),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Bmf(a) => cmd_bmf(a),
        Command::Bench(a) => cmd_bench(a, cli.jobs),
        Command::Serve(a) => cmd_serve(a),
    }
}

fn read_input(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::input(path, e))
}

fn read_tensor(path: &Path) -> CliResult<BitTensor> {
    parse_tensor(&read_input(path)?).map_err(|e| CliError::input(path, e))
}

fn read_tree(path: &Path) -> CliResult<HtnTree> {
    HtnTree::from_json(&read_input(path)?).map_err(|e| CliError::input(path, e))
}

fn write_output(path: Option<&Path>, text: &str) -> CliResult {
    let res = match path {
        Some(p) => fs::write(p, text),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush())
        }
    };
    res.map_err(|e| CliError::output(path, e))
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::new(4, e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn encode_tensor(t: &BitTensor, format: FormatArg) -> CliResult<String> {
    match format {
        FormatArg::Json => to_json(t),
        FormatArg::Text => Ok(tensor_to_text(t)),
    }
}

fn solver_config(a: &SolverArgs, seed: u64) -> CliResult<SolverConfig> {
    let cfg = SolverConfig {
        backend: match a.backend {
            BackendArg::Exact => Backend::Exact,
            BackendArg::Sa => Backend::Sa,
            BackendArg::Remote => Backend::Remote,
        },
        num_reads: a.reads as usize,
        sweeps: a.sweeps as usize,
        beta_range: (a.beta_min, a.beta_max),
        seed,
        time_limit: a.time_limit_ms.map(Duration::from_millis),
        remote_endpoint: a.endpoint.clone(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn bmf_config(a: &SolverArgs, rank: usize, seed: u64) -> CliResult<BmfConfig> {
    let cfg = BmfConfig {
        max_iters: a.max_iters as usize,
        stall_patience: a.stall as usize,
        init: match a.init {
            InitArg::ColumnSample => Init::ColumnSample,
            InitArg::Random => Init::RandomBernoulli(0.5),
        },
        seed,
        ..BmfConfig::with_rank(rank, solver_config(a, seed)?)
    };
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_generate(a: GenerateArgs) -> CliResult {
    let spec = GenSpec {
        p: a.p,
        noise_prob: a.noise,
        ..GenSpec::new(a.order as usize, a.size as usize, a.rank as usize, a.seed)
    };
    let g = generate(&spec)?;
    let tensor = if a.noise > 0.0 {
        add_noise(&g.tensor, a.noise, seed::derive(a.seed, &[1]))?
    } else {
        g.tensor
    };
    eprintln!(
        "generated shape {:?}: {} of {} entries set (density p = {}, {} attempt(s))",
        tensor.shape(),
        tensor.count_ones(),
        tensor.len(),
        g.p,
        g.attempts
    );
    if let Some(path) = &a.tree_out {
        write_output(Some(path), &to_json(&g.ground_truth)?)?;
    }
    write_output(a.out.as_deref(), &encode_tensor(&tensor, a.format)?)
}

fn cmd_decompose(a: DecomposeArgs) -> CliResult {
    let t = read_tensor(&a.tensor)?;
    let bmf = bmf_config(&a.solver, a.rank as usize, a.seed)?;
    let cfg = HtnConfig::new(a.rank as usize, bmf, a.seed);
    let d = decompose(&t, &cfg)?;
    let r = &d.report;
    eprintln!(
        "shape {:?}, rank {}: error rate {:.6} ({} of {} entries wrong)",
        t.shape(),
        a.rank,
        r.error_rate,
        r.mismatches,
        r.elements
    );
    eprintln!(
        "{} factorizations, {} iterations, {} reads; solver {:.3} s, total {:.3} s",
        r.factorizations,
        r.iters,
        r.reads,
        r.solver_time.as_secs_f64(),
        r.total_time.as_secs_f64()
    );
    if let Some(path) = &a.report {
        write_output(Some(path), &to_json(r)?)?;
    }
    write_output(a.out.as_deref(), &to_json(&d.tree)?)
}

fn cmd_reconstruct(a: ReconstructArgs) -> CliResult {
    let tree = read_tree(&a.tree)?;
    let t = reconstruct(&tree).map_err(|e| CliError::input(&a.tree, e))?;
    if let Some(path) = &a.compare {
        let target = read_tensor(path)?;
        eprintln!("error rate vs {}: {:.6}", path.display(), error_rate(&target, &t)?);
    }
    write_output(a.out.as_deref(), &encode_tensor(&t, a.format)?)
}

#[derive(Serialize)]
struct Factors<'a> {
    a: &'a BitMatrix,
    b: &'a BitMatrix,
    distance: usize,
    iters: usize,
    history: &'a [usize],
}

fn cmd_bmf(a: BmfArgs) -> CliResult {
    let t = read_tensor(&a.matrix)?;
    let x = match t.shape() {
        &[rows, cols] => BitMatrix::from_row_major(rows, cols, t.bits())?,
        other => return Err(CliError::input(&a.matrix, format!("expected a matrix, got shape {other:?}"))),
    };
    let cfg = bmf_config(&a.solver, a.rank as usize, a.seed)?;
    let res = factorize(&x, &cfg)?;
    eprintln!(
        "{}x{} rank {}: distance {} after {} iterations ({} reads, solver {:.3} s)",
        x.rows(),
        x.cols(),
        a.rank,
        res.distance,
        res.iters,
        res.reads_total,
        res.solver_time_total.as_secs_f64()
    );
    let out = Factors {
        a: &res.a,
        b: &res.b,
        distance: res.distance,
        iters: res.iters,
        history: &res.history,
    };
    write_output(a.out.as_deref(), &to_json(&out)?)
}

fn cmd_bench(a: BenchArgs, jobs: Option<u64>) -> CliResult {
    let vary = match a.vary {
        VaryArg::Rank => Vary::Rank,
        VaryArg::Size => Vary::Size,
        VaryArg::Order => Vary::Order,
    };
    let compare_to = match a.compare {
        CompareArg::Input => CompareTo::Input,
        CompareArg::Clean => CompareTo::Clean,
    };
    let bmf = bmf_config(&a.solver, a.rank as usize, a.seed)?;
    let spec = SweepSpec {
        trials: a.trials as usize,
        noise: match a.noise {
            NoiseArg::Both => NoiseMode::Both,
            NoiseArg::Clean => NoiseMode::Clean,
            NoiseArg::Noisy => NoiseMode::Noisy,
        },
        noise_prob: a.noise_prob,
        solver: bmf.solver.clone(),
        bmf,
        compare_to,
        seed: a.seed,
        ..SweepSpec::new(
            vary,
            a.values.iter().map(|&v| v as usize).collect(),
            a.order as usize,
            a.size as usize,
            a.rank as usize,
        )
    };
    info!("running {} trials on {:?} threads", spec.values.len() * spec.trials, jobs);
    let records = bench::run_sweep(&spec)?;

    eprintln!("order size rank noise  trials failed  error (mean ± sd)      solver ms (mean ± sd)");
    for row in bench::summarize(&records, compare_to) {
        eprintln!(
            "{:>5} {:>4} {:>4} {:<6} {:>6} {:>6}  {:.4} ± {:.4}        {:.1} ± {:.1}",
            row.order,
            row.size,
            row.rank,
            if row.noisy { "noisy" } else { "clean" },
            row.trials,
            row.failed,
            row.error.mean,
            row.error.sd,
            row.solver_ms.mean,
            row.solver_ms.sd
        );
    }

    let mut csv = Vec::new();
    bench::write_csv(&records, &mut csv)?;
    write_output(a.out.as_deref(), &String::from_utf8_lossy(&csv))?;
    if let Some(path) = &a.plot {
        write_output(Some(path), &bench::plot_svg(&records, vary, compare_to))?;
    }
    Ok(())
}

fn cmd_serve(a: ServeArgs) -> CliResult {
    let defaults = ServerConfig::default();
    let cfg = ServerConfig {
        sweeps: a.sweeps as usize,
        beta_range: (a.beta_min, a.beta_max),
        workers: a.workers.unwrap_or(defaults.workers),
        queue_capacity: a.queue,
        ..defaults
    };
    let addr = format!("{}:{}", a.host, a.port);
    let server = SolverServer::bind(&addr, cfg).map_err(|e| match e {
        Error::Io(io) => CliError::new(4, format!("cannot listen on {addr}: {io}")),
        other => other.into(),
    })?;
    eprintln!("listening on {}", server.endpoint());

    let (tx, rx) = mpsc::channel();
    ctrlc::set_handler(move || {
        let _ = tx.send(());
    })
    .map_err(|e| CliError::new(4, format!("installing signal handler: {e}")))?;
    let _ = rx.recv();
    eprintln!("shutting down");
    server.shutdown();
    Ok(())
}

