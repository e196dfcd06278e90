//! Parameter sweeps over generated tensors: vary one of rank, size or
//! order with the other two fixed, with and without bit-flip noise, and
//! record error rates and solver time per trial.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bmf::BmfConfig;
use crate::error::{Error, Result};
use crate::gen::{add_noise, generate, GenSpec};
use crate::htn::{decompose, error_rate, reconstruct, HtnConfig};
use crate::seed;
use crate::solvers::SolverConfig;

pub const CSV_HEADER: [&str; 10] = [
    "order",
    "size",
    "rank",
    "noise",
    "seed",
    "error_vs_input",
    "error_vs_clean",
    "solver_ms",
    "total_ms",
    "iters",
];

pub const DEFAULT_NOISE_PROB: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Vary {
    Rank,
    Size,
    Order,
}

impl FromStr for Vary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rank" => Ok(Vary::Rank),
            "size" => Ok(Vary::Size),
            "order" => Ok(Vary::Order),
            other => Err(Error::invalid(format!("cannot vary {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    Both,
    Clean,
    Noisy,
}

impl NoiseMode {
    fn conditions(self) -> &'static [bool] {
        match self {
            NoiseMode::Both => &[false, true],
            NoiseMode::Clean => &[false],
            NoiseMode::Noisy => &[true],
        }
    }
}

impl FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "both" => Ok(NoiseMode::Both),
            "clean" => Ok(NoiseMode::Clean),
            "noisy" => Ok(NoiseMode::Noisy),
            other => Err(Error::invalid(format!("unknown noise mode {other:?}"))),
        }
    }
}

/// Which tensor a reconstruction is scored against in summaries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompareTo {
    /// The tensor handed to the decomposition (noisy when noise is on).
    #[default]
    Input,
    /// The generated tensor before noise.
    Clean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub vary: Vary,
    pub values: Vec<usize>,
    pub order: usize,
    pub size: usize,
    pub rank: usize,
    pub trials: usize,
    pub noise: NoiseMode,
    pub noise_prob: f64,
    pub solver: SolverConfig,
    /// Factorization settings; rank and seed are set per split.
    pub bmf: BmfConfig,
    pub compare_to: CompareTo,
    pub seed: u64,
}

impl SweepSpec {
    pub fn new(vary: Vary, values: Vec<usize>, order: usize, size: usize, rank: usize) -> Self {
        Self {
            vary,
            values,
            order,
            size,
            rank,
            trials: 10,
            noise: NoiseMode::Both,
            noise_prob: DEFAULT_NOISE_PROB,
            solver: SolverConfig::default(),
            bmf: BmfConfig::default(),
            compare_to: CompareTo::Input,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::invalid("sweep needs at least one value"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("sweep needs at least one trial per value"));
        }
        if !(0.0..1.0).contains(&self.noise_prob) {
            return Err(Error::invalid("noise probability must lie in [0, 1)"));
        }
        self.solver.validate()
    }

    /// `(order, size, rank)` for one value of the varied parameter.
    pub fn params(&self, value: usize) -> (usize, usize, usize) {
        match self.vary {
            Vary::Rank => (self.order, self.size, value),
            Vary::Size => (self.order, value, self.rank),
            Vary::Order => (value, self.size, self.rank),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub order: usize,
    pub size: usize,
    pub rank: usize,
    pub noisy: bool,
    pub seed: u64,
    pub error_vs_input: f64,
    pub error_vs_clean: f64,
    pub solver_time: Duration,
    pub total_time: Duration,
    pub iters: usize,
    pub reads: usize,
    pub failure: Option<String>,
}

impl TrialRecord {
    pub fn error(&self, target: CompareTo) -> f64 {
        match target {
            CompareTo::Input => self.error_vs_input,
            CompareTo::Clean => self.error_vs_clean,
        }
    }

    fn failed(order: usize, size: usize, rank: usize, noisy: bool, seed: u64, e: &Error) -> Self {
        Self {
            order,
            size,
            rank,
            noisy,
            seed,
            error_vs_input: f64::NAN,
            error_vs_clean: f64::NAN,
            solver_time: Duration::ZERO,
            total_time: Duration::ZERO,
            iters: 0,
            reads: 0,
            failure: Some(e.to_string()),
        }
    }
}

fn run_trial(spec: &SweepSpec, value: usize, trial: usize) -> Vec<TrialRecord> {
    let (order, size, rank) = spec.params(value);
    let trial_seed = seed::derive(spec.seed, &[value as u64, trial as u64]);
    let gen_spec = GenSpec {
        noise_prob: spec.noise_prob,
        ..GenSpec::new(order, size, rank, trial_seed)
    };
    let generated = match generate(&gen_spec) {
        Ok(g) => g,
        Err(e) => {
            warn!("trial {trial} for value {value}: generation failed: {e}");
            return spec
                .noise
                .conditions()
                .iter()
                .map(|&noisy| TrialRecord::failed(order, size, rank, noisy, trial_seed, &e))
                .collect();
        }
    };
    let clean = generated.tensor;

    spec.noise
        .conditions()
        .iter()
        .map(|&noisy| {
            let start = Instant::now();
            let attempt = || -> Result<TrialRecord> {
                let input = if noisy {
                    add_noise(&clean, spec.noise_prob, seed::derive(trial_seed, &[1]))?
                } else {
                    clean.clone()
                };
                let cfg = HtnConfig::new(
                    rank,
                    BmfConfig {
                        solver: spec.solver.clone(),
                        ..spec.bmf.clone()
                    },
                    seed::derive(trial_seed, &[2]),
                );
                let d = decompose(&input, &cfg)?;
                let approx = reconstruct(&d.tree)?;
                Ok(TrialRecord {
                    order,
                    size,
                    rank,
                    noisy,
                    seed: trial_seed,
                    error_vs_input: error_rate(&input, &approx)?,
                    error_vs_clean: error_rate(&clean, &approx)?,
                    solver_time: d.report.solver_time,
                    total_time: start.elapsed(),
                    iters: d.report.iters,
                    reads: d.report.reads,
                    failure: None,
                })
            };
            attempt().unwrap_or_else(|e| {
                warn!("trial {trial} for value {value} (noisy: {noisy}) failed: {e}");
                TrialRecord::failed(order, size, rank, noisy, trial_seed, &e)
            })
        })
        .collect()
}

/// Runs every value x trial x noise condition. Records come back ordered
/// by (value, trial, clean before noisy) whatever the thread count.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<TrialRecord>> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = spec
        .values
        .iter()
        .flat_map(|&v| (0..spec.trials).map(move |t| (v, t)))
        .collect();
    Ok(jobs
        .par_iter()
        .map(|&(v, t)| run_trial(spec, v, t))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect())
}

/// [`run_sweep`] on a dedicated pool of `jobs` threads.
pub fn run_sweep_with_jobs(spec: &SweepSpec, jobs: usize) -> Result<Vec<TrialRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    pool.install(|| run_sweep(spec))
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

pub fn write_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.order.to_string(),
            r.size.to_string(),
            r.rank.to_string(),
            if r.noisy { "noisy" } else { "clean" }.to_string(),
            r.seed.to_string(),
            r.error_vs_input.to_string(),
            r.error_vs_clean.to_string(),
            format!("{:.3}", ms(r.solver_time)),
            format!("{:.3}", ms(r.total_time)),
            r.iters.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    /// Population standard deviation.
    pub sd: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        if values.is_empty() {
            return Stat { mean: f64::NAN, sd: f64::NAN };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Stat { mean, sd: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub order: usize,
    pub size: usize,
    pub rank: usize,
    pub noisy: bool,
    pub trials: usize,
    pub failed: usize,
    pub error: Stat,
    pub solver_ms: Stat,
}

/// Means and standard deviations per (order, size, rank, noise) group,
/// sorted by those keys. Failed trials are counted but not averaged.
pub fn summarize(records: &[TrialRecord], target: CompareTo) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(usize, usize, usize, bool), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.order, r.size, r.rank, r.noisy)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((order, size, rank, noisy), rs)| {
            let ok: Vec<&&TrialRecord> = rs.iter().filter(|r| r.failure.is_none()).collect();
            let errors: Vec<f64> = ok.iter().map(|r| r.error(target)).collect();
            let times: Vec<f64> = ok.iter().map(|r| ms(r.solver_time)).collect();
            SummaryRow {
                order,
                size,
                rank,
                noisy,
                trials: rs.len(),
                failed: rs.len() - ok.len(),
                error: Stat::of(&errors),
                solver_ms: Stat::of(&times),
            }
        })
        .collect()
}

fn varied(vary: Vary, order: usize, size: usize, rank: usize) -> usize {
    match vary {
        Vary::Rank => rank,
        Vary::Size => size,
        Vary::Order => order,
    }
}

/// Two-panel SVG: solver time (left) and error rate (right) against the
/// varied parameter. Clean trials in blue, noisy in red, group means
/// joined by lines.
pub fn plot_svg(records: &[TrialRecord], vary: Vary, target: CompareTo) -> String {
    const W: f64 = 420.0;
    const H: f64 = 300.0;
    const PAD: f64 = 45.0;
    let ok: Vec<&TrialRecord> = records.iter().filter(|r| r.failure.is_none()).collect();
    let xs: Vec<f64> = ok
        .iter()
        .map(|r| varied(vary, r.order, r.size, r.rank) as f64)
        .collect();
    let (xmin, xmax) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let (xmin, xmax) = if xmin.is_finite() { (xmin - 0.5, xmax + 0.5) } else { (0.0, 1.0) };
    let summary = summarize(records, target);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{H}" font-family="sans-serif" font-size="11">"#,
        2.0 * W
    );
    type Panel<'a> = (&'a str, Box<dyn Fn(&TrialRecord) -> f64>, Box<dyn Fn(&SummaryRow) -> f64>);
    let panels: [Panel; 2] = [
        ("solver time (ms)", Box::new(|r| ms(r.solver_time)), Box::new(|s| s.solver_ms.mean)),
        ("error rate", Box::new(move |r| r.error(target)), Box::new(|s| s.error.mean)),
    ];
    for (k, (label, value, mean)) in panels.iter().enumerate() {
        let x0 = k as f64 * W;
        let ys: Vec<f64> = ok.iter().map(|r| value(r)).collect();
        let ymax = ys.iter().copied().fold(0.0f64, f64::max).max(1e-9) * 1.05;
        let px = |x: f64| x0 + PAD + (x - xmin) / (xmax - xmin) * (W - 2.0 * PAD);
        let py = |y: f64| H - PAD - y / ymax * (H - 2.0 * PAD);
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            x0 + PAD,
            W - 2.0 * PAD,
            H - 2.0 * PAD
        );
        let _ = writeln!(svg, r#"<text x="{}" y="20">{label}</text>"#, x0 + PAD);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}">{:?}</text><text x="{}" y="{}">{ymax:.3}</text>"#,
            x0 + W / 2.0,
            H - 10.0,
            vary,
            x0 + 2.0,
            PAD
        );
        for (r, (&x, &y)) in ok.iter().zip(xs.iter().zip(&ys)) {
            let color = if r.noisy { "red" } else { "blue" };
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}" fill-opacity="0.5"/>"#,
                px(x),
                py(y)
            );
        }
        for noisy in [false, true] {
            let pts: Vec<String> = summary
                .iter()
                .filter(|s| s.noisy == noisy && s.trials > s.failed)
                .map(|s| {
                    let x = varied(vary, s.order, s.size, s.rank) as f64;
                    format!("{:.2},{:.2}", px(x), py(mean(s)))
                })
                .collect();
            if !pts.is_empty() {
                let color = if noisy { "red" } else { "blue" };
                let _ = writeln!(
                    svg,
                    r#"<polyline points="{}" fill="none" stroke="{color}"/>"#,
                    pts.join(" ")
                );
            }
        }
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(error: f64, noisy: bool) -> TrialRecord {
        TrialRecord {
            order: 4,
            size: 4,
            rank: 2,
            noisy,
            seed: 0,
            error_vs_input: error,
            error_vs_clean: error,
            solver_time: Duration::from_millis(10),
            total_time: Duration::from_millis(12),
            iters: 3,
            reads: 1,
            failure: None,
        }
    }

    #[test]
    fn summary_statistics() {
        let one = summarize(&[record(0.25, false)], CompareTo::Input);
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].error, Stat { mean: 0.25, sd: 0.0 });

        let same = summarize(&[record(0.5, false), record(0.5, false)], CompareTo::Input);
        assert_eq!(same[0].error.sd, 0.0);

        let mixed = summarize(&[record(0.0, false), record(1.0, false)], CompareTo::Input);
        assert_eq!(mixed[0].error.mean, 0.5);

        let split = summarize(&[record(0.0, true), record(1.0, false)], CompareTo::Input);
        assert_eq!(split.len(), 2);
        assert!(!split[0].noisy && split[1].noisy);
    }

    #[test]
    fn failed_trials_are_counted_not_averaged() {
        let mut bad = record(f64::NAN, false);
        bad.failure = Some("boom".into());
        let s = summarize(&[record(0.2, false), bad], CompareTo::Input);
        assert_eq!((s[0].trials, s[0].failed), (2, 1));
        assert_eq!(s[0].error.mean, 0.2);
    }

    #[test]
    fn params_follow_varied_axis() {
        let spec = SweepSpec::new(Vary::Size, vec![3], 4, 8, 2);
        assert_eq!(spec.params(5), (4, 5, 2));
        let spec = SweepSpec::new(Vary::Order, vec![3], 4, 8, 2);
        assert_eq!(spec.params(5), (5, 8, 2));
        assert!(SweepSpec::new(Vary::Rank, vec![], 4, 4, 2).validate().is_err());
    }

    #[test]
    fn csv_header_is_fixed() {
        let mut buf = Vec::new();
        write_csv(&[record(0.125, true)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "order,size,rank,noise,seed,error_vs_input,error_vs_clean,solver_ms,total_ms,iters"
        );
        assert_eq!(lines.next().unwrap(), "4,4,2,noisy,0,0.125,0.125,10.000,12.000,3");
    }

    #[test]
    fn svg_has_both_panels() {
        let svg = plot_svg(&[record(0.1, false), record(0.3, true)], Vary::Rank, CompareTo::Input);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<rect").count(), 2);
        assert_eq!(svg.matches("<circle").count(), 4);
    }
}
