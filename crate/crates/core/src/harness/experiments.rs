//! Monte Carlo experiments comparing sampled runs with the limit curve.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::stats::{log_log_slope, median, summarize};
use crate::error::{Error, Result};
use crate::predictor::{halting_times, predict, LimitCurve};
use crate::sampler::{empirical_halting_time, simulate_info_path, TrajectoryRecord};

/// Environment variable holding the worker count (default: all cores).
pub const WORKERS_ENV: &str = "GRF_WORKERS";

/// Relative distance kept between a halting threshold and the limiting
/// squared gradient norms.
pub const EPSILON_MARGIN: f64 = 0.01;

pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let workers = match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("{WORKERS_ENV}={v:?} is not a worker count")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Stream of replication `replication` at the `n_index`-th dimension.
pub fn stream_id(n_index: usize, replication: usize) -> u64 {
    ((n_index as u64) << 32) | replication as u64
}

pub fn run_predict(cfg: &ExperimentConfig) -> Result<LimitCurve> {
    predict(&cfg.kernel, &cfg.algorithm, cfg.lambda, cfg.steps, cfg.predict_options())
}

/// Runs `replications` trajectories per dimension, returned sorted by
/// `(N, replication)`. `stream_of(n_index, replication)` picks the streams.
fn sample_all(
    cfg: &ExperimentConfig,
    replications: usize,
    stream_of: impl Fn(usize, usize) -> u64 + Sync,
) -> Result<Vec<(usize, usize, TrajectoryRecord)>> {
    let jobs: Vec<(usize, usize)> = (0..cfg.n_list.len())
        .flat_map(|i| (0..replications).map(move |r| (i, r)))
        .collect();
    let pool = worker_pool()?;
    pool.install(|| {
        jobs.par_iter()
            .map(|&(i, r)| {
                simulate_info_path(
                    &cfg.kernel,
                    &cfg.algorithm,
                    cfg.lambda,
                    cfg.n_list[i],
                    cfg.steps,
                    stream_of(i, r),
                    cfg.master_seed,
                    cfg.sampler_options(),
                )
                .map(|rec| (i, r, rec))
            })
            .collect()
    })
}

/// `(replication, record)` pairs sorted by `(N, replication)`.
pub fn run_simulate(cfg: &ExperimentConfig) -> Result<Vec<(usize, TrajectoryRecord)>> {
    Ok(sample_all(cfg, cfg.replications, stream_id)?
        .into_iter()
        .map(|(_, r, rec)| (r, rec))
        .collect())
}

/// One row of the verify samples table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySample {
    #[serde(rename = "N")]
    pub n: u64,
    pub replication: usize,
    pub step: usize,
    pub f_value: f64,
    pub grad_norm_sq: f64,
    pub f_limit: f64,
    pub grad_norm_sq_limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    #[serde(rename = "N")]
    pub n: u64,
    pub step: usize,
    pub count: usize,
    pub mean_f: f64,
    pub sd_f: f64,
    pub se_f: f64,
    pub f_limit: f64,
    pub gap_f: f64,
    pub tol_f: f64,
    pub mean_grad: f64,
    pub sd_grad: f64,
    pub se_grad: f64,
    pub grad_limit: f64,
    pub gap_grad: f64,
    pub tol_grad: f64,
    /// Log-log slope of `sd_f` against `N` at this step (same for all `N`).
    pub slope_f: f64,
    pub slope_grad: f64,
}

/// Gap tolerance `3 SE + 2 / sqrt(N)`.
pub fn gap_tolerance(se: f64, n: u64) -> f64 {
    3.0 * se + 2.0 / (n as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ReportRow>,
}

impl ConvergenceReport {
    /// Aggregates the samples; only the samples are consulted, so the report
    /// can be rebuilt from the samples CSV.
    pub fn from_samples(samples: &[VerifySample]) -> Self {
        let mut keys: Vec<(u64, usize)> = samples.iter().map(|s| (s.n, s.step)).collect();
        keys.sort_unstable();
        keys.dedup();
        let mut rows: Vec<ReportRow> = keys
            .iter()
            .map(|&(n, step)| {
                let sel: Vec<&VerifySample> = samples.iter().filter(|s| s.n == n && s.step == step).collect();
                let f: Vec<f64> = sel.iter().map(|s| s.f_value).collect();
                let g: Vec<f64> = sel.iter().map(|s| s.grad_norm_sq).collect();
                let (sf, sg) = (summarize(&f), summarize(&g));
                let f_limit = sel[0].f_limit;
                let grad_limit = sel[0].grad_norm_sq_limit;
                ReportRow {
                    n,
                    step,
                    count: sel.len(),
                    mean_f: sf.mean,
                    sd_f: sf.sd,
                    se_f: sf.se,
                    f_limit,
                    gap_f: (sf.mean - f_limit).abs(),
                    tol_f: gap_tolerance(sf.se, n),
                    mean_grad: sg.mean,
                    sd_grad: sg.sd,
                    se_grad: sg.se,
                    grad_limit,
                    gap_grad: (sg.mean - grad_limit).abs(),
                    tol_grad: gap_tolerance(sg.se, n),
                    slope_f: f64::NAN,
                    slope_grad: f64::NAN,
                }
            })
            .collect();
        let mut steps: Vec<usize> = rows.iter().map(|r| r.step).collect();
        steps.sort_unstable();
        steps.dedup();
        for step in steps {
            let idx: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].step == step).collect();
            if idx.len() < 2 {
                continue;
            }
            let ns: Vec<f64> = idx.iter().map(|&i| rows[i].n as f64).collect();
            let sf: Vec<f64> = idx.iter().map(|&i| rows[i].sd_f).collect();
            let sg: Vec<f64> = idx.iter().map(|&i| rows[i].sd_grad).collect();
            let (a, b) = (log_log_slope(&ns, &sf), log_log_slope(&ns, &sg));
            for &i in &idx {
                rows[i].slope_f = a;
                rows[i].slope_grad = b;
            }
        }
        Self { rows }
    }

    pub fn largest_n(&self) -> Option<u64> {
        self.rows.iter().map(|r| r.n).max()
    }

    /// Rows whose function-value gap exceeds its tolerance.
    pub fn gap_failures(&self) -> Vec<&ReportRow> {
        self.rows.iter().filter(|r| !(r.gap_f <= r.tol_f)).collect()
    }

    /// Per-step `(step, slope_f, slope_grad)`.
    pub fn slopes(&self) -> Vec<(usize, f64, f64)> {
        let mut out: Vec<(usize, f64, f64)> = Vec::new();
        for r in &self.rows {
            if !out.iter().any(|s| s.0 == r.step) {
                out.push((r.step, r.slope_f, r.slope_grad));
            }
        }
        out.sort_by_key(|s| s.0);
        out
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub curve: LimitCurve,
    pub samples: Vec<VerifySample>,
    pub report: ConvergenceReport,
}

pub fn run_verify(cfg: &ExperimentConfig) -> Result<VerifyOutcome> {
    let curve = run_predict(cfg)?;
    let records = sample_all(cfg, cfg.replications, stream_id)?;
    let mut samples = Vec::with_capacity(records.len() * (cfg.steps + 1));
    for (i, r, rec) in &records {
        for step in 0..=cfg.steps {
            samples.push(VerifySample {
                n: cfg.n_list[*i],
                replication: *r,
                step,
                f_value: rec.f_values[step],
                grad_norm_sq: rec.grad_norm_sq(step),
                f_limit: curve.f_limit[step],
                grad_norm_sq_limit: curve.grad_norm_sq(step),
            });
        }
    }
    let report = ConvergenceReport::from_samples(&samples);
    Ok(VerifyOutcome { curve, samples, report })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoInitRow {
    pub n: u64,
    pub pairs: usize,
    /// `max_k |f1(X_k) - f2(X_k)|` for every pair.
    pub max_gaps: Vec<f64>,
    pub median_max_gap: f64,
    /// Median of `|f1(X_k) - f2(X_k)|` for each step `k`.
    pub step_medians: Vec<f64>,
    /// How often each step attains the maximum.
    pub argmax_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoInitReport {
    pub rows: Vec<TwoInitRow>,
    /// `gaps[i][pair][k]` is `|f1 - f2|` at step `k` for the `i`-th dimension.
    pub gaps: Vec<Vec<Vec<f64>>>,
}

impl TwoInitReport {
    pub fn medians_non_increasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].median_max_gap <= w[0].median_max_gap)
    }

    pub fn medians_strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].median_max_gap < w[0].median_max_gap)
    }
}

/// Pairs of runs from two initializations with the same norm. With
/// `identical_streams` both members of a pair share one stream, which must
/// give zero gaps.
pub fn run_two_init_with(cfg: &ExperimentConfig, identical_streams: bool) -> Result<TwoInitReport> {
    let members = sample_all(cfg, 2 * cfg.replications, |i, r| {
        if identical_streams {
            stream_id(i, r / 2)
        } else {
            stream_id(i, r)
        }
    })?;
    let mut rows = Vec::new();
    let mut all_gaps = Vec::new();
    for (i, &n) in cfg.n_list.iter().enumerate() {
        let recs: Vec<&TrajectoryRecord> =
            members.iter().filter(|m| m.0 == i).map(|m| &m.2).collect();
        let gaps: Vec<Vec<f64>> = recs
            .chunks(2)
            .map(|p| {
                (0..=cfg.steps)
                    .map(|k| (p[0].f_values[k] - p[1].f_values[k]).abs())
                    .collect()
            })
            .collect();
        let max_gaps: Vec<f64> = gaps.iter().map(|g| g.iter().copied().fold(0.0, f64::max)).collect();
        let step_medians = (0..=cfg.steps)
            .map(|k| median(&gaps.iter().map(|g| g[k]).collect::<Vec<_>>()))
            .collect();
        let mut argmax_counts = vec![0; cfg.steps + 1];
        for g in &gaps {
            let k = (0..g.len()).max_by(|&a, &b| g[a].total_cmp(&g[b])).unwrap_or(0);
            argmax_counts[k] += 1;
        }
        rows.push(TwoInitRow {
            n,
            pairs: gaps.len(),
            median_max_gap: median(&max_gaps),
            max_gaps,
            step_medians,
            argmax_counts,
        });
        all_gaps.push(gaps);
    }
    Ok(TwoInitReport { rows, gaps: all_gaps })
}

pub fn run_two_init(cfg: &ExperimentConfig) -> Result<TwoInitReport> {
    run_two_init_with(cfg, false)
}

/// Moves `eps` at least [`EPSILON_MARGIN`] (relative) away from every
/// limiting squared gradient norm `diag[n]`, `n > 0`.
pub fn adjust_epsilon(eps: f64, diag: &[f64]) -> f64 {
    let mut e = eps;
    for _ in 0..diag.len().max(1) * 4 {
        let close = diag
            .iter()
            .skip(1)
            .find(|&&g| (e - g).abs() < EPSILON_MARGIN * g.abs());
        match close {
            Some(&g) if e >= g => e = g * (1.0 + 1.5 * EPSILON_MARGIN),
            Some(&g) => e = g * (1.0 - 1.5 * EPSILON_MARGIN),
            None => return e,
        }
    }
    e
}

#[derive(Debug, Clone, PartialEq)]
pub struct HaltingRow {
    pub n: u64,
    pub epsilon: f64,
    pub tau: Option<usize>,
    pub tau_plus: Option<usize>,
    pub replications: usize,
    pub matches: usize,
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HaltingReport {
    pub requested: Vec<f64>,
    pub used: Vec<f64>,
    pub rows: Vec<HaltingRow>,
}

impl HaltingReport {
    pub fn rows_for(&self, eps_index: usize) -> Vec<&HaltingRow> {
        let eps = self.used[eps_index];
        self.rows.iter().filter(|r| r.epsilon == eps).collect()
    }

    /// Frequencies are non-decreasing in `N` for every threshold.
    pub fn monotone(&self) -> bool {
        (0..self.used.len()).all(|i| {
            self.rows_for(i).windows(2).all(|w| w[1].frequency >= w[0].frequency)
        })
    }
}

pub fn run_halting(cfg: &ExperimentConfig) -> Result<HaltingReport> {
    if cfg.epsilon.is_empty() {
        return Err(Error::Config("halting needs at least one experiment.epsilon value".into()));
    }
    let curve = run_predict(cfg)?;
    let diag: Vec<f64> = (0..=cfg.steps).map(|n| curve.grad_norm_sq(n)).collect();
    let used: Vec<f64> = cfg.epsilon.iter().map(|&e| adjust_epsilon(e, &diag)).collect();
    let records = sample_all(cfg, cfg.replications, stream_id)?;
    let mut rows = Vec::new();
    for &eps in &used {
        let (tau, tau_plus) = halting_times(&curve, eps);
        for (i, &n) in cfg.n_list.iter().enumerate() {
            let recs: Vec<&TrajectoryRecord> =
                records.iter().filter(|m| m.0 == i).map(|m| &m.2).collect();
            let matches = recs.iter().filter(|r| empirical_halting_time(r, eps) == tau).count();
            rows.push(HaltingRow {
                n,
                epsilon: eps,
                tau,
                tau_plus,
                replications: recs.len(),
                matches,
                frequency: matches as f64 / recs.len() as f64,
            });
        }
    }
    Ok(HaltingReport { requested: cfg.epsilon.clone(), used, rows })
}
