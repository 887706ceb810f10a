//! Replicated runs and the per-cell summaries.

use std::io::Write;

use ars_core::{initial_support, BuiltinTarget, InitialRule, Method, Sampler};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{CellKey, ExperimentConfig, TargetSpec};
use crate::error::{BenchError, Result};

pub const CSV_HEADER: &str =
    "method,target,N,nodes,mean_time_s,normalized_time,mean_eta_final,stderr_eta,mean_m_final";

/// The random source every replica uses, seeded from the replica seed.
pub fn replica_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Outcome of one independent run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicaResult {
    pub seed: u64,
    pub elapsed_s: f64,
    pub eta_final: f64,
    pub final_nodes: usize,
    pub iterations: u64,
}

/// Draws the initial nodes and runs one sampler until `n_samples` acceptances.
pub fn run_replica(
    target: &BuiltinTarget,
    method: Method,
    n_samples: usize,
    nodes: usize,
    rule: InitialRule,
    seed: u64,
) -> Result<ReplicaResult> {
    let mut rng = replica_rng(seed);
    let support = initial_support(target, rule, nodes, &mut rng)?;
    let mut sampler = Sampler::new(method, target, support, rng)?;
    let (_, stats) = sampler.run(n_samples)?;
    Ok(ReplicaResult {
        seed,
        elapsed_s: stats.elapsed.as_secs_f64(),
        eta_final: stats.final_acceptance_rate,
        final_nodes: stats.final_nodes,
        iterations: stats.iterations,
    })
}

/// All replicas of one grid cell, in replica order.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub key: CellKey,
    pub replicas: Vec<ReplicaResult>,
}

impl CellResult {
    pub fn mean_time_s(&self) -> f64 {
        mean(self.replicas.iter().map(|r| r.elapsed_s))
    }

    pub fn mean_eta(&self) -> f64 {
        mean(self.replicas.iter().map(|r| r.eta_final))
    }

    pub fn stderr_eta(&self) -> f64 {
        let n = self.replicas.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean_eta();
        let ss: f64 = self
            .replicas
            .iter()
            .map(|r| (r.eta_final - m).powi(2))
            .sum();
        (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
    }

    /// Mean over replicas of accepted draws per proposal, `N / T`.
    pub fn mean_eta_empirical(&self) -> f64 {
        mean(
            self.replicas
                .iter()
                .map(|r| self.key.n_samples as f64 / r.iterations as f64),
        )
    }

    pub fn mean_nodes(&self) -> f64 {
        mean(self.replicas.iter().map(|r| r.final_nodes as f64))
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Runs `replicas` seeds `seed, seed + 1, ...` in parallel on the current
/// rayon pool. The result order does not depend on scheduling.
pub fn run_cell(
    target: &BuiltinTarget,
    key: CellKey,
    rule: InitialRule,
    replicas: usize,
    seed: u64,
) -> Result<CellResult> {
    let results: Vec<ReplicaResult> = (0..replicas as u64)
        .into_par_iter()
        .map(|k| run_replica(target, key.method, key.n_samples, key.nodes, rule, seed + k))
        .collect::<Result<_>>()?;
    Ok(CellResult {
        key,
        replicas: results,
    })
}

/// One line of the summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub method: Method,
    pub target: String,
    pub n_samples: usize,
    pub nodes: usize,
    pub mean_time_s: f64,
    pub normalized_time: f64,
    pub mean_eta_final: f64,
    pub stderr_eta: f64,
    pub mean_m_final: f64,
    /// Mean fraction of proposals accepted over the whole run. Summary only.
    pub mean_accept_fraction: f64,
}

impl BenchRow {
    pub fn from_cell(cell: &CellResult, target: &TargetSpec, baseline_time: f64) -> Self {
        let mean_time_s = cell.mean_time_s();
        BenchRow {
            method: cell.key.method,
            target: target_label(target),
            n_samples: cell.key.n_samples,
            nodes: cell.key.nodes,
            mean_time_s,
            normalized_time: mean_time_s / baseline_time,
            mean_eta_final: cell.mean_eta(),
            stderr_eta: cell.stderr_eta(),
            mean_m_final: cell.mean_nodes(),
            mean_accept_fraction: cell.mean_eta_empirical(),
        }
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{:.9},{:.6},{:.10},{:.10},{:.4}",
            self.method,
            self.target,
            self.n_samples,
            self.nodes,
            self.mean_time_s,
            self.normalized_time,
            self.mean_eta_final,
            self.stderr_eta,
            self.mean_m_final
        )
    }
}

/// Comma-free label for the CSV `target` column.
pub fn target_label(target: &TargetSpec) -> String {
    match target {
        TargetSpec::Gaussian { sigma2 } => format!("gaussian(sigma2={sigma2})"),
        TargetSpec::Gamma { shape, scale } => format!("gamma(r={shape};a={scale})"),
    }
}

pub fn write_csv<W: Write>(rows: &[BenchRow], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.to_csv())?;
    }
    Ok(())
}

/// Human-readable table for the terminal.
pub fn write_summary<W: Write>(rows: &[BenchRow], out: &mut W) -> std::io::Result<()> {
    writeln!(
        out,
        "{:<6} {:>8} {:>6} {:>12} {:>10} {:>10} {:>10} {:>9} {:>10}",
        "method", "N", "nodes", "time_s", "norm_time", "E[eta_T]", "stderr", "E[m_T]", "E[N/T]"
    )?;
    for r in rows {
        writeln!(
            out,
            "{:<6} {:>8} {:>6} {:>12.6} {:>10.4} {:>10.4} {:>10.5} {:>9.2} {:>10.4}",
            r.method.as_str(),
            r.n_samples,
            r.nodes,
            r.mean_time_s,
            r.normalized_time,
            r.mean_eta_final,
            r.stderr_eta,
            r.mean_m_final,
            r.mean_accept_fraction
        )?;
    }
    Ok(())
}

pub(crate) fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        b = b.num_threads(j);
    }
    b.build()
        .map_err(|e| BenchError::Config(format!("cannot start worker pool: {e}")))
}

/// The cells of a config, ordered by N, then method, then node count.
pub fn cells(config: &ExperimentConfig) -> Vec<CellKey> {
    let mut out = Vec::new();
    for &n_samples in &config.n_samples_list {
        for method in config.method.methods() {
            for &nodes in &config.node_counts {
                out.push(CellKey {
                    method,
                    n_samples,
                    nodes,
                });
            }
        }
    }
    out
}

/// Runs every cell and keeps the per-replica results.
pub fn run_cells(config: &ExperimentConfig) -> Result<Vec<CellResult>> {
    config.validate()?;
    let target = config.target.build()?;
    let pool = thread_pool(config.jobs)?;
    pool.install(|| {
        cells(config)
            .into_iter()
            .map(|key| {
                run_cell(
                    &target,
                    key,
                    config.initial_rule,
                    config.replicas,
                    config.seed,
                )
            })
            .collect()
    })
}

/// Benchmark grid: one row per cell, times normalized to the baseline
/// cell (the first cell unless configured).
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<BenchRow>> {
    let results = run_cells(config)?;
    let baseline_key = config.baseline.unwrap_or(results[0].key);
    let baseline = results
        .iter()
        .find(|c| c.key == baseline_key)
        .ok_or_else(|| {
            BenchError::Config(format!("baseline cell {baseline_key:?} is not in the grid"))
        })?
        .mean_time_s();
    Ok(results
        .iter()
        .map(|c| BenchRow::from_cell(c, &config.target, baseline))
        .collect())
}

/// CARS-only sweep over the node budget at a fixed N, normalized to the
/// smallest budget in `node_list`.
pub fn sweep_nodes(
    target: TargetSpec,
    n_samples: usize,
    node_list: &[usize],
    replicas: usize,
    seed: u64,
    rule: InitialRule,
    jobs: Option<usize>,
) -> Result<Vec<BenchRow>> {
    if node_list.is_empty() {
        return Err(BenchError::Config("node list must not be empty".into()));
    }
    let config = ExperimentConfig {
        target,
        method: crate::config::MethodSel::Cars,
        n_samples_list: vec![n_samples],
        node_counts: node_list.to_vec(),
        replicas,
        seed,
        initial_rule: rule,
        baseline: None,
        jobs,
    };
    let results = run_cells(&config)?;
    let smallest = results
        .iter()
        .min_by_key(|c| c.key.nodes)
        .expect("nonempty");
    let baseline = smallest.mean_time_s();
    Ok(results
        .iter()
        .map(|c| BenchRow::from_cell(c, &target, baseline))
        .collect())
}
