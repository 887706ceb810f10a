use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ars_bench::config::{apply_settings, parse_list, read_key_values, ExperimentConfig, MethodSel};
use ars_bench::experiment::{replica_rng, write_csv, write_summary};
use ars_bench::trace::write_trace;
use ars_bench::validate::run_validation;
use ars_bench::{run_experiment, sweep_nodes, trace_run, BenchError, Result};
use ars_core::{initial_support, Method, Sampler, SupportSet};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "ars-bench",
    version,
    about = "Benchmark harness for adaptive rejection samplers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw samples from one run and write one value per line.
    Sample(Common),
    /// Run the replicated (method, N, nodes) grid and emit one CSV row per cell.
    Bench(Common),
    /// CARS-only sweep over the node budget at a fixed N.
    Sweep(Common),
    /// Dump envelope snapshots from a single run.
    Trace(Common),
    /// Run the invariant and goodness-of-fit self-check.
    Validate(Common),
}

#[derive(Args, Default)]
struct Common {
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// gaussian[:sigma2] or gamma[:shape,scale]
    #[arg(long)]
    target: Option<String>,
    /// ars, cars or both
    #[arg(long)]
    method: Option<String>,
    /// Comma-separated sample counts.
    #[arg(long)]
    n: Option<String>,
    /// Comma-separated initial node counts (ARS) or node budgets (CARS).
    #[arg(long)]
    nodes: Option<String>,
    #[arg(long)]
    replicas: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Normalizing cell as method:N:nodes.
    #[arg(long)]
    baseline_cell: Option<String>,
    /// Comma-separated iterations at which `trace` takes snapshots.
    #[arg(long)]
    trace_at: Option<String>,
    #[arg(long)]
    jobs: Option<String>,
    /// uniform:lo,hi or fixed:lo,hi
    #[arg(long)]
    init: Option<String>,
    /// Explicit comma-separated initial nodes for `sample` and `trace`.
    #[arg(long)]
    initial_nodes: Option<String>,
}

impl Common {
    /// Config-file settings overlaid with the flags that were given.
    fn settings(&self) -> Result<BTreeMap<String, String>> {
        let mut map = match &self.config {
            Some(path) => read_key_values(path)?,
            None => BTreeMap::new(),
        };
        let flags = [
            ("target", &self.target),
            ("method", &self.method),
            ("n", &self.n),
            ("nodes", &self.nodes),
            ("replicas", &self.replicas),
            ("seed", &self.seed),
            ("baseline-cell", &self.baseline_cell),
            ("trace-at", &self.trace_at),
            ("jobs", &self.jobs),
            ("init", &self.init),
            ("initial-nodes", &self.initial_nodes),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                map.insert(k.to_string(), v.clone());
            }
        }
        if let Some(out) = &self.out {
            map.insert("out".into(), out.display().to_string());
        }
        Ok(map)
    }
}

struct Resolved {
    config: ExperimentConfig,
    settings: BTreeMap<String, String>,
}

impl Resolved {
    fn new(common: &Common) -> Result<Self> {
        let settings = common.settings()?;
        let mut config = ExperimentConfig::default();
        apply_settings(&mut config, &settings)?;
        config.validate()?;
        Ok(Resolved { config, settings })
    }

    fn out(&self) -> Option<&Path> {
        self.settings.get("out").map(Path::new)
    }

    /// The single method for one-run subcommands; CARS unless one is named.
    fn single_method(&self) -> Result<Method> {
        if !self.settings.contains_key("method") {
            return Ok(Method::Cars);
        }
        match self.config.method {
            MethodSel::Ars => Ok(Method::Ars),
            MethodSel::Cars => Ok(Method::Cars),
            MethodSel::Both => Err(BenchError::Config(
                "this command needs a single method".into(),
            )),
        }
    }

    fn first_n(&self) -> usize {
        self.config.n_samples_list[0]
    }

    fn initial_set(&self, rng: &mut rand_chacha::ChaCha8Rng) -> Result<SupportSet> {
        let target = self.config.target.build()?;
        match self.settings.get("initial-nodes") {
            Some(list) => Ok(SupportSet::new(
                parse_list(list, "initial-nodes")?,
                &target,
            )?),
            None => Ok(initial_support(
                &target,
                self.config.initial_rule,
                self.config.node_counts[0],
                rng,
            )?),
        }
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_sample(r: &Resolved) -> Result<()> {
    let target = r.config.target.build()?;
    let mut rng = replica_rng(r.config.seed);
    let set = r.initial_set(&mut rng)?;
    let mut sampler = Sampler::new(r.single_method()?, &target, set, rng)?;
    let (samples, stats) = sampler.run(r.first_n())?;
    let mut out = open_out(r.out())?;
    for x in &samples {
        writeln!(out, "{x}")?;
    }
    out.flush()?;
    eprintln!(
        "{}: {} accepted of {} proposals, {} nodes, final acceptance rate {:.6}",
        stats.method,
        stats.accepted,
        stats.iterations,
        stats.final_nodes,
        stats.final_acceptance_rate
    );
    Ok(())
}

fn emit_rows(r: &Resolved, rows: &[ars_bench::BenchRow]) -> Result<()> {
    match r.out() {
        Some(path) => {
            let mut f = BufWriter::new(File::create(path)?);
            write_csv(rows, &mut f)?;
            f.flush()?;
            write_summary(rows, &mut io::stdout().lock())?;
        }
        None => write_csv(rows, &mut io::stdout().lock())?,
    }
    Ok(())
}

fn cmd_bench(r: &Resolved) -> Result<()> {
    let rows = run_experiment(&r.config)?;
    emit_rows(r, &rows)
}

fn cmd_sweep(r: &Resolved) -> Result<()> {
    let c = &r.config;
    let rows = sweep_nodes(
        c.target,
        r.first_n(),
        &c.node_counts,
        c.replicas,
        c.seed,
        c.initial_rule,
        c.jobs,
    )?;
    emit_rows(r, &rows)
}

fn cmd_trace(r: &Resolved) -> Result<()> {
    let target = r.config.target.build()?;
    let mut rng = replica_rng(r.config.seed);
    let set = r.initial_set(&mut rng)?;
    let at: Vec<u64> = match r.settings.get("trace-at") {
        Some(list) => parse_list(list, "trace-at")?,
        None => vec![0],
    };
    let snaps = trace_run(
        &target,
        r.single_method()?,
        set.nodes().to_vec(),
        r.first_n(),
        r.config.seed,
        &at,
    )?;
    let mut out = open_out(r.out())?;
    write_trace(&snaps, &mut out)?;
    out.flush()?;
    Ok(())
}

fn cmd_validate(r: &Resolved) -> Result<()> {
    let results = run_validation(r.config.seed)?;
    let mut failed = 0;
    for c in &results {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        return Err(BenchError::Validation(format!(
            "{failed} of {} checks failed",
            results.len()
        )));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let (common, f): (&Common, fn(&Resolved) -> Result<()>) = match &cli.command {
        Command::Sample(c) => (c, cmd_sample),
        Command::Bench(c) => (c, cmd_bench),
        Command::Sweep(c) => (c, cmd_sweep),
        Command::Trace(c) => (c, cmd_trace),
        Command::Validate(c) => (c, cmd_validate),
    };
    f(&Resolved::new(common)?)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
