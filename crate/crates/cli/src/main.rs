use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use chrono::Utc;
use clap::Parser;
use levyx_cli::manifest::timestamp;
use levyx_cli::{
    parse_config, run, Command, OutFormat, RunManifest, EXIT_ERROR, EXIT_METRIC_FAILURE,
};

#[derive(Debug, Parser)]
#[command(
    name = "levyx",
    version,
    about = "Exclusion process with long jumps: simulation, PDE solvers and experiments"
)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML or JSON run configuration.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR", default_value = "levyx-out")]
    out: PathBuf,
    /// Master seed, overriding `seed` in the config.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Replica count, overriding `replicas` in the config.
    #[arg(long, value_name = "K")]
    replicas: Option<usize>,
    /// Worker threads; results do not depend on this.
    #[arg(long, value_name = "K", env = "LEVYX_THREADS")]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    format: OutFormat,
}

fn execute(cli: &Cli) -> anyhow::Result<bool> {
    let started = Utc::now();
    let clock = Instant::now();
    let mut cfg = parse_config(&cli.config)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(r) = cli.replicas {
        cfg.replicas = r;
    }
    cfg.validate()?;
    if let Some(k) = cli.threads {
        if k == 0 {
            anyhow::bail!("--threads must be >= 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .context("configuring the thread pool")?;
    }

    let outcome = run(cli.command, &cfg, cli.format)?;
    let files = outcome
        .outputs
        .write_all(&cli.out)
        .with_context(|| format!("writing outputs to {}", cli.out.display()))?;
    let passed = outcome.failures.is_empty();
    let master_seed = cfg.seed;
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: cli.command.name().to_string(),
        config: cfg,
        format: cli.format.name().to_string(),
        threads: rayon::current_num_threads(),
        master_seed,
        replica_seeds: outcome.replica_seeds,
        started: timestamp(started),
        finished: timestamp(Utc::now()),
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
        status: if passed { "ok" } else { "metric-failure" }.to_string(),
        outputs: files,
    };
    manifest
        .write(&cli.out)
        .with_context(|| format!("writing manifest to {}", cli.out.display()))?;
    for f in &outcome.failures {
        eprintln!("FAIL {f}");
    }
    eprintln!(
        "{}: {} files written to {}",
        manifest.command,
        manifest.outputs.len() + 1,
        cli.out.display()
    );
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_METRIC_FAILURE),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
