//! `pliable` — benchmark CLI for pliable rejection sampling.

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use pliable_cli::{config, experiment, report, tune, validate};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "pliable",
    about = "Acceptance-rate benchmarks for pliable rejection sampling",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Experiment configuration file (flat dotted key = value).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override the config's base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Override the config's trial count.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Out-of-domain proposal draws cost no budget.
    #[arg(long, global = true)]
    free_oob: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the configured experiment: `trials` seeded runs, CSV + JSON out.
    Run,
    /// Sweep one numeric config field across a value list.
    Bench {
        /// Config key to sweep, e.g. target.a or sampler.n.
        #[arg(long)]
        axis: String,
        /// Comma-separated numeric values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<f64>,
    },
    /// Grid-search H_C by envelope validity on a held-out grid.
    TuneHc {
        /// Comma-separated candidate ladder; defaults to a geometric ladder.
        #[arg(long, value_delimiter = ',')]
        candidates: Option<Vec<f64>>,
    },
    /// Run the invariant suite and print a machine-readable summary.
    Validate,
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let line = e.to_string();
            let line = line.lines().find(|l| !l.trim().is_empty()).unwrap_or("bad arguments");
            eprintln!("usage-error: {}", line.trim_start_matches("error: "));
            return 2;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("{msg}");
            1
        }
    }
}

fn load_config(cli: &Cli) -> Result<config::ExperimentConfig, String> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| "usage-error: --config <path> is required".to_string())?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("config-error: {}: {e}", path.display()))?;
    let mut cfg = config::parse_config(&text).map_err(|e| e.to_string())?;
    if let Some(seed) = cli.seed {
        cfg.sampler.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(trials) = cli.trials {
        if trials < 1 {
            return Err("validation-error: trials must be at least 1".into());
        }
        cfg.trials = trials;
    }
    if cli.free_oob {
        cfg.sampler.free_oob = true;
    }
    Ok(cfg)
}

fn print_block_summary(rows: &[report::ResultRow], label: &str) {
    match report::acceptance_summary(rows) {
        Some((mean, sd, k)) => {
            println!("{label}: mean acceptance {mean:.4} ± {sd:.4} ({k} trials)");
        }
        None => println!("{label}: no successful trials"),
    }
    for r in rows.iter().filter(|r| !r.error.is_empty()) {
        eprintln!("warning: seed {} failed: {}", r.seed, r.error);
    }
}

fn dispatch(cli: Cli) -> Result<i32, String> {
    match &cli.cmd {
        Cmd::Run => {
            let cfg = load_config(&cli)?;
            let rows = experiment::run_experiment(&cfg).map_err(|e| format!("io-error: {e}"))?;
            let label = format!("{} {} n={}", cfg.method, cfg.target_name, cfg.sampler.budget_n);
            print_block_summary(&rows, &label);
            println!("rows appended to {}", cfg.output_dir.join("results.csv").display());
            Ok(0)
        }
        Cmd::Bench { axis, values } => {
            let cfg = load_config(&cli)?;
            let rows = experiment::bench_sweep(&cfg, axis, values).map_err(|e| e.to_string())?;
            for (i, chunk) in rows.chunks(cfg.trials.max(1)).enumerate() {
                let v = values.get(i).copied().unwrap_or(f64::NAN);
                print_block_summary(chunk, &format!("{axis} = {v}"));
            }
            if !rows.is_empty() {
                println!("rows appended to {}", cfg.output_dir.join("results.csv").display());
            }
            Ok(0)
        }
        Cmd::TuneHc { candidates } => {
            let cfg = load_config(&cli)?;
            let target = config::build_target(&cfg).map_err(|e| e.to_string())?;
            let ladder = match candidates {
                Some(c) => c.clone(),
                None if cfg.target_name == "sin2d" => tune::fine_ladder(),
                None => tune::default_ladder(),
            };
            let rep = tune::tune_hc(
                &target,
                cfg.sampler.budget_n,
                &ladder,
                cfg.sampler.seed,
                cfg.sampler.delta,
                cfg.sampler.smoothness_s,
            )
            .map_err(|e| e.to_string())?;
            if rep.fell_back {
                eprintln!(
                    "warning: no candidate's slab covered the held-out gap {:.3e}; falling back to the largest usable candidate",
                    rep.max_gap
                );
            }
            println!("{}", rep.h_c);
            Ok(0)
        }
        Cmd::Validate => {
            let rep = validate::run_suite();
            for c in &rep.checks {
                println!(
                    "check {}: {} — {}",
                    c.name,
                    if c.pass { "PASS" } else { "FAIL" },
                    c.detail
                );
            }
            println!(
                "validate: {}/{} checks passed in {:.1}s",
                rep.passed(),
                rep.checks.len(),
                rep.wall_secs
            );
            Ok(if rep.all_pass() { 0 } else { 1 })
        }
    }
}
