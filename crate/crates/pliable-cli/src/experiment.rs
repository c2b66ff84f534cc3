//! Experiment orchestration: seeded trial loops and parameter sweeps.

use crate::config::{self, ExperimentConfig};
use crate::report::{self, ResultRow};
use pliable::sampler::{eprs_run, prs_run, srs_run, Method, RunReport};
use pliable::targets::TargetDensity;
use std::path::PathBuf;

/// File stem identifying one run inside the output directory.
fn run_stem(cfg: &ExperimentConfig, params: &str, seed: u64) -> String {
    let mut stem = format!(
        "{}-{}-{}-n{}-seed{}",
        cfg.method, cfg.target_name, params, cfg.sampler.budget_n, seed
    );
    stem = stem
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect();
    stem
}

fn run_once(target: &TargetDensity, cfg: &ExperimentConfig, seed: u64) -> pliable::Result<RunReport> {
    let mut scfg = cfg.sampler.clone();
    scfg.seed = seed;
    match cfg.method {
        Method::Srs => {
            // bound_c is the sup of f; the envelope parameter is the flat
            // envelope's integral over the box.
            let vol = target.box_side().map_or(1.0, |a| a.powi(target.dim() as i32));
            srs_run(target, target.bound_c() * vol, &scfg)
        }
        Method::Prs => prs_run(target, &scfg),
        Method::Eprs => eprs_run(target, &scfg),
    }
}

/// Runs `trials` seeded trials (seeds seed, seed+1, …), appends one CSV row
/// each to `<output_dir>/results.csv`, and writes a JSON report per run.
/// Run-level failures become rows with the error column set; they do not
/// abort the remaining trials.
pub fn run_experiment(cfg: &ExperimentConfig) -> std::io::Result<Vec<ResultRow>> {
    let csv_path = cfg.output_dir.join("results.csv");
    let built = config::build_target(cfg);
    let mut rows = Vec::with_capacity(cfg.trials);

    for t in 0..cfg.trials {
        let seed = cfg.sampler.seed + t as u64;
        let (row, rep, params) = match &built {
            Ok(target) => match run_once(target, cfg, seed) {
                Ok(rep) => (
                    ResultRow::from_report(
                        &cfg.target_name,
                        target.params(),
                        cfg.sampler.budget_n,
                        seed,
                        &rep,
                    ),
                    Some(rep),
                    target.params().to_string(),
                ),
                Err(e) => (
                    ResultRow::from_error(
                        &cfg.method.to_string(),
                        &cfg.target_name,
                        target.params(),
                        cfg.sampler.budget_n,
                        seed,
                        &e.to_string(),
                    ),
                    None,
                    target.params().to_string(),
                ),
            },
            Err(e) => (
                ResultRow::from_error(
                    &cfg.method.to_string(),
                    &cfg.target_name,
                    "",
                    cfg.sampler.budget_n,
                    seed,
                    &e.to_string(),
                ),
                None,
                String::new(),
            ),
        };

        let stem = run_stem(cfg, &params, seed);
        let sample_path: Option<PathBuf> = match (&rep, cfg.emit_samples) {
            (Some(r), true) if !r.samples.is_empty() => {
                let p = cfg.output_dir.join(format!("{stem}.samples"));
                if let Ok(target) = &built {
                    report::dump_samples(&p, target.dim(), target.offset(), &r.samples)?;
                }
                Some(p)
            }
            _ => None,
        };
        report::write_json_report(
            &cfg.output_dir.join(format!("{stem}.json")),
            &row,
            rep.as_ref(),
            config::resolved_map(cfg, seed),
            sample_path.as_deref(),
        )?;
        report::append_rows(&csv_path, std::slice::from_ref(&row))?;
        rows.push(row);
    }
    Ok(rows)
}

/// Cross-product sweep: for each value, sets the axis field on a copy of
/// the base config and runs the full trial loop. All rows land in the base
/// config's CSV. An empty value list is a no-op with a warning.
pub fn bench_sweep(
    base: &ExperimentConfig,
    axis: &str,
    values: &[f64],
) -> Result<Vec<ResultRow>, Box<dyn std::error::Error>> {
    if values.is_empty() {
        eprintln!("warning: empty sweep value list; nothing to do");
        return Ok(Vec::new());
    }
    let mut rows = Vec::new();
    for &v in values {
        let mut cfg = base.clone();
        config::set_numeric_field(&mut cfg, axis, v)?;
        rows.extend(run_experiment(&cfg)?);
    }
    Ok(rows)
}
