//! Flat dotted key–value experiment configuration.
//!
//! The document format is one `key = value` pair per line, `#` starts a
//! comment, and section membership is spelled in the key itself
//! (`sampler.n`, `target.a`, …). Unknown keys are errors, as are repeated
//! keys — sweeps override fields programmatically, never by re-parsing.

use pliable::sampler::{EprsConfig, Method, SamplerConfig};
use pliable::targets::{self, TargetDensity};
use std::fmt;
use std::path::PathBuf;

/// Target names resolvable from `target.name`, kept sorted for the error
/// message.
pub const TARGET_NAMES: &[&str] = &[
    "clutter",
    "cosine",
    "gaussian",
    "peakiness",
    "peakiness-norm",
    "sin2d",
    "uniform",
];

#[derive(Debug)]
pub enum ConfigError {
    /// Malformed document or a key/value outside the schema.
    Parse(String),
    /// Well-formed but out of the stated ranges.
    Validation(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse(m) => write!(f, "parse-error: {m}"),
            ConfigError::Validation(m) => write!(f, "validation-error: {m}"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Target parameters as written; defaults are resolved per target in
/// [`build_target`], because `target.a` means "the shape a" for peakiness
/// but "the box side" for uniform and cosine.
#[derive(Debug, Clone, Default)]
pub struct TargetParams {
    pub a: Option<f64>,
    pub box_side: Option<f64>,
    pub d: Option<usize>,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub w: Option<f64>,
    pub cvar: Option<f64>,
    pub pvar: Option<f64>,
    pub b: Option<f64>,
    pub gen_seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub method: Method,
    pub target_name: String,
    pub target: TargetParams,
    pub sampler: SamplerConfig,
    pub trials: usize,
    pub output_dir: PathBuf,
    pub emit_samples: bool,
}

fn parse_f64(key: &str, raw: &str) -> Result<f64, ConfigError> {
    raw.parse::<f64>()
        .map_err(|_| ConfigError::Parse(format!("key `{key}` expects a number, got `{raw}`")))
}

fn parse_count(key: &str, raw: &str) -> Result<usize, ConfigError> {
    let v = parse_f64(key, raw)?;
    if !(v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64) {
        return Err(ConfigError::Parse(format!(
            "key `{key}` expects a non-negative integer, got `{raw}`"
        )));
    }
    Ok(v as usize)
}

fn parse_bool(key: &str, raw: &str) -> Result<bool, ConfigError> {
    match raw {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(ConfigError::Parse(format!(
            "key `{key}` expects true or false, got `{raw}`"
        ))),
    }
}

/// Parses and validates a configuration document, filling defaults
/// (δ = 0.01, s = 2, trials = 10, seed = 0, output_dir = out).
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut method: Option<Method> = None;
    let mut target_name: Option<String> = None;
    let mut target = TargetParams::default();
    let mut n: Option<usize> = None;
    let mut delta = 0.01;
    let mut s = 2.0;
    let mut hc = 1.0;
    let mut seed = 0u64;
    let mut normalized = false;
    let mut free_oob = false;
    let mut eprs_mean: Option<f64> = None;
    let mut eprs_sd: Option<f64> = None;
    let mut eprs_m: Option<f64> = None;
    let mut eprs_he: Option<f64> = None;
    let mut trials = 10usize;
    let mut output_dir = PathBuf::from("out");
    let mut emit_samples = false;

    let mut seen: Vec<String> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, raw)) = line.split_once('=') else {
            return Err(ConfigError::Parse(format!(
                "line {}: expected `key = value`, got `{line}`",
                lineno + 1
            )));
        };
        let key = key.trim();
        let raw = raw.trim();
        if seen.iter().any(|k| k == key) {
            return Err(ConfigError::Parse(format!("key `{key}` set twice")));
        }
        seen.push(key.to_string());

        match key {
            "method" => {
                method = Some(match raw {
                    "srs" => Method::Srs,
                    "prs" => Method::Prs,
                    "eprs" => Method::Eprs,
                    _ => {
                        return Err(ConfigError::Parse(format!(
                            "method must be srs, prs, or eprs, got `{raw}`"
                        )))
                    }
                })
            }
            "target.name" => {
                if !TARGET_NAMES.contains(&raw) {
                    return Err(ConfigError::Parse(format!(
                        "unknown target `{raw}`; available targets: {}",
                        TARGET_NAMES.join(", ")
                    )));
                }
                target_name = Some(raw.to_string());
            }
            "target.a" => target.a = Some(parse_f64(key, raw)?),
            "target.box" => target.box_side = Some(parse_f64(key, raw)?),
            "target.d" => target.d = Some(parse_count(key, raw)?),
            "target.mean" => target.mean = Some(parse_f64(key, raw)?),
            "target.sd" => target.sd = Some(parse_f64(key, raw)?),
            "target.w" => target.w = Some(parse_f64(key, raw)?),
            "target.cvar" => target.cvar = Some(parse_f64(key, raw)?),
            "target.pvar" => target.pvar = Some(parse_f64(key, raw)?),
            "target.b" => target.b = Some(parse_f64(key, raw)?),
            "target.gen_seed" => target.gen_seed = Some(parse_count(key, raw)? as u64),
            "sampler.n" => n = Some(parse_count(key, raw)?),
            "sampler.delta" => delta = parse_f64(key, raw)?,
            "sampler.s" => s = parse_f64(key, raw)?,
            "sampler.hc" => hc = parse_f64(key, raw)?,
            "sampler.seed" => seed = parse_count(key, raw)? as u64,
            "sampler.normalized" => normalized = parse_bool(key, raw)?,
            "sampler.free_oob" => free_oob = parse_bool(key, raw)?,
            "eprs.mean" => eprs_mean = Some(parse_f64(key, raw)?),
            "eprs.sd" => eprs_sd = Some(parse_f64(key, raw)?),
            "eprs.m" => eprs_m = Some(parse_f64(key, raw)?),
            "eprs.he" => eprs_he = Some(parse_f64(key, raw)?),
            "trials" => trials = parse_count(key, raw)?,
            "output_dir" => output_dir = PathBuf::from(raw),
            "emit_samples" => emit_samples = parse_bool(key, raw)?,
            _ => {
                return Err(ConfigError::Parse(format!("unknown key `{key}`")));
            }
        }
    }

    let method = method.ok_or_else(|| ConfigError::Parse("missing key `method`".into()))?;
    let target_name =
        target_name.ok_or_else(|| ConfigError::Parse("missing key `target.name`".into()))?;
    let n = n.ok_or_else(|| ConfigError::Parse("missing key `sampler.n`".into()))?;

    if trials < 1 {
        return Err(ConfigError::Validation("trials must be at least 1".into()));
    }
    if let Some(d) = target.d {
        if !(1..=3).contains(&d) {
            return Err(ConfigError::Validation(format!(
                "target.d = {d} must lie in 1..=3"
            )));
        }
    }

    let eprs = if method == Method::Eprs
        || eprs_mean.is_some()
        || eprs_sd.is_some()
        || eprs_m.is_some()
        || eprs_he.is_some()
    {
        let dim = target.d.unwrap_or(1);
        Some(EprsConfig {
            g_mean: vec![eprs_mean.unwrap_or(0.0); dim],
            g_sd: eprs_sd.unwrap_or(2.0),
            envelope_m: eprs_m.unwrap_or(2.0),
            h_e: eprs_he.unwrap_or(0.3),
        })
    } else {
        None
    };

    let mut sampler = SamplerConfig::new(n, seed);
    sampler.delta = delta;
    sampler.smoothness_s = s;
    sampler.h_c = hc;
    sampler.normalized_target = normalized;
    sampler.free_oob = free_oob;
    sampler.eprs = eprs;
    sampler
        .validate()
        .map_err(|e| ConfigError::Validation(strip_prefix(&e.to_string())))?;

    Ok(ExperimentConfig {
        method,
        target_name,
        target,
        sampler,
        trials,
        output_dir,
        emit_samples,
    })
}

/// The library errors already carry a `kind:` prefix; the config layer
/// re-prefixes with its own, so drop the inner one.
fn strip_prefix(msg: &str) -> String {
    match msg.split_once(": ") {
        Some((_, rest)) => rest.to_string(),
        None => msg.to_string(),
    }
}

/// Instantiates the configured target. Parameter defaults live here, next
/// to the dispatch, so each target's canonical parameters stay in one place.
pub fn build_target(cfg: &ExperimentConfig) -> Result<TargetDensity, ConfigError> {
    let p = &cfg.target;
    let t = match cfg.target_name.as_str() {
        "uniform" => targets::uniform_target(p.d.unwrap_or(1), p.a.unwrap_or(1.0)),
        "cosine" => targets::cosine_target(p.a.unwrap_or(4.0)),
        "sin2d" => targets::sin2d_target(),
        "peakiness" => targets::peakiness_target(p.a.unwrap_or(2.0), p.box_side.unwrap_or(10.0)),
        "peakiness-norm" => {
            targets::peakiness_normalized_target(p.a.unwrap_or(2.0), p.box_side.unwrap_or(10.0))
        }
        "gaussian" => {
            let d = p.d.unwrap_or(1);
            targets::gaussian_target(vec![p.mean.unwrap_or(0.0); d], p.sd.unwrap_or(1.0))
        }
        "clutter" => {
            let d = p.d.unwrap_or(1);
            let data = targets::clutter_data_gen(d, p.gen_seed.unwrap_or(7));
            targets::clutter_target(
                &data,
                p.w.unwrap_or(0.5),
                p.cvar.unwrap_or(10.0),
                p.pvar.unwrap_or(100.0),
                p.b.unwrap_or(10.0),
            )
            .map_err(|e| ConfigError::Validation(strip_prefix(&e.to_string())))?
        }
        other => {
            return Err(ConfigError::Parse(format!(
                "unknown target `{other}`; available targets: {}",
                TARGET_NAMES.join(", ")
            )))
        }
    };
    Ok(t)
}

/// Sets the numeric field a sweep axis names. The key grammar is the same
/// as the config document's.
pub fn set_numeric_field(
    cfg: &mut ExperimentConfig,
    axis: &str,
    value: f64,
) -> Result<(), ConfigError> {
    let as_count = |v: f64| -> Result<usize, ConfigError> {
        if !(v >= 0.0 && v.fract() == 0.0) {
            return Err(ConfigError::Validation(format!(
                "axis `{axis}` needs integer values, got {v}"
            )));
        }
        Ok(v as usize)
    };
    match axis {
        "target.a" => cfg.target.a = Some(value),
        "target.box" => cfg.target.box_side = Some(value),
        "target.mean" => cfg.target.mean = Some(value),
        "target.sd" => cfg.target.sd = Some(value),
        "target.w" => cfg.target.w = Some(value),
        "target.cvar" => cfg.target.cvar = Some(value),
        "target.pvar" => cfg.target.pvar = Some(value),
        "target.b" => cfg.target.b = Some(value),
        "sampler.n" => cfg.sampler.budget_n = as_count(value)?,
        "sampler.delta" => cfg.sampler.delta = value,
        "sampler.s" => cfg.sampler.smoothness_s = value,
        "sampler.hc" => cfg.sampler.h_c = value,
        "eprs.mean" => {
            let e = require_eprs(cfg)?;
            let dim = e.g_mean.len();
            e.g_mean = vec![value; dim];
        }
        "eprs.sd" => require_eprs(cfg)?.g_sd = value,
        "eprs.m" => require_eprs(cfg)?.envelope_m = value,
        "eprs.he" => require_eprs(cfg)?.h_e = value,
        _ => {
            return Err(ConfigError::Parse(format!(
                "axis `{axis}` is not a numeric config field"
            )))
        }
    }
    // Deliberately no range re-validation: a sweep value that lands outside
    // the sampler's ranges surfaces as a per-run error row, not a dead sweep.
    Ok(())
}

fn require_eprs(cfg: &mut ExperimentConfig) -> Result<&mut EprsConfig, ConfigError> {
    cfg.sampler.eprs.as_mut().ok_or_else(|| {
        ConfigError::Validation("eprs.* axis needs an eprs configuration".into())
    })
}

/// The resolved configuration as the flat dotted map it was parsed from,
/// for embedding in JSON reports.
pub fn resolved_map(cfg: &ExperimentConfig, run_seed: u64) -> serde_json::Value {
    let mut m = serde_json::Map::new();
    let mut put = |k: &str, v: serde_json::Value| {
        m.insert(k.to_string(), v);
    };
    put("method", cfg.method.to_string().into());
    put("target.name", cfg.target_name.clone().into());
    let p = &cfg.target;
    if let Some(v) = p.a {
        put("target.a", v.into());
    }
    if let Some(v) = p.box_side {
        put("target.box", v.into());
    }
    if let Some(v) = p.d {
        put("target.d", v.into());
    }
    if let Some(v) = p.mean {
        put("target.mean", v.into());
    }
    if let Some(v) = p.sd {
        put("target.sd", v.into());
    }
    if let Some(v) = p.w {
        put("target.w", v.into());
    }
    if let Some(v) = p.cvar {
        put("target.cvar", v.into());
    }
    if let Some(v) = p.pvar {
        put("target.pvar", v.into());
    }
    if let Some(v) = p.b {
        put("target.b", v.into());
    }
    if let Some(v) = p.gen_seed {
        put("target.gen_seed", v.into());
    }
    put("sampler.n", cfg.sampler.budget_n.into());
    put("sampler.delta", cfg.sampler.delta.into());
    put("sampler.s", cfg.sampler.smoothness_s.into());
    put("sampler.hc", cfg.sampler.h_c.into());
    put("sampler.seed", run_seed.into());
    put("sampler.normalized", cfg.sampler.normalized_target.into());
    put("sampler.free_oob", cfg.sampler.free_oob.into());
    if let Some(e) = &cfg.sampler.eprs {
        put("eprs.mean", e.g_mean.first().copied().unwrap_or(0.0).into());
        put("eprs.sd", e.g_sd.into());
        put("eprs.m", e.envelope_m.into());
        put("eprs.he", e.h_e.into());
    }
    put("trials", cfg.trials.into());
    put(
        "output_dir",
        cfg.output_dir.display().to_string().into(),
    );
    put("emit_samples", cfg.emit_samples.into());
    serde_json::Value::Object(m)
}
