//! Result persistence: the sweep CSV, per-run JSON reports, and the raw
//! accepted-sample dump.

use pliable::sampler::RunReport;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::Path;

/// One CSV row per (trial, config). `error` is empty on success; failed
/// runs keep their identifying columns and zero out the measurements.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub method: String,
    pub target: String,
    pub target_params: String,
    pub n: usize,
    pub seed: u64,
    pub n_phase1: usize,
    pub accepted: usize,
    pub budget_used: usize,
    pub acceptance_rate: f64,
    pub rejection_constant: f64,
    pub envelope_violations: usize,
    pub oob_draws: usize,
    pub wall_ms: u64,
    pub error: String,
}

pub const CSV_HEADER: [&str; 14] = [
    "method",
    "target",
    "target_params",
    "n",
    "seed",
    "N_phase1",
    "accepted",
    "budget_used",
    "acceptance_rate",
    "rejection_constant",
    "envelope_violations",
    "oob_draws",
    "wall_ms",
    "error",
];

/// Magic prefix of the sample dump format (8 bytes), followed by a
/// little-endian u32 dimension, then the accepted points as little-endian
/// f64 coordinates, row-major.
pub const SAMPLE_MAGIC: &[u8; 8] = b"PLSAMP01";

impl ResultRow {
    pub fn from_report(target: &str, params: &str, n: usize, seed: u64, rep: &RunReport) -> Self {
        ResultRow {
            method: rep.method.to_string(),
            target: target.to_string(),
            target_params: params.to_string(),
            n,
            seed,
            n_phase1: rep.phase1_n,
            accepted: rep.accepted,
            budget_used: rep.budget_used,
            acceptance_rate: rep.acceptance_rate,
            rejection_constant: rep.rejection_constant,
            envelope_violations: rep.envelope_violations,
            oob_draws: rep.oob_draws,
            wall_ms: rep.wall_millis,
            error: String::new(),
        }
    }

    pub fn from_error(
        method: &str,
        target: &str,
        params: &str,
        n: usize,
        seed: u64,
        error: &str,
    ) -> Self {
        ResultRow {
            method: method.to_string(),
            target: target.to_string(),
            target_params: params.to_string(),
            n,
            seed,
            n_phase1: 0,
            accepted: 0,
            budget_used: 0,
            acceptance_rate: 0.0,
            rejection_constant: 0.0,
            envelope_violations: 0,
            oob_draws: 0,
            wall_ms: 0,
            error: error.to_string(),
        }
    }

    fn record(&self) -> [String; 14] {
        [
            self.method.clone(),
            self.target.clone(),
            self.target_params.clone(),
            self.n.to_string(),
            self.seed.to_string(),
            self.n_phase1.to_string(),
            self.accepted.to_string(),
            self.budget_used.to_string(),
            self.acceptance_rate.to_string(),
            self.rejection_constant.to_string(),
            self.envelope_violations.to_string(),
            self.oob_draws.to_string(),
            self.wall_ms.to_string(),
            self.error.clone(),
        ]
    }
}

/// Appends rows to `path`, writing the header first when the file is new
/// or empty.
pub fn append_rows(path: &Path, rows: &[ResultRow]) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let need_header = file.metadata()?.len() == 0;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    if need_header {
        w.write_record(CSV_HEADER)?;
    }
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a results CSV back as rows; the inverse of [`append_rows`].
pub fn read_rows(path: &Path) -> std::io::Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or("").to_string();
        let num = |i: usize| field(i).parse::<f64>().unwrap_or(f64::NAN);
        rows.push(ResultRow {
            method: field(0),
            target: field(1),
            target_params: field(2),
            n: num(3) as usize,
            seed: num(4) as u64,
            n_phase1: num(5) as usize,
            accepted: num(6) as usize,
            budget_used: num(7) as usize,
            acceptance_rate: num(8),
            rejection_constant: num(9),
            envelope_violations: num(10) as usize,
            oob_draws: num(11) as usize,
            wall_ms: num(12) as u64,
            error: field(13),
        });
    }
    Ok(rows)
}

/// One JSON object per run: the RunReport fields plus the resolved config.
pub fn write_json_report(
    path: &Path,
    row: &ResultRow,
    rep: Option<&RunReport>,
    config: serde_json::Value,
    sample_file: Option<&Path>,
) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut obj = serde_json::json!({
        "method": row.method,
        "target": row.target,
        "target_params": row.target_params,
        "n": row.n,
        "seed": row.seed,
        "config": config,
    });
    let map = obj.as_object_mut().expect("object");
    match rep {
        Some(rep) => {
            map.insert("accepted".into(), rep.accepted.into());
            map.insert("budget_used".into(), rep.budget_used.into());
            map.insert("phase1_n".into(), rep.phase1_n.into());
            map.insert("acceptance_rate".into(), rep.acceptance_rate.into());
            map.insert("rejection_constant".into(), rep.rejection_constant.into());
            map.insert("envelope_violations".into(), rep.envelope_violations.into());
            map.insert("oob_draws".into(), rep.oob_draws.into());
            map.insert("proposal_draws".into(), rep.proposal_draws.into());
            map.insert("wall_millis".into(), rep.wall_millis.into());
            map.insert("strong_mass_warning".into(), rep.strong_mass_warning.into());
            if let Some(nhat) = rep.eprs_nhat {
                map.insert("eprs_nhat".into(), nhat.into());
            }
            map.insert(
                "sample_file".into(),
                match sample_file {
                    Some(p) => p.display().to_string().into(),
                    None => serde_json::Value::Null,
                },
            );
        }
        None => {
            map.insert("error".into(), row.error.clone().into());
        }
    }
    let mut out = serde_json::to_vec_pretty(&obj)?;
    out.push(b'\n');
    fs::write(path, out)
}

/// Accepted points in physical coordinates as magic + u32 dim + LE f64s.
pub fn dump_samples(path: &Path, dim: usize, offset: f64, samples: &[f64]) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut f = File::create(path)?;
    f.write_all(SAMPLE_MAGIC)?;
    f.write_all(&(dim as u32).to_le_bytes())?;
    let mut buf = Vec::with_capacity(samples.len() * 8);
    for &v in samples {
        buf.extend_from_slice(&(v + offset).to_le_bytes());
    }
    f.write_all(&buf)
}

/// Mean and standard deviation of the acceptance rate over successful rows.
pub fn acceptance_summary(rows: &[ResultRow]) -> Option<(f64, f64, usize)> {
    let accs: Vec<f64> = rows
        .iter()
        .filter(|r| r.error.is_empty())
        .map(|r| r.acceptance_rate)
        .collect();
    if accs.is_empty() {
        return None;
    }
    let k = accs.len();
    let mean = accs.iter().sum::<f64>() / k as f64;
    let var = accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / k as f64;
    Some((mean, var.sqrt(), k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn scratch(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("pliable-report-{}-{name}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn sample_row() -> ResultRow {
        ResultRow {
            method: "prs".into(),
            target: "peakiness".into(),
            target_params: "a=2,A=10".into(),
            n: 10_000,
            seed: 3,
            n_phase1: 720,
            accepted: 4242,
            budget_used: 10_000,
            acceptance_rate: 0.4571,
            rejection_constant: 1.23,
            envelope_violations: 0,
            oob_draws: 17,
            wall_ms: 12,
            error: String::new(),
        }
    }

    #[test]
    fn csv_round_trips_and_keeps_header_order() {
        let dir = scratch("roundtrip");
        let path = dir.join("results.csv");
        let _ = fs::remove_file(&path);
        let rows = vec![sample_row(), {
            let mut r = sample_row();
            // A params string with a comma exercises the quoting path.
            r.target_params = "d=1,w=0.5".into();
            r.error = "invalid-parameter: budget n = 0 must be at least 4".into();
            r
        }];
        append_rows(&path, &rows).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(&CSV_HEADER.join(",")), "{text}");
        assert!(!text.contains('\r'));
        let back = read_rows(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].accepted, 4242);
        assert_eq!(back[0].acceptance_rate, 0.4571);
        assert_eq!(back[1].target_params, "d=1,w=0.5");
        assert!(back[1].error.contains("budget"));
    }

    #[test]
    fn appending_twice_writes_one_header() {
        let dir = scratch("append");
        let path = dir.join("results.csv");
        let _ = fs::remove_file(&path);
        append_rows(&path, &[sample_row()]).unwrap();
        append_rows(&path, &[sample_row()]).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.matches("method,").count(), 1);
        assert_eq!(read_rows(&path).unwrap().len(), 2);
    }

    #[test]
    fn sample_dump_layout() {
        let dir = scratch("dump");
        let path = dir.join("x.samples");
        dump_samples(&path, 2, -1.0, &[0.25, 0.5, 0.75, 1.0]).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[..8], SAMPLE_MAGIC);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        let first = f64::from_le_bytes(bytes[12..20].try_into().unwrap());
        assert_eq!(first, -0.75);
        assert_eq!(bytes.len(), 12 + 4 * 8);
    }

    #[test]
    fn summary_skips_error_rows() {
        let mut bad = sample_row();
        bad.error = "boom".into();
        bad.acceptance_rate = 0.0;
        let (mean, sd, k) = acceptance_summary(&[sample_row(), bad]).unwrap();
        assert_eq!(k, 1);
        assert_eq!(mean, 0.4571);
        assert_eq!(sd, 0.0);
    }
}
