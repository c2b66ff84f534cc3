//! Envelope-validity-first grid search for H_C.
//!
//! The paper fixes H_C "through a cross-validation" without saying which
//! one. We target the event that makes the sampler exact: the slab must
//! cover the estimate's worst under-shoot against held-out exact values of
//! f. The search builds the estimate once on a tuning seed — the candidate
//! only scales the slab, never the estimate — measures the largest gap
//! f − f̂ on a 256-per-axis grid, and takes the smallest candidate whose
//! slab covers that gap. If none does, it falls back to the largest with a
//! warning, which is also the escape hatch for mass-starved targets whose
//! candidate list was capped below validity (see the clutter benchmark).

use pliable::kernel::{bandwidth, KernelEstimate};
use pliable::proposal::{empirical_mass, radius_r};
use pliable::rng::{phase, phase_rng};
use pliable::sampler::phase_split_prs;
use pliable::targets::TargetDensity;
use pliable::{Error, Result};
use rand::Rng;

/// Grid resolution of the held-out comparison, per axis.
pub const TUNE_GRID: usize = 256;

#[derive(Debug, Clone)]
pub struct TuneReport {
    /// Chosen H_C.
    pub h_c: f64,
    /// No candidate's slab covered the gap; `h_c` is the largest candidate.
    pub fell_back: bool,
    /// Empirical mass of the tuning build, for mass-feasibility caps.
    pub m_hat: f64,
    /// Standard error of `m_hat` under the design draw.
    pub m_se: f64,
    /// Largest f − f̂ over the grid.
    pub max_gap: f64,
    /// r_N at H_C = 1; the slab scales linearly in the candidate.
    pub r_unit: f64,
    /// Phase-1 design size the tuning build used.
    pub n_phase1: usize,
}

/// Geometric candidate ladder covering [lo, hi] with the given ratio
/// between consecutive points.
pub fn ladder(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && step > 1.0);
    let mut out = vec![lo];
    loop {
        let next = out.last().unwrap() * step;
        if next > hi * (1.0 + 1e-12) {
            break;
        }
        out.push(next);
    }
    out
}

/// Default candidates: 31 points spanning [1e−3, 100]. The step 10^{1/6}
/// doubles as the repass margin — fresh builds at the chosen H_C stay
/// dominated because they vary by less than one rung.
pub fn default_ladder() -> Vec<f64> {
    ladder(1e-3, 100.0, 10f64.powf(1.0 / 6.0))
}

/// Finer ladder on [1e−3, 10] for the sin2d acceptance band, where one
/// coarse rung moves the acceptance by more than the band is wide.
pub fn fine_ladder() -> Vec<f64> {
    ladder(1e-3, 10.0, 10f64.powf(1.0 / 12.0))
}

/// Chooses H_C from `candidates` for a PRS run with budget `n` at the given
/// δ and s, building the tuning estimate with `seed`'s design stream.
pub fn tune_hc(
    target: &TargetDensity,
    n: usize,
    candidates: &[f64],
    seed: u64,
    delta: f64,
    s: f64,
) -> Result<TuneReport> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter(
            "tune-hc needs at least one candidate".into(),
        ));
    }
    if candidates.iter().any(|&c| c.is_nan() || c < 0.0) {
        return Err(Error::InvalidParameter(
            "tune-hc candidates must be non-negative".into(),
        ));
    }
    let a = target.box_side().ok_or_else(|| {
        Error::InvalidParameter("tune-hc needs a box-domain target".into())
    })?;
    let d = target.dim();
    if n < 4 {
        return Err(Error::InvalidParameter(format!(
            "budget n = {n} must be at least 4"
        )));
    }

    let big_n = phase_split_prs(n, s, d);
    let h = bandwidth(big_n, a, delta, s, d)?;

    // Same design stream a real run with this seed would use.
    let mut rng = phase_rng(seed, phase::INITIAL_DESIGN);
    let mut points = vec![0.0f64; big_n * d];
    let mut values = vec![0.0f64; big_n];
    let mut y = vec![0.0; d];
    for i in 0..big_n {
        for c in y.iter_mut() {
            *c = rng.gen::<f64>() * a;
        }
        points[i * d..(i + 1) * d].copy_from_slice(&y);
        values[i] = target.eval_unmetered(&y);
    }
    let est = KernelEstimate::regression(&points, d, &values, h, a)?;
    let m_hat = empirical_mass(&values, a, d);
    let vol = a.powi(d as i32);
    let mean = m_hat / vol;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
        / (big_n - 1).max(1) as f64;
    let m_se = vol * (var / big_n as f64).sqrt();
    let r_unit = radius_r(big_n, a, d, s, delta, 1.0)?;

    // Held-out grid gap; the estimate is candidate-independent, so one scan
    // covers the whole ladder.
    let mut max_gap = f64::NEG_INFINITY;
    let m = TUNE_GRID - 1;
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0f64; d];
    'outer: loop {
        for c in 0..d {
            x[c] = a * idx[c] as f64 / m as f64;
        }
        let gap = target.eval_unmetered(&x) - est.eval(&x);
        if gap > max_gap {
            max_gap = gap;
        }
        for c in 0..d {
            idx[c] += 1;
            if idx[c] < TUNE_GRID {
                continue 'outer;
            }
            idx[c] = 0;
        }
        break;
    }

    let mut sorted = candidates.to_vec();
    // A candidate whose slab closes the sampler's mass gate (5·r_N ≥ m̂) is a
    // certain abort on a raw target, whatever the scan says; when the ladder
    // reaches past the gate it is cut there and the cap becomes its last rung.
    if !target.normalized() {
        let cap = mass_feasibility_cap(m_hat, m_se, r_unit);
        if sorted.iter().any(|&c| c > cap) {
            sorted.retain(|&c| c <= cap);
            sorted.push(cap);
        }
    }
    sorted.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let slab_density = |c: f64| c * r_unit / vol;
    let chosen = sorted.iter().copied().find(|&c| max_gap <= slab_density(c));
    let (h_c, fell_back) = match chosen {
        Some(c) => (c, false),
        None => (*sorted.last().unwrap(), true),
    };
    Ok(TuneReport {
        h_c,
        fell_back,
        m_hat,
        m_se,
        max_gap,
        r_unit,
        n_phase1: big_n,
    })
}

/// Standard errors of slack the cap leaves before the gate, so a run whose
/// own m̂ lands below the tuning build's still clears it.
pub const MASS_SLACK_SE: f64 = 5.0;

/// Largest H_C whose slab keeps the operational mass gate open
/// (5·r_N < m̂) for a fresh run: the gate compares against that run's own
/// mass estimate, which scatters around the tuning build's by `m_se`.
/// Candidates above the cap are near-certain aborts on raw targets.
pub fn mass_feasibility_cap(m_hat: f64, m_se: f64, r_unit: f64) -> f64 {
    ((m_hat - MASS_SLACK_SE * m_se) / (5.0 * r_unit)).max(0.0)
}
