//! Quadrature, envelope-validity scanning, goodness-of-fit tests, and the
//! log-log rate fit. Everything here is deterministic and unmetered: the
//! budget belongs to sampler runs, not to diagnostics.

use crate::error::{Error, Result};
use crate::proposal::PliableProposal;
use crate::targets::TargetDensity;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// A cubic evaluation grid: `points_per_axis` nodes (inclusive of both edges)
/// on [lo,hi] along each of `dim` axes.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub dim: usize,
    pub points_per_axis: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, dim: usize, points_per_axis: usize) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::InvalidParameter(format!(
                "grid needs hi > lo, got [{lo}, {hi}]"
            )));
        }
        if dim == 0 || dim > 3 {
            return Err(Error::InvalidParameter(format!(
                "grid dimension {dim} outside 1..=3"
            )));
        }
        if points_per_axis < 2 {
            return Err(Error::InvalidParameter(
                "grid needs at least 2 points per axis".into(),
            ));
        }
        Ok(GridSpec { lo, hi, dim, points_per_axis })
    }

    /// Grid over a target's box [0,A]^d.
    pub fn over_box(target: &TargetDensity, points_per_axis: usize) -> Result<Self> {
        let a = target.box_side().ok_or_else(|| {
            Error::InvalidParameter("grid over box needs a box-domain target".into())
        })?;
        GridSpec::new(0.0, a, target.dim(), points_per_axis)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GofResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_samples: usize,
}

/// Composite Simpson tensor quadrature of `f` over the grid's cube. An odd
/// interval count is adjusted up by one point internally.
pub fn integrate_grid(f: impl Fn(&[f64]) -> f64, grid: &GridSpec) -> f64 {
    let m = {
        let intervals = grid.points_per_axis - 1;
        intervals + intervals % 2
    };
    let step = (grid.hi - grid.lo) / m as f64;
    let w1 = |k: usize| -> f64 {
        if k == 0 || k == m {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    let mut x = vec![0.0; grid.dim];
    let mut total = 0.0;
    let mut idx = vec![0usize; grid.dim];
    'outer: loop {
        let mut w = 1.0;
        for c in 0..grid.dim {
            x[c] = grid.lo + idx[c] as f64 * step;
            w *= w1(idx[c]);
        }
        total += w * f(&x);
        let mut c = 0;
        loop {
            idx[c] += 1;
            if idx[c] <= m {
                break;
            }
            idx[c] = 0;
            c += 1;
            if c == grid.dim {
                break 'outer;
            }
        }
    }
    total * (step / 3.0).powi(grid.dim as i32)
}

/// Grid maximum of f(x) − envelope(x) over the target's box, with the point
/// attaining it. Deficit ≤ 0 means the envelope dominates f on the grid.
/// Evaluations are unmetered.
pub fn envelope_scan(
    target: &TargetDensity,
    prop: &PliableProposal,
    grid: &GridSpec,
) -> (f64, Vec<f64>) {
    debug_assert!(prop.tail().is_none(), "envelope_scan is compact-mode only");
    let m = grid.points_per_axis - 1;
    let step = (grid.hi - grid.lo) / m as f64;
    let mut x = vec![0.0; grid.dim];
    let mut worst = vec![0.0; grid.dim];
    let mut max_deficit = f64::NEG_INFINITY;
    let mut idx = vec![0usize; grid.dim];
    'outer: loop {
        for c in 0..grid.dim {
            x[c] = grid.lo + idx[c] as f64 * step;
        }
        let deficit = target.eval_unmetered(&x) - prop.envelope(&x);
        if deficit > max_deficit {
            max_deficit = deficit;
            worst.copy_from_slice(&x);
        }
        let mut c = 0;
        loop {
            idx[c] += 1;
            if idx[c] <= m {
                break;
            }
            idx[c] = 0;
            c += 1;
            if c == grid.dim {
                break 'outer;
            }
        }
    }
    (max_deficit, worst)
}

fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100u32 {
        let t = (-2.0 * (k as f64 * lambda).powi(2)).exp();
        sum += if k % 2 == 1 { t } else { -t };
        if t < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sided Kolmogorov–Smirnov test with the asymptotic p-value.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<GofResult> {
    if samples.len() < 20 {
        return Err(Error::InsufficientData(format!(
            "ks test needs >= 20 samples, got {}",
            samples.len()
        )));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let fx = cdf(x);
        d = d.max(fx - i as f64 / n).max((i + 1) as f64 / n - fx);
    }
    Ok(GofResult {
        statistic: d,
        p_value: kolmogorov_sf(n.sqrt() * d),
        n_samples: xs.len(),
    })
}

/// Pearson chi-square of d-dimensional samples against cell masses of the
/// target, on a `points_per_axis`-cells-per-axis partition of the box.
/// Samples are flat row-major coordinates.
pub fn chi2_grid_test(
    samples: &[f64],
    target: &TargetDensity,
    grid: &GridSpec,
) -> Result<GofResult> {
    let d = grid.dim;
    if d != target.dim() {
        return Err(Error::InvalidParameter(
            "chi2 grid dimension does not match the target".into(),
        ));
    }
    if samples.len() % d != 0 {
        return Err(Error::InvalidParameter(
            "sample coordinate count not divisible by dimension".into(),
        ));
    }
    let n = samples.len() / d;
    let cells_axis = grid.points_per_axis;
    let total_cells = cells_axis.pow(d as u32);
    let cell_w = (grid.hi - grid.lo) / cells_axis as f64;

    // Cell masses by per-cell Simpson quadrature.
    let mut masses = vec![0.0f64; total_cells];
    let mut idx = vec![0usize; d];
    for (cell, mass) in masses.iter_mut().enumerate() {
        let mut rem = cell;
        for c in (0..d).rev() {
            idx[c] = rem % cells_axis;
            rem /= cells_axis;
        }
        let sub = GridSpec {
            lo: 0.0,
            hi: 1.0,
            dim: d,
            points_per_axis: 17,
        };
        let lo: Vec<f64> = idx.iter().map(|&i| grid.lo + i as f64 * cell_w).collect();
        *mass = integrate_grid(
            |u| {
                let x: Vec<f64> = u.iter().zip(&lo).map(|(&ui, &l)| l + ui * cell_w).collect();
                target.eval_unmetered(&x)
            },
            &sub,
        ) * cell_w.powi(d as i32);
    }
    let total_mass: f64 = masses.iter().sum();
    if !(total_mass > 0.0) {
        return Err(Error::DegenerateTarget);
    }

    for (cell, &mass) in masses.iter().enumerate() {
        if n as f64 * mass / total_mass < 5.0 {
            return Err(Error::SparseCells(cell));
        }
    }

    let mut counts = vec![0usize; total_cells];
    for i in 0..n {
        let mut cell = 0usize;
        for c in 0..d {
            let t = ((samples[i * d + c] - grid.lo) / cell_w).floor();
            let k = (t.max(0.0) as usize).min(cells_axis - 1);
            cell = cell * cells_axis + k;
        }
        counts[cell] += 1;
    }

    let mut stat = 0.0;
    for (cell, &mass) in masses.iter().enumerate() {
        let expect = n as f64 * mass / total_mass;
        let diff = counts[cell] as f64 - expect;
        stat += diff * diff / expect;
    }
    let dof = (total_cells - 1) as f64;
    let p = ChiSquared::new(dof).unwrap().sf(stat);
    Ok(GofResult { statistic: stat, p_value: p.clamp(0.0, 1.0), n_samples: n })
}

/// Least-squares slope of log(error) against log(size).
pub fn rate_fit(sizes: &[usize], errors: &[f64]) -> Result<f64> {
    if sizes.len() < 3 || sizes.len() != errors.len() {
        return Err(Error::InvalidParameter(format!(
            "rate fit needs >= 3 matched size/error pairs, got {}/{}",
            sizes.len(),
            errors.len()
        )));
    }
    if sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("sizes must be strictly increasing".into()));
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0)) {
        return Err(Error::InvalidParameter(format!("non-positive error value {e}")));
    }
    let xs: Vec<f64> = sizes.iter().map(|&s| (s as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(num / den)
}
