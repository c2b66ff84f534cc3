//! Self-check suite: re-derives the library's load-bearing invariants on
//! fresh randomness and prints one line per check. The deliberate-fault
//! check corrupts the bandwidth exponent and requires the rate trend to
//! notice — if a broken schedule slips through, the suite is not testing
//! what it claims to.

use pliable::diagnostics::{ks_test, rate_fit, GridSpec};
use pliable::kernel::{bandwidth, bandwidth_with_exponent, kernel_value, KernelEstimate, KernelSpec};
use pliable::proposal::{empirical_mass, radius_r, PliableProposal};
use pliable::rng::{phase, phase_rng};
use pliable::sampler::{phase_split_prs, prs_run, SamplerConfig};
use pliable::targets::{
    cosine_target, numeric_cdf, peakiness_normalized_target, peakiness_target, uniform_target,
    TargetDensity,
};
use rand::Rng;
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug)]
pub struct SuiteReport {
    pub checks: Vec<CheckResult>,
    pub wall_secs: f64,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.pass).count()
    }
}

fn check(name: &'static str, pass: bool, detail: String) -> CheckResult {
    CheckResult { name, pass, detail }
}

/// Simpson quadrature of g over [lo, hi] with an even interval count.
fn simpson(g: impl Fn(f64) -> f64, lo: f64, hi: f64, intervals: usize) -> f64 {
    let m = intervals + intervals % 2;
    let step = (hi - lo) / m as f64;
    let mut acc = g(lo) + g(hi);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * g(lo + step * i as f64);
    }
    acc * step / 3.0
}

fn kernel_moments() -> CheckResult {
    let spec = KernelSpec::default();
    let mass = simpson(|x| kernel_value(&spec, &[x]), -8.0, 8.0, 1600);
    let mean = simpson(|x| x * kernel_value(&spec, &[x]), -8.0, 8.0, 1600);
    let second = simpson(|x| x * x * kernel_value(&spec, &[x]), -8.0, 8.0, 1600);
    let pass = (mass - 1.0).abs() < 1e-9 && mean.abs() < 1e-12 && (second - 1.0).abs() < 1e-8;
    check(
        "kernel-moments",
        pass,
        format!("mass {mass:.12}, mean {mean:.2e}, second moment {second:.12}"),
    )
}

/// One PRS phase-1/phase-2 build outside the sampler, for checks that need
/// the pieces rather than the run.
struct Build {
    est: KernelEstimate,
    m_hat: f64,
    r: f64,
    a: f64,
    h: f64,
}

fn prs_build(target: &TargetDensity, n: usize, seed: u64, delta: f64, s: f64, h_c: f64) -> Build {
    let a = target.box_side().expect("box target");
    let d = target.dim();
    let big_n = phase_split_prs(n, s, d);
    let h = bandwidth(big_n, a, delta, s, d).expect("bandwidth");
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
    let est = KernelEstimate::regression(&points, d, &values, h, a).expect("estimate");
    let m_hat = empirical_mass(&values, a, d);
    let r = radius_r(big_n, a, d, s, delta, h_c).expect("radius");
    Build { est, m_hat, r, a, h }
}

/// Worst envelope deficit of one seeded build at the given H_C, over a
/// 256-per-axis scan grid; positive means f pokes above the envelope.
pub fn build_deficit(
    target: &TargetDensity,
    n: usize,
    seed: u64,
    delta: f64,
    s: f64,
    h_c: f64,
) -> f64 {
    let b = prs_build(target, n, seed, delta, s, h_c);
    let prop = PliableProposal::compact(b.est, b.r, b.m_hat, b.a).expect("proposal");
    let grid = GridSpec::over_box(target, 256).expect("grid");
    pliable::diagnostics::envelope_scan(target, &prop, &grid).0
}

fn proposal_normalization() -> CheckResult {
    let target = peakiness_target(2.0, 10.0);
    let b = prs_build(&target, 20_000, 17, 0.01, 2.0, 0.01);
    let z = b.m_hat + b.r;
    // The Gaussian components spill past the box, so the mass integral runs
    // over the widened interval; the slab contributes r inside the box only.
    let pad = 8.0 * b.h;
    let gauss = simpson(|x| b.est.eval(&[x]), -pad, 10.0 + pad, 4000);
    let total = (gauss + b.r) / z;
    let pass = (total - 1.0).abs() < 2e-3;
    check(
        "proposal-normalization",
        pass,
        format!("proposal mass integrates to {total:.6}"),
    )
}

fn envelope_dominance() -> CheckResult {
    let target = uniform_target(1, 1.0);
    let n = 10_000;
    let tuned = match crate::tune::tune_hc(&target, n, &crate::tune::default_ladder(), 23, 0.01, 2.0)
    {
        Ok(t) => t,
        Err(e) => return check("envelope-dominance", false, format!("tuning failed: {e}")),
    };
    if tuned.fell_back {
        return check("envelope-dominance", false, "tuner fell back".into());
    }
    // Fresh build on a different seed, scanned at the tuned value itself: the
    // gap here is mostly the boundary dip, which repeats build to build, so
    // the chosen rung's slack has to absorb the seed-to-seed fluctuation.
    let b = prs_build(&target, n, 24, 0.01, 2.0, tuned.h_c);
    let prop = match PliableProposal::compact(b.est, b.r, b.m_hat, b.a) {
        Ok(p) => p,
        Err(e) => return check("envelope-dominance", false, format!("proposal failed: {e}")),
    };
    let grid = GridSpec::over_box(&target, 256).expect("grid");
    let (deficit, worst) = pliable::diagnostics::envelope_scan(&target, &prop, &grid);
    check(
        "envelope-dominance",
        deficit <= 0.0,
        format!("tuned H_C {:.4}, max deficit {deficit:.3e} at {worst:?}", tuned.h_c),
    )
}

fn gof_ks() -> CheckResult {
    let target = peakiness_normalized_target(2.0, 10.0);
    let cdf = match numeric_cdf(&target, 1 << 16) {
        Ok(c) => c,
        Err(e) => return check("gof-ks", false, format!("cdf failed: {e}")),
    };
    // Zero violations wanted, since the KS verdict is only about exactness
    // when dominance actually held; the tuned slab delivers that here
    // because the gap is the peak's smoothing bias, stable across seeds.
    let h_c = match crate::tune::tune_hc(&target, 30_000, &crate::tune::default_ladder(), 23, 0.01, 2.0)
    {
        Ok(t) => t.h_c,
        Err(e) => return check("gof-ks", false, format!("tuning failed: {e}")),
    };
    let mut detail = String::new();
    let mut pass = true;
    for seed in [31u64, 32] {
        let mut cfg = SamplerConfig::new(30_000, seed);
        cfg.h_c = h_c;
        let rep = match prs_run(&target, &cfg) {
            Ok(r) => r,
            Err(e) => return check("gof-ks", false, format!("run failed: {e}")),
        };
        let gof = match ks_test(&rep.samples, |x| cdf.eval(x)) {
            Ok(g) => g,
            Err(e) => return check("gof-ks", false, format!("ks failed: {e}")),
        };
        pass &= gof.p_value > 0.01 && rep.envelope_violations == 0;
        detail.push_str(&format!(
            "seed {seed}: p {:.3}, violations {}; ",
            gof.p_value, rep.envelope_violations
        ));
    }
    check("gof-ks", pass, detail.trim_end_matches("; ").to_string())
}

fn budget_exactness() -> CheckResult {
    let target = uniform_target(1, 1.0);
    let mut cfg = SamplerConfig::new(10_000, 42);
    cfg.h_c = 0.5;
    let charged = prs_run(&target, &cfg).expect("charged run");
    let mut free = cfg.clone();
    free.free_oob = true;
    let freed = prs_run(&target, &free).expect("free run");
    let again = prs_run(&target, &cfg).expect("repeat run");
    let pass = charged.budget_used == 10_000
        && freed.budget_used <= 10_000
        && freed.budget_used == freed.phase1_n + freed.proposal_draws - freed.oob_draws
        && charged.accepted == again.accepted
        && charged.samples == again.samples;
    check(
        "budget-exactness",
        pass,
        format!(
            "charged {} / free {} of {}, repeat identical: {}",
            charged.budget_used,
            freed.budget_used,
            10_000,
            charged.accepted == again.accepted
        ),
    )
}

/// Median sup-grid estimation error at each design size, over 10 seeds.
/// `corrupt_exponent` flips the bandwidth schedule's exponent sign — the
/// deliberate fault the rate trend must catch.
pub fn regression_error_curve(corrupt_exponent: bool) -> (Vec<usize>, Vec<f64>) {
    let target = cosine_target(4.0);
    let a = 4.0;
    let (delta, s, d) = (0.01, 2.0, 1usize);
    let sizes = [1_000usize, 3_000, 10_000, 30_000, 100_000];
    let grid: Vec<f64> = (0..256).map(|i| a * i as f64 / 255.0).collect();
    let mut medians = Vec::with_capacity(sizes.len());
    for &big_n in &sizes {
        let exponent = 1.0 / (2.0 * s + d as f64);
        let exponent = if corrupt_exponent { -exponent } else { exponent };
        let h = bandwidth_with_exponent(big_n, a, delta, exponent).expect("bandwidth");
        let mut errs = Vec::with_capacity(10);
        for seed in 0..10u64 {
            let mut rng = phase_rng(seed.wrapping_add(1000), phase::TUNING);
            let mut points = vec![0.0f64; big_n];
            let mut values = vec![0.0f64; big_n];
            for i in 0..big_n {
                let x = rng.gen::<f64>() * a;
                points[i] = x;
                values[i] = target.eval_unmetered(&[x]);
            }
            let est = KernelEstimate::regression(&points, 1, &values, h, a).expect("estimate");
            let mut sup = 0.0f64;
            for &g in &grid {
                let err = (target.eval_unmetered(&[g]) - est.eval(&[g])).abs();
                if err > sup {
                    sup = err;
                }
            }
            errs.push(sup);
        }
        errs.sort_by(|p, q| p.partial_cmp(q).unwrap());
        medians.push((errs[4] + errs[5]) / 2.0);
    }
    (sizes.to_vec(), medians)
}

/// Whether an error curve meets the convergence requirements (strictly
/// decreasing medians, fitted slope ≤ −0.25), plus the slope itself.
pub fn rate_requirements(sizes: &[usize], medians: &[f64]) -> (bool, f64) {
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    match rate_fit(sizes, medians) {
        Ok(slope) => (decreasing && slope <= -0.25, slope),
        Err(_) => (false, f64::NAN),
    }
}

fn rate_trend() -> (CheckResult, CheckResult) {
    let (sizes, healthy) = regression_error_curve(false);
    let (ok_healthy, slope_h) = rate_requirements(&sizes, &healthy);
    let shown: Vec<String> = healthy.iter().map(|m| format!("{m:.3e}")).collect();
    let healthy_check = check(
        "rate-trend",
        ok_healthy,
        format!("slope {slope_h:.3}, medians [{}]", shown.join(", ")),
    );
    let (_, corrupted) = regression_error_curve(true);
    let (ok_corrupted, slope_c) = rate_requirements(&sizes, &corrupted);
    let mutation_check = check(
        "mutation-detector",
        ok_healthy && !ok_corrupted,
        format!("corrupted-exponent slope {slope_c:.3}, trend check rejects it: {}", !ok_corrupted),
    );
    (healthy_check, mutation_check)
}

pub fn run_suite() -> SuiteReport {
    let started = Instant::now();
    let mut checks = vec![
        kernel_moments(),
        proposal_normalization(),
        envelope_dominance(),
        gof_ks(),
        budget_exactness(),
    ];
    let (healthy, mutation) = rate_trend();
    checks.push(healthy);
    checks.push(mutation);
    SuiteReport {
        checks,
        wall_secs: started.elapsed().as_secs_f64(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_on_a_fresh_build() {
        let rep = run_suite();
        for c in &rep.checks {
            assert!(c.pass, "check {} failed: {}", c.name, c.detail);
        }
        assert!(rep.wall_secs < 600.0, "suite took {}s", rep.wall_secs);
    }
}
