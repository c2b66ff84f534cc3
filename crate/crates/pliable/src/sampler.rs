//! The three samplers — simple rejection (SRS), pliable rejection (PRS) and
//! its unbounded-support extension (EPRS) — with exact budget metering.
//!
//! Random-stream discipline: phase 1 (design / initial draws) and the
//! proposal phase consume independent streams derived from the run seed, so
//! phase-1 results are bit-identical under any change of phase-2 settings.
//! Within a phase, draws consume the stream in a fixed documented order
//! (coordinates, then the acceptance uniform).

use crate::error::{Error, Result};
use crate::kernel::{self, KernelEstimate};
use crate::proposal::{self, Component, EprsTail, IsotropicGaussian, PliableProposal};
use crate::rng::{phase, phase_rng};
use crate::targets::{Domain, TargetDensity};
use rand::Rng;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Srs,
    Prs,
    Eprs,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Srs => "srs",
            Method::Prs => "prs",
            Method::Eprs => "eprs",
        })
    }
}

/// Extended-mode settings: the isotropic Gaussian initial proposal g, its
/// envelope constant M (f ≤ M·g), and the extended-rate constant H_E.
#[derive(Debug, Clone)]
pub struct EprsConfig {
    pub g_mean: Vec<f64>,
    pub g_sd: f64,
    pub envelope_m: f64,
    pub h_e: f64,
}

#[derive(Debug, Clone)]
pub struct SamplerConfig {
    /// Total f-evaluation budget n.
    pub budget_n: usize,
    pub delta: f64,
    pub smoothness_s: f64,
    pub h_c: f64,
    pub seed: u64,
    /// Force normalized-target handling even if the target doesn't declare it.
    pub normalized_target: bool,
    /// When set, proposal draws that never touch f (outside the box, or
    /// beyond the KDE truncation) cost nothing and are excluded from the
    /// acceptance-rate denominator.
    pub free_oob: bool,
    pub eprs: Option<EprsConfig>,
}

impl SamplerConfig {
    pub fn new(budget_n: usize, seed: u64) -> Self {
        SamplerConfig {
            budget_n,
            delta: 0.01,
            smoothness_s: 2.0,
            h_c: 1.0,
            seed,
            normalized_target: false,
            free_oob: false,
            eprs: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget_n < 4 {
            return Err(Error::InvalidParameter(format!(
                "budget n = {} must be at least 4",
                self.budget_n
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta = {} must lie in (0,1)",
                self.delta
            )));
        }
        if !(self.smoothness_s > 0.0 && self.smoothness_s <= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "smoothness s = {} must lie in (0,2]",
                self.smoothness_s
            )));
        }
        if !(self.h_c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "H_C = {} must be positive",
                self.h_c
            )));
        }
        if let Some(e) = &self.eprs {
            if e.g_mean.is_empty() || !(e.g_sd > 0.0) {
                return Err(Error::InvalidParameter(
                    "eprs initial proposal needs a mean vector and positive sd".into(),
                ));
            }
            if !(e.envelope_m >= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "eprs envelope constant M = {} must be >= 1",
                    e.envelope_m
                )));
            }
            if !(e.h_e > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "H_E = {} must be positive",
                    e.h_e
                )));
            }
        }
        Ok(())
    }
}

/// Counts f evaluations against the run budget.
#[derive(Debug, Clone)]
pub struct BudgetMeter {
    limit: usize,
    used: usize,
}

impl BudgetMeter {
    pub fn new(limit: usize) -> Self {
        BudgetMeter { limit, used: 0 }
    }

    pub fn charge(&mut self) -> Result<()> {
        if self.used >= self.limit {
            return Err(Error::BudgetExhausted { limit: self.limit });
        }
        self.used += 1;
        Ok(())
    }

    pub fn used(&self) -> usize {
        self.used
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn remaining(&self) -> usize {
        self.limit - self.used
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub method: Method,
    /// n̂: number of accepted samples.
    pub accepted: usize,
    pub budget_used: usize,
    /// N for PRS, T_s for EPRS, 0 for SRS.
    pub phase1_n: usize,
    /// n̂ / budget-consuming proposal draws (all draws, or in-domain draws
    /// only under free_oob).
    pub acceptance_rate: f64,
    /// M̂ for PRS (1 + r in normalized mode), the envelope constant for SRS,
    /// Z for EPRS.
    pub rejection_constant: f64,
    pub envelope_violations: usize,
    pub oob_draws: usize,
    pub wall_millis: u64,
    /// Accepted points, flat row-major, in internal box coordinates.
    pub samples: Vec<f64>,
    /// Proposal draws issued in the sampling phase.
    pub proposal_draws: usize,
    /// Accepted phase-1 points (EPRS only).
    pub eprs_nhat: Option<usize>,
    /// Set when the operational mass gate passed but the theorem-level
    /// condition 8r ≤ m̂ did not.
    pub strong_mass_warning: bool,
}

/// Phase split N = round(n^{(2s+d)/(3s+d)}), clamped into [1, n−1].
pub fn phase_split_prs(n: usize, s: f64, d: usize) -> usize {
    debug_assert!(n >= 4);
    let exponent = (2.0 * s + d as f64) / (3.0 * s + d as f64);
    let raw = (n as f64).powf(exponent).round();
    (raw as usize).clamp(1, n - 1)
}

/// u·envelope ≤ f, with the dominance-failure flag. On a violation the draw
/// is still accepted with probability min(1, f/envelope), which is what the
/// inequality yields.
pub fn accept_test(envelope_value: f64, f_value: f64, u: f64) -> (bool, bool) {
    (u * envelope_value <= f_value, f_value > envelope_value)
}

/// Simple rejection sampling against the flat envelope envelope_const·U on
/// the target's box: every draw costs one budget unit until n is spent.
pub fn srs_run(target: &TargetDensity, envelope_const: f64, cfg: &SamplerConfig) -> Result<RunReport> {
    cfg.validate()?;
    if !(envelope_const > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "envelope constant {envelope_const} must be positive"
        )));
    }
    let a = match target.domain() {
        Domain::Box { a } => a,
        Domain::Unbounded => {
            return Err(Error::InvalidParameter(
                "srs needs a compact box-domain target".into(),
            ))
        }
    };
    let d = target.dim();
    let started = Instant::now();
    let mut meter = BudgetMeter::new(cfg.budget_n);
    let mut rng = phase_rng(cfg.seed, phase::PROPOSAL_DRAWS);
    let envelope_density = envelope_const / a.powi(d as i32);

    let mut samples = Vec::new();
    let mut accepted = 0usize;
    let mut violations = 0usize;
    let mut draws = 0usize;
    let mut y = vec![0.0; d];
    while meter.remaining() > 0 {
        for c in y.iter_mut() {
            *c = rng.gen::<f64>() * a;
        }
        let u: f64 = rng.gen();
        let fv = target.eval_metered(&y, &mut meter)?;
        draws += 1;
        let (ok, viol) = accept_test(envelope_density, fv, u);
        if viol {
            violations += 1;
        }
        if ok {
            accepted += 1;
            samples.extend_from_slice(&y);
        }
    }
    Ok(RunReport {
        method: Method::Srs,
        accepted,
        budget_used: meter.used(),
        phase1_n: 0,
        acceptance_rate: if draws > 0 { accepted as f64 / draws as f64 } else { 0.0 },
        rejection_constant: envelope_const,
        envelope_violations: violations,
        oob_draws: 0,
        wall_millis: started.elapsed().as_millis() as u64,
        samples,
        proposal_draws: draws,
        eprs_nhat: None,
        strong_mass_warning: false,
    })
}

/// Pliable rejection sampling (the compact-domain algorithm): uniform design
/// phase, kernel regression estimate, then rejection sampling from the
/// learned mixture proposal.
pub fn prs_run(target: &TargetDensity, cfg: &SamplerConfig) -> Result<RunReport> {
    cfg.validate()?;
    let a = match target.domain() {
        Domain::Box { a } => a,
        Domain::Unbounded => {
            return Err(Error::InvalidParameter(
                "prs needs a compact box-domain target (use eprs for unbounded support)".into(),
            ))
        }
    };
    let d = target.dim();
    let n = cfg.budget_n;
    let s = cfg.smoothness_s;
    let started = Instant::now();
    let mut meter = BudgetMeter::new(n);

    let big_n = phase_split_prs(n, s, d);
    if big_n >= n {
        return Err(Error::InvalidParameter(format!(
            "budget {n} leaves no proposal draws after the design phase ({big_n})"
        )));
    }

    // Phase 1: uniform design and f values.
    let mut rng = phase_rng(cfg.seed, phase::INITIAL_DESIGN);
    let mut points = vec![0.0f64; big_n * d];
    let mut values = vec![0.0f64; big_n];
    let mut y = vec![0.0; d];
    for i in 0..big_n {
        for c in y.iter_mut() {
            *c = rng.gen::<f64>() * a;
        }
        points[i * d..(i + 1) * d].copy_from_slice(&y);
        values[i] = target.eval_metered(&y, &mut meter)?;
    }

    // Phase 2: estimate and proposal.
    let h = kernel::bandwidth(big_n, a, cfg.delta, s, d)?;
    let est = KernelEstimate::regression(&points, d, &values, h, a)?;
    let r = proposal::radius_r(big_n, a, d, s, cfg.delta, cfg.h_c)?;
    let m_hat = proposal::empirical_mass(&values, a, d);

    let normalized = cfg.normalized_target || target.normalized();
    let (reported_constant, strong_mass_warning) = if normalized {
        (1.0 + r, 8.0 * r > 1.0)
    } else {
        let rc = proposal::rejection_constant(m_hat, r)?;
        (rc.value, !rc.strong_mass_ok)
    };
    // The sampling law always uses the empirical mass: the mixture weights
    // must match the envelope the acceptance test sees, or the accepted
    // draws stop being exact.
    let prop = PliableProposal::compact(est, r, m_hat, a)?;

    // Phase 3: proposal draws.
    let mut rng = phase_rng(cfg.seed, phase::PROPOSAL_DRAWS);
    let draws_total = n - big_n;
    let mut samples = Vec::new();
    let mut accepted = 0usize;
    let mut violations = 0usize;
    let mut oob = 0usize;
    for _ in 0..draws_total {
        prop.sample_into(&mut rng, &mut y);
        if y.iter().any(|&v| !(0.0..=a).contains(&v)) {
            oob += 1;
            if !cfg.free_oob {
                meter.charge()?;
            }
            continue;
        }
        let u: f64 = rng.gen();
        let fv = target.eval_metered(&y, &mut meter)?;
        let (ok, viol) = accept_test(prop.envelope(&y), fv, u);
        if viol {
            violations += 1;
        }
        if ok {
            accepted += 1;
            samples.extend_from_slice(&y);
        }
    }

    let denominator = if cfg.free_oob { draws_total - oob } else { draws_total };
    debug_assert_eq!(
        meter.used(),
        if cfg.free_oob { big_n + draws_total - oob } else { n }
    );
    Ok(RunReport {
        method: Method::Prs,
        accepted,
        budget_used: meter.used(),
        phase1_n: big_n,
        acceptance_rate: if denominator > 0 {
            accepted as f64 / denominator as f64
        } else {
            0.0
        },
        rejection_constant: reported_constant,
        envelope_violations: violations,
        oob_draws: oob,
        wall_millis: started.elapsed().as_millis() as u64,
        samples,
        proposal_draws: draws_total,
        eprs_nhat: None,
        strong_mass_warning,
    })
}

/// T_s = round(n^{(2s+d)/(3s+d)}) and N̄ = round(T_s/M − 2√(T_s·log(1/δ))).
pub fn eprs_schedule(n: usize, s: f64, d: usize, m: f64, delta: f64) -> Result<(usize, usize)> {
    if n < 4 {
        return Err(Error::InvalidParameter(format!("budget n = {n} must be at least 4")));
    }
    let t_s = phase_split_prs(n, s, d);
    let n_bar = (t_s as f64 / m - 2.0 * (t_s as f64 * (1.0 / delta).ln()).sqrt()).round();
    if !(n_bar >= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "schedule gives N_bar = {n_bar}; budget too small for M = {m}, delta = {delta}"
        )));
    }
    Ok((t_s, n_bar as usize))
}

/// Extended pliable rejection sampling for unbounded sub-Gaussian targets:
/// phase 1 rejection-samples through the initial proposal g with constant M,
/// the KDE over the accepted points replaces the regression estimate, and
/// the proposal picks up a Gaussian tail component beyond the truncation
/// radius log N̄.
pub fn eprs_run(target: &TargetDensity, cfg: &SamplerConfig) -> Result<RunReport> {
    cfg.validate()?;
    let e = cfg.eprs.as_ref().ok_or_else(|| {
        Error::InvalidParameter("eprs_run needs the eprs config block".into())
    })?;
    if target.domain() != Domain::Unbounded {
        return Err(Error::InvalidParameter(
            "eprs is for unbounded-support targets; use prs on a box domain".into(),
        ));
    }
    let d = target.dim();
    if e.g_mean.len() != d {
        return Err(Error::InvalidParameter(format!(
            "initial proposal mean has dimension {}, target has {d}",
            e.g_mean.len()
        )));
    }
    let n = cfg.budget_n;
    let s = cfg.smoothness_s;
    let started = Instant::now();
    let g = IsotropicGaussian::new(e.g_mean.clone(), e.g_sd)?;
    let m_const = e.envelope_m;
    let (t_s, n_bar) = eprs_schedule(n, s, d, m_const, cfg.delta)?;
    let mut meter = BudgetMeter::new(n);

    // Phase 1: rejection sampling through g with constant M.
    let mut rng = phase_rng(cfg.seed, phase::INITIAL_DESIGN);
    let mut points = Vec::new();
    let mut violations = 0usize;
    let mut y = vec![0.0; d];
    for _ in 0..t_s {
        g.sample_into(&mut rng, &mut y);
        let u: f64 = rng.gen();
        let fv = target.eval_metered(&y, &mut meter)?;
        let (ok, viol) = accept_test(m_const * g.density(&y), fv, u);
        if viol {
            violations += 1;
        }
        if ok {
            points.extend_from_slice(&y);
        }
    }
    let n_hat = points.len() / d;
    if n_hat == 0 {
        return Err(Error::EstimationFailed);
    }

    // Phase 2: KDE over the accepted points; all schedule constants use the
    // deterministic lower bound N̄, the data are the realized N̂ points.
    let h = kernel::bandwidth(n_bar, 1.0, cfg.delta, s, d)?;
    let cut_radius = (n_bar as f64).ln();
    let est = KernelEstimate::density(&points, d, h, cut_radius)?;
    let ball_radius = (n as f64).ln();
    let v_n = ball_volume(d, ball_radius);
    let rate_arg = n_bar as f64 / cfg.delta;
    if !(rate_arg > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "extended radius log argument {rate_arg} must exceed 1"
        )));
    }
    let r = v_n * e.h_e * (rate_arg.ln() / n_bar as f64).powf(s / (2.0 * s + d as f64));
    let g_bar = proposal::tail_mass_gaussian(&g, cut_radius)?;
    let prop = PliableProposal::extended(
        est,
        r,
        ball_radius,
        EprsTail { g, m_const, cut_radius, tail_mass: g_bar },
    )?;

    // Phase 3: proposal draws; estimate-component draws beyond the
    // truncation radius never reach f.
    let mut rng = phase_rng(cfg.seed, phase::PROPOSAL_DRAWS);
    let draws_total = n - t_s;
    let mut samples = Vec::new();
    let mut accepted = 0usize;
    let mut oob = 0usize;
    for _ in 0..draws_total {
        let comp = prop.sample_into(&mut rng, &mut y);
        if comp == Component::Estimate {
            let norm2: f64 = y.iter().map(|v| v * v).sum();
            if norm2 > cut_radius * cut_radius {
                oob += 1;
                if !cfg.free_oob {
                    meter.charge()?;
                }
                continue;
            }
        }
        let u: f64 = rng.gen();
        let fv = target.eval_metered(&y, &mut meter)?;
        let (ok, viol) = accept_test(prop.envelope(&y), fv, u);
        if viol {
            violations += 1;
        }
        if ok {
            accepted += 1;
            samples.extend_from_slice(&y);
        }
    }

    let denominator = if cfg.free_oob { draws_total - oob } else { draws_total };
    Ok(RunReport {
        method: Method::Eprs,
        accepted,
        budget_used: meter.used(),
        phase1_n: t_s,
        acceptance_rate: if denominator > 0 {
            accepted as f64 / denominator as f64
        } else {
            0.0
        },
        rejection_constant: prop.normalizer_z(),
        envelope_violations: violations,
        oob_draws: oob,
        wall_millis: started.elapsed().as_millis() as u64,
        samples,
        proposal_draws: draws_total,
        eprs_nhat: Some(n_hat),
        strong_mass_warning: false,
    })
}

fn ball_volume(d: usize, radius: f64) -> f64 {
    let half = d as f64 / 2.0;
    std::f64::consts::PI.powf(half) / statrs::function::gamma::gamma(half + 1.0)
        * radius.powi(d as i32)
}
