//! The pliable proposal: the learned-estimate + uniform-slab mixture (plus
//! the Gaussian tail component in extended mode), the radius r_N, the
//! empirical mass m̂, and the rejection constant M̂.
//!
//! The acceptance test downstream is the cancelled-normalizer form
//! u·envelope(y) ≤ f(y), where envelope = Z·(proposal density); Z itself
//! never enters the test, so [`PliableProposal::envelope`] returns the
//! unnormalized numerator directly.

use crate::error::{Error, Result};
use crate::kernel::KernelEstimate;
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// A^d/N · Σ values — the Monte Carlo estimate of ∫f from the design phase.
pub fn empirical_mass(values: &[f64], a: f64, d: usize) -> f64 {
    debug_assert!(!values.is_empty());
    let sum: f64 = values.iter().sum();
    a.powi(d as i32) * sum / values.len() as f64
}

/// Slab radius r_N = A^d · H_C · (log(N·A·d/δ)/N)^{s/(2s+d)}.
pub fn radius_r(n: usize, a: f64, d: usize, s: f64, delta: f64, h_c: f64) -> Result<f64> {
    let arg = n as f64 * a * d as f64 / delta;
    if !(arg > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "radius log argument N*A*d/delta = {arg} must exceed 1"
        )));
    }
    let exponent = s / (2.0 * s + d as f64);
    Ok(a.powi(d as i32) * h_c * (arg.ln() / n as f64).powf(exponent))
}

/// M̂ = (m̂ + r)/(m̂ − 5r), with the mass gate.
#[derive(Debug, Clone, Copy)]
pub struct RejectionConstant {
    pub value: f64,
    /// Theorem-level condition 8r ≤ m̂; the run proceeds when only this
    /// (stronger) condition fails, but callers should surface it.
    pub strong_mass_ok: bool,
}

pub fn rejection_constant(m_hat: f64, r: f64) -> Result<RejectionConstant> {
    if m_hat <= 5.0 * r {
        return Err(Error::InsufficientMass { m_hat, r });
    }
    Ok(RejectionConstant {
        value: (m_hat + r) / (m_hat - 5.0 * r),
        strong_mass_ok: 8.0 * r <= m_hat,
    })
}

/// Isotropic Gaussian initial proposal for extended mode.
#[derive(Debug, Clone)]
pub struct IsotropicGaussian {
    pub mean: Vec<f64>,
    pub sd: f64,
}

impl IsotropicGaussian {
    pub fn new(mean: Vec<f64>, sd: f64) -> Result<Self> {
        if mean.is_empty() || !(sd > 0.0) {
            return Err(Error::InvalidParameter(
                "initial proposal needs a nonempty mean and positive sd".into(),
            ));
        }
        Ok(IsotropicGaussian { mean, sd })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        let d = self.mean.len();
        let norm = (2.0 * std::f64::consts::PI * self.sd * self.sd)
            .powi(d as i32)
            .sqrt()
            .recip();
        let q: f64 = x.iter().zip(&self.mean).map(|(v, m)| (v - m) * (v - m)).sum();
        norm * (-0.5 * q / (self.sd * self.sd)).exp()
    }

    pub fn sample_into<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        for (o, m) in out.iter_mut().zip(&self.mean) {
            let z: f64 = rng.sample(StandardNormal);
            *o = m + self.sd * z;
        }
    }
}

/// Mass of an isotropic Gaussian outside the origin-centered ball of the
/// given radius: complementary error function in 1D, the chi-square tail for
/// centered proposals in higher dimension.
pub fn tail_mass_gaussian(g: &IsotropicGaussian, radius: f64) -> Result<f64> {
    if !(radius >= 0.0) {
        return Err(Error::InvalidParameter(format!("tail radius {radius} must be >= 0")));
    }
    let d = g.dim();
    if d == 1 {
        let std = Normal::new(0.0, 1.0).unwrap();
        let hi = std.sf((radius - g.mean[0]) / g.sd);
        let lo = std.cdf((-radius - g.mean[0]) / g.sd);
        return Ok((hi + lo).clamp(0.0, 1.0));
    }
    if g.mean.iter().any(|&m| m != 0.0) {
        return Err(Error::NotImplemented(
            "tail mass for off-center initial proposals in d >= 2".into(),
        ));
    }
    let chi2 = ChiSquared::new(d as f64).unwrap();
    Ok(chi2.sf((radius / g.sd) * (radius / g.sd)).clamp(0.0, 1.0))
}

/// Which mixture component produced a draw; the sampler needs this to thin
/// estimate-component draws that left the truncation ball without spending
/// an f evaluation on them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Estimate,
    Slab,
    Tail,
}

/// Extended-mode tail data: the initial proposal g, its envelope constant M,
/// the truncation radius log N̄ and the tail mass ḡ_N̄ beyond it.
#[derive(Debug, Clone)]
pub struct EprsTail {
    pub g: IsotropicGaussian,
    pub m_const: f64,
    pub cut_radius: f64,
    pub tail_mass: f64,
}

enum ProposalDomain {
    /// [0,A]^d with the slab uniform over the box.
    Box { a: f64 },
    /// Slab uniform over the origin-centered ball of this radius (log n),
    /// with volume carried for the slab density.
    Ball { radius: f64, volume: f64 },
}

pub struct PliableProposal {
    est: KernelEstimate,
    r: f64,
    m_hat: f64,
    z: f64,
    domain: ProposalDomain,
    /// Cumulative center weights; empty when centers are equally weighted
    /// (then index selection is a plain integer draw).
    cum_weights: Vec<f64>,
    tail: Option<EprsTail>,
}

fn ball_volume(d: usize, radius: f64) -> f64 {
    let half = d as f64 / 2.0;
    std::f64::consts::PI.powf(half) / statrs::function::gamma::gamma(half + 1.0)
        * radius.powi(d as i32)
}

impl PliableProposal {
    /// Compact-mode proposal over the regression estimate: mixture law
    /// m̂/(m̂+r) estimate component, r/(m̂+r) uniform slab on [0,A]^d.
    pub fn compact(est: KernelEstimate, r: f64, m_hat: f64, a: f64) -> Result<Self> {
        if !(m_hat + r > 0.0) {
            return Err(Error::DegenerateProposal);
        }
        if !(r >= 0.0) || !(m_hat >= 0.0) {
            return Err(Error::InvalidParameter("r and m_hat must be non-negative".into()));
        }
        let mut cum = Vec::with_capacity(est.len());
        let mut acc = 0.0;
        for &w in est.weights() {
            acc += w;
            cum.push(acc);
        }
        Ok(PliableProposal {
            est,
            r,
            m_hat,
            z: m_hat + r,
            domain: ProposalDomain::Box { a },
            cum_weights: cum,
            tail: None,
        })
    }

    /// Extended-mode proposal over the density estimate: mixture masses
    /// (1, r, M·ḡ_N̄)/Z with Z = 1 + r + M·ḡ_N̄, slab uniform on the ball of
    /// radius log n.
    pub fn extended(est: KernelEstimate, r: f64, ball_radius: f64, tail: EprsTail) -> Result<Self> {
        if !(r >= 0.0) || !(ball_radius > 0.0) {
            return Err(Error::InvalidParameter(
                "extended proposal needs r >= 0 and a positive ball radius".into(),
            ));
        }
        if est.dim() != tail.g.dim() {
            return Err(Error::InvalidParameter(
                "initial proposal dimension does not match estimate".into(),
            ));
        }
        if tail.tail_mass > 0.0 && tail.tail_mass < 1e-6 && tail.g.dim() > 1 {
            return Err(Error::NotImplemented(
                "tail component too thin to sample by rejection in d >= 2".into(),
            ));
        }
        let volume = ball_volume(est.dim(), ball_radius);
        let z = 1.0 + r + tail.m_const * tail.tail_mass;
        Ok(PliableProposal {
            est,
            r,
            m_hat: 1.0,
            z,
            domain: ProposalDomain::Ball { radius: ball_radius, volume },
            cum_weights: Vec::new(),
            tail: Some(tail),
        })
    }

    pub fn estimate(&self) -> &KernelEstimate {
        &self.est
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn m_hat(&self) -> f64 {
        self.m_hat
    }

    pub fn normalizer_z(&self) -> f64 {
        self.z
    }

    pub fn dim(&self) -> usize {
        self.est.dim()
    }

    pub fn tail(&self) -> Option<&EprsTail> {
        self.tail.as_ref()
    }

    /// Slab density inside the proposal's domain (r divided by the domain
    /// volume).
    pub fn slab_density(&self) -> f64 {
        match self.domain {
            ProposalDomain::Box { a } => self.r / a.powi(self.est.dim() as i32),
            ProposalDomain::Ball { volume, .. } => self.r / volume,
        }
    }

    /// Unnormalized proposal numerator Z·ĝ*(x): what the acceptance test
    /// compares u·envelope(y) against f(y).
    ///
    /// Compact mode: f̂(x) + r/A^d on the box, 0 outside. Extended mode:
    /// f̃(x) + (r/V)·1{x in ball} + M·g(x)·1{‖x‖ ≥ truncation radius}.
    pub fn envelope(&self, x: &[f64]) -> f64 {
        match &self.domain {
            ProposalDomain::Box { a } => {
                if x.iter().any(|&v| !(0.0..=*a).contains(&v)) {
                    return 0.0;
                }
                self.est.eval(x) + self.slab_density()
            }
            ProposalDomain::Ball { radius, volume } => {
                let tail = self.tail.as_ref().unwrap();
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let mut e = self.est.eval(x);
                if norm <= *radius {
                    e += self.r / volume;
                }
                if norm >= tail.cut_radius {
                    e += tail.m_const * tail.g.density(x);
                }
                e
            }
        }
    }

    /// One draw from the mixture; estimate-component draws are returned
    /// untruncated (they may leave the box or the ball — the sampler owns
    /// that policy). Returns the component that produced the draw.
    pub fn sample_into<R: Rng>(&self, rng: &mut R, out: &mut [f64]) -> Component {
        let d = self.est.dim();
        debug_assert_eq!(out.len(), d);
        let pick: f64 = rng.gen::<f64>() * self.z;
        match &self.domain {
            ProposalDomain::Box { a } => {
                if pick < self.m_hat {
                    self.sample_estimate_component(rng, out);
                    Component::Estimate
                } else {
                    for o in out.iter_mut() {
                        *o = rng.gen::<f64>() * a;
                    }
                    Component::Slab
                }
            }
            ProposalDomain::Ball { radius, .. } => {
                if pick < 1.0 {
                    self.sample_estimate_component(rng, out);
                    Component::Estimate
                } else if pick < 1.0 + self.r {
                    sample_ball(rng, *radius, out);
                    Component::Slab
                } else {
                    self.sample_tail_component(rng, out);
                    Component::Tail
                }
            }
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> (Vec<f64>, Component) {
        let mut out = vec![0.0; self.est.dim()];
        let c = self.sample_into(rng, &mut out);
        (out, c)
    }

    fn sample_estimate_component<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        let idx = if self.cum_weights.is_empty() {
            rng.gen_range(0..self.est.len())
        } else {
            // Center index proportional to its weight.
            let total = *self.cum_weights.last().unwrap();
            let v = rng.gen::<f64>() * total;
            self.cum_weights.partition_point(|&c| c <= v).min(self.est.len() - 1)
        };
        self.est.center(idx, out);
        let h = self.est.bandwidth_h();
        for o in out.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *o += h * z;
        }
    }

    fn sample_tail_component<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        let tail = self.tail.as_ref().unwrap();
        let cut2 = tail.cut_radius * tail.cut_radius;
        for _ in 0..10_000 {
            tail.g.sample_into(rng, out);
            let q: f64 = out.iter().map(|v| v * v).sum();
            if q >= cut2 {
                return;
            }
        }
        // Thin tail: fall back to exact inverse-CDF sampling (1D only; wider
        // dimensions are rejected at construction).
        debug_assert_eq!(self.est.dim(), 1);
        let std = Normal::new(0.0, 1.0).unwrap();
        let (mu, sd, rad) = (tail.g.mean[0], tail.g.sd, tail.cut_radius);
        let hi = std.sf((rad - mu) / sd);
        let lo = std.cdf((-rad - mu) / sd);
        let v: f64 = rng.gen();
        out[0] = if rng.gen::<f64>() * (hi + lo) < hi {
            mu + sd * (-std.inverse_cdf(v * hi))
        } else {
            mu + sd * std.inverse_cdf(v * lo)
        };
    }
}

fn sample_ball<R: Rng>(rng: &mut R, radius: f64, out: &mut [f64]) {
    let d = out.len();
    if d == 1 {
        out[0] = (2.0 * rng.gen::<f64>() - 1.0) * radius;
        return;
    }
    loop {
        let mut q = 0.0;
        for o in out.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *o = z;
            q += z * z;
        }
        if q > 0.0 {
            let u: f64 = rng.gen();
            let scale = radius * u.powf(1.0 / d as f64) / q.sqrt();
            for o in out.iter_mut() {
                *o *= scale;
            }
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn empirical_mass_basics() {
        assert_eq!(empirical_mass(&[1.0, 1.0, 1.0, 1.0], 1.0, 1), 1.0);
        assert_eq!(empirical_mass(&[0.0, 0.0, 0.0], 2.0, 2), 0.0);
        assert_eq!(empirical_mass(&[3.0], 2.0, 1), 6.0);
    }

    #[test]
    fn empirical_mass_of_sin2d_design() {
        use rand::Rng;
        let t = crate::targets::sin2d_target();
        let mut rng = crate::rng::phase_rng(1, 0x61);
        let n = 10_000;
        let vals: Vec<f64> = (0..n)
            .map(|_| {
                let x = [rng.gen::<f64>(), rng.gen::<f64>()];
                t.eval_unmetered(&x)
            })
            .collect();
        assert_abs_diff_eq!(empirical_mass(&vals, 1.0, 2), 1.0, epsilon = 0.02);
    }

    #[test]
    fn radius_closed_form() {
        let r = radius_r(10_000, 1.0, 1, 2.0, 0.01, 1.0).unwrap();
        assert_abs_diff_eq!(r, 0.071_803_692_045_744_0, epsilon = 1e-13);
        assert_eq!(radius_r(10_000, 1.0, 1, 2.0, 0.01, 0.0).unwrap(), 0.0);
        let doubled = radius_r(10_000, 1.0, 1, 2.0, 0.01, 2.0).unwrap();
        assert_relative_eq!(doubled, 2.0 * r, max_relative = 1e-14);
    }

    #[test]
    fn radius_rejects_bad_log() {
        assert!(radius_r(1, 0.5, 1, 2.0, 0.9, 1.0).is_err());
    }

    #[test]
    fn rejection_constant_values() {
        assert_eq!(rejection_constant(1.0, 0.0).unwrap().value, 1.0);
        let m = rejection_constant(1.0, 0.01).unwrap();
        assert_abs_diff_eq!(m.value, 1.063_157_894_736_84, epsilon = 1e-12);
        assert!(m.strong_mass_ok);
        assert!(matches!(
            rejection_constant(1.0, 0.2),
            Err(Error::InsufficientMass { .. })
        ));
        // Between the operational gate (m̂ > 5r) and the theorem condition
        // (8r ≤ m̂) the run proceeds flagged.
        let edge = rejection_constant(1.0, 0.15).unwrap();
        assert!(!edge.strong_mass_ok);
    }

    #[test]
    fn rejection_constant_monotone() {
        let mut prev = 0.0;
        for k in 0..10 {
            let r = 0.01 * k as f64;
            let v = rejection_constant(1.0, r).unwrap().value;
            assert!(v > prev);
            prev = v;
        }
        let mut prev = f64::INFINITY;
        for m in [0.6, 0.8, 1.0, 2.0, 5.0] {
            let v = rejection_constant(m, 0.1).unwrap().value;
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn tail_mass_oracle_values() {
        let g = IsotropicGaussian::new(vec![0.0], 1.0).unwrap();
        assert_abs_diff_eq!(tail_mass_gaussian(&g, 0.0).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            tail_mass_gaussian(&g, 1.959_964).unwrap(),
            0.05,
            epsilon = 1e-7
        );
        assert_abs_diff_eq!(tail_mass_gaussian(&g, 40.0).unwrap(), 0.0, epsilon = 1e-300);
        // 2D centered: chi-square tail agrees with the closed form e^{-R²/2}.
        let g2 = IsotropicGaussian::new(vec![0.0, 0.0], 1.0).unwrap();
        let r = 2.5f64;
        assert_abs_diff_eq!(
            tail_mass_gaussian(&g2, r).unwrap(),
            (-0.5 * r * r).exp(),
            epsilon = 1e-12
        );
        let off = IsotropicGaussian::new(vec![1.0, 0.0], 1.0).unwrap();
        assert!(matches!(
            tail_mass_gaussian(&off, 1.0),
            Err(Error::NotImplemented(_))
        ));
    }

    fn small_estimate() -> KernelEstimate {
        let pts = [0.2, 0.5, 0.8, 0.4];
        let vals = [1.0, 2.0, 0.5, 1.5];
        kernel::KernelEstimate::regression(&pts, 1, &vals, 0.1, 1.0).unwrap()
    }

    #[test]
    fn compact_envelope_is_estimate_plus_slab() {
        let est = small_estimate();
        let m = empirical_mass(est.weights(), 1.0, 1);
        let prop = PliableProposal::compact(est, 0.1, m, 1.0).unwrap();
        for x in [0.0, 0.3, 0.77, 1.0] {
            let e = prop.envelope(&[x]);
            assert_relative_eq!(
                e,
                prop.estimate().eval(&[x]) + 0.1,
                max_relative = 1e-14
            );
            assert!(e >= 0.1);
        }
        assert_eq!(prop.envelope(&[1.2]), 0.0);
        assert_eq!(prop.envelope(&[-0.01]), 0.0);
    }

    #[test]
    fn zero_estimate_envelope_is_pure_slab() {
        let est = kernel::KernelEstimate::regression(&[0.4, 0.6, 0.2, 0.9], 2, &[0.0, 0.0], 0.2, 1.0)
            .unwrap();
        let prop = PliableProposal::compact(est, 0.1, 0.0, 1.0).unwrap();
        for xy in [[0.1, 0.9], [0.5, 0.5], [0.99, 0.01]] {
            assert_abs_diff_eq!(prop.envelope(&xy), 0.1, epsilon = 1e-15);
        }
    }

    #[test]
    fn degenerate_proposal_rejected() {
        let est = kernel::KernelEstimate::regression(&[0.5], 1, &[0.0], 0.2, 1.0).unwrap();
        assert!(matches!(
            PliableProposal::compact(est, 0.0, 0.0, 1.0),
            Err(Error::DegenerateProposal)
        ));
    }

    #[test]
    fn normalized_mode_slab_probability() {
        let est = small_estimate();
        let prop = PliableProposal::compact(est, 0.01, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(prop.normalizer_z(), 1.01, epsilon = 1e-15);
        assert_abs_diff_eq!(prop.r() / prop.normalizer_z(), 0.01 / 1.01, epsilon = 1e-15);
    }

    /// Independent mixture-density oracle: m̂·(weighted Gaussian location
    /// mixture) + r·uniform, all terms recomputed from scratch with the same
    /// far-tail cutoff the estimator documents.
    fn density_oracle(prop: &PliableProposal, x: &[f64]) -> f64 {
        let cut = crate::kernel::CUTOFF;
        let est = prop.estimate();
        let d = est.dim();
        let h = est.bandwidth_h();
        let total_w: f64 = est.weights().iter().sum();
        let mut mix = 0.0;
        let mut c = vec![0.0; d];
        for i in 0..est.len() {
            est.center(i, &mut c);
            let mut k = 1.0;
            for j in 0..d {
                let z = (x[j] - c[j]) / h;
                if z.abs() > cut {
                    k = 0.0;
                    break;
                }
                k *= (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt() / h;
            }
            mix += est.weights()[i] / total_w * k;
        }
        (prop.m_hat() * mix + prop.slab_density()) / prop.normalizer_z()
    }

    #[test]
    fn envelope_equals_z_times_density() {
        let est = small_estimate();
        let m = empirical_mass(est.weights(), 1.0, 1);
        let prop = PliableProposal::compact(est, 0.07, m, 1.0).unwrap();
        for x in [0.05, 0.31, 0.5, 0.93] {
            let lhs = prop.envelope(&[x]);
            let rhs = prop.normalizer_z() * density_oracle(&prop, &[x]);
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
        }
    }

    #[test]
    fn proposal_mass_is_one_with_box_spillover() {
        // Quadrature of the density over the box plus the analytic Gaussian
        // mass that escaped the box must give 1.
        use statrs::distribution::{ContinuousCDF, Normal};
        let est = small_estimate();
        let m = empirical_mass(est.weights(), 1.0, 1);
        let prop = PliableProposal::compact(est, 0.05, m, 1.0).unwrap();

        let grid = 20_000usize;
        let step = 1.0 / grid as f64;
        let mut inside = 0.0;
        for k in 0..=grid {
            let w = if k == 0 || k == grid {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            inside += w * prop.envelope(&[k as f64 * step]) / prop.normalizer_z();
        }
        inside *= step / 3.0;

        let std = Normal::new(0.0, 1.0).unwrap();
        let h = prop.estimate().bandwidth_h();
        let total_w: f64 = prop.estimate().weights().iter().sum();
        let mut escaped = 0.0;
        let mut c = [0.0];
        for i in 0..prop.estimate().len() {
            prop.estimate().center(i, &mut c);
            let kept = std.cdf((1.0 - c[0]) / h) - std.cdf(-c[0] / h);
            escaped += prop.estimate().weights()[i] / total_w * (1.0 - kept);
        }
        escaped *= prop.m_hat() / prop.normalizer_z();
        assert_abs_diff_eq!(inside + escaped, 1.0, epsilon = 1e-4);
    }

    #[test]
    fn component_frequencies_match_probabilities() {
        let est = small_estimate();
        let m = empirical_mass(est.weights(), 1.0, 1);
        let r = 0.8;
        let prop = PliableProposal::compact(est, r, m, 1.0).unwrap();
        let mut rng = crate::rng::phase_rng(42, 0x71);
        let n = 1_000_000usize;
        let mut slab = 0usize;
        let mut buf = [0.0];
        for _ in 0..n {
            if prop.sample_into(&mut rng, &mut buf) == Component::Slab {
                slab += 1;
            }
        }
        let p = r / (m + r);
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        assert!(
            ((slab as f64 / n as f64) - p).abs() < 3.0 * sd,
            "slab fraction {} vs expected {p}",
            slab as f64 / n as f64
        );
    }

    #[test]
    fn single_center_draws_are_gaussian() {
        let est = kernel::KernelEstimate::regression(&[0.5], 1, &[1.0], 0.1, 1.0).unwrap();
        let prop = PliableProposal::compact(est, 0.0, 1.0, 1.0).unwrap();
        let mut rng = crate::rng::phase_rng(7, 0x72);
        let n = 100_000usize;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        let mut buf = [0.0];
        for _ in 0..n {
            prop.sample_into(&mut rng, &mut buf);
            sum += buf[0];
            sumsq += buf[0] * buf[0];
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!((mean - 0.5).abs() < 3.0 * 0.1 / (n as f64).sqrt());
        assert_abs_diff_eq!(var.sqrt(), 0.1, epsilon = 2e-3);
    }

    #[test]
    fn center_selection_tracks_weights() {
        // Two well-separated centers with 3:1 weights; draws near each center
        // should split 3:1.
        let est =
            kernel::KernelEstimate::regression(&[0.2, 0.8], 1, &[3.0, 1.0], 0.01, 1.0).unwrap();
        let prop = PliableProposal::compact(est, 0.0, 1.0, 1.0).unwrap();
        let mut rng = crate::rng::phase_rng(13, 0x73);
        let mut near_low = 0usize;
        let n = 200_000usize;
        let mut buf = [0.0];
        for _ in 0..n {
            prop.sample_into(&mut rng, &mut buf);
            if buf[0] < 0.5 {
                near_low += 1;
            }
        }
        let p = 0.75;
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        assert!(((near_low as f64 / n as f64) - p).abs() < 4.0 * sd);
    }

    #[test]
    fn extended_envelope_term_by_term() {
        use rand::Rng as _;
        let pts = [0.3, -0.8, 1.4, 0.1, -1.9, 0.6];
        let h = 0.35;
        let cut = 1.7;
        let est = kernel::KernelEstimate::density(&pts, 1, h, cut).unwrap();
        let g = IsotropicGaussian::new(vec![0.0], 2.0).unwrap();
        let m_const = 2.5;
        let gbar = tail_mass_gaussian(&g, cut).unwrap();
        let ball_radius = 3.0;
        let r = 0.2;
        let prop = PliableProposal::extended(
            est,
            r,
            ball_radius,
            EprsTail { g: g.clone(), m_const, cut_radius: cut, tail_mass: gbar },
        )
        .unwrap();
        assert_relative_eq!(
            prop.normalizer_z(),
            1.0 + r + m_const * gbar,
            max_relative = 1e-14
        );

        let mut rng = crate::rng::phase_rng(3, 0x74);
        let slab_density = r / (2.0 * ball_radius);
        for _ in 0..200 {
            let x: f64 = rng.gen_range(-4.0..4.0);
            let norm = x.abs();
            // Hand-summed oracle, each indicator written out.
            let mut want = 0.0;
            if norm <= cut {
                let mut kde = 0.0;
                for &p in &pts {
                    let z = (p - x) / h;
                    if z.abs() <= crate::kernel::CUTOFF {
                        kde += (-0.5 * z * z).exp();
                    }
                }
                kde *= 1.0 / (pts.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
                want += kde;
            }
            if norm <= ball_radius {
                want += slab_density;
            }
            if norm >= cut {
                want += m_const * g.density(&[x]);
            }
            assert_relative_eq!(prop.envelope(&[x]), want, max_relative = 1e-12, epsilon = 1e-14);
        }
    }

    #[test]
    fn extended_components_land_in_their_regions() {
        let pts = [0.3, -0.8, 1.4, 0.1, -1.9, 0.6];
        let cut = 1.7;
        let est = kernel::KernelEstimate::density(&pts, 1, 0.35, cut).unwrap();
        let g = IsotropicGaussian::new(vec![0.0], 2.0).unwrap();
        let gbar = tail_mass_gaussian(&g, cut).unwrap();
        let prop = PliableProposal::extended(
            est,
            0.2,
            3.0,
            EprsTail { g, m_const: 2.5, cut_radius: cut, tail_mass: gbar },
        )
        .unwrap();
        let mut rng = crate::rng::phase_rng(9, 0x75);
        let mut buf = [0.0];
        let mut seen_tail = 0;
        let mut seen_slab = 0;
        for _ in 0..50_000 {
            match prop.sample_into(&mut rng, &mut buf) {
                Component::Tail => {
                    assert!(buf[0].abs() >= cut);
                    seen_tail += 1;
                }
                Component::Slab => {
                    assert!(buf[0].abs() <= 3.0);
                    seen_slab += 1;
                }
                Component::Estimate => {}
            }
        }
        assert!(seen_tail > 0);
        assert!(seen_slab > 0);
    }

    #[test]
    fn slab_only_proposal_is_uniform() {
        // m̂ = 0 leaves the bare slab; draws should pass a KS test against
        // the uniform CDF.
        let est = kernel::KernelEstimate::regression(&[0.5, 0.5], 2, &[0.0], 0.2, 1.0).unwrap();
        let prop = PliableProposal::compact(est, 0.3, 0.0, 1.0).unwrap();
        let mut pass = 0;
        for seed in 0..10u64 {
            let mut rng = crate::rng::phase_rng(seed, 0x76);
            let mut xs = Vec::with_capacity(2000);
            let mut buf = [0.0, 0.0];
            for _ in 0..2000 {
                assert_eq!(prop.sample_into(&mut rng, &mut buf), Component::Slab);
                xs.push(buf[0]);
            }
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = xs.len() as f64;
            let mut dmax: f64 = 0.0;
            for (i, &x) in xs.iter().enumerate() {
                let lo = (x - i as f64 / n).abs();
                let hi = ((i + 1) as f64 / n - x).abs();
                dmax = dmax.max(lo).max(hi);
            }
            // Asymptotic 1% critical value 1.63/sqrt(n).
            if dmax < 1.63 / n.sqrt() {
                pass += 1;
            }
        }
        assert!(pass >= 9, "uniform KS passed only {pass}/10");
    }

    #[test]
    fn envelope_dominates_when_r_covers_sup_error() {
        use rand::Rng as _;
        let t = crate::targets::cosine_target(1.0);
        let n = 20_000usize;
        let mut rng = crate::rng::phase_rng(17, 0x78);
        let pts: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let vals: Vec<f64> = pts.iter().map(|&x| t.eval_unmetered(&[x])).collect();
        let h = kernel::bandwidth(n, 1.0, 0.01, 2.0, 1).unwrap();
        let est = kernel::KernelEstimate::regression(&pts, 1, &vals, h, 1.0).unwrap();
        let sup_err = (0..2000)
            .map(|k| {
                let x = k as f64 / 1999.0;
                (t.eval_unmetered(&[x]) - est.eval(&[x])).abs()
            })
            .fold(0.0f64, f64::max);
        let m = empirical_mass(&vals, 1.0, 1);
        let prop = PliableProposal::compact(est, sup_err * 1.0001, m, 1.0).unwrap();
        for k in 0..2000 {
            let x = k as f64 / 1999.0;
            assert!(prop.envelope(&[x]) >= t.eval_unmetered(&[x]));
        }
    }
}
