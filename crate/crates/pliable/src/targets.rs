//! Benchmark target densities with their domain metadata, plus the clutter
//! dataset generator and the quadrature CDF used as a goodness-of-fit oracle.
//!
//! All box domains live on [0,A]^d internally; a symmetric physical domain
//! [−B,B]^d is translated by a recorded per-axis offset (physical = internal
//! + offset), so the estimators and samplers see a single box convention.

use crate::error::{Error, Result};
use crate::sampler::BudgetMeter;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// [0,A]^d in internal coordinates.
    Box { a: f64 },
    Unbounded,
}

/// An unnormalized density together with the metadata the samplers need.
/// Evaluation inside the domain is metered (one budget unit per call);
/// box targets return 0 outside the box for free.
pub struct TargetDensity {
    name: String,
    params: String,
    dim: usize,
    domain: Domain,
    /// physical coordinate = internal coordinate + offset (every axis).
    offset: f64,
    smoothness_s: f64,
    bound_c: f64,
    normalized: bool,
    analytic_mass: Option<f64>,
    f: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for TargetDensity {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("TargetDensity")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("dim", &self.dim)
            .field("domain", &self.domain)
            .finish()
    }
}

impl TargetDensity {
    /// Programmatic box-domain target; `f` takes internal coordinates.
    #[allow(clippy::too_many_arguments)]
    pub fn bounded(
        name: impl Into<String>,
        params: impl Into<String>,
        dim: usize,
        a: f64,
        offset: f64,
        smoothness_s: f64,
        bound_c: f64,
        normalized: bool,
        analytic_mass: Option<f64>,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        TargetDensity {
            name: name.into(),
            params: params.into(),
            dim,
            domain: Domain::Box { a },
            offset,
            smoothness_s,
            bound_c,
            normalized,
            analytic_mass,
            f: Box::new(f),
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn unbounded(
        name: impl Into<String>,
        params: impl Into<String>,
        dim: usize,
        smoothness_s: f64,
        bound_c: f64,
        normalized: bool,
        analytic_mass: Option<f64>,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        TargetDensity {
            name: name.into(),
            params: params.into(),
            dim,
            domain: Domain::Unbounded,
            offset: 0.0,
            smoothness_s,
            bound_c,
            normalized,
            analytic_mass,
            f: Box::new(f),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &str {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Box side A, if the domain is a box.
    pub fn box_side(&self) -> Option<f64> {
        match self.domain {
            Domain::Box { a } => Some(a),
            Domain::Unbounded => None,
        }
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn smoothness_s(&self) -> f64 {
        self.smoothness_s
    }

    pub fn bound_c(&self) -> f64 {
        self.bound_c
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }

    pub fn analytic_mass(&self) -> Option<f64> {
        self.analytic_mass
    }

    fn in_box(&self, x: &[f64]) -> bool {
        match self.domain {
            Domain::Box { a } => x.iter().all(|&v| (0.0..=a).contains(&v)),
            Domain::Unbounded => true,
        }
    }

    /// Metered evaluation: charges one budget unit for every in-domain call;
    /// out-of-box points return 0 without touching the meter.
    pub fn eval_metered(&self, x: &[f64], meter: &mut BudgetMeter) -> Result<f64> {
        debug_assert_eq!(x.len(), self.dim);
        if !self.in_box(x) {
            return Ok(0.0);
        }
        meter.charge()?;
        Ok((self.f)(x))
    }

    /// Unmetered evaluation for diagnostics and oracles.
    pub fn eval_unmetered(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        if !self.in_box(x) {
            return 0.0;
        }
        (self.f)(x)
    }
}

/// e^{−x}/(1+x)^a on [0,A]: the 1D family whose concentration is steered by
/// the peakiness parameter a.
pub fn peakiness_target(a: f64, big_a: f64) -> TargetDensity {
    TargetDensity::bounded(
        "peakiness",
        format!("a={a},box={big_a}"),
        1,
        big_a,
        0.0,
        2.0,
        1.0,
        false,
        None,
        move |x| (-x[0]).exp() / (1.0 + x[0]).powf(a),
    )
}

/// The peakiness family rescaled to unit mass on its box (Simpson constant
/// computed at construction), declared normalized so the sampler pins m̂ = 1.
pub fn peakiness_normalized_target(a: f64, big_a: f64) -> TargetDensity {
    let raw = move |x: f64| (-x).exp() / (1.0 + x).powf(a);
    let mass = simpson_mass(raw, big_a, 1 << 14);
    TargetDensity::bounded(
        "peakiness-norm",
        format!("a={a},box={big_a}"),
        1,
        big_a,
        0.0,
        2.0,
        1.0 / mass,
        true,
        Some(1.0),
        move |x| raw(x[0]) / mass,
    )
}

/// (1 + sin(4πx − π/2))(1 + sin(4πy − π/2)) on [0,1]²: each factor runs two
/// full periods, so the product is an exact density with sup 4.
pub fn sin2d_target() -> TargetDensity {
    use std::f64::consts::PI;
    let factor = |t: f64| 1.0 + (4.0 * PI * t - PI / 2.0).sin();
    TargetDensity::bounded(
        "sin2d",
        String::new(),
        2,
        1.0,
        0.0,
        2.0,
        4.0,
        true,
        Some(1.0),
        move |x| factor(x[0]) * factor(x[1]),
    )
}

/// 1 − cos(2πx/A) on [0,A]: the smooth 1D target for the estimator-rate
/// checks. Mass is exactly A.
pub fn cosine_target(big_a: f64) -> TargetDensity {
    use std::f64::consts::PI;
    TargetDensity::bounded(
        "cosine",
        format!("box={big_a}"),
        1,
        big_a,
        0.0,
        2.0,
        2.0,
        false,
        Some(big_a),
        move |x| 1.0 - (2.0 * PI * x[0] / big_a).cos(),
    )
}

/// f ≡ 1 on [0,A]^d.
pub fn uniform_target(d: usize, big_a: f64) -> TargetDensity {
    constant_target(d, big_a, 1.0)
}

/// f ≡ c on [0,A]^d.
pub fn constant_target(d: usize, big_a: f64, c: f64) -> TargetDensity {
    let mass = c * big_a.powi(d as i32);
    TargetDensity::bounded(
        "constant",
        format!("d={d},box={big_a},c={c}"),
        d,
        big_a,
        0.0,
        2.0,
        c,
        (mass - 1.0).abs() < 1e-12,
        Some(mass),
        move |_| c,
    )
}

/// Normalized isotropic Gaussian on all of R^d (the EPRS test family).
pub fn gaussian_target(mean: Vec<f64>, sd: f64) -> TargetDensity {
    let d = mean.len();
    let norm = (2.0 * std::f64::consts::PI * sd * sd).powi(d as i32).sqrt().recip();
    let params = format!(
        "mean={},sd={sd}",
        mean.iter().map(|m| m.to_string()).collect::<Vec<_>>().join("/")
    );
    TargetDensity::unbounded(
        "gaussian",
        params,
        d,
        2.0,
        norm,
        true,
        Some(1.0),
        move |x| {
            let q: f64 = x.iter().zip(&mean).map(|(v, m)| (v - m) * (v - m)).sum();
            norm * (-0.5 * q / (sd * sd)).exp()
        },
    )
}

/// The 20-point clutter dataset: half the points in [−5,−3]^d, half in [2,4]^d.
#[derive(Debug, Clone)]
pub struct ClutterDataset {
    dim: usize,
    /// Flat row-major physical coordinates, 20·d values.
    points: Vec<f64>,
    gen_seed: u64,
}

impl ClutterDataset {
    pub fn new(dim: usize, points: Vec<f64>, gen_seed: u64) -> Result<Self> {
        if dim == 0 || points.len() != 20 * dim {
            return Err(Error::InvalidParameter(format!(
                "clutter dataset needs 20 points of dimension {dim}, got {} coords",
                points.len()
            )));
        }
        let in_range = |i: usize, lo: f64, hi: f64| {
            (0..dim).all(|c| (lo..=hi).contains(&points[i * dim + c]))
        };
        let low = (0..20).filter(|&i| in_range(i, -5.0, -3.0)).count();
        let high = (0..20).filter(|&i| in_range(i, 2.0, 4.0)).count();
        if low != 10 || high != 10 {
            return Err(Error::InvalidParameter(format!(
                "clutter dataset must split 10/10 across [−5,−3]^d and [2,4]^d (got {low}/{high})"
            )));
        }
        Ok(ClutterDataset { dim, points, gen_seed })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn gen_seed(&self) -> u64 {
        self.gen_seed
    }
}

/// Draws the paper's dataset: 10 points uniform on [−5,−3]^d followed by 10
/// on [2,4]^d.
pub fn clutter_data_gen(dim: usize, gen_seed: u64) -> ClutterDataset {
    use rand::Rng;
    let mut rng = crate::rng::phase_rng(gen_seed, crate::rng::phase::DATA_GEN);
    let mut points = Vec::with_capacity(20 * dim);
    for block in 0..2 {
        let (lo, hi) = if block == 0 { (-5.0, -3.0) } else { (2.0, 4.0) };
        for _ in 0..10 {
            for _ in 0..dim {
                points.push(rng.gen_range(lo..hi));
            }
        }
    }
    ClutterDataset { dim, points, gen_seed }
}

/// Posterior of the mean of clutter-contaminated Gaussian observations:
/// p(θ) ∝ N(θ; 0, prior_var·I) · ∏ᵢ [(1−w)·N(xᵢ; θ, I) + w·N(xᵢ; 0, clutter_var·I)],
/// restricted to [−B,B]^d and shifted onto [0,2B]^d. The raw posterior values
/// underflow doubles badly (a product of 20 small densities), so evaluation
/// is rescaled by the grid maximum of the log-posterior; the rescaling is a
/// positive constant and leaves the normalized target unchanged.
pub fn clutter_target(
    data: &ClutterDataset,
    w: f64,
    clutter_var: f64,
    prior_var: f64,
    b: f64,
) -> Result<TargetDensity> {
    if !(0.0..1.0).contains(&w) {
        return Err(Error::InvalidParameter(format!("clutter weight {w} outside [0,1)")));
    }
    if !(clutter_var > 0.0) || !(prior_var > 0.0) || !(b > 0.0) {
        return Err(Error::InvalidParameter(
            "clutter variances and box half-width must be positive".into(),
        ));
    }
    let dim = data.dim();
    if dim > 2 {
        return Err(Error::InvalidParameter(format!(
            "clutter posterior supports d in {{1,2}}, got {dim}"
        )));
    }

    let pts = data.points().to_vec();
    let n_data = 20usize;
    let log_norm_unit = -0.5 * (dim as f64) * (2.0 * std::f64::consts::PI).ln();
    let log_norm_clutter = log_norm_unit - 0.5 * (dim as f64) * clutter_var.ln();
    // Per-point clutter-component log densities don't depend on θ.
    let log_clutter: Vec<f64> = (0..n_data)
        .map(|i| {
            let q: f64 = (0..dim).map(|c| pts[i * dim + c].powi(2)).sum();
            log_norm_clutter - 0.5 * q / clutter_var
        })
        .collect();

    let log_post = move |theta: &[f64]| -> f64 {
        let prior_q: f64 = theta.iter().map(|t| t * t).sum();
        let mut lp = -0.5 * (dim as f64) * (2.0 * std::f64::consts::PI * prior_var).ln()
            - 0.5 * prior_q / prior_var;
        for i in 0..n_data {
            let q: f64 = (0..dim).map(|c| (pts[i * dim + c] - theta[c]).powi(2)).sum();
            let log_like = log_norm_unit - 0.5 * q;
            let a = (1.0 - w).ln() + log_like;
            let term = if w == 0.0 {
                a
            } else {
                let bq = w.ln() + log_clutter[i];
                // log(e^a + e^b) without overflow.
                let (hi, lo) = if a >= bq { (a, bq) } else { (bq, a) };
                hi + (lo - hi).exp().ln_1p()
            };
            lp += term;
        }
        lp
    };

    // Reference log level: grid max over the box, so eval sits in [0, ~1].
    let per_axis = if dim == 1 { 4096 } else { 256 };
    let mut log_ref = f64::NEG_INFINITY;
    let mut theta = vec![0.0; dim];
    let mut idx = vec![0usize; dim];
    loop {
        for c in 0..dim {
            theta[c] = -b + 2.0 * b * (idx[c] as f64 + 0.5) / per_axis as f64;
        }
        log_ref = log_ref.max(log_post(&theta));
        let mut c = 0;
        loop {
            idx[c] += 1;
            if idx[c] < per_axis {
                break;
            }
            idx[c] = 0;
            c += 1;
            if c == dim {
                break;
            }
        }
        if c == dim {
            break;
        }
    }

    let params = format!(
        "d={dim},w={w},cvar={clutter_var},pvar={prior_var},b={b},gen_seed={}",
        data.gen_seed()
    );
    Ok(TargetDensity::bounded(
        "clutter",
        params,
        dim,
        2.0 * b,
        -b,
        2.0,
        1.05,
        false,
        None,
        move |x| {
            let theta: Vec<f64> = x.iter().map(|&v| v - b).collect();
            (log_post(&theta) - log_ref).exp()
        },
    ))
}

fn simpson_mass(f: impl Fn(f64) -> f64, big_a: f64, intervals: usize) -> f64 {
    let m = intervals + intervals % 2;
    let step = big_a / m as f64;
    let mut total = f(0.0) + f(big_a);
    for k in 1..m {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        total += w * f(k as f64 * step);
    }
    total * step / 3.0
}

/// Piecewise-linear CDF table built by composite Simpson quadrature of a 1D
/// box target, normalized so cdf(A) = 1.
pub struct NumericCdf {
    a: f64,
    cum: Vec<f64>,
}

/// Quadrature CDF oracle for a 1D box-domain target. `resolution` is the
/// subinterval count (rounded up to even).
pub fn numeric_cdf(target: &TargetDensity, resolution: usize) -> Result<NumericCdf> {
    let a = match (target.dim(), target.domain()) {
        (1, Domain::Box { a }) => a,
        _ => {
            return Err(Error::InvalidParameter(
                "numeric_cdf needs a 1D box-domain target".into(),
            ))
        }
    };
    let m = (resolution + resolution % 2).max(2);
    let step = a / m as f64;
    let vals: Vec<f64> = (0..=m)
        .map(|k| target.eval_unmetered(&[k as f64 * step]))
        .collect();
    let mut cum = vec![0.0f64; m + 1];
    for k in 0..m / 2 {
        let (f0, f1, f2) = (vals[2 * k], vals[2 * k + 1], vals[2 * k + 2]);
        // Integrals of the local interpolating parabola over each half.
        let first = step / 12.0 * (5.0 * f0 + 8.0 * f1 - f2);
        let pair = step / 3.0 * (f0 + 4.0 * f1 + f2);
        cum[2 * k + 1] = (cum[2 * k] + first).max(cum[2 * k]);
        cum[2 * k + 2] = (cum[2 * k] + pair).max(cum[2 * k + 1]);
    }
    let total = cum[m];
    if !(total > 0.0) {
        return Err(Error::DegenerateTarget);
    }
    for v in &mut cum {
        *v /= total;
    }
    cum[m] = 1.0;
    Ok(NumericCdf { a, cum })
}

impl NumericCdf {
    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= self.a {
            return 1.0;
        }
        let m = self.cum.len() - 1;
        let t = x / self.a * m as f64;
        let k = (t as usize).min(m - 1);
        let frac = t - k as f64;
        self.cum[k] + frac * (self.cum[k + 1] - self.cum[k])
    }
}
