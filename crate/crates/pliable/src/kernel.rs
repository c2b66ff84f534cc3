//! Gaussian product kernels, the bandwidth schedule, and the two kernel
//! estimators: the regression form f̂ (weights = observed f values, scale
//! A^d/(N h^d)) and the density form f̃ (unit weights, scale 1/(N h^d),
//! truncated to a centered ball).

use crate::error::{Error, Result};
use crate::fastexp::weighted_exp_sum;

/// Kernel-family constants of the smoothness assumptions: uniform bound C,
/// second moment C', Hölder constant C'' and exponent ε. They describe the
/// kernel for verification purposes; evaluation itself is always the product
/// standard Gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub uniform_bound: f64,
    pub second_moment: f64,
    pub holder_const: f64,
    pub holder_exponent: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec {
            uniform_bound: 1.0,
            second_moment: 1.0,
            holder_const: 4.0,
            holder_exponent: 1.0,
        }
    }
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

impl KernelSpec {
    /// ∏ K₀(uᵢ) with K₀ the standard Gaussian density.
    pub fn value(&self, u: &[f64]) -> f64 {
        let q: f64 = u.iter().map(|v| v * v).sum();
        INV_SQRT_2PI.powi(u.len() as i32) * (-0.5 * q).exp()
    }
}

/// Free-function form of [`KernelSpec::value`].
pub fn kernel_value(spec: &KernelSpec, u: &[f64]) -> f64 {
    spec.value(u)
}

/// Smoothing bandwidth h = (log(NA/δ)/N)^{1/(2s+d)}.
pub fn bandwidth(n_points: usize, a: f64, delta: f64, s: f64, d: usize) -> Result<f64> {
    bandwidth_with_exponent(n_points, a, delta, 1.0 / (2.0 * s + d as f64))
}

/// Same schedule with the exponent supplied directly. Exists so fault
/// injection (the validate command's mutation check) can corrupt the exponent
/// without touching the production path.
pub fn bandwidth_with_exponent(
    n_points: usize,
    a: f64,
    delta: f64,
    exponent: f64,
) -> Result<f64> {
    if n_points < 2 {
        return Err(Error::InvalidParameter(format!(
            "bandwidth needs N >= 2, got {n_points}"
        )));
    }
    let arg = n_points as f64 * a / delta;
    if !(arg > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "bandwidth log argument N*A/delta = {arg} must exceed 1"
        )));
    }
    Ok((arg.ln() / n_points as f64).powf(exponent))
}

/// Per-point skip threshold: contributions with ‖(center−x)/h‖∞ above this
/// are dropped (each dropped Gaussian factor is below 4e−6 of the mode, and
/// the envelope slab is wider than the dropped tail by many orders).
pub(crate) const CUTOFF: f64 = 5.0;

const BLOCK: usize = 512;

/// Survivors of the cutoff, buffered so their exponentials evaluate in
/// blocks: the gather loop stays branch-free (conditional length bump
/// instead of a data-dependent jump) and the exp chains overlap instead of
/// serializing behind one accumulator.
struct ExpBlock {
    args: [f64; BLOCK],
    ws: [f64; BLOCK],
    len: usize,
}

impl ExpBlock {
    fn new() -> Self {
        ExpBlock {
            args: [0.0; BLOCK],
            ws: [0.0; BLOCK],
            len: 0,
        }
    }

    #[inline(always)]
    fn push(&mut self, arg: f64, w: f64, keep: bool, sum: &mut f64) {
        self.args[self.len] = arg;
        self.ws[self.len] = w;
        self.len += keep as usize;
        if self.len == BLOCK {
            self.drain(sum);
        }
    }

    fn drain(&mut self, sum: &mut f64) {
        *sum += weighted_exp_sum(&self.args[..self.len], &self.ws[..self.len]);
        self.len = 0;
    }
}

/// A kernel estimate: weighted Gaussian bumps of common bandwidth around
/// stored centers, evaluated as scale · Σᵢ wᵢ K((cᵢ−x)/h).
///
/// Centers are stored column-major and bucketed into a uniform cell grid so
/// evaluation only visits points that can pass the cutoff; the visited set
/// (and therefore the result) is a deterministic function of the inputs.
#[derive(Debug, Clone)]
pub struct KernelEstimate {
    dim: usize,
    n: usize,
    /// Column-major coordinates in bucket order: coords[c*n + i].
    coords: Vec<f64>,
    /// Weights in the same bucket order.
    weights: Vec<f64>,
    bandwidth_h: f64,
    scale: f64,
    truncation_radius: Option<f64>,
    // Bucket grid.
    grid_lo: [f64; 3],
    cells_per_axis: [usize; 3],
    cell_side: f64,
    window: usize,
    cell_offsets: Vec<u32>,
}

impl KernelEstimate {
    /// Regression estimate f̂: weights are the observed f(Xᵢ) ≥ 0 on the box
    /// [0,A]^d, scale A^d/(N h^d), no truncation.
    pub fn regression(points: &[f64], dim: usize, values: &[f64], h: f64, a: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter(
                "regression estimate needs at least one point".into(),
            ));
        }
        if dim == 0 || points.len() % dim != 0 || points.len() / dim != values.len() {
            return Err(Error::InvalidParameter(format!(
                "point/value shape mismatch: {} coords, dim {dim}, {} values",
                points.len(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::InvalidTarget(format!(
                "negative or non-finite target value {v}"
            )));
        }
        if !(h > 0.0) {
            return Err(Error::InvalidParameter(format!("bandwidth {h} must be positive")));
        }
        let n = values.len();
        let scale = a.powi(dim as i32) / (n as f64 * h.powi(dim as i32));
        Ok(Self::assemble(points, dim, values.to_vec(), h, scale, None))
    }

    /// Density estimate f̃: unit weights, scale 1/(N h^d), evaluation zero
    /// outside the centered ball of the given radius.
    pub fn density(points: &[f64], dim: usize, h: f64, truncation_radius: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter(
                "density estimate needs at least one point".into(),
            ));
        }
        if dim == 0 || points.len() % dim != 0 {
            return Err(Error::InvalidParameter(format!(
                "coordinate count {} not divisible by dim {dim}",
                points.len()
            )));
        }
        if !(h > 0.0) {
            return Err(Error::InvalidParameter(format!("bandwidth {h} must be positive")));
        }
        let n = points.len() / dim;
        let scale = 1.0 / (n as f64 * h.powi(dim as i32));
        Ok(Self::assemble(
            points,
            dim,
            vec![1.0; n],
            h,
            scale,
            Some(truncation_radius),
        ))
    }

    fn assemble(
        points: &[f64],
        dim: usize,
        values: Vec<f64>,
        h: f64,
        scale: f64,
        truncation_radius: Option<f64>,
    ) -> Self {
        let n = values.len();
        debug_assert!(dim <= 3, "benchmark targets are d <= 3");

        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for i in 0..n {
            for c in 0..dim {
                let v = points[i * dim + c];
                lo[c] = lo[c].min(v);
                hi[c] = hi[c].max(v);
            }
        }

        // Cell side defaults to half the cutoff radius (window of ±2 cells);
        // widen the cells if a tiny bandwidth would blow up the cell count.
        let mut cell_side = 0.5 * CUTOFF * h;
        let max_cells = 4 * n + 64;
        loop {
            let total: usize = (0..dim)
                .map(|c| (((hi[c] - lo[c]) / cell_side).floor() as usize + 1).max(1))
                .product();
            if total <= max_cells {
                break;
            }
            cell_side *= 2.0;
        }
        let window = ((CUTOFF * h) / cell_side).ceil() as usize;

        let mut cells_per_axis = [1usize; 3];
        for c in 0..dim {
            cells_per_axis[c] = (((hi[c] - lo[c]) / cell_side).floor() as usize + 1).max(1);
        }
        let total_cells: usize = cells_per_axis[..dim].iter().product();

        let cell_of = |i: usize| -> usize {
            let mut id = 0usize;
            for c in 0..dim {
                let idx = (((points[i * dim + c] - lo[c]) / cell_side).floor() as usize)
                    .min(cells_per_axis[c] - 1);
                id = id * cells_per_axis[c] + idx;
            }
            id
        };

        // Counting sort into bucket order.
        let mut counts = vec![0u32; total_cells + 1];
        for i in 0..n {
            counts[cell_of(i) + 1] += 1;
        }
        for k in 1..counts.len() {
            counts[k] += counts[k - 1];
        }
        let mut coords = vec![0.0f64; n * dim];
        let mut weights = vec![0.0f64; n];
        let mut cursor = counts.clone();
        for i in 0..n {
            let cid = cell_of(i);
            let slot = cursor[cid] as usize;
            cursor[cid] += 1;
            for c in 0..dim {
                coords[c * n + slot] = points[i * dim + c];
            }
            weights[slot] = values[i];
        }

        KernelEstimate {
            dim,
            n,
            coords,
            weights,
            bandwidth_h: h,
            scale,
            truncation_radius,
            grid_lo: lo,
            cells_per_axis,
            cell_side,
            window,
            cell_offsets: counts,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bandwidth_h(&self) -> f64 {
        self.bandwidth_h
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn truncation_radius(&self) -> Option<f64> {
        self.truncation_radius
    }

    /// Weights in internal (bucket) order; sums and resampling don't care
    /// about the order, and the matching center is [`Self::center`] at the
    /// same index.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Coordinates of the stored center at internal index `i`.
    pub fn center(&self, i: usize, out: &mut [f64]) {
        for c in 0..self.dim {
            out[c] = self.coords[c * self.n + i];
        }
    }

    /// scale · Σᵢ wᵢ ∏ₖ K₀((cᵢₖ−xₖ)/h), with the far-tail cutoff and, for
    /// density estimates, the ball-truncation indicator.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        if let Some(rad) = self.truncation_radius {
            let norm2: f64 = x.iter().map(|v| v * v).sum();
            if norm2 > rad * rad {
                return 0.0;
            }
        }

        let inv_h = 1.0 / self.bandwidth_h;
        let mut sum = 0.0f64;

        let mut lo_idx = [0usize; 3];
        let mut hi_idx = [0usize; 3];
        for c in 0..self.dim {
            let raw = ((x[c] - self.grid_lo[c]) / self.cell_side).floor();
            let center = if raw < 0.0 { 0usize } else { raw as usize };
            lo_idx[c] = center.saturating_sub(self.window);
            hi_idx[c] = (center + self.window).min(self.cells_per_axis[c] - 1);
            if raw < -(self.window as f64) {
                // Entire window below the populated grid on this axis.
                lo_idx[c] = 1;
                hi_idx[c] = 0;
            }
        }

        let norm = INV_SQRT_2PI.powi(self.dim as i32);
        let n = self.n;
        let cut = CUTOFF * CUTOFF;
        let mut block = ExpBlock::new();
        match self.dim {
            1 => {
                let xs = &self.coords[..n];
                for cx in lo_idx[0]..=hi_idx[0] {
                    let a = self.cell_offsets[cx] as usize;
                    let b = self.cell_offsets[cx + 1] as usize;
                    for i in a..b {
                        let z = (xs[i] - x[0]) * inv_h;
                        let q = z * z;
                        block.push(-0.5 * q, self.weights[i], q <= cut, &mut sum);
                    }
                }
            }
            2 => {
                let xs = &self.coords[..n];
                let ys = &self.coords[n..2 * n];
                for cx in lo_idx[0]..=hi_idx[0] {
                    let row = cx * self.cells_per_axis[1];
                    for cy in lo_idx[1]..=hi_idx[1] {
                        let a = self.cell_offsets[row + cy] as usize;
                        let b = self.cell_offsets[row + cy + 1] as usize;
                        for i in a..b {
                            let zx = (xs[i] - x[0]) * inv_h;
                            let zy = (ys[i] - x[1]) * inv_h;
                            let qx = zx * zx;
                            let qy = zy * zy;
                            let keep = (qx <= cut) & (qy <= cut);
                            block.push(-0.5 * (qx + qy), self.weights[i], keep, &mut sum);
                        }
                    }
                }
            }
            _ => {
                let xs = &self.coords[..n];
                let ys = &self.coords[n..2 * n];
                let zs = &self.coords[2 * n..3 * n];
                for cx in lo_idx[0]..=hi_idx[0] {
                    for cy in lo_idx[1]..=hi_idx[1] {
                        let row = (cx * self.cells_per_axis[1] + cy) * self.cells_per_axis[2];
                        for cz in lo_idx[2]..=hi_idx[2] {
                            let a = self.cell_offsets[row + cz] as usize;
                            let b = self.cell_offsets[row + cz + 1] as usize;
                            for i in a..b {
                                let zx = (xs[i] - x[0]) * inv_h;
                                let zy = (ys[i] - x[1]) * inv_h;
                                let zz = (zs[i] - x[2]) * inv_h;
                                let (qx, qy, qz) = (zx * zx, zy * zy, zz * zz);
                                let keep = (qx <= cut) & (qy <= cut) & (qz <= cut);
                                block.push(-0.5 * (qx + qy + qz), self.weights[i], keep, &mut sum);
                            }
                        }
                    }
                }
            }
        }
        block.drain(&mut sum);
        self.scale * norm * sum
    }
}
