//! The transform pair `(w₁, w₂)` of the characteristic function
//!
//! ```text
//!     Δ(λ) = sin λπ + ∫₀^π (w₁(t) sin λt + w₂(t) cos λt) dt
//! ```
//!
//! and the E-values built from it.
//!
//! In each channel `σ = ±1` the solution is a Neumann series in the kernel,
//! which gives `(w₁, w₂)` directly as a series of convolution powers:
//!
//! ```text
//!     g_σ(t) = Σ_{n≥1} (σi)ⁿ (π − t)ⁿ / n! · m_σ^{*n}(t),
//!     w₁(π − t) = (g₊ + g₋)/2,   w₂(π − t) = i (g₊ − g₋)/2.
//! ```
//!
//! Expanding `m_σ^{*n} = Σ_j C(n, j) σ^{n−j} iⁿ⁻ʲ p^{*j} * q^{*(n−j)}` gives
//! real coefficients with `Σ_j |·| = 2ⁿ⁻¹` for each component; see
//! [`series_coefficients`]. [`w_from_kernel`] evaluates the series;
//! [`extract_w`] instead fits `(w₁, w₂)` to samples of `Δ` and serves as an
//! independent check.

use nalgebra::{DMatrix, DVector};

use crate::basis::Subspectrum;
use crate::families::KernelPair;
use crate::forward::Propagator;
use crate::gridfn::{convolve, Grid, GridFunction};
use crate::linalg;
use crate::prelude::*;
use crate::quad::{oscillatory_weights, trig_derivative, Trig};

/// `(w₁, w₂)` sampled on a common grid.
#[derive(Debug, Clone)]
pub struct WPair {
    w1: GridFunction,
    w2: GridFunction,
}

impl WPair {
    pub fn new(w1: GridFunction, w2: GridFunction) -> Result<Self> {
        if !w1.grid().same_as(w2.grid()) {
            return Err(Error::invalid("w₁ and w₂ must share a grid"));
        }
        if !(w1.is_finite() && w2.is_finite()) {
            return Err(Error::invalid("w samples must be finite"));
        }
        Ok(Self { w1, w2 })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { w1: GridFunction::zeros(grid), w2: GridFunction::zeros(grid) }
    }

    pub fn grid(&self) -> &Grid {
        self.w1.grid()
    }

    pub fn w1(&self) -> &GridFunction {
        &self.w1
    }

    pub fn w2(&self) -> &GridFunction {
        &self.w2
    }

    pub fn restrict(&self, sub: &Grid) -> Result<WPair> {
        Ok(Self { w1: self.w1.restrict(sub)?, w2: self.w2.restrict(sub)? })
    }

    /// `(‖w₁‖² + ‖w₂‖²)^{1/2}` (trapezoidal).
    pub fn l2_norm(&self) -> f64 {
        (self.w1.l2_norm().powi(2) + self.w2.l2_norm().powi(2)).sqrt()
    }

    pub fn sub(&self, other: &WPair) -> Result<WPair> {
        Ok(Self { w1: self.w1.sub(&other.w1)?, w2: self.w2.sub(&other.w2)? })
    }

    pub fn max_abs(&self) -> f64 {
        self.w1.max_abs().max(self.w2.max_abs())
    }

    /// `∫ (w₁ · dʲ/dλʲ sin λt + w₂ · dʲ/dλʲ cos λt) dt` over the pair's grid,
    /// bilinear (no conjugation), integrating the piecewise-linear interpolant
    /// of `w` exactly against the oscillatory factor.
    pub fn pairing(&self, lambda: C64, order: usize) -> C64 {
        let (ws, wc) = oscillatory_weights(self.grid(), lambda, order);
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..ws.len() {
            acc += ws[i] * self.w1.values()[i] + wc[i] * self.w2.values()[i];
        }
        acc
    }
}

const SERIES_MAX_TERMS: usize = 80;

/// Sum over `n ≥ n_start` of `(σi)ⁿ (π − t)ⁿ / n! · m_σ^{*n}(t)` at the nodes.
pub(crate) fn channel_series(kernel: &KernelPair, sigma: f64, n_start: usize) -> Result<Vec<C64>> {
    channel_series_range(kernel, sigma, n_start, SERIES_MAX_TERMS)
}

/// As [`channel_series`], for `n_start ≤ n ≤ n_end`.
pub(crate) fn channel_series_range(
    kernel: &KernelPair,
    sigma: f64,
    n_start: usize,
    n_end: usize,
) -> Result<Vec<C64>> {
    let grid = *kernel.grid();
    let m = kernel.channel(sigma);
    let mut power = m.clone();
    let mut acc = vec![C64::new(0.0, 0.0); grid.n_points()];
    let mut coeff = C64::new(1.0, 0.0);
    for n in 1..=n_end.min(SERIES_MAX_TERMS) {
        if n > 1 {
            power = convolve(&power, &m)?;
        }
        coeff *= I * sigma / n as f64;
        let mut term_max: f64 = 0.0;
        if n >= n_start {
            for (i, t) in grid.nodes().enumerate() {
                let term = coeff * (PI - t).powi(n as i32) * power.values()[i];
                term_max = term_max.max(term.norm());
                acc[i] += term;
            }
        } else {
            term_max = f64::INFINITY;
        }
        let acc_max = acc.iter().fold(0.0f64, |a, v| a.max(v.norm()));
        if m.max_abs() == 0.0 {
            return Ok(acc);
        }
        if n == n_end || term_max <= 1e-17 * (1.0 + acc_max) {
            return Ok(acc);
        }
        if !power.is_finite() {
            break;
        }
    }
    Err(Error::Convergence { iterations: SERIES_MAX_TERMS, history: Vec::new() })
}

/// `(w₁, w₂)` on the kernel grid, from the convolution-power series.
pub fn w_from_kernel(kernel: &KernelPair) -> Result<WPair> {
    let gp = channel_series(kernel, 1.0, 1)?;
    let gm = channel_series(kernel, -1.0, 1)?;
    let grid = *kernel.grid();
    // w(s) at s_i = π − t_{n−1−i}: reverse the node order
    let w1: Vec<C64> = gp.iter().zip(&gm).rev().map(|(a, b)| (a + b) * 0.5).collect();
    let w2: Vec<C64> = gp.iter().zip(&gm).rev().map(|(a, b)| I * (a - b) * 0.5).collect();
    WPair::new(GridFunction::new(grid, w1)?, GridFunction::new(grid, w2)?)
}

/// Coefficients `(a_nj, b_nj)`, `j = 0..=n`, of `p^{*j} * q^{*(n−j)}` in the
/// order-`n` terms of `−w₁(π − t)` and `−w₂(π − t)` (each multiplied by
/// `(π − t)ⁿ / n!`): `a_nj = −C(n, j) Re i^{2n−j}`, `b_nj = C(n, j) Im i^{2n−j}`.
pub fn series_coefficients(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = Vec::with_capacity(n + 1);
    let mut b = Vec::with_capacity(n + 1);
    let mut binom = 1.0;
    for j in 0..=n {
        if j > 0 {
            binom = binom * (n - j + 1) as f64 / j as f64;
        }
        // i^{2n−j}, exact
        let (re, im) = match (2 * n - j) % 4 {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        };
        a.push(-binom * re);
        b.push(binom * im);
    }
    (a, b)
}

/// Settings for [`extract_w`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractOptions {
    /// Tikhonov weight relative to the largest diagonal entry of the Gram matrix.
    pub tikhonov: f64,
    /// Largest accepted condition number of the regularized system.
    pub max_condition: f64,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self { tikhonov: 1e-10, max_condition: 1e12 }
    }
}

/// Result of [`extract_w`].
#[derive(Debug, Clone)]
pub struct Extraction {
    pub w: WPair,
    /// RMS misfit of the fitted data, relative to the RMS of the data (absolute
    /// when the data vanish).
    pub residual: f64,
    pub condition: f64,
}

/// Default real sample points `−N − ½, −N, …, N + ½`.
pub fn default_samples(window: usize) -> Vec<f64> {
    let n = 2 * window as i64 + 1;
    (-n..=n).map(|i| i as f64 * 0.5).collect()
}

/// Minimum-norm Tikhonov fit of `(w₁, w₂)` on `grid` to data
/// `d_i ≈ ∫ (w₁ sin λ_i t + w₂ cos λ_i t) dt` at real `λ_i`.
pub fn fit_w(samples: &[f64], data: &[C64], grid: Grid, opts: &ExtractOptions) -> Result<Extraction> {
    if samples.is_empty() || samples.len() != data.len() {
        return Err(Error::invalid("need one datum per λ sample"));
    }
    let nodes: Vec<f64> = grid.nodes().collect();
    let omega = crate::quad::trapezoid_weights(&grid);
    let ns = samples.len();
    let mut gram = DMatrix::<C64>::zeros(ns, ns);
    for i in 0..ns {
        for l in i..ns {
            let d = samples[i] - samples[l];
            let v: f64 = nodes.iter().zip(&omega).map(|(t, w)| w * (d * t).cos()).sum();
            gram[(i, l)] = C64::new(v, 0.0);
            gram[(l, i)] = C64::new(v, 0.0);
        }
    }
    let diag_max = (0..ns).map(|i| gram[(i, i)].re).fold(0.0, f64::max);
    let alpha = opts.tikhonov * diag_max;
    let mut reg = gram.clone();
    for i in 0..ns {
        reg[(i, i)] += alpha;
    }
    let ev = linalg::hermitian_eigenvalues(reg.clone());
    let condition = if ev[0] > 0.0 { ev[ns - 1] / ev[0] } else { f64::INFINITY };
    if !(condition <= opts.max_condition) {
        return Err(Error::Conditioning { condition, limit: opts.max_condition });
    }
    let rhs = DVector::from_column_slice(data);
    let c = linalg::solve_dense(reg, rhs.clone())?;
    let fitted = &gram * &c;
    let misfit = (fitted - &rhs).norm();
    let scale = rhs.norm();
    let residual = if scale > 0.0 { misfit / scale } else { misfit };
    let mut w1 = vec![C64::new(0.0, 0.0); nodes.len()];
    let mut w2 = vec![C64::new(0.0, 0.0); nodes.len()];
    for (j, t) in nodes.iter().enumerate() {
        for (i, lam) in samples.iter().enumerate() {
            w1[j] += c[i] * (lam * t).sin();
            w2[j] += c[i] * (lam * t).cos();
        }
    }
    let w = WPair::new(GridFunction::new(grid, w1)?, GridFunction::new(grid, w2)?)?;
    Ok(Extraction { w, residual, condition })
}

/// Fits `(w₁, w₂)` on the kernel grid to `Δ(λ_i) − sin λ_iπ`, with `Δ` from the
/// forward solver.
pub fn extract_w(kernel: &KernelPair, samples: &[f64], opts: &ExtractOptions) -> Result<Extraction> {
    let prop = Propagator::new(kernel);
    let mut data = Vec::with_capacity(samples.len());
    for &l in samples {
        let lambda = C64::new(l, 0.0);
        data.push(prop.char_fn(lambda)? - (lambda * PI).sin());
    }
    fit_w(samples, &data, *kernel.grid(), opts)
}

/// `sin λπ + ∫₀^π (w₁ sin λt + w₂ cos λt) dt` for `w` on `(0, π)`.
pub fn synthesize_char_fn(w: &WPair, lambda: C64) -> C64 {
    (lambda * PI).sin() + w.pairing(lambda, 0)
}

/// `dʲ/dλʲ E(λ) = −dʲ/dλʲ sin λπ − ∫_b^π (w₁ dʲ/dλʲ sin λt + w₂ dʲ/dλʲ cos λt) dt`
/// with `w_tail` on `(b, π)`.
pub fn e_target(lambda: C64, order: usize, w_tail: &WPair) -> C64 {
    -trig_derivative(Trig::Sin, lambda, PI, order) - w_tail.pairing(lambda, order)
}

/// `∫₀^b (w₁ dʲ/dλʲ sin λt + w₂ dʲ/dλʲ cos λt) dt` with `w_head` on `(0, b)`.
pub fn e_moment(lambda: C64, order: usize, w_head: &WPair) -> C64 {
    w_head.pairing(lambda, order)
}

/// E-value derivatives at one distinct eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct EValue {
    pub lambda: C64,
    /// `dʲ/dλʲ E(λ)` for `j = 0..m − 1`.
    pub derivatives: Vec<C64>,
}

/// One entry per distinct eigenvalue, in subspectrum order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EValues {
    pub entries: Vec<EValue>,
}

impl EValues {
    /// All derivatives in basis order (eigenvalue, then `j`).
    pub fn flattened(&self) -> Vec<C64> {
        self.entries.iter().flat_map(|e| e.derivatives.iter().copied()).collect()
    }

    pub fn count(&self) -> usize {
        self.entries.iter().map(|e| e.derivatives.len()).sum()
    }
}

/// [`e_target`] for every `(λ_k, j < m_k)` of `sub`.
pub fn e_targets(sub: &Subspectrum, w_tail: &WPair) -> EValues {
    EValues {
        entries: sub
            .values()
            .iter()
            .map(|&(lambda, m)| EValue {
                lambda,
                derivatives: (0..m).map(|j| e_target(lambda, j, w_tail)).collect(),
            })
            .collect(),
    }
}

/// [`e_moment`] for every `(λ_k, j < m_k)` of `sub`.
pub fn e_moments(sub: &Subspectrum, w_head: &WPair) -> EValues {
    EValues {
        entries: sub
            .values()
            .iter()
            .map(|&(lambda, m)| EValue {
                lambda,
                derivatives: (0..m).map(|j| e_moment(lambda, j, w_head)).collect(),
            })
            .collect(),
    }
}
