//! Quadrature rules.
//!
//! Integrals against `tʲ sin(λt + jπ/2)` and `tʲ cos(λt + jπ/2)` (the j-th
//! λ-derivatives of `sin λt` and `cos λt`) are evaluated by integrating the
//! piecewise-linear interpolant of the sampled factor exactly, panel by panel.
//! For non-oscillatory integrands this is the trapezoidal rule; unlike the
//! plain trapezoidal rule its error does not grow with `|λ|`.

use crate::gridfn::Grid;
use crate::prelude::*;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            // three-term recurrence for P_n(x) and P_{n-1}(x)
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss-Legendre rule mapped to `[lo, hi]`.
pub fn gauss_legendre_on(n: usize, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    (
        x.iter().map(|xi| mid + half * xi).collect(),
        w.iter().map(|wi| half * wi).collect(),
    )
}

/// Trapezoidal weights for a uniform grid.
pub fn trapezoid_weights(grid: &Grid) -> Vec<f64> {
    let h = grid.step();
    let n = grid.n_points();
    let mut w = vec![h; n];
    w[0] = 0.5 * h;
    w[n - 1] = 0.5 * h;
    w
}

/// Which factor of the λ-derivative pair an integral is taken against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trig {
    /// `dʲ/dλʲ sin λt = tʲ sin(λt + jπ/2)`
    Sin,
    /// `dʲ/dλʲ cos λt = tʲ cos(λt + jπ/2)`
    Cos,
}

/// Evaluates `dʲ/dλʲ sin λt` or `dʲ/dλʲ cos λt`.
pub fn trig_derivative(kind: Trig, lambda: C64, t: f64, order: usize) -> C64 {
    let phase = lambda * t + C64::new(order as f64 * PI / 2.0, 0.0);
    let tj = t.powi(order as i32);
    match kind {
        Trig::Sin => phase.sin() * tj,
        Trig::Cos => phase.cos() * tj,
    }
}

const PANEL_NODES: usize = 8;

/// Nodal weights `(ν_sin, ν_cos)` such that for a sampled `u`
///
/// ```text
///     ∫ I[u](t) · dʲ/dλʲ sin λt dt = Σᵢ ν_sin[i] u[i]
/// ```
///
/// with `I[u]` the piecewise-linear interpolant on `grid` (likewise for cos).
pub fn oscillatory_weights(grid: &Grid, lambda: C64, order: usize) -> (Vec<C64>, Vec<C64>) {
    let n = grid.n_points();
    let h = grid.step();
    let (xi, wi) = gauss_legendre_on(PANEL_NODES, 0.0, 1.0);
    let mut ws = vec![C64::new(0.0, 0.0); n];
    let mut wc = vec![C64::new(0.0, 0.0); n];
    let shift = C64::new(order as f64 * PI / 2.0, 0.0);
    for i in 0..n - 1 {
        let t0 = grid.node(i);
        for (a, w) in xi.iter().zip(&wi) {
            let t = t0 + a * h;
            let phase = lambda * t + shift;
            let tj = t.powi(order as i32) * w * h;
            let s = phase.sin() * tj;
            let c = phase.cos() * tj;
            ws[i] += s * (1.0 - a);
            ws[i + 1] += s * *a;
            wc[i] += c * (1.0 - a);
            wc[i + 1] += c * *a;
        }
    }
    (ws, wc)
}
