//! The vector system attached to a subspectrum and reconstruction of
//! `(w₁, w₂)` on `(0, b)` from E-values.
//!
//! For distinct eigenvalues `λ_k` of multiplicity `m_k` the system consists of
//!
//! ```text
//!     (dʲ/dλʲ sin λt, dʲ/dλʲ cos λt) at λ = λ_k,   j = 0..m_k − 1,
//! ```
//!
//! in `L₂(0, b) ⊕ L₂(0, b)`. The E-values are bilinear pairings (no complex
//! conjugation) of `(w₁, w₂)` with these vectors.

use nalgebra::{DMatrix, DVector};

use crate::gridfn::{Grid, GridFunction};
use crate::linalg;
use crate::prelude::*;
use crate::quad::{oscillatory_weights, trapezoid_weights, trig_derivative, Trig};
use crate::spectrum::Spectrum;
use crate::wtransform::{EValues, WPair};

/// Eigenvalues closer than this are merged into one value with multiplicity.
pub const MERGE_TOL: f64 = 1e-6;

/// A finite part of the spectrum: distinct values with multiplicities, listed
/// in index order, together with the indices they occupy.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspectrum {
    indices: Vec<i64>,
    values: Vec<(C64, usize)>,
}

impl Subspectrum {
    /// From `(k, λ_k)` pairs; values within [`MERGE_TOL`] of each other become
    /// one value with multiplicity.
    pub fn from_pairs(mut pairs: Vec<(i64, C64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::invalid("empty subspectrum"));
        }
        pairs.sort_by_key(|p| p.0);
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::invalid("repeated index in subspectrum"));
        }
        let mut values: Vec<(C64, usize)> = Vec::new();
        for &(_, v) in &pairs {
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::invalid("non-finite eigenvalue"));
            }
            match values.iter_mut().find(|(u, _)| (*u - v).norm() <= MERGE_TOL) {
                Some((_, m)) => *m += 1,
                None => values.push((v, 1)),
            }
        }
        Ok(Self { indices: pairs.iter().map(|p| p.0).collect(), values })
    }

    /// `{λ_{sm} : |s| ≤ S}` taken from a computed spectrum.
    pub fn progression(spectrum: &Spectrum, m: usize, window: usize) -> Result<Self> {
        let mut pairs = Vec::with_capacity(2 * window + 1);
        for s in -(window as i64)..=window as i64 {
            let k = s * m as i64;
            let v = spectrum
                .value_at(k)
                .ok_or_else(|| Error::invalid(format!("spectrum has no eigenvalue with index {k}")))?;
            pairs.push((k, v));
        }
        Self::from_pairs(pairs)
    }

    /// `λ_{sm} = sm`, `|s| ≤ S`: the subspectrum of the zero kernel.
    pub fn unperturbed(m: usize, window: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("m must be positive"));
        }
        let w = window as i64;
        Self::from_pairs((-w..=w).map(|s| (s * m as i64, C64::new((s * m as i64) as f64, 0.0))).collect())
    }

    /// Distinct values with explicit multiplicities; indices are numbered
    /// consecutively from `first_index`.
    pub fn from_values(values: Vec<(C64, usize)>, first_index: i64) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| v.1 == 0) {
            return Err(Error::invalid("subspectrum needs values with positive multiplicities"));
        }
        let total: usize = values.iter().map(|v| v.1).sum();
        Ok(Self { indices: (first_index..first_index + total as i64).collect(), values })
    }

    pub fn indices(&self) -> &[i64] {
        &self.indices
    }

    /// Distinct values and multiplicities.
    pub fn values(&self) -> &[(C64, usize)] {
        &self.values
    }

    /// `Σ m_k`.
    pub fn total_count(&self) -> usize {
        self.values.iter().map(|v| v.1).sum()
    }

    pub fn max_multiplicity(&self) -> usize {
        self.values.iter().map(|v| v.1).max().unwrap_or(0)
    }
}

/// One vector of the system, sampled on the `(0, b)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisVector {
    pub lambda: C64,
    pub order: usize,
    pub v1: Vec<C64>,
    pub v2: Vec<C64>,
}

/// The vector system of a subspectrum on `(0, b)`.
#[derive(Debug, Clone)]
pub struct BasisSystem {
    grid: Grid,
    vectors: Vec<BasisVector>,
}

impl BasisSystem {
    /// Vectors ordered by eigenvalue (in subspectrum order), then derivative order.
    pub fn build(sub: &Subspectrum, grid: Grid) -> Result<Self> {
        if grid.x_start() != 0.0 {
            return Err(Error::invalid("basis grid must start at 0"));
        }
        if sub.values().is_empty() {
            return Err(Error::invalid("empty subspectrum window"));
        }
        let mut vectors = Vec::with_capacity(sub.total_count());
        for &(lambda, m) in sub.values() {
            for order in 0..m {
                let v1 = grid.nodes().map(|t| trig_derivative(Trig::Sin, lambda, t, order)).collect();
                let v2 = grid.nodes().map(|t| trig_derivative(Trig::Cos, lambda, t, order)).collect();
                vectors.push(BasisVector { lambda, order, v1, v2 });
            }
        }
        Ok(Self { grid, vectors })
    }

    pub fn b(&self) -> f64 {
        self.grid.x_end()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn vectors(&self) -> &[BasisVector] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Gram matrix `G_rs = ∫₀^b (v̄_r¹ v_s¹ + v̄_r² v_s²) dt` (trapezoidal).
    pub fn gram(&self) -> DMatrix<C64> {
        let w = trapezoid_weights(&self.grid);
        let n = self.len();
        let mut g = DMatrix::<C64>::zeros(n, n);
        for r in 0..n {
            for s in r..n {
                let (a, b) = (&self.vectors[r], &self.vectors[s]);
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..w.len() {
                    acc += (a.v1[i].conj() * b.v1[i] + a.v2[i].conj() * b.v2[i]) * w[i];
                }
                g[(r, s)] = acc;
                g[(s, r)] = acc.conj();
            }
        }
        g
    }

    /// Ratio of the largest to the smallest eigenvalue of [`Self::gram`].
    pub fn gram_condition(&self) -> f64 {
        let ev = linalg::hermitian_eigenvalues(self.gram());
        let (lo, hi) = (ev[0], ev[ev.len() - 1]);
        if lo > 0.0 {
            hi / lo
        } else {
            f64::INFINITY
        }
    }

    /// Smallest singular value of the synthesis matrix weighted by the square
    /// roots of the trapezoidal weights; `√b` for an orthogonal system, near 0
    /// when the truncated system is (nearly) dependent.
    pub fn completeness_score(&self) -> f64 {
        let w = trapezoid_weights(&self.grid);
        let np = w.len();
        let a = DMatrix::<C64>::from_fn(2 * np, self.len(), |row, col| {
            let v = &self.vectors[col];
            let (i, val) = if row < np { (row, v.v1[row]) } else { (row - np, v.v2[row - np]) };
            val * w[i].sqrt()
        });
        linalg::singular_values(a).into_iter().fold(f64::INFINITY, f64::min)
    }

    /// The vector at `idx` as a [`WPair`].
    pub fn vector_pair(&self, idx: usize) -> WPair {
        let v = &self.vectors[idx];
        WPair::new(
            GridFunction::from_values_unchecked(self.grid, v.v1.clone()),
            GridFunction::from_values_unchecked(self.grid, v.v2.clone()),
        )
        .expect("basis vectors share the grid")
    }
}

/// [`BasisSystem::build`].
pub fn build_basis(sub: &Subspectrum, grid: Grid) -> Result<BasisSystem> {
    BasisSystem::build(sub, grid)
}

const RESIDUAL_FLOOR: f64 = 1e-9;

/// How the reconstructed head is represented.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeadRepresentation {
    /// Combinations `Σ c_r v_r` of the basis vectors themselves.
    Span,
    /// Each component a polynomial of the given degree (Legendre basis on
    /// `(0, b)`); the system is then overdetermined, which exposes
    /// inconsistent E-values through the residual. Needs
    /// `2 (degree + 1) < ` the number of E-values.
    Polynomial { degree: usize },
    /// `Polynomial` of degree `min(16, count / 4)` for `count` E-values, so
    /// the fit stays about twice overdetermined.
    Auto,
}

/// Settings for [`reconstruct_w_head`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadOptions {
    pub representation: HeadRepresentation,
    /// Tikhonov weight relative to the square of the largest singular value.
    pub tikhonov: f64,
    /// Largest accepted condition number of the (column-scaled) moment matrix.
    pub max_condition: f64,
    /// Largest accepted relative residual `‖A c − e‖ / max(‖e‖, 1e-9)`.
    pub residual_tol: f64,
}

impl Default for HeadOptions {
    fn default() -> Self {
        Self {
            representation: HeadRepresentation::Span,
            tikhonov: 1e-10,
            max_condition: 1e12,
            residual_tol: 1e-3,
        }
    }
}

/// Result of [`reconstruct_w_head`].
#[derive(Debug, Clone)]
pub struct HeadReconstruction {
    pub w: WPair,
    /// Relative residual of the moment equations.
    pub residual: f64,
    pub condition: f64,
}

/// Shifted Legendre polynomials `P_l(2t/b − 1)`, `l ≤ degree`, at the nodes.
fn legendre_columns(grid: &Grid, degree: usize) -> Vec<Vec<f64>> {
    let b = grid.x_end();
    let x: Vec<f64> = grid.nodes().map(|t| 2.0 * t / b - 1.0).collect();
    let mut cols: Vec<Vec<f64>> = vec![vec![1.0; x.len()]];
    if degree >= 1 {
        cols.push(x.clone());
    }
    for l in 2..=degree {
        let lf = l as f64;
        let next = (0..x.len())
            .map(|i| ((2.0 * lf - 1.0) * x[i] * cols[l - 1][i] - (lf - 1.0) * cols[l - 2][i]) / lf)
            .collect();
        cols.push(next);
    }
    cols
}

/// Finds `(w₁, w₂)` on `(0, b)` whose bilinear pairings with the basis vectors
/// reproduce `e`.
pub fn reconstruct_w_head(basis: &BasisSystem, e: &EValues, opts: &HeadOptions) -> Result<HeadReconstruction> {
    let rhs = e.flattened();
    if rhs.len() != basis.len() {
        return Err(Error::invalid(format!(
            "{} E-values for {} basis vectors",
            rhs.len(),
            basis.len()
        )));
    }
    let grid = *basis.grid();
    let np = grid.n_points();
    // rows: nodal weights of each functional (λ, j)
    let weights: Vec<(Vec<C64>, Vec<C64>)> =
        basis.vectors().iter().map(|v| oscillatory_weights(&grid, v.lambda, v.order)).collect();
    // columns: candidate head components as (w₁ samples, w₂ samples)
    let degree = match opts.representation {
        HeadRepresentation::Span => None,
        HeadRepresentation::Polynomial { degree } => Some(degree),
        HeadRepresentation::Auto => Some((rhs.len() / 4).clamp(1, 16)),
    };
    let columns: Vec<(Vec<C64>, Vec<C64>)> = match degree {
        None => basis.vectors().iter().map(|v| (v.v1.clone(), v.v2.clone())).collect(),
        Some(degree) => {
            if 2 * (degree + 1) >= rhs.len() {
                return Err(Error::invalid(format!(
                    "degree {degree} leaves {} unknowns for {} E-values; the fit must be overdetermined",
                    2 * (degree + 1),
                    rhs.len()
                )));
            }
            let zero = vec![C64::new(0.0, 0.0); np];
            let mut cols = Vec::new();
            for p in legendre_columns(&grid, degree) {
                let pc: Vec<C64> = p.iter().map(|v| C64::new(*v, 0.0)).collect();
                cols.push((pc.clone(), zero.clone()));
                cols.push((zero.clone(), pc));
            }
            cols
        }
    };
    let mut a = DMatrix::<C64>::zeros(rhs.len(), columns.len());
    for (r, (ws, wc)) in weights.iter().enumerate() {
        for (c, (u1, u2)) in columns.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..np {
                acc += ws[i] * u1[i] + wc[i] * u2[i];
            }
            a[(r, c)] = acc;
        }
    }
    // unit column norms so that the condition number is scale free
    let scales: Vec<f64> = (0..a.ncols()).map(|c| a.column(c).norm().max(f64::MIN_POSITIVE)).collect();
    for (c, s) in scales.iter().enumerate() {
        a.column_mut(c).scale_mut(1.0 / s);
    }
    let y = DVector::from_vec(rhs);
    let sol = linalg::tikhonov_solve(&a, &y, opts.tikhonov)?;
    if !(sol.condition <= opts.max_condition) {
        return Err(Error::Conditioning { condition: sol.condition, limit: opts.max_condition });
    }
    // E-values at rounding level (zero kernel) are compared absolutely
    let residual = sol.residual_norm / y.norm().max(RESIDUAL_FLOOR);
    if !(residual <= opts.residual_tol) {
        return Err(Error::InconsistentData { residual, tolerance: opts.residual_tol });
    }
    let mut w1 = vec![C64::new(0.0, 0.0); np];
    let mut w2 = vec![C64::new(0.0, 0.0); np];
    for (c, (u1, u2)) in columns.iter().enumerate() {
        let coef = sol.x[c] / scales[c];
        for i in 0..np {
            w1[i] += coef * u1[i];
            w2[i] += coef * u2[i];
        }
    }
    let w = WPair::new(GridFunction::new(grid, w1)?, GridFunction::new(grid, w2)?)?;
    Ok(HeadReconstruction { w, residual, condition: sol.condition })
}
