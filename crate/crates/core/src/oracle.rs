//! Independent spectral solver for cross-validation.
//!
//! Chebyshev collocation on `x_j = (π/2)(1 − cos(jπ/N))`: `y₁` is kept at the
//! interior nodes (the boundary conditions remove the end values), `y₂` at all
//! nodes. The first equation is collocated at the interior nodes and the second
//! at every node, so the eigenvalue problem is a standard one, `L u = λ u`.
//! Convolutions are integrated exactly against the Lagrange basis by
//! Gauss-Legendre quadrature, with the kernel interpolated from its samples.
//!
//! Collocation also produces spurious eigenvalues, whose eigenvectors live in
//! the highest Chebyshev modes; only eigenvalues with a resolved (smooth)
//! eigenvector are kept.
//!
//! Nothing here is shared with [`crate::forward`] beyond the kernel samples.

use nalgebra::{DMatrix, DVector};

use crate::families::KernelPair;
use crate::forward::StateVector;
use crate::gridfn::GridFunction;
use crate::linalg;
use crate::prelude::*;
use crate::quad::gauss_legendre_on;
use crate::spectrum::Spectrum;

/// Largest collocation size accepted (dense eigen-solve).
pub const MAX_NODES: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Collocation degree `N`; `None` picks `3·window + 48`.
    pub nodes: Option<usize>,
    /// Half height of the strip in which eigenvalues are kept.
    pub im_bound: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { nodes: None, im_bound: 2.0 }
    }
}

/// Chebyshev points, barycentric weights and the convolution matrices.
#[derive(Debug, Clone)]
pub struct DenseDiscretization {
    x: Vec<f64>,
    bary: Vec<f64>,
    d: DMatrix<C64>,
    p: DMatrix<C64>,
    q: DMatrix<C64>,
}

impl DenseDiscretization {
    pub fn new(kernel: &KernelPair, nodes: usize) -> Result<Self> {
        if !(4..=MAX_NODES).contains(&nodes) {
            return Err(Error::invalid(format!("collocation size {nodes} outside 4..={MAX_NODES}")));
        }
        let n = nodes;
        let x: Vec<f64> = (0..=n).map(|j| 0.5 * PI * (1.0 - (j as f64 * PI / n as f64).cos())).collect();
        let mut bary: Vec<f64> = (0..=n).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
        bary[0] *= 0.5;
        bary[n] *= 0.5;
        let mut d = DMatrix::<C64>::zeros(n + 1, n + 1);
        for i in 0..=n {
            let mut diag = 0.0;
            for j in 0..=n {
                if i != j {
                    let v = (bary[j] / bary[i]) / (x[i] - x[j]);
                    d[(i, j)] = C64::new(v, 0.0);
                    diag -= v;
                }
            }
            d[(i, i)] = C64::new(diag, 0.0);
        }
        let mut disc = Self { x, bary, d, p: DMatrix::zeros(0, 0), q: DMatrix::zeros(0, 0) };
        disc.p = disc.convolution_matrix(kernel.p());
        disc.q = disc.convolution_matrix(kernel.q());
        Ok(disc)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    fn lagrange(&self, t: f64, out: &mut [f64]) {
        if let Some(j) = self.x.iter().position(|&xj| xj == t) {
            out.iter_mut().for_each(|v| *v = 0.0);
            out[j] = 1.0;
            return;
        }
        let mut denom = 0.0;
        for (j, v) in out.iter_mut().enumerate() {
            *v = self.bary[j] / (t - self.x[j]);
            denom += *v;
        }
        out.iter_mut().for_each(|v| *v /= denom);
    }

    /// `K_ij = ∫₀^{x_i} k(x_i − t) ℓ_j(t) dt`.
    fn convolution_matrix(&self, k: &GridFunction) -> DMatrix<C64> {
        let n = self.x.len();
        let mut m = DMatrix::<C64>::zeros(n, n);
        let mut ell = vec![0.0; n];
        let (t01, w01) = gauss_legendre_on(n + 16, 0.0, 1.0);
        for i in 1..n {
            let xi = self.x[i];
            for (s, w) in t01.iter().zip(&w01) {
                let t = s * xi;
                let kv = k.eval(xi - t) * (w * xi);
                self.lagrange(t, &mut ell);
                for j in 0..n {
                    m[(i, j)] += kv * ell[j];
                }
            }
        }
        m
    }

    /// The operator `L` acting on `(y₁ at interior nodes, y₂ at all nodes)`.
    pub fn matrix(&self) -> DMatrix<C64> {
        let n = self.x.len() - 1;
        let ni = n - 1;
        let size = ni + n + 1;
        let mut l = DMatrix::<C64>::zeros(size, size);
        // rows 0..ni: y₂' + p*y₁ + q*y₂ = λ y₁ at interior node r + 1
        // rows ni..: −y₁' − q*y₁ + p*y₂ = λ y₂ at node r
        for r in 0..ni {
            let i = r + 1;
            for c in 0..ni {
                l[(r, c)] = self.p[(i, c + 1)];
            }
            for j in 0..=n {
                l[(r, ni + j)] = self.d[(i, j)] + self.q[(i, j)];
            }
        }
        for i in 0..=n {
            let r = ni + i;
            for c in 0..ni {
                l[(r, c)] = -self.d[(i, c + 1)] - self.q[(i, c + 1)];
            }
            for j in 0..=n {
                l[(r, ni + j)] = self.p[(i, j)];
            }
        }
        l
    }

    /// All eigenvalues of [`Self::matrix`], unsorted.
    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        linalg::eigenvalues(self.matrix())
    }

    /// Number of resolved eigenvectors among `count` (numerically) equal
    /// eigenvalues of `l` at `z`: the dimension of the part of the invariant
    /// subspace whose Chebyshev coefficients in the top tenth of the spectrum
    /// are negligible.
    fn resolved_modes(&self, l: &DMatrix<C64>, z: C64, count: usize) -> Result<usize> {
        let n = self.x.len() - 1;
        let size = l.nrows();
        let shift = z + C64::new(1e-9 * (1.0 + z.norm()), 0.0);
        let mut shifted = l.clone();
        for i in 0..size {
            shifted[(i, i)] -= shift;
        }
        let lu = shifted.lu();
        let mut v = DMatrix::<C64>::from_fn(size, count, |i, j| {
            C64::new(((i + 1) as f64 * (0.37 + j as f64)).sin(), ((i * (j + 2)) as f64 * 0.11).cos())
        });
        for _ in 0..3 {
            v = lu.solve(&v).ok_or_else(|| Error::EigenSolver("singular shifted matrix".to_string()))?;
            if !v.iter().all(|x| x.re.is_finite() && x.im.is_finite()) {
                return Ok(0);
            }
            v = v.qr().q();
        }
        let head = n - n / 10;
        let mut all = DMatrix::<C64>::zeros(2 * (n + 1), count);
        let mut tail = DMatrix::<C64>::zeros(2 * (n + 1), count);
        for col in 0..count {
            let mut y1 = vec![C64::new(0.0, 0.0); n + 1];
            for i in 1..n {
                y1[i] = v[(i - 1, col)];
            }
            let y2: Vec<C64> = (0..=n).map(|i| v[(n - 1 + i, col)]).collect();
            for (part, f) in [&y1, &y2].into_iter().enumerate() {
                for k in 0..=n {
                    let mut c = C64::new(0.0, 0.0);
                    for (j, fj) in f.iter().enumerate() {
                        let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                        c += fj * (w * (PI * (k * j) as f64 / n as f64).cos());
                    }
                    let row = part * (n + 1) + k;
                    all[(row, col)] = c;
                    if k >= head {
                        tail[(row, col)] = c;
                    }
                }
            }
        }
        let scale = linalg::singular_values(all).into_iter().fold(0.0, f64::max);
        let rank = linalg::singular_values(tail).into_iter().filter(|s| *s > RESOLVED_TOL * scale).count();
        Ok(count.saturating_sub(rank))
    }

    /// `y(π)` for `y(0) = (0, 1)`.
    pub fn ivp(&self, lambda: C64) -> Result<StateVector> {
        let n = self.x.len() - 1;
        let size = 2 * (n + 1);
        let mut a = DMatrix::<C64>::zeros(size, size);
        let mut rhs = DVector::<C64>::zeros(size);
        // unknowns: y₁ at 0..=n, then y₂ at 0..=n
        a[(0, 0)] = C64::new(1.0, 0.0);
        a[(1, n + 1)] = C64::new(1.0, 0.0);
        rhs[1] = C64::new(1.0, 0.0);
        for i in 1..=n {
            let (r1, r2) = (2 * i, 2 * i + 1);
            for j in 0..=n {
                let delta = if i == j { lambda } else { C64::new(0.0, 0.0) };
                a[(r1, j)] = self.p[(i, j)] - delta;
                a[(r1, n + 1 + j)] = self.d[(i, j)] + self.q[(i, j)];
                a[(r2, j)] = -self.d[(i, j)] - self.q[(i, j)];
                a[(r2, n + 1 + j)] = self.p[(i, j)] - delta;
            }
        }
        let y = linalg::solve_dense(a, rhs)?;
        Ok(StateVector { y1: y[n], y2: y[2 * n + 1] })
    }
}

/// Largest relative size of the top tenth of an eigenvector's Chebyshev
/// coefficients for the mode to count as resolved. Kernels with kinks leave
/// genuine modes with algebraic tails near 1e-5; the spurious mode sits at O(1).
const RESOLVED_TOL: f64 = 1e-3;

fn default_nodes(window: usize) -> usize {
    (3 * window + 48).min(MAX_NODES)
}

/// Eigenvalues `λ_k`, `|k| ≤ N`, of the collocated problem, numbered like
/// [`crate::forward::eigenvalues`].
pub fn oracle_eigenvalues(kernel: &KernelPair, window: usize, opts: &OracleOptions) -> Result<Spectrum> {
    if window == 0 {
        return Err(Error::invalid("window must be positive"));
    }
    let nodes = opts.nodes.unwrap_or_else(|| default_nodes(window));
    let bound = window as f64 + 0.5;
    let disc = DenseDiscretization::new(kernel, nodes)?;
    let l = disc.matrix();
    let mut candidates: Vec<C64> = linalg::eigenvalues(l.clone())?
        .into_iter()
        .filter(|z| z.re.abs() < bound && z.im.abs() <= opts.im_bound)
        .collect();
    candidates.sort_by(|a, b| a.re.round().total_cmp(&b.re.round()).then(a.im.total_cmp(&b.im)));
    let mut clusters: Vec<(C64, usize)> = Vec::new();
    for z in candidates {
        match clusters.last_mut() {
            Some((v, m)) if (*v - z).norm() <= 1e-6 => {
                *v = (*v * *m as f64 + z) / (*m + 1) as f64;
                *m += 1;
            }
            _ => clusters.push((z, 1)),
        }
    }
    let mut zeros = Vec::with_capacity(clusters.len());
    for (z, count) in clusters {
        let resolved = disc.resolved_modes(&l, z, count)?;
        if resolved > 0 {
            zeros.push((z, resolved));
        }
    }
    Spectrum::number_window(&zeros, window)
}

/// `y(π)` for `y(0) = (0, 1)` by collocation.
pub fn oracle_ivp(kernel: &KernelPair, lambda: C64, nodes: usize) -> Result<StateVector> {
    DenseDiscretization::new(kernel, nodes)?.ivp(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridfn::Grid;

    #[test]
    fn free_spectrum() {
        let k = KernelPair::zero(Grid::full(513).unwrap()).unwrap();
        let s = oracle_eigenvalues(&k, 8, &OracleOptions::default()).unwrap();
        for e in s.entries() {
            assert!((e.value - C64::new(e.index as f64, 0.0)).norm() < 1e-8, "{:?}", e);
        }
    }

    #[test]
    fn free_ivp_is_rotation() {
        let k = KernelPair::zero(Grid::full(65).unwrap()).unwrap();
        let lambda = C64::new(2.3, 0.4);
        let y = oracle_ivp(&k, lambda, 60).unwrap();
        assert!((y.y1 + (lambda * PI).sin()).norm() < 1e-10);
        assert!((y.y2 - (lambda * PI).cos()).norm() < 1e-10);
    }

    #[test]
    fn convolution_of_constants() {
        // ∫₀ˣ 1 · t dt = x²/2
        let k = KernelPair::from_fns(Grid::full(65).unwrap(), |_| C64::new(1.0, 0.0), |_| C64::new(0.0, 0.0))
            .unwrap();
        let d = DenseDiscretization::new(&k, 20).unwrap();
        let f: Vec<C64> = d.nodes().iter().map(|&t| C64::new(t, 0.0)).collect();
        let f = DVector::from_vec(f);
        let g = &d.p * f;
        for (i, &x) in d.nodes().iter().enumerate() {
            assert!((g[i].re - 0.5 * x * x).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_oversized_discretization() {
        let k = KernelPair::zero(Grid::full(17).unwrap()).unwrap();
        assert!(DenseDiscretization::new(&k, MAX_NODES + 1).is_err());
    }
}
