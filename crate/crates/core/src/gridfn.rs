//! Uniform grids on subintervals of `[0, π]`, sampled complex functions and
//! the causal convolution `(f * g)(x) = ∫₀ˣ f(t) g(x − t) dt`.
//!
//! Convolutions use the product-trapezoidal rule
//!
//! ```text
//!     (f * g)ᵢ = h [ Σ_{j=0..i} fⱼ g_{i−j} − (f₀ gᵢ + fᵢ g₀) / 2 ],
//! ```
//!
//! which is causal node by node, symmetric in `(f, g)`, and exact when the
//! integrand is linear.

use crate::prelude::*;
use crate::quad::trapezoid_weights;

/// Relative tolerance used to decide whether two abscissae coincide.
const NODE_TOL: f64 = 1e-9;

/// A uniform grid `x_start = x₀ < x₁ < … < x_{n−1} = x_end` inside `[0, π]`.
#[derive(Debug, Clone, Copy)]
pub struct Grid {
    n_points: usize,
    x_start: f64,
    x_end: f64,
}

impl Grid {
    pub fn new(n_points: usize, x_start: f64, x_end: f64) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::invalid(format!("grid needs at least 2 points, got {n_points}")));
        }
        if !(x_start.is_finite() && x_end.is_finite()) || x_start < 0.0 || x_start >= x_end {
            return Err(Error::invalid(format!("bad grid interval ({x_start}, {x_end})")));
        }
        if x_end > PI * (1.0 + 1e-14) {
            return Err(Error::invalid(format!("grid end {x_end} exceeds π")));
        }
        Ok(Self { n_points, x_start, x_end: x_end.min(PI) })
    }

    /// The grid over `(0, π)` with `n_points` nodes.
    pub fn full(n_points: usize) -> Result<Self> {
        Self::new(n_points, 0.0, PI)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn x_start(&self) -> f64 {
        self.x_start
    }

    pub fn x_end(&self) -> f64 {
        self.x_end
    }

    pub fn step(&self) -> f64 {
        (self.x_end - self.x_start) / (self.n_points - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        debug_assert!(i < self.n_points);
        if i + 1 == self.n_points {
            self.x_end
        } else {
            self.x_start + (self.x_end - self.x_start) * (i as f64) / (self.n_points - 1) as f64
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.node(i))
    }

    /// Same node count and endpoints (up to rounding).
    pub fn same_as(&self, other: &Grid) -> bool {
        self.n_points == other.n_points
            && (self.x_start - other.x_start).abs() <= NODE_TOL * self.step()
            && (self.x_end - other.x_end).abs() <= NODE_TOL * self.step()
    }

    /// Index of the node at `x`, if `x` is a node.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let pos = (x - self.x_start) / self.step();
        let i = pos.round();
        if (pos - i).abs() <= NODE_TOL && i >= 0.0 && (i as usize) < self.n_points {
            Some(i as usize)
        } else {
            None
        }
    }

    /// The aligned subgrid spanning nodes `first..=last`.
    pub fn slice(&self, first: usize, last: usize) -> Result<Grid> {
        if first >= last || last >= self.n_points {
            return Err(Error::invalid(format!("bad node range {first}..={last}")));
        }
        Grid::new(last - first + 1, self.node(first), self.node(last))
    }

    /// The aligned subgrid over `(x_start, x_end)`; both ends must be nodes.
    pub fn subgrid(&self, x_start: f64, x_end: f64) -> Result<Grid> {
        let first = self
            .index_of(x_start)
            .ok_or_else(|| Error::invalid(format!("{x_start} is not a grid node")))?;
        let last = self
            .index_of(x_end)
            .ok_or_else(|| Error::invalid(format!("{x_end} is not a grid node")))?;
        self.slice(first, last)
    }

    /// Offset of `sub`'s first node in this grid, if `sub` is aligned with it.
    pub fn offset_of(&self, sub: &Grid) -> Option<usize> {
        if (sub.step() - self.step()).abs() > NODE_TOL * self.step() {
            return None;
        }
        let first = self.index_of(sub.x_start)?;
        (first + sub.n_points <= self.n_points).then_some(first)
    }

    /// The grid mirrored by `t ↦ π − t`.
    pub fn reflected(&self) -> Grid {
        Grid {
            n_points: self.n_points,
            x_start: (PI - self.x_end).max(0.0),
            x_end: PI - self.x_start,
        }
    }
}

/// Complex samples of a function on a [`Grid`].
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<C64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::invalid(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.n_points()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::invalid(format!("non-finite sample at node {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![C64::new(0.0, 0.0); grid.n_points()] }
    }

    pub fn constant(grid: Grid, c: C64) -> Self {
        Self { grid, values: vec![c; grid.n_points()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> C64) -> Self {
        Self { grid, values: grid.nodes().map(f).collect() }
    }

    pub(crate) fn from_values_unchecked(grid: Grid, values: Vec<C64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_points());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Local cubic interpolation; linear on grids with fewer than 4 nodes.
    pub fn eval(&self, x: f64) -> C64 {
        let n = self.grid.n_points();
        let h = self.grid.step();
        let pos = ((x - self.grid.x_start()) / h).clamp(0.0, (n - 1) as f64);
        if n < 4 {
            let i = (pos as usize).min(n - 2);
            let s = pos - i as f64;
            return self.values[i] * (1.0 - s) + self.values[i + 1] * s;
        }
        let i0 = (pos as usize).saturating_sub(1).min(n - 4);
        let s = pos - i0 as f64;
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..4 {
            let mut l = 1.0;
            for m in 0..4 {
                if m != k {
                    l *= (s - m as f64) / (k as f64 - m as f64);
                }
            }
            acc += self.values[i0 + k] * l;
        }
        acc
    }

    /// Trapezoidal L₂ norm.
    pub fn l2_norm(&self) -> f64 {
        let w = trapezoid_weights(&self.grid);
        self.values.iter().zip(&w).map(|(v, w)| w * v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Restriction to an aligned subgrid.
    pub fn restrict(&self, sub: &Grid) -> Result<GridFunction> {
        let first = self
            .grid
            .offset_of(sub)
            .ok_or_else(|| Error::invalid("subgrid is not aligned with the function's grid"))?;
        Ok(GridFunction {
            grid: *sub,
            values: self.values[first..first + sub.n_points()].to_vec(),
        })
    }

    /// `t ↦ f(π − t)`, sampled on the reflected grid.
    pub fn reflect(&self) -> GridFunction {
        let mut values = self.values.clone();
        values.reverse();
        GridFunction { grid: self.grid.reflected(), values }
    }

    pub fn map(&self, f: impl Fn(f64, C64) -> C64) -> GridFunction {
        let values = self.grid.nodes().zip(&self.values).map(|(x, v)| f(x, *v)).collect();
        GridFunction { grid: self.grid, values }
    }

    pub fn scale(&self, c: C64) -> GridFunction {
        self.map(|_, v| v * c)
    }

    fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::invalid("operands live on different grids"))
        }
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(GridFunction { grid: self.grid, values })
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(GridFunction { grid: self.grid, values })
    }

    /// Multiplies by the weight `π − t`.
    pub fn weighted(&self) -> WeightedGridFunction {
        let values = self.grid.nodes().zip(&self.values).map(|(t, v)| v * (PI - t)).collect();
        WeightedGridFunction { grid: self.grid, values }
    }
}

/// Samples of `(π − t)·f(t)`, the representation of functions in the
/// weighted class `L₂,π` (those with `(π − t) f(t)` square integrable).
///
/// The node `t = π` carries weight zero and is stored as the value `0`.
#[derive(Debug, Clone)]
pub struct WeightedGridFunction {
    grid: Grid,
    values: Vec<C64>,
}

impl WeightedGridFunction {
    /// Wraps samples that already include the weight.
    pub fn from_weighted(grid: Grid, mut values: Vec<C64>) -> Result<Self> {
        let inner = GridFunction::new(grid, core::mem::take(&mut values))?;
        let mut values = inner.values;
        if (grid.x_end() - PI).abs() <= NODE_TOL {
            if let Some(last) = values.last_mut() {
                *last = C64::new(0.0, 0.0);
            }
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![C64::new(0.0, 0.0); grid.n_points()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// The weighted samples as a plain grid function.
    pub fn as_grid_function(&self) -> GridFunction {
        GridFunction { grid: self.grid, values: self.values.clone() }
    }

    pub fn l2_norm(&self) -> f64 {
        self.as_grid_function().l2_norm()
    }

    /// Divides out the weight. The node `t = π`, where the weight vanishes,
    /// is dropped from the returned function.
    pub fn unweighted_interior(&self) -> Result<GridFunction> {
        let ends_at_pi = (self.grid.x_end() - PI).abs() <= NODE_TOL;
        let grid = if ends_at_pi {
            if self.grid.n_points() < 3 {
                return Err(Error::invalid("grid too short to drop the node t = π"));
            }
            self.grid.slice(0, self.grid.n_points() - 2)?
        } else {
            self.grid
        };
        let values = grid
            .nodes()
            .zip(&self.values)
            .map(|(t, v)| v / (PI - t))
            .collect();
        Ok(GridFunction { grid, values })
    }
}

fn check_convolution_operands(f: &GridFunction, g: &GridFunction) -> Result<()> {
    f.check_same_grid(g)?;
    if f.grid.x_start() != 0.0 {
        return Err(Error::invalid("convolution operands must start at x = 0"));
    }
    Ok(())
}

/// Reference O(n²) product-trapezoidal convolution. Terms are summed in
/// symmetric pairs so that swapping the operands gives bitwise equal results.
pub fn convolve_direct(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    check_convolution_operands(f, g)?;
    let (a, b) = (&f.values, &g.values);
    let h = f.grid.step();
    let n = a.len();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for i in 1..n {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..=i / 2 {
            let k = i - j;
            acc += if j == k { a[j] * b[k] } else { a[j] * b[k] + a[k] * b[j] };
        }
        out[i] = (acc - (a[0] * b[i] + a[i] * b[0]) * 0.5) * h;
    }
    Ok(GridFunction { grid: f.grid, values: out })
}

/// FFT-based evaluation of the same rule as [`convolve_direct`].
#[cfg(feature = "std")]
pub fn convolve_fft(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    use rustfft::FftPlanner;

    check_convolution_operands(f, g)?;
    let (a, b) = (&f.values, &g.values);
    let n = a.len();
    let size = (2 * n - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut fa = vec![C64::new(0.0, 0.0); size];
    let mut fb = vec![C64::new(0.0, 0.0); size];
    fa[..n].copy_from_slice(a);
    fb[..n].copy_from_slice(b);
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    let h = f.grid.step();
    let scale = h / size as f64;
    let mut out = vec![C64::new(0.0, 0.0); n];
    for i in 1..n {
        out[i] = fa[i] * scale - (a[0] * b[i] + a[i] * b[0]) * (0.5 * h);
    }
    Ok(GridFunction { grid: f.grid, values: out })
}

#[cfg(feature = "std")]
const FFT_THRESHOLD: usize = 64;

/// `(f * g)(x) = ∫₀ˣ f(t) g(x − t) dt` on the common grid of `f` and `g`.
pub fn convolve(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    #[cfg(feature = "std")]
    if f.grid.n_points() >= FFT_THRESHOLD {
        return convolve_fft(f, g);
    }
    convolve_direct(f, g)
}

/// n-fold convolution power `f * f * ⋯ * f`.
///
/// `n = 0` would be the delta function, which is not a grid function.
pub fn conv_power(f: &GridFunction, n: usize) -> Result<GridFunction> {
    if n == 0 {
        return Err(Error::Unsupported(
            "convolution power 0 is the delta function".to_string(),
        ));
    }
    let mut acc = f.clone();
    for _ in 1..n {
        acc = convolve(&acc, f)?;
    }
    Ok(acc)
}
