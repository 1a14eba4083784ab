//! The kernel pair `(p, q)` and a few analytic kernel families.

use crate::gridfn::{Grid, GridFunction};
use crate::prelude::*;

/// The pair `(p, q)` defining `M(x) = [[p, q], [−q, p]]` on `(0, π)`.
#[derive(Debug, Clone)]
pub struct KernelPair {
    p: GridFunction,
    q: GridFunction,
}

impl KernelPair {
    pub fn new(p: GridFunction, q: GridFunction) -> Result<Self> {
        let g = p.grid();
        if !g.same_as(q.grid()) {
            return Err(Error::invalid("p and q must share a grid"));
        }
        if g.x_start() != 0.0 || (g.x_end() - PI).abs() > 1e-12 {
            return Err(Error::invalid("kernel must be sampled on the full interval (0, π)"));
        }
        if !(p.is_finite() && q.is_finite()) {
            return Err(Error::invalid("kernel samples must be finite"));
        }
        Ok(Self { p, q })
    }

    pub fn zero(grid: Grid) -> Result<Self> {
        Self::new(GridFunction::zeros(grid), GridFunction::zeros(grid))
    }

    pub fn from_fns(grid: Grid, p: impl Fn(f64) -> C64, q: impl Fn(f64) -> C64) -> Result<Self> {
        Self::new(GridFunction::from_fn(grid, p), GridFunction::from_fn(grid, q))
    }

    pub fn grid(&self) -> &Grid {
        self.p.grid()
    }

    pub fn p(&self) -> &GridFunction {
        &self.p
    }

    pub fn q(&self) -> &GridFunction {
        &self.q
    }

    /// `p + σ i q` for `σ = ±1`: the scalar kernels of the two decoupled
    /// channels (the eigenvalues `±i` of `B`).
    pub fn channel(&self, sigma: f64) -> GridFunction {
        let values = self
            .p
            .values()
            .iter()
            .zip(self.q.values())
            .map(|(p, q)| p + I * q * sigma)
            .collect();
        GridFunction::from_values_unchecked(*self.grid(), values)
    }

    /// Entry `(i, j)` of `M(x)` at node `k`.
    pub fn matrix_entry(&self, k: usize, i: usize, j: usize) -> C64 {
        let (p, q) = (self.p.values()[k], self.q.values()[k]);
        match (i, j) {
            (0, 0) | (1, 1) => p,
            (0, 1) => q,
            (1, 0) => -q,
            _ => panic!("M is 2×2"),
        }
    }

    /// Kernel scaled by `c`.
    pub fn scaled(&self, c: f64) -> KernelPair {
        let s = C64::new(c, 0.0);
        KernelPair { p: self.p.scale(s), q: self.q.scale(s) }
    }
}

/// `c·cos(kx) + s·sin(kx)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigTerm {
    pub k: f64,
    pub cos: C64,
    pub sin: C64,
}

/// `amplitude · exp(−(x − center)² / (2 width²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub amplitude: C64,
    pub center: f64,
    pub width: f64,
}

/// An analytic description of one kernel component.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Zero,
    Trig(Vec<TrigTerm>),
    Gaussian(Vec<Bump>),
    /// Linear interpolation through `(x, value)` knots sorted by `x`; constant
    /// outside the knot range.
    PiecewiseLinear(Vec<(f64, C64)>),
}

impl Profile {
    pub fn eval(&self, x: f64) -> C64 {
        match self {
            Profile::Zero => C64::new(0.0, 0.0),
            Profile::Trig(terms) => terms
                .iter()
                .map(|t| t.cos * (t.k * x).cos() + t.sin * (t.k * x).sin())
                .sum(),
            Profile::Gaussian(bumps) => bumps
                .iter()
                .map(|b| {
                    let z = (x - b.center) / b.width;
                    b.amplitude * (-0.5 * z * z).exp()
                })
                .sum(),
            Profile::PiecewiseLinear(knots) => piecewise_linear(knots, x),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Profile::Gaussian(bumps) if bumps.iter().any(|b| !(b.width > 0.0)) => {
                Err(Error::invalid("Gaussian bump widths must be positive"))
            }
            Profile::PiecewiseLinear(knots) => {
                if knots.is_empty() {
                    return Err(Error::invalid("piecewise-linear profile needs knots"));
                }
                if knots.windows(2).any(|w| !(w[0].0 < w[1].0)) {
                    return Err(Error::invalid("piecewise-linear knots must be increasing"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

fn piecewise_linear(knots: &[(f64, C64)], x: f64) -> C64 {
    let first = knots[0];
    let last = knots[knots.len() - 1];
    if x <= first.0 {
        return first.1;
    }
    if x >= last.0 {
        return last.1;
    }
    let i = knots.partition_point(|k| k.0 <= x) - 1;
    let (x0, v0) = knots[i];
    let (x1, v1) = knots[i + 1];
    let s = (x - x0) / (x1 - x0);
    v0 * (1.0 - s) + v1 * s
}

/// An analytic kernel `(p, q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFamily {
    pub p: Profile,
    pub q: Profile,
}

impl KernelFamily {
    pub fn zero() -> Self {
        Self { p: Profile::Zero, q: Profile::Zero }
    }

    pub fn eval(&self, x: f64) -> (C64, C64) {
        (self.p.eval(x), self.q.eval(x))
    }

    pub fn sample(&self, grid: Grid) -> Result<KernelPair> {
        self.p.validate()?;
        self.q.validate()?;
        KernelPair::from_fns(grid, |x| self.p.eval(x), |x| self.q.eval(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_structure() {
        let g = Grid::full(5).unwrap();
        let k = KernelPair::from_fns(g, |x| C64::new(x, 0.0), |_| C64::new(0.0, 2.0)).unwrap();
        assert_eq!(k.matrix_entry(2, 0, 0), k.matrix_entry(2, 1, 1));
        assert_eq!(k.matrix_entry(2, 0, 1), -k.matrix_entry(2, 1, 0));
        let plus = k.channel(1.0);
        assert_eq!(plus.values()[2], C64::new(PI / 2.0 - 2.0, 0.0));
    }

    #[test]
    fn kernel_needs_full_interval() {
        let g = Grid::new(5, 0.0, 1.0).unwrap();
        assert!(KernelPair::zero(g).is_err());
    }

    #[test]
    fn profiles() {
        let pl = Profile::PiecewiseLinear(vec![(0.0, C64::new(0.0, 0.0)), (2.0, C64::new(1.0, -1.0))]);
        assert_eq!(pl.eval(1.0), C64::new(0.5, -0.5));
        assert_eq!(pl.eval(3.0), C64::new(1.0, -1.0));
        let bad = Profile::PiecewiseLinear(vec![(1.0, C64::new(0.0, 0.0)), (1.0, C64::new(0.0, 0.0))]);
        let fam = KernelFamily { p: bad, q: Profile::Zero };
        assert!(fam.sample(Grid::full(9).unwrap()).is_err());
        let g = Profile::Gaussian(vec![Bump { amplitude: C64::new(2.0, 0.0), center: 1.0, width: 0.5 }]);
        assert_eq!(g.eval(1.0), C64::new(2.0, 0.0));
    }
}
