//! Initial-value problem, characteristic function and eigenvalues.
//!
//! Since `M = p I + q B` and `B² = −I`, the system splits along the
//! eigenvectors of `B` into two scalar equations
//!
//! ```text
//!     Y_σ' = −iσλ Y_σ + iσ (m_σ * Y_σ),   m_σ = p + σ i q,   σ = ±1,
//! ```
//!
//! with `y₁ = −i (Y₊ − Y₋)/2`, `y₂ = (Y₊ + Y₋)/2` for `y(0) = (0, 1)`. In the
//! interaction picture `Y_σ = e^{−iσλx} Z_σ` the free rotation disappears:
//!
//! ```text
//!     Z(x) = 1 + iσ ∬_{u+s≤x} m(u) e^{iσλu} Z(s) du ds.
//! ```
//!
//! The double integral is discretized by product integration: `m` and `Z` are
//! replaced by their piecewise-linear interpolants while the phase `e^{iσλu}`
//! is integrated exactly, over the square cells and the diagonal triangles of
//! the region `u + s ≤ x`. The scheme is second order with an error constant
//! that does not grow with `|λ|`, reproduces the free solution exactly, and is
//! implicit only in the current node (a scalar division). One Richardson step
//! against the half-resolution grid lifts the endpoint values to fourth order.
//!
//! `Δ(λ) := −y₁(π, λ)`, which is `sin λπ` for the zero kernel.

use crate::families::KernelPair;
use crate::prelude::*;
use crate::quad::gauss_legendre_on;
use crate::roots::{zeros_by_box, ZeroSearchOptions};
use crate::spectrum::Spectrum;

/// `y(x) = (y₁, y₂)` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    pub y1: C64,
    pub y2: C64,
}

impl StateVector {
    fn from_channels(yp: C64, ym: C64) -> Self {
        Self { y1: -I * (yp - ym) * 0.5, y2: (yp + ym) * 0.5 }
    }
}

/// Per-kernel state for repeated evaluations of `Δ`.
#[derive(Debug, Clone)]
pub struct Propagator {
    h: f64,
    /// `m₊`, `m₋` on the full grid.
    channels: [Vec<C64>; 2],
    richardson: bool,
}

const SIGMA: [f64; 2] = [1.0, -1.0];

/// Phase-weighted cell integrals for `θ = σλh`.
struct CellWeights {
    f0: C64,
    f1: C64,
    t00: C64,
    t10: C64,
    t01: C64,
    t11: C64,
}

impl CellWeights {
    fn new(theta: C64) -> Self {
        let (a, w) = gauss_legendre_on(16, 0.0, 1.0);
        let z = C64::new(0.0, 0.0);
        let mut c = CellWeights { f0: z, f1: z, t00: z, t10: z, t01: z, t11: z };
        for (a, w) in a.iter().zip(&w) {
            let e = (I * theta * *a).exp() * *w;
            let (phi0, phi1) = (1.0 - a, *a);
            // ∫₀^{1−a} ψ₀, ∫₀^{1−a} ψ₁ with ψ₀ = 1 − b, ψ₁ = b
            let (g0, g1) = ((1.0 - a * a) * 0.5, (1.0 - a) * (1.0 - a) * 0.5);
            c.f0 += e * phi0;
            c.f1 += e * phi1;
            c.t00 += e * (phi0 * g0);
            c.t10 += e * (phi1 * g0);
            c.t01 += e * (phi0 * g1);
            c.t11 += e * (phi1 * g1);
        }
        c
    }
}

impl Propagator {
    pub fn new(kernel: &KernelPair) -> Self {
        let h = kernel.grid().step();
        let channels = [kernel.channel(1.0).into_values(), kernel.channel(-1.0).into_values()];
        let richardson = (kernel.grid().n_points() - 1) % 2 == 0 && kernel.grid().n_points() >= 9;
        Self { h, channels, richardson }
    }

    /// Disables the Richardson step (plain second-order scheme).
    pub fn without_richardson(mut self) -> Self {
        self.richardson = false;
        self
    }

    /// `Z_σ` at every node of a grid with step `h` carrying samples `m`.
    fn march(m: &[C64], h: f64, lambda: C64, sigma: f64) -> Vec<C64> {
        let n = m.len();
        let cw = CellWeights::new(lambda * (sigma * h));
        let isig = I * sigma;
        let e: Vec<C64> = (0..n).map(|l| (isig * lambda * (l as f64 * h)).exp()).collect();
        let cells = n - 1;
        let mut k = Vec::with_capacity(cells);
        let mut d0 = Vec::with_capacity(cells);
        let mut d1 = Vec::with_capacity(cells);
        let h2 = h * h;
        for l in 0..cells {
            let (ml, mr) = (m[l], m[l + 1]);
            k.push(e[l] * (ml * cw.f0 + mr * cw.f1) * h);
            d0.push(e[l] * (ml * cw.t00 + mr * cw.t10) * h2);
            d1.push(e[l] * (ml * cw.t01 + mr * cw.t11) * h2);
        }
        let mut c = Vec::with_capacity(cells);
        let mut acc = C64::new(0.0, 0.0);
        for kl in &k {
            acc += kl;
            c.push(acc);
        }
        let zero = C64::new(0.0, 0.0);
        let cum = |r: isize| if r < 0 { zero } else { c[r as usize] };
        // kc[r]: coefficient of Z_{i−r} in the equation for Z_i
        let kc: Vec<C64> = (0..cells)
            .map(|r| {
                let r = r as isize;
                let d0r = if r >= 1 { d0[r as usize - 1] } else { zero };
                (cum(r - 2) + cum(r - 1)) * (0.5 * h) + d0r + d1[r as usize]
            })
            .collect();
        let denom = C64::new(1.0, 0.0) - isig * kc[0];
        let mut z = Vec::with_capacity(n);
        z.push(C64::new(1.0, 0.0));
        for i in 1..n {
            let k0 = cum(i as isize - 2) * (0.5 * h) + d0[i - 1];
            let mut s = k0;
            for j in 1..i {
                s += kc[i - j] * z[j];
            }
            z.push((C64::new(1.0, 0.0) + isig * s) / denom);
        }
        z
    }

    fn channel_end(&self, idx: usize, lambda: C64) -> C64 {
        let sigma = SIGMA[idx];
        let m = &self.channels[idx];
        let fine = *Self::march(m, self.h, lambda, sigma).last().unwrap();
        let z = if self.richardson {
            let coarse_m: Vec<C64> = m.iter().step_by(2).copied().collect();
            let coarse = *Self::march(&coarse_m, 2.0 * self.h, lambda, sigma).last().unwrap();
            (fine * 4.0 - coarse) / 3.0
        } else {
            fine
        };
        (-I * sigma * lambda * PI).exp() * z
    }

    /// `y(π)` for `y(0) = (0, 1)`.
    pub fn state_at_pi(&self, lambda: C64) -> Result<StateVector> {
        let s = StateVector::from_channels(self.channel_end(0, lambda), self.channel_end(1, lambda));
        if [s.y1, s.y2].iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            Ok(s)
        } else {
            Err(Error::NumericRange { re: lambda.re, im: lambda.im })
        }
    }

    /// `y` at every grid node (second-order scheme, no extrapolation).
    pub fn profile(&self, lambda: C64) -> Result<Vec<StateVector>> {
        let zp = Self::march(&self.channels[0], self.h, lambda, 1.0);
        let zm = Self::march(&self.channels[1], self.h, lambda, -1.0);
        let mut out = Vec::with_capacity(zp.len());
        for (i, (a, b)) in zp.iter().zip(&zm).enumerate() {
            let x = i as f64 * self.h;
            let ph = (-I * lambda * x).exp();
            let pm = (I * lambda * x).exp();
            let s = StateVector::from_channels(ph * a, pm * b);
            if !(s.y1.re.is_finite() && s.y1.im.is_finite() && s.y2.re.is_finite() && s.y2.im.is_finite()) {
                return Err(Error::NumericRange { re: lambda.re, im: lambda.im });
            }
            out.push(s);
        }
        Ok(out)
    }

    /// `Δ(λ) = −y₁(π, λ)`.
    pub fn char_fn(&self, lambda: C64) -> Result<C64> {
        Ok(-self.state_at_pi(lambda)?.y1)
    }

    /// `dʲΔ/dλʲ` for `j ≤ 4` by fourth-order central differences.
    pub fn char_fn_derivative(&self, lambda: C64, order: usize) -> Result<C64> {
        let (h, stencil): (f64, &[(f64, f64)]) = match order {
            0 => return self.char_fn(lambda),
            1 => (1e-3, &[(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)]),
            2 => (3e-3, &[(-2.0, -1.0), (-1.0, 16.0), (0.0, -30.0), (1.0, 16.0), (2.0, -1.0)]),
            3 => (6e-3, &[(-3.0, 1.0), (-2.0, -8.0), (-1.0, 13.0), (1.0, -13.0), (2.0, 8.0), (3.0, -1.0)]),
            4 => (1e-2, &[(-3.0, -1.0), (-2.0, 12.0), (-1.0, -39.0), (0.0, 56.0), (1.0, -39.0), (2.0, 12.0), (3.0, -1.0)]),
            j => return Err(Error::Unsupported(format!("derivative order {j} (at most 4)"))),
        };
        let scale = match order {
            1 => 12.0 * h,
            2 => 12.0 * h * h,
            3 => 8.0 * h * h * h,
            _ => 6.0 * h * h * h * h,
        };
        let mut acc = C64::new(0.0, 0.0);
        for &(off, c) in stencil {
            acc += self.char_fn(lambda + off * h)? * c;
        }
        Ok(acc / scale)
    }
}

/// `y(π)` for the solution with `y(0) = (0, 1)`.
pub fn solve_ivp(kernel: &KernelPair, lambda: C64) -> Result<StateVector> {
    Propagator::new(kernel).state_at_pi(lambda)
}

/// `Δ(λ) = −y₁(π, λ)`; equals `sin λπ` for the zero kernel.
pub fn char_fn(kernel: &KernelPair, lambda: C64) -> Result<C64> {
    Propagator::new(kernel).char_fn(lambda)
}

/// `dʲΔ/dλʲ` for `j ≤ 4`.
pub fn char_fn_derivative(kernel: &KernelPair, lambda: C64, order: usize) -> Result<C64> {
    Propagator::new(kernel).char_fn_derivative(lambda, order)
}

/// Eigenvalues `λ_k`, `|k| ≤ N`, located box by box in `|Im λ| ≤ Y`.
pub fn eigenvalues(kernel: &KernelPair, window: usize, opts: &ZeroSearchOptions) -> Result<Spectrum> {
    if window == 0 {
        return Err(Error::invalid("window must be positive"));
    }
    let prop = Propagator::new(kernel);
    let n = window as i64;
    let boxes = zeros_by_box(|z| prop.char_fn(z), -n, n, opts)?;
    let mut zeros = Vec::new();
    for b in &boxes {
        zeros.extend(b.zeros.iter().map(|z| (z.value, z.multiplicity)));
    }
    Spectrum::number_window(&zeros, window).map_err(|e| match e {
        Error::RootSearch { reason, .. } => {
            let k = boxes.iter().find(|b| b.count != 1).map(|b| b.k).unwrap_or(0);
            Error::RootSearch { k, reason }
        }
        other => other,
    })
}

/// `λ_k` for the given indices only, each located in its own box
/// `|Re λ − k| < ½`. Every box must hold exactly one zero (counting
/// multiplicity), which is the case once `|k|` is beyond the kernel's
/// perturbation of the free spectrum.
pub fn eigenvalues_at(kernel: &KernelPair, indices: &[i64], opts: &ZeroSearchOptions) -> Result<Vec<(i64, C64)>> {
    let prop = Propagator::new(kernel);
    let mut out = Vec::with_capacity(indices.len());
    for &k in indices {
        let b = zeros_by_box(|z| prop.char_fn(z), k, k, opts)?;
        match b[0].zeros.as_slice() {
            [z] if z.multiplicity == 1 => out.push((k, z.value)),
            _ => {
                return Err(Error::RootSearch { k, reason: format!("box holds {} zeros, expected one", b[0].count) })
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridfn::Grid;

    fn free() -> KernelPair {
        KernelPair::zero(Grid::full(513).unwrap()).unwrap()
    }

    fn smooth() -> KernelPair {
        KernelPair::from_fns(
            Grid::full(513).unwrap(),
            |x| C64::new(0.3 * x.cos(), 0.1 * x),
            |x| C64::new(0.2 * (-x).exp(), -0.15 * (2.0 * x).sin()),
        )
        .unwrap()
    }

    #[test]
    fn free_rotation() {
        let y = solve_ivp(&free(), C64::new(1.0, 0.0)).unwrap();
        assert!((y.y1 - C64::new(0.0, 0.0)).norm() < 1e-12);
        assert!((y.y2 - C64::new(-1.0, 0.0)).norm() < 1e-12);
        let y = solve_ivp(&free(), C64::new(0.5, 0.0)).unwrap();
        assert!((y.y1 + 1.0).norm() < 1e-12);
    }

    #[test]
    fn free_char_fn_is_sine() {
        let k = free();
        for lambda in [C64::new(0.25, 0.0), C64::new(3.7, 1.2), C64::new(-41.3, -0.4), C64::new(7.0, 0.0)] {
            let d = char_fn(&k, lambda).unwrap();
            assert!((d - (lambda * PI).sin()).norm() < 1e-8 * (1.0 + d.norm()), "{lambda}");
        }
        assert!((char_fn(&k, C64::new(0.25, 0.0)).unwrap().re - 0.5f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn free_derivatives() {
        let k = free();
        let d1 = char_fn_derivative(&k, C64::new(0.0, 0.0), 1).unwrap();
        assert!((d1 - PI).norm() < 1e-6);
        let d2 = char_fn_derivative(&k, C64::new(0.0, 0.0), 2).unwrap();
        assert!(d2.norm() < 1e-6);
        for j in 1..=4 {
            let lambda = C64::new(1.3, 0.2);
            let exact = (lambda * PI + C64::new(j as f64 * PI / 2.0, 0.0)).sin() * PI.powi(j as i32);
            let d = char_fn_derivative(&k, lambda, j).unwrap();
            assert!((d - exact).norm() < 1e-6 * exact.norm().max(1.0), "j={j}: {d} vs {exact}");
        }
        assert!(matches!(char_fn_derivative(&k, C64::new(0.0, 0.0), 5), Err(Error::Unsupported(_))));
    }

    #[test]
    fn derivative_matches_cauchy_integral() {
        // Δ is entire: Δ'(λ) = (2πi)⁻¹ ∮ Δ(z)/(z − λ)² dz on a circle of radius ρ,
        // which the trapezoidal rule integrates spectrally
        let prop = Propagator::new(&smooth());
        let lambda = C64::new(2.3, 0.1);
        let (rho, n) = (0.5, 64);
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            let e = (I * (2.0 * PI * i as f64 / n as f64)).exp();
            acc += prop.char_fn(lambda + e * rho).unwrap() / (e * rho);
        }
        let oracle = acc / n as f64;
        let fd = prop.char_fn_derivative(lambda, 1).unwrap();
        assert!((fd - oracle).norm() < 1e-6, "{fd} vs {oracle}");
    }

    #[test]
    fn second_order_without_extrapolation() {
        let f = |n: usize| {
            let k = KernelPair::from_fns(
                Grid::full(n).unwrap(),
                |x| C64::new(0.4 * x.cos(), 0.0),
                |x| C64::new(0.0, 0.3 * x.sin()),
            )
            .unwrap();
            Propagator::new(&k).without_richardson().char_fn(C64::new(2.5, 0.0)).unwrap()
        };
        let (a, b, c) = (f(65), f(129), f(257));
        let ratio = (a - b).norm() / (b - c).norm();
        assert!((ratio - 4.0).abs() < 0.3, "ratio {ratio}");
    }

    #[test]
    fn huge_imaginary_part_overflows() {
        let err = char_fn(&smooth(), C64::new(0.0, 400.0)).unwrap_err();
        assert!(matches!(err, Error::NumericRange { .. }));
    }

    #[test]
    fn free_spectrum_is_the_integers() {
        let s = eigenvalues(&free(), 10, &ZeroSearchOptions::default()).unwrap();
        assert_eq!(s.len(), 21);
        for e in s.entries() {
            assert_eq!(e.multiplicity, 1);
            assert!((e.value - C64::new(e.index as f64, 0.0)).norm() < 1e-10);
        }
    }
}
