//! Main equations and the partial inverse problem.
//!
//! The transform pair and the kernel are tied by
//!
//! ```text
//!     −w₁(π − t) = (π − t) q(t) + N₁(t),   −w₂(π − t) = (π − t) p(t) + N₂(t),
//! ```
//!
//! where `N₁, N₂` collect the convolution-power terms of order `n ≥ 2`. With
//! `p = p₁ + p₂`, `q = q₁ + q₂`, `(p₁, q₁)` supported on `(0, a)` and
//! `(p₂, q₂)` on `(a, π)`, the terms on `(0, a)` involve `(p₁, q₁)` only, so the
//! known part fixes `(w₁, w₂)` on `(b, π)`, `b = π − a`. [`algorithm1`] recovers
//! `(w₁, w₂)` on `(0, b)` from a subspectrum and then solves the main
//! equations on `(a, π)` for the weighted unknowns `(π − t) q₂`, `(π − t) p₂`
//! by fixed-point iteration (the equations are of Volterra type, so the
//! iteration converges).

use crate::basis::{build_basis, reconstruct_w_head, HeadOptions, HeadRepresentation, Subspectrum};
use crate::families::KernelPair;
use crate::gridfn::{Grid, GridFunction, WeightedGridFunction};
use crate::prelude::*;
use crate::wtransform::{channel_series, e_targets, w_from_kernel, WPair};
use crate::Stage;

/// The kernel on `(0, a)`, extended by zero.
#[derive(Debug, Clone)]
pub struct KnownPart {
    kernel: KernelPair,
    a_index: usize,
}

impl KnownPart {
    /// `p1`, `q1` on the full grid; they must vanish at every node beyond `a`.
    pub fn new(p1: GridFunction, q1: GridFunction, a: f64) -> Result<Self> {
        let kernel = KernelPair::new(p1, q1)?;
        let grid = *kernel.grid();
        if !(a >= PI / 2.0 - 1e-12 && a < PI) {
            return Err(Error::invalid(format!("a = {a} outside [π/2, π)")));
        }
        let a_index = grid
            .index_of(a)
            .ok_or_else(|| Error::invalid(format!("a = {a} is not a grid node")))?;
        let tail_nonzero = (a_index + 1..grid.n_points())
            .any(|i| kernel.p().values()[i].norm() != 0.0 || kernel.q().values()[i].norm() != 0.0);
        if tail_nonzero {
            return Err(Error::invalid("known part must vanish on (a, π)"));
        }
        Ok(Self { kernel, a_index })
    }

    /// Restriction of a full kernel to `(0, a)`, extended by zero.
    pub fn from_kernel(kernel: &KernelPair, a: f64) -> Result<Self> {
        let grid = *kernel.grid();
        let a_index = grid
            .index_of(a)
            .ok_or_else(|| Error::invalid(format!("a = {a} is not a grid node")))?;
        let cut = |f: &GridFunction| {
            GridFunction::from_values_unchecked(
                grid,
                f.values().iter().enumerate().map(|(i, v)| if i <= a_index { *v } else { C64::new(0.0, 0.0) }).collect(),
            )
        };
        Self::new(cut(kernel.p()), cut(kernel.q()), a)
    }

    /// `a = π − π/m`.
    pub fn a_for_m(m: usize) -> Result<f64> {
        if m < 2 {
            return Err(Error::invalid("m must be at least 2"));
        }
        Ok(PI - PI / m as f64)
    }

    /// Smallest point count `≥ n_points` whose panel count is a multiple of
    /// `lcm(2, m)`, so that `a`, `b` are nodes and the forward solver can use
    /// its half-grid Richardson step.
    pub fn aligned_points(n_points: usize, m: usize) -> usize {
        let step = if m % 2 == 0 { m.max(2) } else { 2 * m };
        let panels = n_points.max(2) - 1;
        panels.div_ceil(step) * step + 1
    }

    pub fn kernel(&self) -> &KernelPair {
        &self.kernel
    }

    pub fn grid(&self) -> &Grid {
        self.kernel.grid()
    }

    pub fn a_index(&self) -> usize {
        self.a_index
    }

    pub fn a(&self) -> f64 {
        self.grid().node(self.a_index)
    }

    pub fn b(&self) -> f64 {
        PI - self.a()
    }

    /// Grid of `(a, π)` (including both ends).
    pub fn unknown_grid(&self) -> Grid {
        self.grid().slice(self.a_index, self.grid().n_points() - 1).expect("a < π")
    }

    /// Grid of `(0, b)`.
    pub fn head_grid(&self) -> Grid {
        let n = self.grid().n_points();
        self.grid().slice(0, n - 1 - self.a_index).expect("b > 0")
    }

    /// Grid of `(b, π)`.
    pub fn tail_grid(&self) -> Grid {
        let n = self.grid().n_points();
        self.grid().slice(n - 1 - self.a_index, n - 1).expect("b < π")
    }
}

/// `N₁`, `N₂` on the kernel grid.
#[derive(Debug, Clone)]
pub struct NonlinearResidual {
    pub n1: GridFunction,
    pub n2: GridFunction,
}

/// `N₁(t) = −w₁(π − t) − (π − t) q(t)`, `N₂(t) = −w₂(π − t) − (π − t) p(t)`,
/// summed directly from the convolution powers of order `n ≥ 2`.
pub fn nonlinear_residual(kernel: &KernelPair) -> Result<NonlinearResidual> {
    let gp = channel_series(kernel, 1.0, 2)?;
    let gm = channel_series(kernel, -1.0, 2)?;
    let grid = *kernel.grid();
    let n1 = gp.iter().zip(&gm).map(|(a, b)| -(a + b) * 0.5).collect();
    let n2 = gp.iter().zip(&gm).map(|(a, b)| -I * (a - b) * 0.5).collect();
    Ok(NonlinearResidual {
        n1: GridFunction::new(grid, n1)?,
        n2: GridFunction::new(grid, n2)?,
    })
}

/// `(A₁, B₁)`: the nonlinear terms of the known part alone.
pub fn compute_a1_b1(known: &KnownPart) -> Result<(GridFunction, GridFunction)> {
    let r = nonlinear_residual(known.kernel())?;
    Ok((r.n1, r.n2))
}

/// `(w₁, w₂)` on `(b, π)`, determined by the known part.
pub fn w_tail(known: &KnownPart) -> Result<WPair> {
    w_from_kernel(known.kernel())?.restrict(&known.tail_grid())
}

/// Settings for [`solve_unknown_part`].
#[derive(Debug, Clone)]
pub struct FixedPointOptions {
    pub max_iterations: usize,
    pub abs_tol: f64,
    /// Relative to `‖w_full‖`.
    pub rel_tol: f64,
    /// Initial damping `θ`; halved whenever the mismatch grows.
    pub damping: f64,
    pub min_damping: f64,
    /// Relative tolerance for the agreement of `w_full` with the known tail.
    pub consistency_tol: f64,
    /// Starting weighted unknowns `((π − t) q₂, (π − t) p₂)` on `(a, π)`;
    /// zero when `None`.
    pub initial: Option<(WeightedGridFunction, WeightedGridFunction)>,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            abs_tol: 1e-8,
            rel_tol: 1e-6,
            damping: 1.0,
            min_damping: 1.0 / 16.0,
            consistency_tol: 1e-4,
            initial: None,
        }
    }
}

/// Solution of the main equations on `(a, π)`.
#[derive(Debug, Clone)]
pub struct UnknownPart {
    /// `(π − t) q₂(t)` on `(a, π)`.
    pub q2_weighted: WeightedGridFunction,
    /// `(π − t) p₂(t)` on `(a, π)`.
    pub p2_weighted: WeightedGridFunction,
    pub iterations: usize,
    /// `w`-mismatch after each iteration.
    pub history: Vec<f64>,
}

/// Full kernel from the known part and weighted unknowns at the nodes beyond `a`.
fn assemble(known: &KnownPart, y1: &[C64], y2: &[C64]) -> Result<KernelPair> {
    let grid = *known.grid();
    let n = grid.n_points();
    let ai = known.a_index;
    let mut p = known.kernel().p().values().to_vec();
    let mut q = known.kernel().q().values().to_vec();
    for i in ai + 1..n - 1 {
        let wgt = PI - grid.node(i);
        q[i] = y1[i - ai] / wgt;
        p[i] = y2[i - ai] / wgt;
    }
    // the value at t = π never enters (w₁, w₂); extrapolate for a tidy kernel
    if n - 1 > ai + 2 {
        q[n - 1] = q[n - 2] * 2.0 - q[n - 3];
        p[n - 1] = p[n - 2] * 2.0 - p[n - 3];
    } else {
        q[n - 1] = q[n - 2];
        p[n - 1] = p[n - 2];
    }
    KernelPair::new(GridFunction::new(grid, p)?, GridFunction::new(grid, q)?)
}

/// Trapezoidal L₂ norm over `(a, π)` of two sampled functions.
fn pair_norm(grid: &Grid, u: &[C64], v: &[C64]) -> f64 {
    let w = crate::quad::trapezoid_weights(grid);
    w.iter().zip(u.iter().zip(v)).map(|(w, (a, b))| w * (a.norm_sqr() + b.norm_sqr())).sum::<f64>().sqrt()
}

/// Solves the main equations on `(a, π)` for the weighted unknowns, given the
/// full transform pair.
pub fn solve_unknown_part(known: &KnownPart, w_full: &WPair, opts: &FixedPointOptions) -> Result<UnknownPart> {
    let grid = *known.grid();
    if !w_full.grid().same_as(&grid) {
        return Err(Error::invalid("w_full must live on the kernel grid"));
    }
    let tail = w_tail(known)?;
    let full_tail = w_full.restrict(&known.tail_grid())?;
    let mismatch = full_tail.sub(&tail)?.l2_norm();
    let reference = tail.l2_norm().max(full_tail.l2_norm());
    if mismatch > opts.consistency_tol * reference + 1e-12 {
        return Err(Error::InconsistentData {
            residual: if reference > 0.0 { mismatch / reference } else { mismatch },
            tolerance: opts.consistency_tol,
        });
    }
    let n = grid.n_points();
    let ai = known.a_index;
    let ug = known.unknown_grid();
    let nu = ug.n_points();
    // targets −w(π − t) on (a, π): w(s) is stored at index n − 1 − i for t_i
    let target1: Vec<C64> = (ai..n).map(|i| -w_full.w1().values()[n - 1 - i]).collect();
    let target2: Vec<C64> = (ai..n).map(|i| -w_full.w2().values()[n - 1 - i]).collect();
    let (mut y1, mut y2) = match &opts.initial {
        Some((a, b)) => {
            if !a.grid().same_as(&ug) || !b.grid().same_as(&ug) {
                return Err(Error::invalid("initial iterate must live on the (a, π) grid"));
            }
            (a.values().to_vec(), b.values().to_vec())
        }
        None => (vec![C64::new(0.0, 0.0); nu], vec![C64::new(0.0, 0.0); nu]),
    };
    // the node t = a belongs to the known part; t = π carries weight 0
    y1[0] = C64::new(0.0, 0.0);
    y2[0] = C64::new(0.0, 0.0);
    y1[nu - 1] = C64::new(0.0, 0.0);
    y2[nu - 1] = C64::new(0.0, 0.0);
    let tol = opts.abs_tol.max(opts.rel_tol * w_full.l2_norm());
    let mut theta = opts.damping;
    let mut history = Vec::new();
    let mut previous = f64::INFINITY;
    for iteration in 1..=opts.max_iterations {
        let kernel = assemble(known, &y1, &y2)?;
        let nl = nonlinear_residual(&kernel)?;
        // residual of −w(π − t) = y + N on the unknown nodes
        let mut r1 = vec![C64::new(0.0, 0.0); nu];
        let mut r2 = vec![C64::new(0.0, 0.0); nu];
        for j in 1..nu - 1 {
            let i = ai + j;
            r1[j] = target1[j] - nl.n1.values()[i] - y1[j];
            r2[j] = target2[j] - nl.n2.values()[i] - y2[j];
        }
        let mismatch = pair_norm(&ug, &r1, &r2);
        history.push(mismatch);
        if !mismatch.is_finite() {
            return Err(Error::Convergence { iterations: iteration, history });
        }
        if mismatch <= tol {
            return Ok(UnknownPart {
                q2_weighted: WeightedGridFunction::from_weighted(ug, y1)?,
                p2_weighted: WeightedGridFunction::from_weighted(ug, y2)?,
                iterations: iteration,
                history,
            });
        }
        if mismatch > previous {
            theta = (theta * 0.5).max(opts.min_damping);
        }
        previous = mismatch;
        for j in 1..nu - 1 {
            y1[j] += r1[j] * theta;
            y2[j] += r2[j] * theta;
        }
    }
    Err(Error::Convergence { iterations: opts.max_iterations, history })
}

/// Settings for [`algorithm1`].
#[derive(Debug, Clone)]
pub struct Algorithm1Options {
    pub head: HeadOptions,
    pub fixed_point: FixedPointOptions,
    /// Smallest accepted [`crate::basis::BasisSystem::completeness_score`].
    pub min_completeness: f64,
}

impl Default for Algorithm1Options {
    fn default() -> Self {
        Self {
            head: HeadOptions {
                representation: HeadRepresentation::Auto,
                ..HeadOptions::default()
            },
            fixed_point: FixedPointOptions::default(),
            min_completeness: 1e-6,
        }
    }
}

/// Per-stage diagnostics of [`algorithm1`].
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub a1_norm: f64,
    pub b1_norm: f64,
    pub w_tail_norm: f64,
    pub e_value_count: usize,
    pub completeness: f64,
    pub head_residual: f64,
    pub head_condition: f64,
    /// `max |E_target − E_moment|` over all `(k, j)` for the reconstructed head.
    pub e_agreement: f64,
    pub fixed_point_iterations: usize,
    pub fixed_point_history: Vec<f64>,
}

/// Output of [`algorithm1`].
#[derive(Debug, Clone)]
pub struct Reconstruction {
    /// The full kernel; bitwise equal to the known part on `[0, a]`.
    pub kernel: KernelPair,
    pub w_full: WPair,
    pub unknown: UnknownPart,
    pub diagnostics: Diagnostics,
}

/// Recovers the kernel on `(a, π)` from the kernel on `(0, a)` and a
/// subspectrum.
pub fn algorithm1(known: &KnownPart, sub: &Subspectrum, opts: &Algorithm1Options) -> Result<Reconstruction> {
    let (a1, b1) = compute_a1_b1(known).map_err(|e| e.at_stage(Stage::KnownTerms))?;
    let tail = w_tail(known).map_err(|e| e.at_stage(Stage::WTail))?;
    let e = e_targets(sub, &tail);
    let basis = build_basis(sub, known.head_grid()).map_err(|e| e.at_stage(Stage::Basis))?;
    let completeness = basis.completeness_score();
    if !(completeness >= opts.min_completeness) {
        return Err(Error::Conditioning { condition: 1.0 / completeness, limit: 1.0 / opts.min_completeness }
            .at_stage(Stage::Basis));
    }
    let head = reconstruct_w_head(&basis, &e, &opts.head).map_err(|e| e.at_stage(Stage::WHead))?;
    let moments = crate::wtransform::e_moments(sub, &head.w);
    let e_agreement = e
        .flattened()
        .iter()
        .zip(moments.flattened())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let w_full = join_w(known, &head.w, &tail).map_err(|e| e.at_stage(Stage::UnknownPart))?;
    let unknown =
        solve_unknown_part(known, &w_full, &opts.fixed_point).map_err(|e| e.at_stage(Stage::UnknownPart))?;
    let kernel = assemble(known, unknown.q2_weighted.values(), unknown.p2_weighted.values())
        .map_err(|e| e.at_stage(Stage::UnknownPart))?;
    let diagnostics = Diagnostics {
        a1_norm: a1.l2_norm(),
        b1_norm: b1.l2_norm(),
        w_tail_norm: tail.l2_norm(),
        e_value_count: e.count(),
        completeness,
        head_residual: head.residual,
        head_condition: head.condition,
        e_agreement,
        fixed_point_iterations: unknown.iterations,
        fixed_point_history: unknown.history.clone(),
    };
    Ok(Reconstruction { kernel, w_full, unknown, diagnostics })
}

/// `(w₁, w₂)` on `(0, π)` from the head on `(0, b)` and the tail on `(b, π)`;
/// the tail supplies the shared node `b`.
pub fn join_w(known: &KnownPart, head: &WPair, tail: &WPair) -> Result<WPair> {
    let grid = *known.grid();
    if !head.grid().same_as(&known.head_grid()) || !tail.grid().same_as(&known.tail_grid()) {
        return Err(Error::invalid("head and tail must live on the (0, b) and (b, π) grids"));
    }
    let nh = head.grid().n_points();
    let join = |h: &GridFunction, t: &GridFunction| {
        let mut v = h.values()[..nh - 1].to_vec();
        v.extend_from_slice(t.values());
        GridFunction::new(grid, v)
    };
    WPair::new(join(head.w1(), tail.w1())?, join(head.w2(), tail.w2())?)
}

/// Relative weighted L₂ distance on `(a, π)`:
/// `‖(π − t)(Δp, Δq)‖ / ‖(π − t)(p, q)‖` (absolute when the reference vanishes).
pub fn relative_weighted_error(reconstructed: &KernelPair, truth: &KernelPair, a: f64) -> Result<f64> {
    let grid = *truth.grid();
    if !reconstructed.grid().same_as(&grid) {
        return Err(Error::invalid("kernels must share a grid"));
    }
    let ai = grid.index_of(a).ok_or_else(|| Error::invalid("a is not a grid node"))?;
    let ug = grid.slice(ai, grid.n_points() - 1)?;
    let weighted = |k: &KernelPair, f: fn(&KernelPair) -> &GridFunction| -> Vec<C64> {
        (ai..grid.n_points()).map(|i| f(k).values()[i] * (PI - grid.node(i))).collect()
    };
    let (pr, qr) = (weighted(reconstructed, KernelPair::p), weighted(reconstructed, KernelPair::q));
    let (pt, qt) = (weighted(truth, KernelPair::p), weighted(truth, KernelPair::q));
    let dp: Vec<C64> = pr.iter().zip(&pt).map(|(a, b)| a - b).collect();
    let dq: Vec<C64> = qr.iter().zip(&qt).map(|(a, b)| a - b).collect();
    let num = pair_norm(&ug, &dp, &dq);
    let den = pair_norm(&ug, &pt, &qt);
    Ok(if den > 0.0 { num / den } else { num })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smooth(eps: f64) -> KernelPair {
        KernelPair::from_fns(
            Grid::full(513).unwrap(),
            |x| C64::new(0.3 * x.cos(), 0.1 * x) * eps,
            |x| C64::new(0.2 * (-x).exp(), -0.15 * (2.0 * x).sin()) * eps,
        )
        .unwrap()
    }

    #[test]
    fn known_part_validation() {
        let g = Grid::full(513).unwrap();
        let k = smooth(1.0);
        assert!(KnownPart::new(k.p().clone(), k.q().clone(), PI / 2.0).is_err());
        assert!(KnownPart::from_kernel(&k, 1.0).is_err());
        assert!(KnownPart::from_kernel(&k, 1.0 + g.step() * 0.3).is_err());
        let known = KnownPart::from_kernel(&k, PI / 2.0).unwrap();
        assert_eq!(known.a_index(), 256);
        assert_eq!(known.head_grid().n_points(), 257);
        assert!((known.tail_grid().x_start() - PI / 2.0).abs() < 1e-12);
        assert!(KnownPart::a_for_m(1).is_err());
        assert_eq!(KnownPart::aligned_points(513, 2), 513);
        assert_eq!(KnownPart::aligned_points(513, 3), 517);
        for m in 2..7 {
            let n = KnownPart::aligned_points(300, m);
            let grid = Grid::full(n).unwrap();
            assert!(grid.index_of(KnownPart::a_for_m(m).unwrap()).is_some());
            assert_eq!((n - 1) % 2, 0);
        }
    }

    #[test]
    fn zero_kernel_has_no_nonlinear_terms() {
        let k = KernelPair::zero(Grid::full(129).unwrap()).unwrap();
        let r = nonlinear_residual(&k).unwrap();
        assert_eq!(r.n1.max_abs(), 0.0);
        assert_eq!(r.n2.max_abs(), 0.0);
    }

    #[test]
    fn residual_is_rearranged_transform() {
        let k = smooth(1.0);
        let w = w_from_kernel(&k).unwrap();
        let r = nonlinear_residual(&k).unwrap();
        let g = *k.grid();
        let n = g.n_points();
        for i in (0..n).step_by(37) {
            let t = g.node(i);
            let n1 = -w.w1().values()[n - 1 - i] - k.q().values()[i] * (PI - t);
            let n2 = -w.w2().values()[n - 1 - i] - k.p().values()[i] * (PI - t);
            assert!((n1 - r.n1.values()[i]).norm() < 1e-13);
            assert!((n2 - r.n2.values()[i]).norm() < 1e-13);
        }
    }

    #[test]
    fn series_bound_holds() {
        let known = KnownPart::from_kernel(&smooth(1.0), PI / 2.0).unwrap();
        let (a1, b1) = compute_a1_b1(&known).unwrap();
        let m = known.kernel().p().l2_norm().max(known.kernel().q().l2_norm());
        let mut bound = 0.0;
        let mut fact = 1.0;
        for n in 2..40 {
            fact *= n as f64;
            let n = n as i32;
            bound += PI.powi(n) / fact * 2f64.powi(n - 1) * PI.powi(n - 1) * m.powi(n);
        }
        assert!(a1.l2_norm() <= bound && b1.l2_norm() <= bound);
    }

    #[test]
    fn consistent_trivial_continuation() {
        let known = KnownPart::from_kernel(&smooth(1.0), PI / 2.0).unwrap();
        let w = w_from_kernel(known.kernel()).unwrap();
        let u = solve_unknown_part(&known, &w, &FixedPointOptions::default()).unwrap();
        assert!(u.p2_weighted.values().iter().all(|v| v.norm() < 1e-9));
        assert!(u.q2_weighted.values().iter().all(|v| v.norm() < 1e-9));
    }

    #[test]
    fn manufactured_unknown_part() {
        let full = smooth(1.0);
        let a = PI / 2.0;
        let known = KnownPart::from_kernel(&full, a).unwrap();
        let w = w_from_kernel(&full).unwrap();
        let opts = FixedPointOptions { abs_tol: 1e-13, rel_tol: 1e-12, ..FixedPointOptions::default() };
        let u = solve_unknown_part(&known, &w, &opts).unwrap();
        let rec = assemble(&known, u.q2_weighted.values(), u.p2_weighted.values()).unwrap();
        let err = relative_weighted_error(&rec, &full, a).unwrap();
        assert!(err < 1e-8, "error {err}");
        assert!(u.history.windows(2).all(|h| h[1] <= h[0]));
    }

    #[test]
    fn inconsistent_tail_is_rejected() {
        let full = smooth(1.0);
        let known = KnownPart::from_kernel(&full, PI / 2.0).unwrap();
        let w = w_from_kernel(&smooth(1.2)).unwrap();
        let err = solve_unknown_part(&known, &w, &FixedPointOptions::default()).unwrap_err();
        assert!(matches!(err, Error::InconsistentData { .. }));
    }

    #[test]
    fn free_problem_reconstructs_zero() {
        let known = KnownPart::from_kernel(&KernelPair::zero(Grid::full(513).unwrap()).unwrap(), PI / 2.0).unwrap();
        let sub = Subspectrum::unperturbed(2, 16).unwrap();
        let rec = algorithm1(&known, &sub, &Algorithm1Options::default()).unwrap();
        assert!(rec.kernel.p().max_abs() < 1e-10 && rec.kernel.q().max_abs() < 1e-10);
    }
}
