//! Zeros of an analytic function in a strip, box by box.
//!
//! The strip `|Im λ| ≤ Y` is cut into unit boxes `[k − ½, k + ½] × [−Y, Y]`.
//! The zero count of each box comes from the argument principle (the change of
//! `arg f` along the boundary, sampled adaptively so that consecutive samples
//! never differ by more than `π/4` in argument). Boxes with a single zero are
//! resolved by Newton's method seeded at `k`; everything else goes through
//! contour moments `∮ zᵖ f'/f`, Newton identities and a companion matrix,
//! followed by Newton polishing and merging of coincident zeros.

use crate::linalg;
use crate::prelude::*;
use crate::quad::gauss_legendre_on;
use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroSearchOptions {
    /// Half height `Y` of the search strip.
    pub im_bound: f64,
    /// Initial samples per unit of boundary length.
    pub samples_per_unit: usize,
    /// Maximum bisection depth when tracking the argument along an edge.
    pub max_depth: usize,
    /// Zeros closer than this are merged into one multiple zero.
    pub merge_tol: f64,
    /// Accept a zero when `|f| ≤ residual_tol · max(1, max |f| on the box boundary)`.
    pub residual_tol: f64,
    pub newton_max_iter: usize,
    /// Gauss-Legendre nodes per edge for contour moments.
    pub moment_nodes: usize,
}

impl Default for ZeroSearchOptions {
    fn default() -> Self {
        Self {
            im_bound: 2.0,
            samples_per_unit: 8,
            max_depth: 24,
            merge_tol: 1e-6,
            residual_tol: 1e-8,
            newton_max_iter: 60,
            moment_nodes: 48,
        }
    }
}

/// A zero with multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zero {
    pub value: C64,
    pub multiplicity: usize,
}

/// Zeros found in the box centred at `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxZeros {
    pub k: i64,
    /// Zero count from the argument principle.
    pub count: usize,
    /// Sorted by `Im`, then `Re`.
    pub zeros: Vec<Zero>,
}

fn fail(k: i64, reason: impl Into<String>) -> Error {
    Error::RootSearch { k, reason: reason.into() }
}

struct ArgTracker<'a, F> {
    f: &'a F,
    opts: &'a ZeroSearchOptions,
    k: i64,
    max_abs: f64,
}

impl<F: Fn(C64) -> Result<C64>> ArgTracker<'_, F> {
    fn eval(&mut self, z: C64) -> Result<C64> {
        let v = (self.f)(z)?;
        if v.norm() == 0.0 || !v.re.is_finite() || !v.im.is_finite() {
            return Err(fail(self.k, format!("function vanishes or is non-finite on the boundary at {z}")));
        }
        self.max_abs = self.max_abs.max(v.norm());
        Ok(v)
    }

    fn segment(&mut self, za: C64, fa: C64, zb: C64, fb: C64, depth: usize) -> Result<f64> {
        let d = (fb / fa).arg();
        if d.abs() <= PI / 4.0 {
            return Ok(d);
        }
        if depth == 0 {
            return Err(fail(self.k, format!("argument not resolved near {za}")));
        }
        let zm = (za + zb) * 0.5;
        let fm = self.eval(zm)?;
        Ok(self.segment(za, fa, zm, fm, depth - 1)? + self.segment(zm, fm, zb, fb, depth - 1)?)
    }

    /// Argument change of `f` along the straight edge `za → zb`, and the
    /// largest `|f|` seen on it.
    fn edge(&mut self, za: C64, zb: C64) -> Result<(f64, f64)> {
        self.max_abs = 0.0;
        let n = ((zb - za).norm() * self.opts.samples_per_unit as f64).ceil().max(2.0) as usize;
        let mut total = 0.0;
        let mut z0 = za;
        let mut f0 = self.eval(za)?;
        for i in 1..=n {
            let z1 = za + (zb - za) * (i as f64 / n as f64);
            let f1 = self.eval(z1)?;
            total += self.segment(z0, f0, z1, f1, self.opts.max_depth)?;
            z0 = z1;
            f0 = f1;
        }
        Ok((total, self.max_abs))
    }
}

/// Zeros of `f` in the boxes `k = k_min, …, k_max`.
pub fn zeros_by_box<F>(f: F, k_min: i64, k_max: i64, opts: &ZeroSearchOptions) -> Result<Vec<BoxZeros>>
where
    F: Fn(C64) -> Result<C64>,
{
    if k_max < k_min {
        return Err(Error::invalid("empty box range"));
    }
    if !(opts.im_bound > 0.0) {
        return Err(Error::invalid("strip half height must be positive"));
    }
    let y = opts.im_bound;
    let nb = (k_max - k_min + 1) as usize;
    // argument change up each vertical line x = k − ½, k_min ≤ k ≤ k_max + 1
    let mut up = Vec::with_capacity(nb + 1);
    let mut tracker = ArgTracker { f: &f, opts, k: k_min, max_abs: 0.0 };
    for i in 0..=nb {
        let x = (k_min + i as i64) as f64 - 0.5;
        tracker.k = k_min + i as i64;
        up.push(tracker.edge(C64::new(x, -y), C64::new(x, y))?);
    }
    let mut out = Vec::with_capacity(nb);
    for i in 0..nb {
        let k = k_min + i as i64;
        let (xl, xr) = (k as f64 - 0.5, k as f64 + 0.5);
        let mut box_tracker = ArgTracker { f: &f, opts, k, max_abs: 0.0 };
        let (bottom, m_bottom) = box_tracker.edge(C64::new(xl, -y), C64::new(xr, -y))?;
        let (top, m_top) = box_tracker.edge(C64::new(xl, y), C64::new(xr, y))?;
        let winding = (bottom + up[i + 1].0 - top - up[i].0) / (2.0 * PI);
        let count = winding.round();
        if (winding - count).abs() > 0.05 || count < 0.0 {
            return Err(fail(k, format!("winding number {winding:.4} is not a non-negative integer")));
        }
        let count = count as usize;
        let scale = m_bottom.max(m_top).max(up[i].1).max(up[i + 1].1).max(1.0);
        let zeros = resolve_box(&f, k, count, scale, opts)?;
        out.push(BoxZeros { k, count, zeros });
    }
    Ok(out)
}

fn in_box(z: C64, k: i64, y: f64) -> bool {
    let slack = 1e-9;
    (z.re - k as f64).abs() <= 0.5 + slack && z.im.abs() <= y + slack
}

fn derivative<F: Fn(C64) -> Result<C64>>(f: &F, z: C64, h: f64) -> Result<C64> {
    let hh = C64::new(h, 0.0);
    Ok((f(z - hh * 2.0)? - f(z + hh * 2.0)? + (f(z + hh)? - f(z - hh)?) * 8.0) / (12.0 * h))
}

/// Newton iteration with a finite-difference derivative. Returns `None` when it
/// fails to settle.
fn newton<F: Fn(C64) -> Result<C64>>(f: &F, z0: C64, max_iter: usize) -> Result<Option<C64>> {
    let mut z = z0;
    for _ in 0..max_iter {
        let fz = f(z)?;
        if fz.norm() == 0.0 {
            return Ok(Some(z));
        }
        let d = derivative(f, z, 1e-4)?;
        if d.norm() == 0.0 || !d.re.is_finite() {
            return Ok(None);
        }
        let step = fz / d;
        z -= step;
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Ok(None);
        }
        if step.norm() <= 1e-13 * (1.0 + z.norm()) {
            return Ok(Some(z));
        }
    }
    Ok(None)
}

fn resolve_box<F: Fn(C64) -> Result<C64>>(
    f: &F,
    k: i64,
    count: usize,
    scale: f64,
    opts: &ZeroSearchOptions,
) -> Result<Vec<Zero>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let accept = |z: C64| -> Result<bool> { Ok(f(z)?.norm() <= opts.residual_tol * scale) };
    if count == 1 {
        if let Some(z) = newton(f, C64::new(k as f64, 0.0), opts.newton_max_iter)? {
            if in_box(z, k, opts.im_bound) && accept(z)? {
                return Ok(vec![Zero { value: z, multiplicity: 1 }]);
            }
        }
    }
    let approx = moment_zeros(f, k, count, opts)?;
    let mut polished = Vec::with_capacity(count);
    for z0 in approx {
        let z = newton(f, z0, opts.newton_max_iter)?.unwrap_or(z0);
        polished.push(z);
    }
    let zeros = merge(f, polished, opts)?;
    for z in &zeros {
        if !in_box(z.value, k, opts.im_bound) {
            return Err(fail(k, format!("zero {} left its box", z.value)));
        }
        if !accept(z.value)? {
            return Err(fail(k, format!("residual too large at {}", z.value)));
        }
    }
    Ok(zeros)
}

/// Groups zeros closer than `merge_tol` and checks that the lower derivatives
/// of a merged group are small enough for it to be a multiple zero.
fn merge<F: Fn(C64) -> Result<C64>>(f: &F, mut zs: Vec<C64>, opts: &ZeroSearchOptions) -> Result<Vec<Zero>> {
    zs.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
    let mut groups: Vec<Vec<C64>> = Vec::new();
    for z in zs {
        match groups.iter_mut().find(|g| (g[0] - z).norm() <= opts.merge_tol) {
            Some(g) => g.push(z),
            None => groups.push(vec![z]),
        }
    }
    let mut out = Vec::new();
    for g in groups {
        let centre = g.iter().sum::<C64>() / g.len() as f64;
        if g.len() > 1 && derivative(f, centre, 1e-3)?.norm() > 1e-4 * (1.0 + f(centre + 0.5)?.norm()) {
            out.extend(g.into_iter().map(|value| Zero { value, multiplicity: 1 }));
        } else {
            out.push(Zero { value: centre, multiplicity: g.len() });
        }
    }
    out.sort_by(|a, b| a.value.im.total_cmp(&b.value.im).then(a.value.re.total_cmp(&b.value.re)));
    Ok(out)
}

/// Approximate zeros from the power sums `s_p = (2πi)⁻¹ ∮ zᵖ f'/f dz` (taken
/// about the box centre).
fn moment_zeros<F: Fn(C64) -> Result<C64>>(
    f: &F,
    k: i64,
    count: usize,
    opts: &ZeroSearchOptions,
) -> Result<Vec<C64>> {
    let y = opts.im_bound;
    let c = C64::new(k as f64, 0.0);
    let corners = [
        C64::new(k as f64 - 0.5, -y),
        C64::new(k as f64 + 0.5, -y),
        C64::new(k as f64 + 0.5, y),
        C64::new(k as f64 - 0.5, y),
    ];
    let mut s = vec![C64::new(0.0, 0.0); count + 1];
    for e in 0..4 {
        let (za, zb) = (corners[e], corners[(e + 1) % 4]);
        let len = (zb - za).norm();
        let n = opts.moment_nodes * (len.ceil() as usize).max(1);
        let (t, w) = gauss_legendre_on(n, 0.0, 1.0);
        for (ti, wi) in t.iter().zip(&w) {
            let z = za + (zb - za) * *ti;
            let ratio = derivative(f, z, 1e-3)? / f(z)?;
            let dz = (zb - za) * *wi;
            let mut zp = C64::new(1.0, 0.0);
            for sp in s.iter_mut() {
                *sp += zp * ratio * dz;
                zp *= z - c;
            }
        }
    }
    for sp in s.iter_mut() {
        *sp /= C64::new(0.0, 2.0 * PI);
    }
    if (s[0].re - count as f64).abs() > 0.1 {
        return Err(fail(k, format!("contour moment count {} disagrees with winding {count}", s[0].re)));
    }
    // Newton identities: elementary symmetric functions e_j of the zeros
    let mut e = vec![C64::new(1.0, 0.0); count + 1];
    for j in 1..=count {
        let mut acc = C64::new(0.0, 0.0);
        for i in 1..=j {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += e[j - i] * s[i] * sign;
        }
        e[j] = acc / j as f64;
    }
    // companion matrix of zᶜ − e₁ zᶜ⁻¹ + e₂ zᶜ⁻² − …
    let mut comp = DMatrix::<C64>::zeros(count, count);
    for j in 0..count {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        comp[(0, j)] = e[j + 1] * sign;
    }
    for i in 1..count {
        comp[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    Ok(linalg::eigenvalues(comp)?.into_iter().map(|z| z + c).collect())
}
