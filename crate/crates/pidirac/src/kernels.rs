//! Kernel construction from the config: named analytic families with
//! parameters drawn from the seed, or sampled data.

use std::f64::consts::PI;

use pidirac_core::families::{Bump, KernelFamily, Profile, TrigTerm};
use pidirac_core::{Grid, KernelPair, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ExperimentConfig, KernelKind};
use crate::error::{CliError, Result};
use crate::files;

/// Points of the reference grid used to normalize random kernels, so a kernel
/// does not change with `grid`.
const NORM_POINTS: usize = 2049;

/// The kernel described by `cfg`, sampled on `[0, π]` with `n_points` nodes.
/// File kernels keep their own grid and must match `n_points`.
pub fn kernel(cfg: &ExperimentConfig, n_points: usize) -> Result<KernelPair> {
    let grid = Grid::full(n_points)?;
    match cfg.kernel {
        KernelKind::File => {
            let path = cfg.kernel_file.as_ref().ok_or_else(|| CliError::Config("kernel_file is not set".into()))?;
            let k = files::read_kernel(path)?;
            if k.grid().n_points() != n_points {
                return Err(CliError::Config(format!(
                    "{} has {} points but the aligned grid has {n_points}",
                    path.display(),
                    k.grid().n_points()
                )));
            }
            Ok(k)
        }
        KernelKind::Smooth => smooth(grid),
        _ => Ok(family(cfg)?.sample(grid)?),
    }
}

/// The analytic family of a random (or zero) kernel kind.
pub fn family(cfg: &ExperimentConfig) -> Result<KernelFamily> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.terms.max(1);
    let (p, q) = match cfg.kernel {
        KernelKind::Zero => return Ok(KernelFamily::zero()),
        KernelKind::Trig => (random_trig(&mut rng, n), random_trig(&mut rng, n)),
        KernelKind::Gaussian => (random_bumps(&mut rng, n), random_bumps(&mut rng, n)),
        KernelKind::PiecewiseLinear => (random_knots(&mut rng, n), random_knots(&mut rng, n)),
        KernelKind::Smooth | KernelKind::File => {
            return Err(CliError::Config("only the random kinds have an analytic family".into()))
        }
    };
    Ok(KernelFamily { p: normalized(p, cfg.amplitude)?, q: normalized(q, cfg.amplitude)? })
}

fn smooth(grid: Grid) -> Result<KernelPair> {
    Ok(KernelPair::from_fns(
        grid,
        |t| C64::new(0.3 * t.cos(), 0.1 * t),
        |t| C64::new(0.2 * (-t).exp(), -0.15 * (2.0 * t).sin()),
    )?)
}

fn complex(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

fn random_trig(rng: &mut ChaCha8Rng, n: usize) -> Profile {
    Profile::Trig(
        (0..n)
            .map(|_| TrigTerm { k: rng.random_range(0..=4) as f64, cos: complex(rng), sin: complex(rng) })
            .collect(),
    )
}

fn random_bumps(rng: &mut ChaCha8Rng, n: usize) -> Profile {
    Profile::Gaussian(
        (0..n)
            .map(|_| Bump {
                amplitude: complex(rng),
                center: rng.random_range(0.0..PI),
                width: rng.random_range(0.25..0.8),
            })
            .collect(),
    )
}

/// Knots at `0`, `π` and one jittered point in each of `n` equal cells, so
/// neighbouring knots stay at least half a cell apart.
fn random_knots(rng: &mut ChaCha8Rng, n: usize) -> Profile {
    let cell = PI / n as f64;
    let mut knots = vec![(0.0, complex(rng))];
    knots.extend((0..n).map(|j| (cell * (j as f64 + rng.random_range(0.25..0.75)), complex(rng))));
    knots.push((PI, complex(rng)));
    Profile::PiecewiseLinear(knots)
}

/// `profile` rescaled to L₂ norm `target` on `(0, π)`.
fn normalized(profile: Profile, target: f64) -> Result<Profile> {
    let grid = Grid::full(NORM_POINTS)?;
    let h = grid.step();
    let norm = grid
        .nodes()
        .enumerate()
        .map(|(i, x)| {
            let w = if i == 0 || i + 1 == NORM_POINTS { 0.5 * h } else { h };
            w * profile.eval(x).norm_sqr()
        })
        .sum::<f64>()
        .sqrt();
    let s = if norm > 0.0 { target / norm } else { 0.0 };
    Ok(match profile {
        Profile::Zero => Profile::Zero,
        Profile::Trig(terms) => {
            Profile::Trig(terms.into_iter().map(|t| TrigTerm { cos: t.cos * s, sin: t.sin * s, ..t }).collect())
        }
        Profile::Gaussian(bumps) => {
            Profile::Gaussian(bumps.into_iter().map(|b| Bump { amplitude: b.amplitude * s, ..b }).collect())
        }
        Profile::PiecewiseLinear(knots) => Profile::PiecewiseLinear(knots.into_iter().map(|(x, v)| (x, v * s)).collect()),
    })
}
