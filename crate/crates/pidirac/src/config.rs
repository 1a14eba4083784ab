//! Experiment configuration: a flat TOML table whose keys can be overridden
//! from the command line.
//!
//! ```toml
//! kernel = "gaussian"   # zero | smooth | trig | gaussian | piecewise-linear | file
//! amplitude = 0.3
//! terms = 3
//! seed = 7
//! grid = 513
//! m = 2
//! window = 32
//! tol = 1e-3
//! ```

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use pidirac_core::KnownPart;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io_err, CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    Zero,
    /// The fixed reference kernel `p = 0.3 cos t + 0.1 i t`,
    /// `q = 0.2 e^{−t} − 0.15 i sin 2t`.
    Smooth,
    Trig,
    Gaussian,
    PiecewiseLinear,
    /// Sampled values read from `kernel_file`.
    File,
}

/// Representation of the reconstructed `w` on `(0, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeadKind {
    /// Legendre polynomials of a degree chosen from the number of E-values.
    Auto,
    /// Legendre polynomials of degree `head_degree`.
    Polynomial,
    /// Combinations of the basis vectors; fits any data, so it cannot flag
    /// inconsistent eigenvalues, but handles kernels with kinks.
    Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kernel: KernelKind,
    /// Kernel samples in the `kernel.csv` layout, for `kernel = "file"`.
    pub kernel_file: Option<PathBuf>,
    /// L₂ norm on `(0, π)` of each of `p` and `q` for the random families.
    pub amplitude: f64,
    /// Terms, bumps or interior knots per component of a random kernel.
    pub terms: usize,
    pub seed: u64,
    /// Grid points on `[0, π]`, raised to the next grid aligned with `m`.
    pub grid: Option<usize>,
    pub m: Option<usize>,
    /// Explicit split point; must equal `π − π/m` when `m` is also given.
    pub a: Option<f64>,
    /// `|k| ≤ window` for `forward`, `|s| ≤ window` for subspectra.
    pub window: usize,
    /// Pass threshold for the relative reconstruction error.
    pub tol: f64,
    /// `forward` compares eigenvalues with the collocation oracle for
    /// `|k| ≤ oracle_window`; 0 disables the comparison.
    pub oracle_window: usize,
    pub head: HeadKind,
    /// Degree for `head = "polynomial"`.
    pub head_degree: Option<usize>,
    /// Largest accepted relative residual of the head fit; larger residuals
    /// are reported as data inconsistent with the known part.
    pub head_tol: f64,
    /// Known part for `invert` (`kernel.csv` layout; values beyond `a` are ignored).
    pub known: Option<PathBuf>,
    /// Eigenvalues for `invert` and `basis-diag` (`spectrum.csv` layout).
    pub subspectrum: Option<PathBuf>,
    /// Reference kernel for `invert`; enables `recon.csv` and the error check.
    pub truth: Option<PathBuf>,
    /// Output directory. Not part of the config hash.
    #[serde(skip_serializing)]
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kernel: KernelKind::Smooth,
            kernel_file: None,
            amplitude: 0.3,
            terms: 3,
            seed: 0,
            grid: None,
            m: None,
            a: None,
            window: 32,
            tol: 1e-3,
            oracle_window: 16,
            head: HeadKind::Auto,
            head_degree: None,
            head_tol: 1e-3,
            known: None,
            subspectrum: None,
            truth: None,
            out: PathBuf::from("out"),
        }
    }
}

pub const DEFAULT_GRID: usize = 513;

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub grid: Option<usize>,
    pub m: Option<usize>,
    pub window: Option<usize>,
    pub tol: Option<f64>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(grid) = o.grid {
            self.grid = Some(grid);
        }
        if let Some(m) = o.m {
            self.m = Some(m);
        }
        if let Some(window) = o.window {
            self.window = window;
        }
        if let Some(tol) = o.tol {
            self.tol = tol;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if matches!(self.m, Some(m) if m < 2) {
            return Err(CliError::Config("m must be at least 2".into()));
        }
        if matches!(self.grid, Some(n) if n < 9) {
            return Err(CliError::Config("grid needs at least 9 points".into()));
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(CliError::Config("amplitude must be finite and non-negative".into()));
        }
        if !(self.tol > 0.0 && self.head_tol > 0.0) {
            return Err(CliError::Config("tol and head_tol must be positive".into()));
        }
        if (self.head == HeadKind::Polynomial) != self.head_degree.is_some() {
            return Err(CliError::Config("head_degree goes with head = \"polynomial\" and nothing else".into()));
        }
        if self.kernel == KernelKind::File && self.kernel_file.is_none() {
            return Err(CliError::Config("kernel = \"file\" needs kernel_file".into()));
        }
        self.interval().map(|_| ())
    }

    /// `(m, a)`, with `m = 2` when neither is set. `m` is `None` for an
    /// explicit `a` that is not of the form `π − π/m`.
    pub fn interval(&self) -> Result<(Option<usize>, f64)> {
        match (self.m, self.a) {
            (None, None) => Ok((Some(2), KnownPart::a_for_m(2)?)),
            (Some(m), None) => Ok((Some(m), KnownPart::a_for_m(m)?)),
            (Some(m), Some(a)) => {
                let expected = KnownPart::a_for_m(m)?;
                if (a - expected).abs() > 1e-12 {
                    return Err(CliError::Config(format!("a = {a} does not match π − π/m = {expected} for m = {m}")));
                }
                Ok((Some(m), expected))
            }
            (None, Some(a)) => {
                if !(a >= PI / 2.0 && a < PI) {
                    return Err(CliError::Config(format!("a = {a} outside [π/2, π)")));
                }
                let m = PI / (PI - a);
                let rounded = m.round();
                Ok((((m - rounded).abs() < 1e-9).then_some(rounded as usize), a))
            }
        }
    }

    /// `m`, for commands that need the index progression `{sm}`.
    pub fn require_m(&self) -> Result<usize> {
        self.interval()?
            .0
            .ok_or_else(|| CliError::Config("this command needs a = π − π/m for an integer m".into()))
    }

    /// Requested point count, aligned with `m` when one is known.
    pub fn grid_points(&self) -> Result<usize> {
        let n = self.grid.unwrap_or(DEFAULT_GRID);
        Ok(match self.interval()?.0 {
            Some(m) => KnownPart::aligned_points(n, m),
            None => n,
        })
    }

    /// SHA-256 of the canonical JSON form of the effective configuration
    /// (everything except `out`), in hex.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_table_round_trip() {
        let cfg = ExperimentConfig::parse(
            r#"
            kernel = "piecewise-linear"
            seed = 11
            m = 3
            window = 8
            "#,
        )
        .unwrap();
        assert_eq!(cfg.kernel, KernelKind::PiecewiseLinear);
        assert_eq!(cfg.seed, 11);
        assert_eq!(cfg.grid_points().unwrap(), 517);
        assert_eq!(cfg.tol, 1e-3);
    }

    #[test]
    fn rejects_unknown_keys_and_tables() {
        assert!(ExperimentConfig::parse("kernal = \"trig\"").is_err());
        assert!(ExperimentConfig::parse("[kernel]\nkind = \"trig\"").is_err());
    }

    #[test]
    fn overrides_win() {
        let mut cfg = ExperimentConfig::parse("seed = 1\nwindow = 4").unwrap();
        cfg.apply(&Overrides { seed: Some(9), window: Some(6), ..Default::default() });
        assert_eq!((cfg.seed, cfg.window), (9, 6));
    }

    #[test]
    fn hash_ignores_output_directory() {
        let mut a = ExperimentConfig::default();
        let b = ExperimentConfig { out: "elsewhere".into(), ..a.clone() };
        assert_eq!(a.hash(), b.hash());
        a.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn interval_forms() {
        let cfg = |m, a| ExperimentConfig { m, a, ..Default::default() };
        assert_eq!(cfg(None, None).interval().unwrap().0, Some(2));
        assert_eq!(cfg(None, Some(PI - PI / 4.0)).interval().unwrap().0, Some(4));
        assert_eq!(cfg(None, Some(2.0)).interval().unwrap().0, None);
        assert!(cfg(Some(3), Some(2.0)).interval().is_err());
        assert!(cfg(None, Some(1.0)).interval().is_err());
        assert!(cfg(None, Some(2.0)).require_m().is_err());
    }
}
