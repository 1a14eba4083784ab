//! The four subcommands. Each returns whether its checks passed; failures to
//! run at all are errors.

use pidirac_core::basis::{build_basis, HeadRepresentation};
use pidirac_core::inverse::{relative_weighted_error, Algorithm1Options};
use pidirac_core::oracle::{oracle_eigenvalues, OracleOptions};
use pidirac_core::roots::ZeroSearchOptions;
use pidirac_core::wtransform::{default_samples, w_from_kernel};
use pidirac_core::{
    algorithm1, char_fn, eigenvalues, eigenvalues_at, Error as CoreError, Grid, KernelPair, KnownPart,
    Subspectrum, C64,
};
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, HeadKind, KernelKind};
use crate::error::{CliError, Result};
use crate::files::{self, OutputDir, SpectrumRow};
use crate::kernels;

/// Largest accepted distance between forward and oracle eigenvalues.
pub const ORACLE_TOL: f64 = 1e-4;

/// Largest accepted `|Δ(λ_k)|` of a reconstructed kernel at its input eigenvalues.
pub const SPECTRAL_TOL: f64 = 1e-4;

fn pass_str(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn max_residual(kernel: &KernelPair, values: impl IntoIterator<Item = C64>) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for lambda in values {
        worst = worst.max(char_fn(kernel, lambda)?.norm());
    }
    Ok(worst)
}

/// Spectrum of the configured kernel for `|k| ≤ window`, the characteristic
/// function on real samples, `w`, and an oracle cross-check.
pub fn forward(cfg: &ExperimentConfig, out: &OutputDir) -> Result<bool> {
    let n = cfg.grid_points()?;
    let kernel = kernels::kernel(cfg, n)?;
    let spectrum = eigenvalues(&kernel, cfg.window, &ZeroSearchOptions::default())?;
    let rows: Vec<SpectrumRow> = spectrum
        .entries()
        .iter()
        .map(|e| SpectrumRow { k: e.index, lambda: e.value, multiplicity: e.multiplicity })
        .collect();
    let residual = max_residual(&kernel, rows.iter().map(|r| r.lambda))?;

    let oracle_window = cfg.oracle_window.min(cfg.window);
    let (dist, oracle) = if cfg.oracle_window > 0 {
        let reference = oracle_eigenvalues(&kernel, oracle_window, &OracleOptions::default())?;
        let dist: Vec<Option<f64>> = rows
            .iter()
            .map(|r| {
                (r.k.unsigned_abs() as usize <= oracle_window)
                    .then(|| reference.value_at(r.k).map_or(f64::INFINITY, |v| (v - r.lambda).norm()))
            })
            .collect();
        let worst = dist.iter().flatten().fold(0.0, |a: f64, &d| a.max(d));
        let ok = worst <= ORACLE_TOL;
        (Some(dist), Some(json!({ "window": oracle_window, "max_distance": worst, "tolerance": ORACLE_TOL, "pass": ok })))
    } else {
        (None, None)
    };

    let sums = spectrum.kappa_sq_partial_sums();
    let total = sums.last().map_or(0.0, |s| s.1);
    let inner = sums.get(cfg.window / 2).map_or(0.0, |s| s.1);
    let kappa_bounded = total.is_finite() && total - inner <= inner + 1e-12;

    let samples: Vec<(f64, C64)> = default_samples(cfg.window)
        .into_iter()
        .map(|l| Ok((l, char_fn(&kernel, C64::new(l, 0.0))?)))
        .collect::<Result<_>>()?;

    out.kernel("kernel.csv", &kernel)?;
    out.w(&w_from_kernel(&kernel)?)?;
    out.spectrum(&rows, dist.as_deref())?;
    out.delta(&samples)?;

    let oracle_ok = oracle.as_ref().is_none_or(|o| o["pass"] == true);
    let pass = oracle_ok && kappa_bounded;
    out.summary(json!({
        "grid_points": n,
        "window": cfg.window,
        "eigenvalues": spectrum.expanded().len(),
        "distinct_eigenvalues": rows.len(),
        "char_fn_residual": residual,
        "kappa_sq_total": total,
        "kappa_sq_outer_half": total - inner,
        "kappa_sq_bounded": kappa_bounded,
        "oracle": oracle,
        "pass": pass,
    }))?;
    println!("eigenvalues: {} (|k| <= {}), max |Δ(λ_k)| = {residual:.2e}", spectrum.expanded().len(), cfg.window);
    if let Some(o) = &oracle {
        println!("oracle distance <= {ORACLE_TOL:e}: {} (max {:.2e})", pass_str(oracle_ok), o["max_distance"].as_f64().unwrap_or(f64::NAN));
    }
    println!("kappa_sq bounded: {}", pass_str(kappa_bounded));
    Ok(pass)
}

/// Rows that belong to the progression `{sm : |s| ≤ window}` (all rows when
/// `m` is unknown), multiplicities expanded to consecutive indices.
fn progression_pairs(rows: &[SpectrumRow], m: Option<usize>, window: usize) -> Vec<(i64, C64)> {
    rows.iter()
        .flat_map(|r| (0..r.multiplicity as i64).map(move |j| (r.k + j, r.lambda)))
        .filter(|(k, _)| match m {
            Some(m) => k % m as i64 == 0 && (k / m as i64).unsigned_abs() as usize <= window,
            None => true,
        })
        .collect()
}

fn algorithm1_options(cfg: &ExperimentConfig) -> Algorithm1Options {
    let mut opts = Algorithm1Options::default();
    opts.head.representation = match (cfg.head, cfg.head_degree) {
        (HeadKind::Span, _) => HeadRepresentation::Span,
        (HeadKind::Polynomial, Some(degree)) => HeadRepresentation::Polynomial { degree },
        _ => HeadRepresentation::Auto,
    };
    opts.head.residual_tol = cfg.head_tol;
    opts
}

/// Runs the reconstruction, writes `w.csv` (and `recon.csv` given a
/// reference), the summary, and returns the reconstructed kernel.
fn reconstruct(
    cfg: &ExperimentConfig,
    out: &OutputDir,
    known: &KnownPart,
    sub: &Subspectrum,
    truth: Option<&KernelPair>,
) -> Result<(KernelPair, bool)> {
    let opts = algorithm1_options(cfg);
    let rec = algorithm1(known, sub, &opts)?;
    let d = &rec.diagnostics;
    let spectral_residual = max_residual(&rec.kernel, sub.values().iter().map(|v| v.0))?;
    out.w(&rec.w_full)?;

    let rel_err = match truth {
        Some(truth) => {
            out.recon(truth, &rec.kernel)?;
            Some(relative_weighted_error(&rec.kernel, truth, known.a())?)
        }
        None => None,
    };
    let err_ok = rel_err.is_none_or(|e| e <= cfg.tol);
    let spectral_ok = spectral_residual <= SPECTRAL_TOL;
    let pass = err_ok && spectral_ok;
    out.summary(json!({
        "grid_points": known.grid().n_points(),
        "m": cfg.interval()?.0,
        "a": known.a(),
        "b": known.b(),
        "subspectrum_count": sub.total_count(),
        "stages": {
            "known-terms": { "a1_norm": d.a1_norm, "b1_norm": d.b1_norm },
            "w-tail": { "norm": d.w_tail_norm },
            "e-targets": { "count": d.e_value_count },
            "basis": { "completeness": d.completeness, "min_completeness": opts.min_completeness, "pass": true },
            "w-head": {
                "residual": d.head_residual,
                "residual_tol": opts.head.residual_tol,
                "condition": d.head_condition,
                "e_agreement": d.e_agreement,
                "pass": true,
            },
            "unknown-part": {
                "iterations": d.fixed_point_iterations,
                "final_mismatch": d.fixed_point_history.last(),
                "pass": true,
            },
        },
        "spectral_residual": spectral_residual,
        "spectral_residual_tol": SPECTRAL_TOL,
        "spectral_residual_pass": spectral_ok,
        "rel_err": rel_err,
        "tol": cfg.tol,
        "rel_err_pass": rel_err.map(|_| err_ok),
        "pass": pass,
    }))?;
    println!("head residual {:.2e}, fixed point {} iterations", d.head_residual, d.fixed_point_iterations);
    println!("max |Δ(λ_k)| ≤ {SPECTRAL_TOL:e}: {} ({spectral_residual:.2e})", pass_str(spectral_ok));
    if let Some(e) = rel_err {
        println!("rel_err = {e:.3e}");
        println!("rel_err ≤ {:e}: {}", cfg.tol, pass_str(err_ok));
    }
    Ok((rec.kernel, pass))
}

/// Reconstruction from a known-part file and a subspectrum file.
pub fn invert(cfg: &ExperimentConfig, out: &OutputDir) -> Result<bool> {
    let need = |p: &Option<std::path::PathBuf>, key: &str| {
        p.clone().ok_or_else(|| CliError::Config(format!("invert needs `{key}`")))
    };
    let (known_path, sub_path) = (need(&cfg.known, "known")?, need(&cfg.subspectrum, "subspectrum")?);
    let (m, a) = cfg.interval()?;
    let known = KnownPart::from_kernel(&files::read_kernel(&known_path)?, a)?;
    let pairs = progression_pairs(&files::read_spectrum(&sub_path)?, m, cfg.window);
    let sub = Subspectrum::from_pairs(pairs)?;
    let truth = cfg.truth.as_ref().map(|p| files::read_kernel(p)).transpose()?;
    if let Some(t) = &truth {
        if !t.grid().same_as(known.grid()) {
            return Err(CliError::Config("truth and known part must share a grid".into()));
        }
    }
    let (kernel, ok) = reconstruct(cfg, out, &known, &sub, truth.as_ref())?;
    out.kernel("kernel.csv", &kernel)?;
    Ok(ok)
}

/// Kernel → subspectrum `{λ_{sm}}` → reconstruction → error against the kernel.
pub fn roundtrip(cfg: &ExperimentConfig, out: &OutputDir) -> Result<bool> {
    let m = cfg.require_m()?;
    let truth = kernels::kernel(cfg, cfg.grid_points()?)?;
    let known = KnownPart::from_kernel(&truth, KnownPart::a_for_m(m)?)?;
    let w = cfg.window as i64;
    let indices: Vec<i64> = (-w..=w).map(|s| s * m as i64).collect();
    let pairs = eigenvalues_at(&truth, &indices, &ZeroSearchOptions::default())?;
    let rows: Vec<SpectrumRow> = pairs.iter().map(|&(k, lambda)| SpectrumRow { k, lambda, multiplicity: 1 }).collect();
    out.kernel("kernel.csv", &truth)?;
    out.spectrum(&rows, None)?;
    let sub = Subspectrum::from_pairs(pairs)?;
    let (_, ok) = reconstruct(cfg, out, &known, &sub, Some(&truth))?;
    Ok(ok)
}

/// Gram conditioning and completeness of the vector system of a subspectrum
/// on `(0, b)`.
pub fn basis_diag(cfg: &ExperimentConfig, out: &OutputDir) -> Result<bool> {
    let m = cfg.require_m()?;
    let a = KnownPart::a_for_m(m)?;
    let n = cfg.grid_points()?;
    let rows: Vec<SpectrumRow> = match (&cfg.subspectrum, cfg.kernel) {
        (Some(path), _) => files::read_spectrum(path)?,
        (None, KernelKind::Zero) => progression_pairs_unperturbed(m, cfg.window),
        (None, _) => {
            let kernel = kernels::kernel(cfg, n)?;
            let w = cfg.window as i64;
            let indices: Vec<i64> = (-w..=w).map(|s| s * m as i64).collect();
            eigenvalues_at(&kernel, &indices, &ZeroSearchOptions::default())?
                .into_iter()
                .map(|(k, lambda)| SpectrumRow { k, lambda, multiplicity: 1 })
                .collect()
        }
    };
    let pairs = progression_pairs(&rows, Some(m), cfg.window);
    let sub = Subspectrum::from_pairs(pairs.clone())?;
    let head = KnownPart::from_kernel(&KernelPair::zero(Grid::full(n)?)?, a)?.head_grid();
    let basis = build_basis(&sub, head)?;
    let condition = basis.gram_condition();
    let completeness = basis.completeness_score();
    let min_completeness = Algorithm1Options::default().min_completeness;
    let pass = completeness >= min_completeness;

    let listed: Vec<SpectrumRow> = pairs.iter().map(|&(k, lambda)| SpectrumRow { k, lambda, multiplicity: 1 }).collect();
    out.spectrum(&listed, None)?;
    out.summary(json!({
        "grid_points": n,
        "m": m,
        "b": head.x_end(),
        "vectors": basis.len(),
        "max_multiplicity": sub.max_multiplicity(),
        "gram_condition": condition,
        "completeness": completeness,
        "completeness_orthogonal": head.x_end().sqrt(),
        "min_completeness": min_completeness,
        "pass": pass,
    }))?;
    println!("{} vectors on (0, {:.6}): Gram condition {condition:.3e}, completeness {completeness:.3e}", basis.len(), head.x_end());
    println!("completeness >= {min_completeness:e}: {}", pass_str(pass));
    Ok(pass)
}

fn progression_pairs_unperturbed(m: usize, window: usize) -> Vec<SpectrumRow> {
    let w = window as i64;
    (-w..=w)
        .map(|s| s * m as i64)
        .map(|k| SpectrumRow { k, lambda: C64::new(k as f64, 0.0), multiplicity: 1 })
        .collect()
}

/// Summary body for a run that stopped with `err`.
pub fn failure_summary(err: &CliError) -> Value {
    let mut error = json!({ "message": err.to_string(), "exit_code": err.exit_code() });
    if let CliError::Core(core) = err {
        if let CoreError::Stage { stage, .. } = core {
            error["stage"] = stage.to_string().into();
        }
        let (kind, extra) = match core.root_cause() {
            CoreError::InconsistentData { residual, tolerance } => {
                ("inconsistent-data", json!({ "residual": residual, "tolerance": tolerance }))
            }
            CoreError::Conditioning { condition, limit } => {
                ("conditioning", json!({ "condition": condition, "limit": limit }))
            }
            CoreError::Convergence { iterations, history } => {
                ("convergence", json!({ "iterations": iterations, "last_mismatch": history.last() }))
            }
            CoreError::RootSearch { k, .. } => ("root-search", json!({ "box": k })),
            CoreError::NumericRange { .. } => ("numeric-range", json!({})),
            CoreError::EigenSolver(_) => ("eigen-solver", json!({})),
            CoreError::Unsupported(_) => ("unsupported", json!({})),
            CoreError::InvalidArgument(_) | CoreError::Stage { .. } => ("invalid-argument", json!({})),
        };
        error["kind"] = kind.into();
        if let Value::Object(extra) = extra {
            error.as_object_mut().expect("object").extend(extra);
        }
    }
    json!({ "pass": false, "error": error })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn progression_expands_multiplicities_before_filtering() {
        let row = |k, re: f64, multiplicity| SpectrumRow { k, lambda: C64::new(re, 0.0), multiplicity };
        // a double value at k = 1 occupies indices 1 and 2
        let rows = [row(-2, -2.0, 1), row(-1, -1.0, 1), row(0, 0.1, 1), row(1, 1.5, 2), row(3, 3.0, 1), row(4, 4.0, 1)];
        let pairs = progression_pairs(&rows, Some(2), 1);
        let ks: Vec<i64> = pairs.iter().map(|p| p.0).collect();
        assert_eq!(ks, vec![-2, 0, 2]);
        assert_eq!(pairs[2].1, C64::new(1.5, 0.0));
        assert_eq!(progression_pairs(&rows, None, 0).len(), 7);
    }
}
