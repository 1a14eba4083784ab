//! Output tables and their readers.
//!
//! Every CSV file starts with `#` comment lines naming the tool version, the
//! config hash and the command, followed by one header row. Complex values
//! are written as `re_*`/`im_*` column pairs. Layouts:
//!
//! * `spectrum.csv`: `k, re_lambda, im_lambda, multiplicity, kappa_sq_cum`
//!   (+ `oracle_dist` from `forward`). A row stands for indices
//!   `k .. k + multiplicity − 1`; `kappa_sq_cum` is `Σ_{|j| ≤ |k|} |λ_j − j|²`
//!   over the listed rows.
//! * `kernel.csv`: `t, re_p, im_p, re_q, im_q`.
//! * `w.csv`: `t, re_w1, im_w1, re_w2, im_w2`.
//! * `delta.csv`: `lambda, re_delta, im_delta` on real sample points.
//! * `recon.csv`: `t, re_p_true, im_p_true, re_p_rec, im_p_rec, re_q_true,
//!   im_q_true, re_q_rec, im_q_rec, err` with `err = |(Δp, Δq)(t)|`.
//!
//! `summary.json` carries the same provenance as top-level keys.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use pidirac_core::{Grid, GridFunction, KernelPair, WPair, C64};
use serde::Serialize;

use crate::error::{csv_err, io_err, CliError, Result};

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Where and under which provenance a command writes its files.
#[derive(Debug, Clone)]
pub struct OutputDir {
    dir: PathBuf,
    command: &'static str,
    config_hash: String,
}

/// One spectrum row: value `λ` occupying indices `k .. k + multiplicity − 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumRow {
    pub k: i64,
    pub lambda: C64,
    pub multiplicity: usize,
}

impl OutputDir {
    pub fn create(dir: &Path, command: &'static str, config_hash: String) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(Self { dir: dir.to_path_buf(), command, config_hash })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn table<R: Serialize>(&self, name: &str, columns: &[&str], rows: impl IntoIterator<Item = R>) -> Result<PathBuf> {
        let path = self.path(name);
        let mut file = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
        writeln!(file, "# {TOOL} {VERSION}").map_err(io_err(&path))?;
        writeln!(file, "# config_hash {}", self.config_hash).map_err(io_err(&path))?;
        writeln!(file, "# command {}", self.command).map_err(io_err(&path))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(columns).map_err(csv_err(&path))?;
        for row in rows {
            w.serialize(row).map_err(csv_err(&path))?;
        }
        w.flush().map_err(io_err(&path))?;
        Ok(path)
    }

    pub fn kernel(&self, name: &str, kernel: &KernelPair) -> Result<PathBuf> {
        let (p, q) = (kernel.p().values(), kernel.q().values());
        self.table(
            name,
            &["t", "re_p", "im_p", "re_q", "im_q"],
            kernel.grid().nodes().enumerate().map(|(i, t)| (t, p[i].re, p[i].im, q[i].re, q[i].im)),
        )
    }

    pub fn w(&self, w: &WPair) -> Result<PathBuf> {
        let (w1, w2) = (w.w1().values(), w.w2().values());
        self.table(
            "w.csv",
            &["t", "re_w1", "im_w1", "re_w2", "im_w2"],
            w.grid().nodes().enumerate().map(|(i, t)| (t, w1[i].re, w1[i].im, w2[i].re, w2[i].im)),
        )
    }

    /// `spectrum.csv`; `oracle` adds the distance to the oracle eigenvalue
    /// (empty where no comparison was made).
    pub fn spectrum(&self, rows: &[SpectrumRow], oracle: Option<&[Option<f64>]>) -> Result<PathBuf> {
        let cum = kappa_sq_cumulative(rows);
        let mut columns = vec!["k", "re_lambda", "im_lambda", "multiplicity", "kappa_sq_cum"];
        match oracle {
            Some(dist) => {
                columns.push("oracle_dist");
                self.table(
                    "spectrum.csv",
                    &columns,
                    rows.iter()
                        .zip(&cum)
                        .zip(dist)
                        .map(|((r, c), d)| (r.k, r.lambda.re, r.lambda.im, r.multiplicity, c, d)),
                )
            }
            None => self.table(
                "spectrum.csv",
                &columns,
                rows.iter().zip(&cum).map(|(r, c)| (r.k, r.lambda.re, r.lambda.im, r.multiplicity, c)),
            ),
        }
    }

    pub fn delta(&self, samples: &[(f64, C64)]) -> Result<PathBuf> {
        self.table(
            "delta.csv",
            &["lambda", "re_delta", "im_delta"],
            samples.iter().map(|(l, d)| (l, d.re, d.im)),
        )
    }

    pub fn recon(&self, truth: &KernelPair, rec: &KernelPair) -> Result<PathBuf> {
        let (pt, qt) = (truth.p().values(), truth.q().values());
        let (pr, qr) = (rec.p().values(), rec.q().values());
        self.table(
            "recon.csv",
            &[
                "t", "re_p_true", "im_p_true", "re_p_rec", "im_p_rec", "re_q_true", "im_q_true", "re_q_rec", "im_q_rec",
                "err",
            ],
            truth.grid().nodes().enumerate().map(|(i, t)| {
                let err = ((pr[i] - pt[i]).norm_sqr() + (qr[i] - qt[i]).norm_sqr()).sqrt();
                (t, pt[i].re, pt[i].im, pr[i].re, pr[i].im, qt[i].re, qt[i].im, qr[i].re, qr[i].im, err)
            }),
        )
    }

    /// `summary.json`: `body` (a JSON object) plus the provenance keys.
    pub fn summary(&self, body: serde_json::Value) -> Result<PathBuf> {
        let mut map = match body {
            serde_json::Value::Object(map) => map,
            other => {
                let mut map = serde_json::Map::new();
                map.insert("result".into(), other);
                map
            }
        };
        map.insert("tool".into(), TOOL.into());
        map.insert("version".into(), VERSION.into());
        map.insert("config_hash".into(), self.config_hash.clone().into());
        map.insert("command".into(), self.command.into());
        let path = self.path("summary.json");
        let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(map))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(io_err(&path))?;
        Ok(path)
    }
}

/// Symmetric partial sums `Σ_{|j| ≤ |k|} |λ_j − j|²` at each row, multiplicities expanded.
pub fn kappa_sq_cumulative(rows: &[SpectrumRow]) -> Vec<f64> {
    let expanded: Vec<(u64, f64)> = rows
        .iter()
        .flat_map(|r| (0..r.multiplicity as i64).map(move |j| ((r.k + j).unsigned_abs(), (r.lambda - (r.k + j) as f64).norm_sqr())))
        .collect();
    rows.iter()
        .map(|r| expanded.iter().filter(|(k, _)| *k <= r.k.unsigned_abs()).map(|(_, v)| v).sum())
        .collect()
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(io_err(path))?;
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(file))
}

/// Column positions of `names` in the header row.
fn columns(path: &Path, rdr: &mut csv::Reader<File>, names: &[&str]) -> Result<Vec<usize>> {
    let headers = rdr.headers().map_err(csv_err(path))?.clone();
    names
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h == *name)
                .ok_or_else(|| CliError::format(path, format!("missing column {name}")))
        })
        .collect()
}

fn rows(path: &Path, names: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut rdr = reader(path)?;
    let idx = columns(path, &mut rdr, names)?;
    let mut out = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err(path))?;
        let row = idx
            .iter()
            .map(|&i| {
                record
                    .get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| CliError::format(path, format!("bad number in data row {}", line + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(row);
    }
    Ok(out)
}

/// Samples on a uniform `[0, π]` grid in the `kernel.csv` layout.
pub fn read_kernel(path: &Path) -> Result<KernelPair> {
    let rows = rows(path, &["t", "re_p", "im_p", "re_q", "im_q"])?;
    let grid = Grid::full(rows.len()).map_err(|e| CliError::format(path, e.to_string()))?;
    for (i, r) in rows.iter().enumerate() {
        if (r[0] - grid.node(i)).abs() > 1e-9 {
            return Err(CliError::format(path, format!("t column is not a uniform grid on [0, π] (row {})", i + 1)));
        }
    }
    let column = |re: usize, im: usize| {
        GridFunction::new(grid, rows.iter().map(|r| C64::new(r[re], r[im])).collect())
    };
    Ok(KernelPair::new(column(1, 2)?, column(3, 4)?)?)
}

/// Rows of a file in the `spectrum.csv` layout.
pub fn read_spectrum(path: &Path) -> Result<Vec<SpectrumRow>> {
    rows(path, &["k", "re_lambda", "im_lambda", "multiplicity"])?
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let integral = |x: f64| (x.fract() == 0.0).then_some(x);
            let k = integral(r[0]).ok_or_else(|| CliError::format(path, format!("non-integer k in row {}", i + 1)))?;
            let multiplicity = integral(r[3])
                .filter(|m| *m >= 1.0)
                .ok_or_else(|| CliError::format(path, format!("bad multiplicity in row {}", i + 1)))?;
            Ok(SpectrumRow { k: k as i64, lambda: C64::new(r[1], r[2]), multiplicity: multiplicity as usize })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_sums_are_symmetric_and_expand_multiplicities() {
        let rows = [
            SpectrumRow { k: -1, lambda: C64::new(-1.5, 0.0), multiplicity: 1 },
            SpectrumRow { k: 0, lambda: C64::new(0.5, 0.0), multiplicity: 2 },
        ];
        // indices −1, 0, 1 with κ = −0.5, 0.5, −0.5
        assert_eq!(kappa_sq_cumulative(&rows), vec![0.75, 0.25]);
    }

    #[test]
    fn kernel_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutputDir::create(dir.path(), "test", "h".into()).unwrap();
        let grid = Grid::full(17).unwrap();
        let k = KernelPair::from_fns(grid, |t| C64::new(t.sin(), 1.0 / 3.0), |t| C64::new(0.0, t.exp())).unwrap();
        let path = out.kernel("kernel.csv", &k).unwrap();
        let back = read_kernel(&path).unwrap();
        assert_eq!(back.p().values(), k.p().values());
        assert_eq!(back.q().values(), k.q().values());
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(&format!("# {TOOL} {VERSION}\n# config_hash h\n")));
    }

    #[test]
    fn rejects_malformed_tables() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "t,re_p,im_p,re_q\n0,0,0,0\n").unwrap();
        assert!(matches!(read_kernel(&path), Err(CliError::Format { .. })));
        std::fs::write(&path, "k,re_lambda,im_lambda,multiplicity\n0.5,0,0,1\n").unwrap();
        assert!(read_spectrum(&path).is_err());
    }
}
