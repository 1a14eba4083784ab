//! Indexed eigenvalue lists.

use crate::prelude::*;

/// One distinct eigenvalue. An entry of multiplicity `m` occupies the indices
/// `index, index + 1, …, index + m − 1` of the numbering `λ_k = k + ϰ_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumEntry {
    pub index: i64,
    pub value: C64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Spectrum {
    entries: Vec<SpectrumEntry>,
}

impl Spectrum {
    pub fn new(entries: Vec<SpectrumEntry>) -> Result<Self> {
        for e in &entries {
            if e.multiplicity == 0 {
                return Err(Error::invalid(format!("zero multiplicity at index {}", e.index)));
            }
            if !(e.value.re.is_finite() && e.value.im.is_finite()) {
                return Err(Error::invalid(format!("non-finite eigenvalue at index {}", e.index)));
            }
        }
        for w in entries.windows(2) {
            if w[1].index < w[0].index + w[0].multiplicity as i64 {
                return Err(Error::invalid(format!(
                    "indices must increase past multiplicities ({} after {})",
                    w[1].index, w[0].index
                )));
            }
        }
        Ok(Self { entries })
    }

    /// Numbers zeros (listed with multiplicities, in ascending order of their
    /// unit box and then of `Im λ`) as `λ_{−N}, …, λ_N`.
    pub fn number_window(zeros: &[(C64, usize)], window: usize) -> Result<Self> {
        let total: usize = zeros.iter().map(|z| z.1).sum();
        let expected = 2 * window + 1;
        if total != expected {
            return Err(Error::RootSearch {
                k: 0,
                reason: format!("found {total} zeros counting multiplicity, expected {expected}"),
            });
        }
        let mut index = -(window as i64);
        let mut entries = Vec::with_capacity(zeros.len());
        for &(value, multiplicity) in zeros {
            entries.push(SpectrumEntry { index, value, multiplicity });
            index += multiplicity as i64;
        }
        Self::new(entries)
    }

    pub fn entries(&self) -> &[SpectrumEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `λ_k`, looking through multiplicities.
    pub fn value_at(&self, k: i64) -> Option<C64> {
        self.entries
            .iter()
            .find(|e| k >= e.index && k < e.index + e.multiplicity as i64)
            .map(|e| e.value)
    }

    /// `(k, λ_k)` for every index, multiplicities expanded.
    pub fn expanded(&self) -> Vec<(i64, C64)> {
        self.entries
            .iter()
            .flat_map(|e| (0..e.multiplicity as i64).map(move |j| (e.index + j, e.value)))
            .collect()
    }

    /// `ϰ_k = λ_k − k` for every index.
    pub fn kappa(&self) -> Vec<(i64, C64)> {
        self.expanded().into_iter().map(|(k, l)| (k, l - k as f64)).collect()
    }

    /// Symmetric partial sums `Σ_{|j| ≤ K} |ϰ_j|²`, returned as `(K, sum)` for
    /// `K = 0, 1, …` up to the largest `|k|` present.
    pub fn kappa_sq_partial_sums(&self) -> Vec<(u64, f64)> {
        let kappa = self.kappa();
        let kmax = kappa.iter().map(|(k, _)| k.unsigned_abs()).max().unwrap_or(0);
        let mut sums = Vec::with_capacity(kmax as usize + 1);
        let mut acc = 0.0;
        for big_k in 0..=kmax {
            acc += kappa
                .iter()
                .filter(|(k, _)| k.unsigned_abs() == big_k)
                .map(|(_, x)| x.norm_sqr())
                .sum::<f64>();
            sums.push((big_k, acc));
        }
        sums
    }

    /// Value of [`Self::kappa_sq_partial_sums`] at `K = |k|`.
    pub fn kappa_sq_cumulative_at(&self, k: i64) -> f64 {
        self.kappa_sq_partial_sums()
            .into_iter()
            .find(|(big_k, _)| *big_k == k.unsigned_abs())
            .map(|(_, s)| s)
            .unwrap_or(f64::NAN)
    }
}
