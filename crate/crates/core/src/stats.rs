//! Empirical rate distributions.

use crate::error::{Error, Result};

/// Samples sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct RateStats {
    samples: Vec<f64>,
}

impl RateStats {
    pub fn new(mut samples: Vec<f64>) -> Self {
        samples.sort_unstable_by(f64::total_cmp);
        RateStats { samples }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Nearest-rank percentile: the `⌈p/100 · n⌉`-th smallest sample.
    pub fn percentile(&self, p: f64) -> Result<f64> {
        percentile_sorted(&self.samples, p)
    }

    /// Mean of `ln(sample)` over positive samples, with the number of
    /// zero samples that were left out.
    pub fn mean_log_excluding_zeros(&self) -> Result<(f64, usize)> {
        let zeros = self.samples.iter().take_while(|&&x| x <= 0.0).count();
        if self.samples[..zeros].iter().any(|&x| x < 0.0) {
            return Err(Error::NonPositiveSample(self.samples[0]));
        }
        Ok((mean_log(&self.samples[zeros..])?, zeros))
    }
}

pub fn percentile(stats: &RateStats, p: f64) -> Result<f64> {
    stats.percentile(p)
}

pub(crate) fn percentile_sorted(sorted: &[f64], p: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::EmptySamples);
    }
    assert!(p > 0.0 && p <= 100.0, "percentile {p} outside (0, 100]");
    let n = sorted.len();
    // rank computed in exact integer arithmetic where p is a whole percent
    let rank = if p.fract() == 0.0 {
        (p as usize * n).div_ceil(100)
    } else {
        (p / 100.0 * n as f64).ceil() as usize
    };
    Ok(sorted[rank.clamp(1, n) - 1])
}

/// Kolmogorov–Smirnov distance between two empirical CDFs.
pub fn ks_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// `(1/n) Σ ln(x)`; every sample must be positive.
pub fn mean_log(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if let Some(&x) = samples.iter().find(|&&x| x <= 0.0 || x.is_nan()) {
        return Err(Error::NonPositiveSample(x));
    }
    Ok(samples.iter().map(|x| x.ln()).sum::<f64>() / samples.len() as f64)
}
