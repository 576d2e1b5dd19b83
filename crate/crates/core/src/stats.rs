//! Sample summaries and Kolmogorov–Smirnov distances.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SampleSummary {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    /// Standard error of the mean.
    pub stderr: f64,
}

/// Mean, unbiased variance and standard error; NaN fields for fewer than two samples.
pub fn summarize(samples: &[f64]) -> SampleSummary {
    let n = samples.len();
    if n < 2 {
        let mean = samples.first().copied().unwrap_or(f64::NAN);
        return SampleSummary { count: n, mean, variance: f64::NAN, stderr: f64::NAN };
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let variance = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    SampleSummary { count: n, mean, variance, stderr: (variance / n as f64).sqrt() }
}

/// Standard error of a proportion estimated from `n` trials.
pub fn binomial_stderr(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    xs
}

/// `sup_x |F_n(x) - F(x)|` for a continuous reference `F`.
pub fn ks_distance(samples: &[f64], mut cdf: impl FnMut(f64) -> f64) -> f64 {
    let xs = sorted(samples);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    d
}

/// KS distance for samples supported on the lattice `offset + h ℤ`, against
/// the reference law rounded to the nearest lattice point, whose
/// distribution function at a lattice point `x` is `F(x + h/2)`.
///
/// Comparing a lattice-valued sample with a continuous `F` directly leaves a
/// floor of about half the largest atom, whatever the sample size.
pub fn ks_distance_lattice(samples: &[f64], h: f64, offset: f64, mut cdf: impl FnMut(f64) -> f64) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    let index = |x: f64| ((x - offset) / h).round() as i64;
    let mut ks: Vec<i64> = samples.iter().map(|&x| index(x)).collect();
    ks.sort_unstable();
    let n = ks.len() as f64;
    let (lo, hi) = (ks[0] - 1, ks[ks.len() - 1]);
    let mut d: f64 = 0.0;
    let mut count = 0usize;
    for k in lo..=hi {
        while count < ks.len() && ks[count] <= k {
            count += 1;
        }
        let x = offset + k as f64 * h;
        d = d.max((count as f64 / n - cdf(x + 0.5 * h)).abs());
    }
    d.max(1.0 - cdf(offset + hi as f64 * h + 0.5 * h))
}
