//! Output-analysis helpers: confidence intervals, batch means, goodness of fit
//! and correlation tests.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

/// A point estimate with a symmetric confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub half_width: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, half_width: 0.0 }
    }

    pub fn lo(&self) -> f64 {
        self.value - self.half_width
    }

    pub fn hi(&self) -> f64 {
        self.value + self.half_width
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo() <= x && x <= self.hi()
    }

    /// True when `[lo, hi]` intersects `[center − radius, center + radius]`.
    pub fn overlaps(&self, center: f64, radius: f64) -> bool {
        self.lo() <= center + radius && center - radius <= self.hi()
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero for fewer than two points.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Two-sided Student-t critical value at confidence `level`.
pub fn t_critical(df: usize, level: f64) -> f64 {
    let t = StudentsT::new(0.0, 1.0, df.max(1) as f64).expect("positive degrees of freedom");
    t.inverse_cdf(0.5 + 0.5 * level)
}

pub fn chi2_quantile(df: usize, p: f64) -> f64 {
    ChiSquared::new(df.max(1) as f64).expect("positive degrees of freedom").inverse_cdf(p)
}

/// Student-t interval for the mean of iid (or batch-mean) observations.
pub fn mean_ci(xs: &[f64], level: f64) -> Estimate {
    let n = xs.len();
    let value = mean(xs);
    if n < 2 {
        return Estimate { value, half_width: f64::INFINITY };
    }
    let se = (sample_variance(xs) / n as f64).sqrt();
    Estimate { value, half_width: t_critical(n - 1, level) * se }
}

/// Interval for a ratio of means `Σa/Σb` from paired batch values, by the
/// delta method on the residuals `a − R·b`.
pub fn ratio_ci(num: &[f64], den: &[f64], level: f64) -> Estimate {
    assert_eq!(num.len(), den.len());
    let n = num.len();
    let mb = mean(den);
    let value = mean(num) / mb;
    if n < 2 || mb == 0.0 {
        return Estimate { value, half_width: f64::INFINITY };
    }
    let resid: Vec<f64> = num.iter().zip(den).map(|(a, b)| (a - value * b) / mb).collect();
    let se = (sample_variance(&resid) / n as f64).sqrt();
    Estimate { value, half_width: t_critical(n - 1, level) * se }
}

/// Sample variance with the chi-square interval `[(n−1)s²/χ²_{hi}, (n−1)s²/χ²_{lo}]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceInterval {
    pub variance: f64,
    pub lo: f64,
    pub hi: f64,
}

pub fn variance_ci(xs: &[f64], level: f64) -> VarianceInterval {
    let n = xs.len();
    let s2 = sample_variance(xs);
    if n < 2 {
        return VarianceInterval { variance: s2, lo: 0.0, hi: f64::INFINITY };
    }
    let df = n - 1;
    let a = 0.5 * (1.0 - level);
    VarianceInterval {
        variance: s2,
        lo: df as f64 * s2 / chi2_quantile(df, 1.0 - a),
        hi: df as f64 * s2 / chi2_quantile(df, a),
    }
}

/// Sample correlation coefficient.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Fisher-z interval for a correlation estimated from `n` pairs.
pub fn correlation_ci(r: f64, n: usize, level: f64) -> (f64, f64) {
    if n <= 3 {
        return (-1.0, 1.0);
    }
    let z = r.clamp(-0.999_999_999, 0.999_999_999).atanh();
    let se = 1.0 / ((n - 3) as f64).sqrt();
    let c = crate::special::norm_quantile(0.5 + 0.5 * level);
    ((z - c * se).tanh(), (z + c * se).tanh())
}

pub fn lag1_autocorrelation(xs: &[f64]) -> f64 {
    if xs.len() < 3 {
        return 0.0;
    }
    correlation(&xs[..xs.len() - 1], &xs[1..])
}

/// One-sample Kolmogorov–Smirnov statistic for sorted data.
pub fn ks_statistic_sorted<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    d
}

/// Asymptotic Kolmogorov p-value with the small-sample correction of Stephens.
pub fn kolmogorov_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)
}

/// `P[K > x]` for the Kolmogorov distribution.
fn kolmogorov_sf(x: f64) -> f64 {
    if x < 0.3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> KsResult {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let statistic = ks_statistic_sorted(&v, cdf);
    KsResult { statistic, p_value: kolmogorov_pvalue(statistic, v.len()) }
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let sn = ne.sqrt();
    KsResult { statistic: d, p_value: kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d) }
}

/// Least-squares slope of `y` on `x` through the origin.
pub fn slope_through_origin(x: &[f64], y: &[f64]) -> f64 {
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    sxy / sxx
}

/// Running per-batch accumulator for steady-state output analysis.
///
/// Observations are pushed with the batch index they belong to; batches are
/// contiguous equal-length segments of the post-warmup horizon.
#[derive(Debug, Clone)]
pub struct BatchSums {
    pub sums: Vec<f64>,
    pub counts: Vec<f64>,
}

impl BatchSums {
    pub fn new(batches: usize) -> Self {
        Self { sums: vec![0.0; batches], counts: vec![0.0; batches] }
    }

    pub fn add(&mut self, batch: usize, x: f64) {
        self.sums[batch] += x;
        self.counts[batch] += 1.0;
    }

    pub fn add_weighted(&mut self, batch: usize, x: f64, weight: f64) {
        self.sums[batch] += x * weight;
        self.counts[batch] += weight;
    }

    pub fn means(&self) -> Vec<f64> {
        self.sums.iter().zip(&self.counts).map(|(s, c)| if *c > 0.0 { s / c } else { 0.0 }).collect()
    }

    pub fn extend(&mut self, other: &BatchSums) {
        self.sums.extend_from_slice(&other.sums);
        self.counts.extend_from_slice(&other.counts);
    }

    /// Ratio estimator `Σ sums / Σ counts` with a batch-level delta-method interval.
    pub fn ratio(&self, level: f64) -> Estimate {
        ratio_ci(&self.sums, &self.counts, level)
    }
}
