//! Monte Carlo laboratory for superpositions of stationary renewal processes.
//!
//! `B_n(t)` counts renewals up to time `t` across `n` iid stationary renewal
//! processes with interrenewal law `F` (first renewal drawn from the
//! equilibrium law `F_e`). The ensemble holds
//! `B̃_n(t) = (B_n(γ_n t) − nμγ_n t) / √(nγ_n)` on a grid of scaled times.

use crate::distributions::{Distribution, DistributionError};
use crate::par::Exec;
use crate::rng::StreamKey;
use crate::special::norm_cdf;
use crate::stats::{self, Estimate, KsResult};
use serde::{Deserialize, Serialize};
use std::io::{self, Write};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FcltError {
    #[error("interrenewal law has an infinite third moment")]
    InfiniteThirdMoment,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

pub type Result<T> = std::result::Result<T, FcltError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperpositionConfig {
    pub interrenewal: Distribution,
    pub n: u32,
    pub gamma_n: f64,
    pub grid: Vec<f64>,
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(skip)]
    pub exec: Exec,
}

impl SuperpositionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(FcltError::InvalidConfig("n must be positive".into()));
        }
        if !(self.gamma_n > 0.0 && self.gamma_n.is_finite()) {
            return Err(FcltError::InvalidConfig("gamma_n must be positive".into()));
        }
        if self.grid.is_empty() || !(self.grid[0] >= 0.0) || self.grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(FcltError::InvalidConfig("grid must be nonnegative and strictly increasing".into()));
        }
        if !self.grid.last().is_some_and(|t| t.is_finite()) {
            return Err(FcltError::InvalidConfig("grid must be finite".into()));
        }
        if self.replications == 0 {
            return Err(FcltError::InvalidConfig("need at least one replication".into()));
        }
        if self.interrenewal.moments().third_moment.is_none() {
            return Err(FcltError::InfiniteThirdMoment);
        }
        Ok(())
    }

    /// `μ c_s²`, the variance rate of the Brownian limit.
    pub fn limit_variance_rate(&self) -> f64 {
        self.interrenewal.scv() / self.interrenewal.mean()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledEnsemble {
    pub config: SuperpositionConfig,
    /// `counts[r][g] = B_n(γ_n t_g)` in replication `r`.
    pub counts: Vec<Vec<u64>>,
    /// `values[r][g] = B̃_n(t_g)`.
    pub values: Vec<Vec<f64>>,
}

fn one_path(cfg: &SuperpositionConfig, residual: &Distribution, rep: u64) -> Vec<u64> {
    let mut rng = StreamKey::new(cfg.seed).with_stream(rep).rng();
    let horizons: Vec<f64> = cfg.grid.iter().map(|t| cfg.gamma_n * t).collect();
    let end = *horizons.last().expect("validated grid");
    let mut bins = vec![0u64; horizons.len()];
    for _ in 0..cfg.n {
        let mut t = residual.sample(&mut rng);
        while t <= end {
            bins[horizons.partition_point(|&h| h < t)] += 1;
            t += cfg.interrenewal.sample(&mut rng);
        }
    }
    let mut acc = 0;
    for b in bins.iter_mut() {
        acc += *b;
        *b = acc;
    }
    bins
}

pub fn generate(config: &SuperpositionConfig) -> Result<ScaledEnsemble> {
    config.validate()?;
    let residual = config.interrenewal.equilibrium()?;
    let counts = config.exec.map(config.replications, |r| one_path(config, &residual, r as u64));
    let mu = 1.0 / config.interrenewal.mean();
    let n = config.n as f64;
    let scale = (n * config.gamma_n).sqrt();
    let values = counts
        .iter()
        .map(|row| {
            row.iter()
                .zip(&config.grid)
                .map(|(&b, &t)| (b as f64 - n * mu * config.gamma_n * t) / scale)
                .collect()
        })
        .collect();
    Ok(ScaledEnsemble { config: config.clone(), counts, values })
}

impl ScaledEnsemble {
    pub fn column(&self, g: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[g]).collect()
    }

    /// Samples of `B̃_n(t_j) − B̃_n(t_i)`, with `i = None` meaning time zero.
    pub fn increments(&self, i: Option<usize>, j: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[j] - i.map_or(0.0, |i| r[i])).collect()
    }

    /// Unscaled counts over `(γ_n t_i, γ_n t_j]`.
    pub fn count_increments(&self, i: usize, j: usize) -> Vec<f64> {
        self.counts.iter().map(|r| (r[j] - r[i]) as f64).collect()
    }
}

/// One row of a report: a statistic at scaled time `t` with its interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub t: f64,
    pub statistic: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

pub fn write_report_csv<W: Write>(rows: &[ReportRow], out: W) -> io::Result<W> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "statistic", "ci_lo", "ci_hi"])?;
    for r in rows {
        w.write_record([r.t.to_string(), r.statistic.to_string(), r.ci_lo.to_string(), r.ci_hi.to_string()])?;
    }
    w.into_inner().map_err(|e| e.into_error())
}

/// Writes one row per replication with the `B̃_n` values as columns.
pub fn write_ensemble_csv<W: Write>(ens: &ScaledEnsemble, out: W) -> io::Result<W> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["replication".to_string()];
    header.extend(ens.config.grid.iter().map(|t| format!("t={t}")));
    w.write_record(&header)?;
    for (r, row) in ens.values.iter().enumerate() {
        let mut rec = vec![r.to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| e.into_error())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceProfile {
    /// Sample variance of `B̃_n(t)` with its 95% chi-square interval.
    pub points: Vec<ReportRow>,
    /// Least-squares slope of the variance in `t` through the origin, with a
    /// 95% interval from ten disjoint replication groups.
    pub slope: Estimate,
    /// `μ c_s²`.
    pub expected_slope: f64,
}

pub fn variance_profile(ens: &ScaledEnsemble) -> VarianceProfile {
    let grid = &ens.config.grid;
    let points: Vec<ReportRow> = (0..grid.len())
        .map(|g| {
            let v = stats::variance_ci(&ens.column(g), 0.95);
            ReportRow { t: grid[g], statistic: v.variance, ci_lo: v.lo, ci_hi: v.hi }
        })
        .collect();
    let slope_of = |rows: &[Vec<f64>]| {
        let vars: Vec<f64> =
            (0..grid.len()).map(|g| stats::sample_variance(&rows.iter().map(|r| r[g]).collect::<Vec<_>>())).collect();
        stats::slope_through_origin(grid, &vars)
    };
    let value = slope_of(&ens.values);
    let groups = 10;
    let half_width = if ens.values.len() >= 2 * groups {
        let size = ens.values.len() / groups;
        let per: Vec<f64> = ens.values.chunks_exact(size).take(groups).map(slope_of).collect();
        stats::mean_ci(&per, 0.95).half_width
    } else {
        f64::INFINITY
    };
    VarianceProfile { points, slope: Estimate { value, half_width }, expected_slope: ens.config.limit_variance_rate() }
}

/// Mean of `B̃_n(t)` with 95% t-intervals.
pub fn mean_profile(ens: &ScaledEnsemble) -> Vec<ReportRow> {
    (0..ens.config.grid.len())
        .map(|g| {
            let e = stats::mean_ci(&ens.column(g), 0.95);
            ReportRow { t: ens.config.grid[g], statistic: e.value, ci_lo: e.lo(), ci_hi: e.hi() }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncrementCorrelation {
    /// Increments over `(first.0, first.1]` and `(second.0, second.1]`.
    pub first: (f64, f64),
    pub second: (f64, f64),
    pub correlation: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl IncrementCorrelation {
    pub fn excludes_zero(&self) -> bool {
        self.ci_lo > 0.0 || self.ci_hi < 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub level: f64,
    pub pairs: Vec<IncrementCorrelation>,
    /// Some interval excludes zero.
    pub flagged: bool,
    /// Too few grid points or replications to say anything.
    pub degenerate: bool,
}

impl IndependenceReport {
    /// Correlation of adjacent increments, averaged over the grid.
    pub fn mean_adjacent_correlation(&self) -> f64 {
        let adj: Vec<f64> = self.pairs.iter().filter(|p| p.first.1 == p.second.0).map(|p| p.correlation).collect();
        stats::mean(&adj)
    }
}

/// Correlations between all pairs of disjoint grid increments, each with a
/// Fisher-z interval at the given level. Time zero counts as a grid point.
pub fn increment_independence(ens: &ScaledEnsemble, level: f64) -> IndependenceReport {
    let grid = &ens.config.grid;
    let mut edges: Vec<Option<usize>> = Vec::new();
    if grid[0] > 0.0 {
        edges.push(None);
    }
    edges.extend((0..grid.len()).map(Some));
    let time = |e: Option<usize>| e.map_or(0.0, |g| grid[g]);
    let reps = ens.values.len();
    if edges.len() < 3 || reps < 4 {
        return IndependenceReport { level, pairs: Vec::new(), flagged: false, degenerate: true };
    }
    let incs: Vec<(f64, f64, Vec<f64>)> = edges
        .windows(2)
        .map(|w| (time(w[0]), time(w[1]), ens.increments(w[0], w[1].expect("right edge is a grid point"))))
        .collect();
    let mut pairs = Vec::new();
    for a in 0..incs.len() {
        for b in a + 1..incs.len() {
            let r = stats::correlation(&incs[a].2, &incs[b].2);
            let (lo, hi) = stats::correlation_ci(r, reps, level);
            pairs.push(IncrementCorrelation {
                first: (incs[a].0, incs[a].1),
                second: (incs[b].0, incs[b].1),
                correlation: r,
                ci_lo: lo,
                ci_hi: hi,
            });
        }
    }
    let flagged = pairs.iter().any(IncrementCorrelation::excludes_zero);
    IndependenceReport { level, pairs, flagged, degenerate: false }
}

pub fn write_correlations_csv<W: Write>(report: &IndependenceReport, out: W) -> io::Result<W> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["first_start", "first_end", "second_start", "second_end", "correlation", "ci_lo", "ci_hi"])?;
    for p in &report.pairs {
        w.write_record([p.first.0, p.first.1, p.second.0, p.second.1, p.correlation, p.ci_lo, p.ci_hi].map(|v| v.to_string()))?;
    }
    w.into_inner().map_err(|e| e.into_error())
}

/// KS test of `B̃_n(t) / √(μ c_s² t)` against the standard normal law.
/// `None` at `t = 0`, for a `t` off the grid, or when `c_s² = 0`.
pub fn gaussianity(ens: &ScaledEnsemble, t: f64) -> Option<KsResult> {
    let g = ens.config.grid.iter().position(|&x| x == t)?;
    let var = ens.config.limit_variance_rate() * t;
    if !(var > 0.0) {
        return None;
    }
    let sd = var.sqrt();
    let xs: Vec<f64> = ens.column(g).iter().map(|v| v / sd).collect();
    Some(stats::ks_one_sample(&xs, norm_cdf))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FsllnPoint {
    pub n: u32,
    pub gamma_n: f64,
    /// Replication average of `sup_t |B_n(γ_n t)/(nγ_n) − μt|` over the grid.
    pub mean_sup_deviation: f64,
    /// The same deviation multiplied by `√(nγ_n)`.
    pub scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsllnReport {
    pub points: Vec<FsllnPoint>,
    /// Deviations decrease along the listed sizes.
    pub decreasing: bool,
}

/// Fluid-scale deviations for each `(n, γ_n)` in `sizes`, reusing the rest
/// of `base`.
pub fn fslln_check(base: &SuperpositionConfig, sizes: &[(u32, f64)]) -> Result<FsllnReport> {
    let mu = 1.0 / base.interrenewal.mean();
    let mut points = Vec::with_capacity(sizes.len());
    for &(n, gamma_n) in sizes {
        let cfg = SuperpositionConfig { n, gamma_n, ..base.clone() };
        let ens = generate(&cfg)?;
        let scale = n as f64 * gamma_n;
        let sups: Vec<f64> = ens
            .counts
            .iter()
            .map(|row| row.iter().zip(&cfg.grid).map(|(&b, &t)| (b as f64 / scale - mu * t).abs()).fold(0.0, f64::max))
            .collect();
        let mean_sup_deviation = stats::mean(&sups);
        points.push(FsllnPoint { n, gamma_n, mean_sup_deviation, scaled: mean_sup_deviation * scale.sqrt() });
    }
    let decreasing = points.windows(2).all(|w| w[1].mean_sup_deviation < w[0].mean_sup_deviation);
    Ok(FsllnReport { points, decreasing })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(f: Distribution, n: u32, gamma_n: f64, reps: usize) -> SuperpositionConfig {
        SuperpositionConfig {
            interrenewal: f,
            n,
            gamma_n,
            grid: vec![0.5, 1.0, 1.5, 2.0],
            replications: reps,
            seed: 7,
            exec: Exec::default(),
        }
    }

    #[test]
    fn empty_interval_is_zero() {
        let mut c = config(Distribution::exponential(1.0).unwrap(), 1, 1.0, 5);
        c.grid = vec![0.0];
        let ens = generate(&c).unwrap();
        assert!(ens.values.iter().all(|r| r[0] == 0.0));
        assert!(gaussianity(&ens, 0.0).is_none());
    }

    #[test]
    fn paths_reconstruct_counts() {
        let ens = generate(&config(Distribution::erlang_mean(2, 1.0).unwrap(), 20, 3.0, 50)).unwrap();
        let c = &ens.config;
        for (counts, vals) in ens.counts.iter().zip(&ens.values) {
            assert!(counts.windows(2).all(|w| w[0] <= w[1]));
            for ((&b, &v), &t) in counts.iter().zip(vals).zip(&c.grid) {
                let back = v * (c.n as f64 * c.gamma_n).sqrt() + c.n as f64 * c.gamma_n * t;
                assert!((back - b as f64).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn deterministic_lattice() {
        // Each process renews once per unit of time at a uniform phase, so
        // over (0, T] it contributes ⌊T⌋ or ⌈T⌉ renewals.
        let mut c = config(Distribution::deterministic(1.0).unwrap(), 30, 1.3, 40);
        c.grid = vec![1.0, 2.0];
        let ens = generate(&c).unwrap();
        for row in &ens.counts {
            let per = row[0] as f64 / 30.0;
            assert!((1.0..=2.0).contains(&per));
            assert!(row[0] >= 30 && row[0] <= 60 && row[1] >= 60 && row[1] <= 90);
        }
        assert!(gaussianity(&ens, 1.0).is_none());
    }

    #[test]
    fn poisson_superposition() {
        let ens = generate(&config(Distribution::exponential(1.0).unwrap(), 50, 10.0, 2000)).unwrap();
        let vp = variance_profile(&ens);
        assert!((vp.slope.value - 1.0).abs() < 0.1, "{:?}", vp.slope);
        for m in mean_profile(&ens) {
            assert!(m.ci_lo <= 0.0 && 0.0 <= m.ci_hi, "{m:?}");
        }
        let rep = increment_independence(&ens, 0.99);
        assert_eq!(rep.pairs.len(), 6);
        assert!(!rep.flagged, "{:?}", rep.pairs);
    }

    #[test]
    fn reports_degenerate_inputs() {
        let ens = generate(&config(Distribution::exponential(1.0).unwrap(), 2, 1.0, 1)).unwrap();
        assert!(increment_independence(&ens, 0.99).degenerate);
        let mut c = config(Distribution::exponential(1.0).unwrap(), 2, 1.0, 5);
        c.grid = vec![1.0, 0.5];
        assert!(matches!(generate(&c), Err(FcltError::InvalidConfig(_))));
        c.grid = vec![1.0];
        c.gamma_n = 0.0;
        assert!(generate(&c).is_err());
    }

    #[test]
    fn csv_outputs() {
        let ens = generate(&config(Distribution::exponential(1.0).unwrap(), 5, 2.0, 12)).unwrap();
        let text = String::from_utf8(write_ensemble_csv(&ens, Vec::new()).unwrap()).unwrap();
        assert_eq!(text.lines().next().unwrap(), "replication,t=0.5,t=1,t=1.5,t=2");
        assert_eq!(text.lines().count(), 13);
        let vp = variance_profile(&ens);
        let text = String::from_utf8(write_report_csv(&vp.points, Vec::new()).unwrap()).unwrap();
        assert_eq!(text.lines().next().unwrap(), "t,statistic,ci_lo,ci_hi");
        let rep = increment_independence(&ens, 0.99);
        let text = String::from_utf8(write_correlations_csv(&rep, Vec::new()).unwrap()).unwrap();
        assert_eq!(text.lines().count(), 7);
    }
}
