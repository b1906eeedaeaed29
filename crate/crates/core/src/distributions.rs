//! Nonnegative parametric distributions used for interarrival, service and
//! patience times.
//!
//! Every family exposes the full analytic surface the formula engine needs
//! (distribution function, density, hazard, quantile, raw and partial
//! moments) together with an exact sampler. [`Distribution::equilibrium`]
//! builds the stationary-excess law `F_e(t) = μ ∫₀ᵗ (1 − F(u)) du` that gives
//! the first renewal of a stationary renewal process.

use crate::special::{bisect_monotone, norm_cdf, norm_pdf, norm_quantile};
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{self, ln_gamma};
use std::fmt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DistributionError {
    #[error("invalid distribution parameters: {0}")]
    InvalidParameters(String),
    #[error("distribution has no density (not absolutely continuous)")]
    NotAbsolutelyContinuous,
    #[error("x = {0} lies beyond the support (cdf = 1)")]
    SupportExceeded(f64),
    #[error("probability {0} outside [0, 1)")]
    InvalidProbability(f64),
    #[error("distribution mean is not finite and positive")]
    InfiniteMean,
}

pub type Result<T> = std::result::Result<T, DistributionError>;

/// One exponential branch of a hyperexponential mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub weight: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Kind {
    Exponential { rate: f64 },
    Deterministic { value: f64 },
    Erlang { shape: u32, rate: f64 },
    /// Parameterized by mean and squared coefficient of variation.
    LogNormal { mean: f64, scv: f64 },
    Hyperexponential { branches: Vec<Branch> },
    /// Stationary-excess transform of `base`.
    EquilibriumOf { base: Box<Distribution> },
}

/// A validated nonnegative distribution. Construct through the named
/// constructors; the parameters can be inspected with [`Distribution::kind`].
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionConfig", into = "DistributionConfig")]
pub struct Distribution(Kind);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub mean: f64,
    pub variance: f64,
    pub scv: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub third_moment: Option<f64>,
}

fn positive(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(DistributionError::InvalidParameters(format!("{name} must be finite and > 0, got {x}")))
    }
}

impl Distribution {
    pub fn exponential(rate: f64) -> Result<Self> {
        Ok(Self(Kind::Exponential { rate: positive("rate", rate)? }))
    }

    pub fn exponential_mean(mean: f64) -> Result<Self> {
        Self::exponential(1.0 / positive("mean", mean)?)
    }

    pub fn deterministic(value: f64) -> Result<Self> {
        Ok(Self(Kind::Deterministic { value: positive("value", value)? }))
    }

    pub fn erlang(shape: u32, rate: f64) -> Result<Self> {
        if shape == 0 {
            return Err(DistributionError::InvalidParameters("Erlang shape must be >= 1".into()));
        }
        Ok(Self(Kind::Erlang { shape, rate: positive("rate", rate)? }))
    }

    /// Erlang with `shape` stages and the given overall mean.
    pub fn erlang_mean(shape: u32, mean: f64) -> Result<Self> {
        Self::erlang(shape, shape as f64 / positive("mean", mean)?)
    }

    pub fn lognormal(mean: f64, scv: f64) -> Result<Self> {
        let mean = positive("mean", mean)?;
        if !(scv.is_finite() && scv >= 0.0) {
            return Err(DistributionError::InvalidParameters(format!("scv must be finite and >= 0, got {scv}")));
        }
        Ok(Self(Kind::LogNormal { mean, scv }))
    }

    /// Mixture of exponentials given as `(weight, rate)` pairs.
    pub fn hyperexponential(branches: &[(f64, f64)]) -> Result<Self> {
        if branches.is_empty() {
            return Err(DistributionError::InvalidParameters("hyperexponential needs at least one branch".into()));
        }
        let mut out = Vec::with_capacity(branches.len());
        for &(weight, rate) in branches {
            out.push(Branch { weight: positive("branch weight", weight)?, rate: positive("branch rate", rate)? });
        }
        let total: f64 = out.iter().map(|b| b.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(DistributionError::InvalidParameters(format!(
                "hyperexponential weights must sum to 1, got {total}"
            )));
        }
        Ok(Self(Kind::Hyperexponential { branches: out }))
    }

    /// Mixture of exponentials given as `(weight, mean)` pairs.
    pub fn hyperexponential_means(branches: &[(f64, f64)]) -> Result<Self> {
        let mut rates = Vec::with_capacity(branches.len());
        for &(p, m) in branches {
            rates.push((p, 1.0 / positive("branch mean", m)?));
        }
        Self::hyperexponential(&rates)
    }

    pub fn kind(&self) -> &Kind {
        &self.0
    }

    pub fn is_absolutely_continuous(&self) -> bool {
        match &self.0 {
            Kind::Deterministic { .. } => false,
            Kind::LogNormal { scv, .. } => *scv > 0.0,
            _ => true,
        }
    }

    /// Location and scale of the underlying Gaussian of a lognormal law.
    fn lognormal_params(mean: f64, scv: f64) -> (f64, f64) {
        let s2 = scv.ln_1p();
        (mean.ln() - 0.5 * s2, s2.sqrt())
    }

    pub fn mean(&self) -> f64 {
        match &self.0 {
            Kind::Exponential { rate } => 1.0 / rate,
            Kind::Deterministic { value } => *value,
            Kind::Erlang { shape, rate } => *shape as f64 / rate,
            Kind::LogNormal { mean, .. } => *mean,
            _ => self.raw_moment(1),
        }
    }

    pub fn scv(&self) -> f64 {
        match &self.0 {
            Kind::Exponential { .. } => 1.0,
            Kind::Deterministic { .. } => 0.0,
            Kind::Erlang { shape, .. } => 1.0 / *shape as f64,
            Kind::LogNormal { scv, .. } => *scv,
            _ => {
                let m = self.mean();
                ((self.raw_moment(2) - m * m) / (m * m)).max(0.0)
            }
        }
    }

    /// `E[X^k]`.
    pub fn raw_moment(&self, k: u32) -> f64 {
        let kf = k as f64;
        match &self.0 {
            Kind::Exponential { rate } => factorial(k) / rate.powi(k as i32),
            Kind::Deterministic { value } => value.powi(k as i32),
            Kind::Erlang { shape, rate } => {
                (0..k).map(|j| (*shape + j) as f64).product::<f64>() / rate.powi(k as i32)
            }
            Kind::LogNormal { mean, scv } => {
                let (loc, s) = Self::lognormal_params(*mean, *scv);
                (kf * loc + 0.5 * kf * kf * s * s).exp()
            }
            Kind::Hyperexponential { branches } => {
                branches.iter().map(|b| b.weight * factorial(k) / b.rate.powi(k as i32)).sum()
            }
            Kind::EquilibriumOf { base } => base.raw_moment(k + 1) / ((kf + 1.0) * base.mean()),
        }
    }

    pub fn moments(&self) -> MomentSummary {
        let mean = self.mean();
        let second = self.raw_moment(2);
        let variance = (second - mean * mean).max(0.0);
        let third = self.raw_moment(3);
        MomentSummary {
            mean,
            variance,
            scv: variance / (mean * mean),
            third_moment: third.is_finite().then_some(third),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 || x.is_nan() {
            return 0.0;
        }
        match &self.0 {
            Kind::Exponential { rate } => -(-rate * x).exp_m1(),
            Kind::Deterministic { value } => {
                if x >= *value {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::Erlang { shape, rate } => gamma_lr(*shape as f64, rate * x),
            Kind::LogNormal { mean, scv } => {
                let (loc, s) = Self::lognormal_params(*mean, *scv);
                if x == 0.0 {
                    0.0
                } else if s == 0.0 {
                    if x >= *mean {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    norm_cdf((x.ln() - loc) / s)
                }
            }
            Kind::Hyperexponential { branches } => {
                branches.iter().map(|b| -b.weight * (-b.rate * x).exp_m1()).sum::<f64>().min(1.0)
            }
            Kind::EquilibriumOf { base } => (base.integrated_survival(x) / base.mean()).clamp(0.0, 1.0),
        }
    }

    /// `1 − F(x)`, evaluated without cancellation where the family allows.
    pub fn survival(&self, x: f64) -> f64 {
        if x < 0.0 || x.is_nan() {
            return 1.0;
        }
        match &self.0 {
            Kind::Exponential { rate } => (-rate * x).exp(),
            Kind::Erlang { shape, rate } => gamma_ur(*shape as f64, rate * x),
            Kind::LogNormal { mean, scv } if *scv > 0.0 && x > 0.0 => {
                let (loc, s) = Self::lognormal_params(*mean, *scv);
                norm_cdf(-(x.ln() - loc) / s)
            }
            Kind::Hyperexponential { branches } => branches.iter().map(|b| b.weight * (-b.rate * x).exp()).sum(),
            Kind::EquilibriumOf { base } => {
                let m = base.mean();
                let tail = (m - base.partial_moment(1, x)) - x * base.survival(x);
                (tail / m).clamp(0.0, 1.0)
            }
            _ => 1.0 - self.cdf(x),
        }
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        if !self.is_absolutely_continuous() {
            return Err(DistributionError::NotAbsolutelyContinuous);
        }
        if x < 0.0 {
            return Ok(0.0);
        }
        Ok(match &self.0 {
            Kind::Exponential { rate } => rate * (-rate * x).exp(),
            Kind::Erlang { shape, rate } => {
                let k = *shape as f64;
                if x == 0.0 {
                    if *shape == 1 {
                        *rate
                    } else {
                        0.0
                    }
                } else {
                    (k * rate.ln() + (k - 1.0) * x.ln() - rate * x - ln_gamma(k)).exp()
                }
            }
            Kind::LogNormal { mean, scv } => {
                if x == 0.0 {
                    0.0
                } else {
                    let (loc, s) = Self::lognormal_params(*mean, *scv);
                    norm_pdf((x.ln() - loc) / s) / (x * s)
                }
            }
            Kind::Hyperexponential { branches } => {
                branches.iter().map(|b| b.weight * b.rate * (-b.rate * x).exp()).sum()
            }
            Kind::EquilibriumOf { base } => base.survival(x) / base.mean(),
            Kind::Deterministic { .. } => unreachable!(),
        })
    }

    pub fn hazard(&self, x: f64) -> Result<f64> {
        let f = self.pdf(x)?;
        let s = self.survival(x);
        if s <= 0.0 {
            return Err(DistributionError::SupportExceeded(x));
        }
        Ok(f / s)
    }

    /// `E[X^k ; X ≤ t]`.
    pub fn partial_moment(&self, k: u32, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let kf = k as f64;
        match &self.0 {
            Kind::Exponential { rate } => {
                factorial(k) / rate.powi(k as i32) * gamma_lr(kf + 1.0, rate * t)
            }
            Kind::Deterministic { value } => {
                if t >= *value {
                    value.powi(k as i32)
                } else {
                    0.0
                }
            }
            Kind::Erlang { shape, rate } => self.raw_moment(k) * gamma_lr(*shape as f64 + kf, rate * t),
            Kind::LogNormal { mean, scv } => {
                let (loc, s) = Self::lognormal_params(*mean, *scv);
                if t == 0.0 {
                    0.0
                } else if s == 0.0 {
                    if t >= *mean {
                        mean.powi(k as i32)
                    } else {
                        0.0
                    }
                } else {
                    self.raw_moment(k) * norm_cdf((t.ln() - loc - kf * s * s) / s)
                }
            }
            Kind::Hyperexponential { branches } => branches
                .iter()
                .map(|b| b.weight * factorial(k) / b.rate.powi(k as i32) * gamma_lr(kf + 1.0, b.rate * t))
                .sum(),
            Kind::EquilibriumOf { base } => {
                // ∫₀ᵗ u^k S(u) du = t^{k+1} S(t)/(k+1) + E[X^{k+1}; X ≤ t]/(k+1)
                let k1 = kf + 1.0;
                (t.powf(k1) * base.survival(t) + base.partial_moment(k + 1, t)) / (k1 * base.mean())
            }
        }
    }

    /// `∫₀ᵗ (1 − F(u)) du`.
    pub fn integrated_survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        t * self.survival(t) + self.partial_moment(1, t)
    }

    /// Smallest `x` with `F(x) ≥ p`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&p) {
            return Err(DistributionError::InvalidProbability(p));
        }
        if p == 0.0 {
            return Ok(match &self.0 {
                Kind::Deterministic { value } => *value,
                Kind::LogNormal { mean, scv } if *scv == 0.0 => *mean,
                _ => 0.0,
            });
        }
        Ok(match &self.0 {
            Kind::Exponential { rate } => -(-p).ln_1p() / rate,
            Kind::Deterministic { value } => *value,
            Kind::LogNormal { mean, scv } => {
                let (loc, s) = Self::lognormal_params(*mean, *scv);
                if s == 0.0 {
                    *mean
                } else {
                    (loc + s * norm_quantile(p)).exp()
                }
            }
            _ => self.quantile_by_bisection(p),
        })
    }

    fn quantile_by_bisection(&self, p: f64) -> f64 {
        let mut upper = self.mean().max(f64::MIN_POSITIVE);
        while self.cdf(upper) < p {
            upper *= 2.0;
            if !upper.is_finite() {
                return f64::INFINITY;
            }
        }
        bisect_monotone(|x| self.cdf(x) >= p, 0.0, upper, 1e-12)
    }

    /// Stationary-excess distribution. Memorylessness makes the exponential
    /// its own equilibrium law.
    pub fn equilibrium(&self) -> Result<Distribution> {
        let m = self.mean();
        if !(m.is_finite() && m > 0.0) {
            return Err(DistributionError::InfiniteMean);
        }
        Ok(match &self.0 {
            Kind::Exponential { .. } => self.clone(),
            _ => Distribution(Kind::EquilibriumOf { base: Box::new(self.clone()) }),
        })
    }

    /// The same law on a time axis stretched by `factor` (`X ↦ factor·X`).
    pub fn scaled(&self, factor: f64) -> Result<Distribution> {
        let factor = positive("scale factor", factor)?;
        Ok(Distribution(match &self.0 {
            Kind::Exponential { rate } => Kind::Exponential { rate: rate / factor },
            Kind::Deterministic { value } => Kind::Deterministic { value: value * factor },
            Kind::Erlang { shape, rate } => Kind::Erlang { shape: *shape, rate: rate / factor },
            Kind::LogNormal { mean, scv } => Kind::LogNormal { mean: mean * factor, scv: *scv },
            Kind::Hyperexponential { branches } => Kind::Hyperexponential {
                branches: branches.iter().map(|b| Branch { weight: b.weight, rate: b.rate / factor }).collect(),
            },
            Kind::EquilibriumOf { base } => Kind::EquilibriumOf { base: Box::new(base.scaled(factor)?) },
        }))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.0 {
            Kind::Exponential { rate } => rng.sample::<f64, _>(Exp1) / rate,
            Kind::Deterministic { value } => *value,
            Kind::Erlang { shape, rate } => erlang_draw(rng, *shape, *rate),
            Kind::LogNormal { mean, scv } => {
                let (loc, s) = Self::lognormal_params(*mean, *scv);
                let z: f64 = rng.sample(StandardNormal);
                (loc + s * z).exp()
            }
            Kind::Hyperexponential { branches } => {
                let b = pick_branch(rng, branches.iter().map(|b| b.weight));
                rng.sample::<f64, _>(Exp1) / branches[b].rate
            }
            Kind::EquilibriumOf { base } => {
                // U · (length-biased draw) has density (1 − F(x))/m.
                match base.length_biased_sample(rng) {
                    Some(y) => rng.random::<f64>() * y,
                    None => {
                        let u: f64 = rng.random();
                        self.quantile_by_bisection(u)
                    }
                }
            }
        }
    }

    /// Draw from the size-biased law `x f(x)/m`, when a direct sampler exists.
    fn length_biased_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<f64> {
        Some(match &self.0 {
            Kind::Exponential { rate } => erlang_draw(rng, 2, *rate),
            Kind::Deterministic { value } => *value,
            Kind::Erlang { shape, rate } => erlang_draw(rng, shape + 1, *rate),
            Kind::LogNormal { mean, scv } => {
                let (loc, s) = Self::lognormal_params(*mean, *scv);
                let z: f64 = rng.sample(StandardNormal);
                (loc + s * s + s * z).exp()
            }
            Kind::Hyperexponential { branches } => {
                let b = pick_branch(rng, branches.iter().map(|b| b.weight / b.rate));
                erlang_draw(rng, 2, branches[b].rate)
            }
            Kind::EquilibriumOf { .. } => return None,
        })
    }
}

fn gamma_lr(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x.is_infinite() {
        1.0
    } else {
        gamma::gamma_lr(a, x)
    }
}

fn gamma_ur(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x.is_infinite() {
        0.0
    } else {
        gamma::gamma_ur(a, x)
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

fn erlang_draw<R: Rng + ?Sized>(rng: &mut R, shape: u32, rate: f64) -> f64 {
    (0..shape).map(|_| rng.sample::<f64, _>(Exp1)).sum::<f64>() / rate
}

fn pick_branch<R: Rng + ?Sized>(rng: &mut R, weights: impl Iterator<Item = f64> + Clone) -> usize {
    let total: f64 = weights.clone().sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if u < w {
            return i;
        }
        u -= w;
        last = i;
    }
    last
}

impl fmt::Debug for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Kind::Exponential { rate } => write!(f, "Exp(mean {})", 1.0 / rate),
            Kind::Deterministic { value } => write!(f, "D({value})"),
            Kind::Erlang { shape, rate } => write!(f, "E{shape}(mean {})", *shape as f64 / rate),
            Kind::LogNormal { mean, scv } => write!(f, "LN(mean {mean}, scv {scv})"),
            Kind::Hyperexponential { branches } => {
                write!(f, "H{}(", branches.len())?;
                for (i, b) in branches.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}@{}", b.weight, 1.0 / b.rate)?;
                }
                write!(f, ")")
            }
            Kind::EquilibriumOf { base } => write!(f, "Eq[{base}]"),
        }
    }
}

/// Human-oriented JSON form: times are given as means rather than rates,
/// e.g. `{"type":"hyperexp","branches":[{"p":0.98,"mean":1000},{"p":0.02,"mean":6}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum DistributionConfig {
    #[serde(rename = "exp")]
    Exponential { mean: f64 },
    #[serde(rename = "det")]
    Deterministic { value: f64 },
    Erlang { shape: u32, mean: f64 },
    #[serde(rename = "lognormal")]
    LogNormal { mean: f64, scv: f64 },
    #[serde(rename = "hyperexp")]
    Hyperexponential { branches: Vec<BranchConfig> },
    Equilibrium { base: Box<DistributionConfig> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchConfig {
    pub p: f64,
    pub mean: f64,
}

impl TryFrom<DistributionConfig> for Distribution {
    type Error = DistributionError;

    fn try_from(c: DistributionConfig) -> Result<Self> {
        match c {
            DistributionConfig::Exponential { mean } => Distribution::exponential_mean(mean),
            DistributionConfig::Deterministic { value } => Distribution::deterministic(value),
            DistributionConfig::Erlang { shape, mean } => Distribution::erlang_mean(shape, mean),
            DistributionConfig::LogNormal { mean, scv } => Distribution::lognormal(mean, scv),
            DistributionConfig::Hyperexponential { branches } => {
                let pairs: Vec<_> = branches.iter().map(|b| (b.p, b.mean)).collect();
                Distribution::hyperexponential_means(&pairs)
            }
            DistributionConfig::Equilibrium { base } => Distribution::try_from(*base)?.equilibrium(),
        }
    }
}

impl From<Distribution> for DistributionConfig {
    fn from(d: Distribution) -> Self {
        match d.0 {
            Kind::Exponential { rate } => DistributionConfig::Exponential { mean: 1.0 / rate },
            Kind::Deterministic { value } => DistributionConfig::Deterministic { value },
            Kind::Erlang { shape, rate } => DistributionConfig::Erlang { shape, mean: shape as f64 / rate },
            Kind::LogNormal { mean, scv } => DistributionConfig::LogNormal { mean, scv },
            Kind::Hyperexponential { branches } => DistributionConfig::Hyperexponential {
                branches: branches.iter().map(|b| BranchConfig { p: b.weight, mean: 1.0 / b.rate }).collect(),
            },
            Kind::EquilibriumOf { base } => DistributionConfig::Equilibrium { base: Box::new((*base).into()) },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;
    use crate::special::adaptive_simpson;
    use approx::assert_relative_eq;

    fn call_center_patience() -> Distribution {
        Distribution::hyperexponential(&[(0.98, 1.0 / 1000.0), (0.02, 1.0 / 6.0)]).unwrap()
    }

    fn bimodal_service() -> Distribution {
        Distribution::hyperexponential(&[(0.5916, 1.0 / 0.1691), (0.4084, 1.0 / 2.203)]).unwrap()
    }

    fn families() -> Vec<Distribution> {
        vec![
            Distribution::exponential(1.3).unwrap(),
            Distribution::erlang(2, 2.0).unwrap(),
            Distribution::erlang(5, 0.7).unwrap(),
            Distribution::lognormal(1.0, 2.0).unwrap(),
            Distribution::lognormal(230.0, 5.0).unwrap(),
            call_center_patience(),
            bimodal_service(),
            Distribution::deterministic(1.0).unwrap().equilibrium().unwrap(),
            Distribution::erlang(2, 2.0).unwrap().equilibrium().unwrap(),
            Distribution::lognormal(1.0, 2.0).unwrap().equilibrium().unwrap(),
            bimodal_service().equilibrium().unwrap(),
        ]
    }

    #[test]
    fn cdf_examples() {
        let e = Distribution::exponential(1.0).unwrap();
        assert_eq!(e.cdf(0.0), 0.0);
        // 1 − e^{−ln 1.2} = 1/6
        assert_relative_eq!(e.cdf(1.2f64.ln()), 1.0 / 6.0, max_relative = 1e-14);
        assert_relative_eq!(e.cdf(0.1823), 1.0 / 6.0, max_relative = 2e-4);
        assert_eq!(call_center_patience().cdf(0.0), 0.0);
        assert_eq!(e.cdf(-1.0), 0.0);
    }

    #[test]
    fn pdf_examples() {
        assert_eq!(Distribution::exponential(1.0).unwrap().pdf(0.0).unwrap(), 1.0);
        let w = 5.0 * 1.2f64.ln();
        let f = Distribution::exponential(0.2).unwrap().pdf(w).unwrap();
        assert_relative_eq!(f, 1.0 / 6.0, max_relative = 1e-14);
        let h = call_center_patience();
        for &x in &[5e3, 2e4] {
            let envelope = 0.98 / 1000.0 * (-x / 1000.0f64).exp();
            assert_relative_eq!(h.pdf(x).unwrap(), envelope, max_relative = 1e-12);
        }
        assert_eq!(
            Distribution::deterministic(1.0).unwrap().pdf(0.5),
            Err(DistributionError::NotAbsolutelyContinuous)
        );
    }

    #[test]
    fn hazard_examples() {
        let e = Distribution::exponential(0.37).unwrap();
        for &x in &[0.0, 1.0, 50.0] {
            assert_relative_eq!(e.hazard(x).unwrap(), 0.37, max_relative = 1e-12);
        }
        let h = call_center_patience();
        assert_relative_eq!(h.hazard(0.0).unwrap(), 0.98 / 1000.0 + 0.02 / 6.0, max_relative = 1e-14);
        assert_relative_eq!(h.hazard(1e5).unwrap(), 1.0 / 1000.0, max_relative = 1e-9);
        assert!(Distribution::deterministic(2.0).unwrap().hazard(1.0).is_err());
        assert!(matches!(
            Distribution::erlang(3, 1.0).unwrap().hazard(1e4),
            Err(DistributionError::SupportExceeded(_))
        ));
    }

    #[test]
    fn quantile_examples() {
        for &gamma in &[1.0, 5.0, 10.0] {
            let e = Distribution::exponential_mean(gamma).unwrap();
            let w = e.quantile(0.2 / 1.2).unwrap();
            assert_relative_eq!(w, gamma * 1.2f64.ln(), max_relative = 1e-13);
            assert_eq!(format!("{:.4}", w / gamma), "0.1823");
        }
        assert_eq!(Distribution::deterministic(3.0).unwrap().quantile(0.0).unwrap(), 3.0);
        assert_eq!(call_center_patience().quantile(0.0).unwrap(), 0.0);
        // bisection oracle on 0.98 e^{-x/1000} + 0.02 e^{-x/6} = 5/6
        let sf = |x: f64| 0.98 * (-x / 1000.0).exp() + 0.02 * (-x / 6.0).exp();
        let (mut lo, mut hi) = (0.0, 1e4);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if sf(mid) > 5.0 / 6.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert_relative_eq!(call_center_patience().quantile(1.0 / 6.0).unwrap(), hi, max_relative = 1e-10);
        assert!(matches!(call_center_patience().quantile(1.0), Err(DistributionError::InvalidProbability(_))));
    }

    #[test]
    fn moment_examples() {
        let d = Distribution::deterministic(1.0).unwrap().moments();
        assert_eq!((d.mean, d.variance, d.scv), (1.0, 0.0, 0.0));
        let h = bimodal_service().moments();
        assert_relative_eq!(h.mean, 1.0, max_relative = 1e-3);
        assert_relative_eq!(h.scv, 3.0, max_relative = 2e-3);
        let ln = Distribution::lognormal(230.0, 5.0).unwrap().moments();
        assert_relative_eq!(ln.mean, 230.0, max_relative = 1e-12);
        assert_relative_eq!(ln.variance, 5.0 * 230.0 * 230.0, max_relative = 1e-12);
        assert!(ln.third_moment.is_some());
    }

    #[test]
    fn equilibrium_examples() {
        let mu = 1.7;
        let e = Distribution::exponential(mu).unwrap();
        let ee = e.equilibrium().unwrap();
        for i in 0..1000 {
            let x = i as f64 * 0.01;
            assert!((ee.cdf(x) - e.cdf(x)).abs() < 1e-12);
        }
        let det = Distribution::deterministic(1.0 / mu).unwrap().equilibrium().unwrap();
        for &t in &[0.1, 0.3, 0.5] {
            assert_relative_eq!(det.cdf(t), mu * t, max_relative = 1e-12);
        }
        assert_eq!(det.cdf(1.0 / mu), 1.0);
        assert_relative_eq!(det.mean(), 1.0 / (2.0 * mu), max_relative = 1e-12);
        let h = bimodal_service();
        let he = h.equilibrium().unwrap();
        assert_relative_eq!(he.mean(), (1.0 + h.scv()) / (2.0 * (1.0 / h.mean())), max_relative = 1e-12);
        assert_relative_eq!(he.mean(), 2.0, max_relative = 3e-3);
    }

    #[test]
    fn equilibrium_mean_matches_quadrature() {
        for d in families() {
            let Kind::EquilibriumOf { base } = d.kind() else { continue };
            let mu = 1.0 / base.mean();
            let upper = d.quantile(1.0 - 1e-13).unwrap();
            let q = adaptive_simpson(|t| d.survival(t), 0.0, upper, 1e-12);
            let expected = (1.0 + base.scv()) / (2.0 * mu);
            assert_relative_eq!(q.value, expected, max_relative = 1e-9);
            assert_relative_eq!(d.mean(), expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn calculus_identities_on_grids() {
        for d in families() {
            let hi = d.quantile(0.999_999).unwrap();
            let mut prev = 0.0;
            for i in 0..=1000 {
                let x = hi * i as f64 / 1000.0;
                let c = d.cdf(x);
                assert!((0.0..=1.0).contains(&c) && c >= prev - 1e-15, "{d}: cdf not monotone at {x}");
                prev = c;
                assert!((c + d.survival(x) - 1.0).abs() < 1e-12, "{d}: cdf + survival at {x}");
                if i % 50 == 0 && i > 0 {
                    let q = adaptive_simpson(|u| d.pdf(u).unwrap(), 0.0, x, 1e-10);
                    assert!((q.value - c).abs() < 1e-6, "{d}: ∫pdf vs cdf at {x}");
                    assert!(d.quantile(c.min(1.0 - 1e-16)).unwrap() <= x * (1.0 + 1e-9) + 1e-12);
                }
            }
            assert!(d.cdf(1e9) > 1.0 - 1e-9);
            for i in 1..100 {
                let p = i as f64 / 100.0;
                let x = d.quantile(p).unwrap();
                assert!(d.cdf(x) >= p - 1e-12, "{d}: cdf(quantile({p}))");
            }
        }
    }

    #[test]
    fn sampling_means_and_ks() {
        for (i, d) in families().into_iter().enumerate() {
            let mut rng = StreamKey::new(11).with_stream(i as u64).rng();
            let n = 100_000;
            let mut xs: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
            let m = d.moments();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let se = (m.variance / n as f64).sqrt();
            assert!((mean - m.mean).abs() < 5.0 * se, "{d}: sample mean {mean} vs {}", m.mean);
            xs.sort_by(f64::total_cmp);
            let dn = crate::stats::ks_statistic_sorted(&xs, |x| d.cdf(x));
            let p = crate::stats::kolmogorov_pvalue(dn, n);
            assert!(p > 0.001, "{d}: KS p-value {p}");
        }
    }

    #[test]
    fn exponential_sample_scv() {
        let d = Distribution::exponential(1.0).unwrap();
        let mut rng = StreamKey::new(3).rng();
        let n = 1_000_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let x = d.sample(&mut rng);
            s1 += x;
            s2 += x * x;
        }
        let mean = s1 / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!((var / (mean * mean) - 1.0).abs() < 0.01);
        assert_eq!(Distribution::deterministic(2.0).unwrap().sample(&mut rng), 2.0);
    }

    #[test]
    fn equilibrium_erlang_sample_mean() {
        let mu = 1.0;
        let d = Distribution::erlang(2, 2.0 * mu).unwrap().equilibrium().unwrap();
        let mut rng = StreamKey::new(5).rng();
        let n = 200_000;
        let mean = (0..n).map(|_| d.sample(&mut rng)).sum::<f64>() / n as f64;
        let sd = d.moments().variance.sqrt();
        assert!((mean - 1.5 / (2.0 * mu)).abs() < 4.0 * sd / (n as f64).sqrt());
    }

    #[test]
    fn validation() {
        assert!(Distribution::exponential(0.0).is_err());
        assert!(Distribution::erlang(0, 1.0).is_err());
        assert!(Distribution::lognormal(1.0, -0.1).is_err());
        assert!(Distribution::hyperexponential(&[(0.5, 1.0), (0.4, 2.0)]).is_err());
        assert!(Distribution::hyperexponential(&[(1.0, 1.0), (0.0, 2.0)]).is_err());
    }

    #[test]
    fn json_form() {
        let json = r#"{"type":"hyperexp","branches":[{"p":0.98,"mean":1000},{"p":0.02,"mean":6}]}"#;
        let d: Distribution = serde_json::from_str(json).unwrap();
        assert_relative_eq!(d.mean(), 980.12, max_relative = 1e-12);
        let cfg: DistributionConfig = serde_json::from_str(json).unwrap();
        let back: DistributionConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, back);
        assert!(serde_json::from_str::<Distribution>(r#"{"type":"exp","mean":1,"rate":2}"#).is_err());
        assert!(serde_json::from_str::<Distribution>(r#"{"type":"exp","mean":-1}"#).is_err());
        let eq: Distribution = serde_json::from_str(r#"{"type":"equilibrium","base":{"type":"det","value":2}}"#).unwrap();
        assert_relative_eq!(eq.mean(), 1.0, max_relative = 1e-12);
    }
}
