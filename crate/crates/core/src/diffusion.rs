//! Closed-form diffusion approximations for the GI/GI/n+GI queue in the
//! efficiency-driven regime (ρ = λ/(nμ) > 1).
//!
//! The virtual waiting time is approximated by a Gaussian with mean
//! `w = Θ⁻¹((ρ−1)/ρ)` and variance `σ_w²`, the number in system by a Gaussian
//! with mean `n + q` and variance `σ_x²`. The scaled quantities (hatted in the
//! field names) refer to `√(n/γ)(W − w)` and `(X − n − q)/√(nγ)`.

use crate::distributions::{Distribution, DistributionError, Kind};
use crate::special::{adaptive_simpson, norm_cdf, norm_pdf, norm_sf};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiffusionError {
    #[error("system is not overloaded: rho = {rho} <= 1")]
    NotOverloaded { rho: f64 },
    #[error("patience density vanishes at w = {w}")]
    PatienceDensityZeroAtW { w: f64 },
    #[error("patience distribution must have a density")]
    NotAbsolutelyContinuous,
    #[error("adaptive quadrature did not converge while computing {0}")]
    QuadratureFailure(&'static str),
    #[error("conditioning event has vanishing probability at d = {d}")]
    DegenerateConditioning { d: f64 },
    #[error("invalid queue specification: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

pub type Result<T> = std::result::Result<T, DiffusionError>;

fn default_scv() -> f64 {
    1.0
}

/// A GI/GI/n+GI instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueueSpec {
    pub arrival_rate: f64,
    /// Squared coefficient of variation of interarrival times.
    #[serde(default = "default_scv")]
    pub interarrival_scv: f64,
    pub servers: u32,
    pub service: Distribution,
    pub patience: Distribution,
}

impl QueueSpec {
    pub fn new(
        arrival_rate: f64,
        interarrival_scv: f64,
        servers: u32,
        service: Distribution,
        patience: Distribution,
    ) -> Result<Self> {
        let spec = Self { arrival_rate, interarrival_scv, servers, service, patience };
        spec.validate()?;
        Ok(spec)
    }

    /// Poisson arrivals.
    pub fn markovian_arrivals(arrival_rate: f64, servers: u32, service: Distribution, patience: Distribution) -> Result<Self> {
        Self::new(arrival_rate, 1.0, servers, service, patience)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.arrival_rate.is_finite() && self.arrival_rate > 0.0) {
            return Err(DiffusionError::InvalidSpec(format!("arrival rate must be > 0, got {}", self.arrival_rate)));
        }
        if !(self.interarrival_scv.is_finite() && self.interarrival_scv >= 0.0) {
            return Err(DiffusionError::InvalidSpec(format!(
                "interarrival scv must be >= 0, got {}",
                self.interarrival_scv
            )));
        }
        if self.servers == 0 {
            return Err(DiffusionError::InvalidSpec("at least one server is required".into()));
        }
        Ok(())
    }

    pub fn with_servers(&self, servers: u32) -> Self {
        Self { servers, ..self.clone() }
    }

    pub fn service_rate(&self) -> f64 {
        1.0 / self.service.mean()
    }

    pub fn traffic_intensity(&self) -> f64 {
        self.arrival_rate / (self.servers as f64 * self.service_rate())
    }

    pub fn mean_patience(&self) -> f64 {
        self.patience.mean()
    }
}

/// All outputs of the diffusion model for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSummary {
    pub servers: u32,
    pub rho: f64,
    pub mu: f64,
    pub gamma: f64,
    pub ca2: f64,
    pub cs2: f64,
    /// Patience density at `w`.
    pub f_theta_w: f64,
    pub alpha: f64,
    pub w: f64,
    pub sigma_w_sq: f64,
    pub q: f64,
    pub sigma_x_sq: f64,
    pub ou_drift_rate: f64,
    pub ou_m_variance: f64,
    pub sigma_hat_w_sq: f64,
    pub sigma_hat_x_sq: f64,
    pub sigma_hat_g_sq: f64,
    pub svpr: f64,
    pub normalized_w: f64,
    /// Set when `svpr > 0.5`, where the approximation is known to degrade.
    pub svpr_warning: bool,
}

impl DiffusionSummary {
    pub fn sigma_w(&self) -> f64 {
        self.sigma_w_sq.sqrt()
    }

    pub fn sigma_x(&self) -> f64 {
        self.sigma_x_sq.sqrt()
    }

    /// Gaussian distribution function of the steady-state virtual wait.
    pub fn phi_w(&self, u: f64) -> f64 {
        norm_cdf((u - self.w) / self.sigma_w())
    }

    /// `1 − Φ_w(u)`.
    pub fn phi_w_sf(&self, u: f64) -> f64 {
        norm_sf((u - self.w) / self.sigma_w())
    }

    /// Mean number in system, `n + q`.
    pub fn mean_in_system(&self) -> f64 {
        self.servers as f64 + self.q
    }
}

/// `(∫₀ᵗ S, ∫₀ᵗ S²)` for the survival function `S` of `d`.
fn survival_integrals(d: &Distribution, t: f64) -> Result<(f64, f64)> {
    let i1 = d.integrated_survival(t);
    let i2 = match d.kind() {
        Kind::Exponential { rate } => -(-2.0 * rate * t).exp_m1() / (2.0 * rate),
        Kind::Hyperexponential { branches } => {
            let mut s = 0.0;
            for a in branches {
                for b in branches {
                    let r = a.rate + b.rate;
                    s += a.weight * b.weight * -(-r * t).exp_m1() / r;
                }
            }
            s
        }
        _ => {
            let tol = 1e-13 * t.max(1.0);
            let q = adaptive_simpson(|u| d.survival(u).powi(2), 0.0, t, tol);
            if !q.converged {
                return Err(DiffusionError::QuadratureFailure("integral of squared patience survival"));
            }
            q.value
        }
    };
    Ok((i1, i2))
}

/// Unit-mean patience law `H(u) = Θ(γu)`, normalized mean wait `w̄` and `f_H(w̄)`.
pub fn normalize_patience(spec: &QueueSpec) -> Result<(Distribution, f64, f64)> {
    let gamma = spec.mean_patience();
    let h = spec.patience.scaled(1.0 / gamma)?;
    let rho = spec.traffic_intensity();
    let alpha = (rho - 1.0) / rho;
    let w_bar = h.quantile(alpha.max(0.0))?;
    let f = if h.is_absolutely_continuous() { h.pdf(w_bar)? } else { f64::NAN };
    Ok((h, w_bar, f))
}

pub fn summarize(spec: &QueueSpec) -> Result<DiffusionSummary> {
    summarize_with(spec, spec.interarrival_scv, spec.service.scv())
}

/// The M/M/n+GI comparator: the same formulas with `c_a² = c_s² = 1`.
pub fn zm_summarize(spec: &QueueSpec) -> Result<DiffusionSummary> {
    summarize_with(spec, 1.0, 1.0)
}

fn summarize_with(spec: &QueueSpec, ca2: f64, cs2: f64) -> Result<DiffusionSummary> {
    spec.validate()?;
    let patience = &spec.patience;
    if !patience.is_absolutely_continuous() {
        return Err(DiffusionError::NotAbsolutelyContinuous);
    }
    let n = spec.servers as f64;
    let lambda = spec.arrival_rate;
    let mu = spec.service_rate();
    let rho = lambda / (n * mu);
    if !(rho > 1.0) {
        return Err(DiffusionError::NotOverloaded { rho });
    }
    let gamma = patience.mean();
    let alpha = (rho - 1.0) / rho;
    let w = patience.quantile(alpha)?;
    let f_theta_w = patience.pdf(w)?;
    if !(f_theta_w.is_finite() && f_theta_w > 0.0) {
        return Err(DiffusionError::PatienceDensityZeroAtW { w });
    }
    let num = ca2 + rho * cs2 + rho - 1.0;

    let sigma_w_sq = num / (2.0 * n * rho * rho * mu * f_theta_w);
    let (i1, i2) = survival_integrals(patience, w)?;
    let q = lambda * i1;
    let sigma_x_sq =
        n * mu * num / (2.0 * rho * rho * f_theta_w) + n * rho * mu * (i1 - i2) + n * rho * mu * ca2 * i2;

    // Scaled Gaussian component, computed on the unit-mean patience scale.
    let h = patience.scaled(1.0 / gamma)?;
    let w_bar = w / gamma;
    let (h1, h2) = survival_integrals(&h, w_bar)?;
    let sigma_hat_g_sq = rho * mu * (h1 - h2) + rho * mu * ca2 * h2;

    let cs = cs2.sqrt();
    let svpr = cs / (gamma * mu);
    let svpr_warning = svpr > 0.5;
    if svpr_warning {
        log::warn!("service-variability-to-patience ratio {svpr:.3} exceeds 0.5; diffusion estimates may be inaccurate");
    }
    Ok(DiffusionSummary {
        servers: spec.servers,
        rho,
        mu,
        gamma,
        ca2,
        cs2,
        f_theta_w,
        alpha,
        w,
        sigma_w_sq,
        q,
        sigma_x_sq,
        ou_drift_rate: rho * gamma * f_theta_w,
        ou_m_variance: num / (rho * mu),
        sigma_hat_w_sq: sigma_w_sq * n / gamma,
        sigma_hat_x_sq: sigma_x_sq / (n * gamma),
        sigma_hat_g_sq,
        svpr,
        normalized_w: w_bar,
        svpr_warning,
    })
}

/// `P[W̃(∞) > a] ≈ 1 − Φ(a/σ̂_w)`.
pub fn virtual_wait_tail(summary: &DiffusionSummary, a: f64) -> f64 {
    symmetric_tail(a / summary.sigma_hat_w_sq.sqrt())
}

/// `P[X̃(∞) > a] ≈ 1 − Φ(a/σ̂_x)`.
pub fn queue_tail(summary: &DiffusionSummary, a: f64) -> f64 {
    symmetric_tail(a / summary.sigma_hat_x_sq.sqrt())
}

fn symmetric_tail(z: f64) -> f64 {
    if z >= 0.0 {
        norm_sf(z)
    } else {
        1.0 - norm_sf(-z)
    }
}

/// Gaussian approximation of `P[X(∞) = i]`, the density evaluated at integer `i`.
pub fn queue_pmf(summary: &DiffusionSummary, i: u64) -> f64 {
    let s = summary.sigma_x();
    norm_pdf((i as f64 - summary.mean_in_system()) / s) / s
}

pub fn service_level(spec: &QueueSpec, d: f64) -> Result<f64> {
    service_level_from(spec, &summarize(spec)?, d)
}

/// Fraction served within `d`, `∫₀^∞ Φ_w(u ∧ d) f_Θ(u) du`, using a
/// precomputed summary (e.g. the comparator's).
///
/// The piece over `[d, ∞)` equals `Φ_w(d)(1 − Θ(d))` exactly, so only `[0, d]`
/// is integrated numerically.
pub fn service_level_from(spec: &QueueSpec, summary: &DiffusionSummary, d: f64) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(DiffusionError::InvalidSpec(format!("delay must be >= 0, got {d}")));
    }
    let patience = &spec.patience;
    let tail = summary.phi_w(d) * patience.survival(d);
    let body = if d > 0.0 {
        let q = adaptive_simpson(|u| summary.phi_w(u) * patience.pdf(u).unwrap_or(0.0), 0.0, d, 1e-10);
        if !q.converged {
            return Err(DiffusionError::QuadratureFailure("service level"));
        }
        q.value
    } else {
        0.0
    };
    Ok((body + tail).clamp(0.0, 1.0))
}

pub fn effective_abandonment(spec: &QueueSpec, d: f64) -> Result<f64> {
    effective_abandonment_from(spec, &summarize(spec)?, d)
}

/// Fraction abandoning among customers whose wait exceeds `d`:
/// `∫_d^∞ (1 − Φ_w(u)) f_Θ(u) du / [(1 − Θ(d))(1 − Φ_w(d))]`.
pub fn effective_abandonment_from(spec: &QueueSpec, summary: &DiffusionSummary, d: f64) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(DiffusionError::InvalidSpec(format!("delay must be >= 0, got {d}")));
    }
    let patience = &spec.patience;
    let den = patience.survival(d) * summary.phi_w_sf(d);
    if !(den > 1e-280) {
        return Err(DiffusionError::DegenerateConditioning { d });
    }
    // 1 − Φ_w is below 1e-300 beyond w + 38σ_w.
    let upper = (summary.w + 38.0 * summary.sigma_w()).max(d);
    let upper = match patience.quantile(1.0 - 1e-16) {
        Ok(x) if x.is_finite() => upper.min(x.max(d)),
        _ => upper,
    };
    let q = adaptive_simpson(
        |u| summary.phi_w_sf(u) * patience.pdf(u).unwrap_or(0.0),
        d,
        upper,
        1e-12 * den,
    );
    if !q.converged {
        return Err(DiffusionError::QuadratureFailure("effective abandonment"));
    }
    Ok((q.value / den).clamp(0.0, 1.0))
}
