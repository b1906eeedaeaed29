//! Discrete-event simulation of the G/GI/n+GI queue with batch-means output
//! analysis.
//!
//! The run starts with all `n` servers busy on residual service times drawn
//! from the equilibrium law `F_e` and an empty buffer. Statistics are
//! collected over `[warmup, horizon)`; arrivals stop at the horizon and the
//! buffer is drained so every counted customer has a resolved outcome.

mod engine;
mod log;

pub use log::{virtual_waits, CustomerRecord, EventLog, IdleInterval, Outcome, VirtualWait};

use crate::diffusion::QueueSpec;
use crate::distributions::{Distribution, DistributionError};
use crate::par::Exec;
use crate::stats::{self, Estimate};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

pub type Result<T> = std::result::Result<T, SimError>;

/// How service times are attached to work.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceAssignment {
    /// Server `j` works through its own iid sequence of service times, so its
    /// completion epochs do not depend on which customers it serves.
    #[default]
    ServerIndexed,
    /// Each customer brings its own service time.
    PerCustomer,
}

/// State of the system at time zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// Every server busy with an equilibrium residual service time and an
    /// empty queue.
    #[default]
    BusyEquilibrium,
    /// No customers present.
    Empty,
}

fn default_batches() -> usize {
    30
}

fn default_replications() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub spec: QueueSpec,
    /// Explicit interarrival law. When absent one is derived from the arrival
    /// rate and interarrival scv: exponential for scv 1, deterministic for 0,
    /// lognormal otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interarrival: Option<Distribution>,
    pub warmup: f64,
    /// End of the observation window (absolute time, not its length).
    pub horizon: f64,
    #[serde(default = "default_batches")]
    pub batches: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub tail_thresholds_w: Vec<f64>,
    #[serde(default)]
    pub tail_thresholds_x: Vec<f64>,
    #[serde(default)]
    pub service_level_delays: Vec<f64>,
    #[serde(default)]
    pub effective_abd_delays: Vec<f64>,
    /// Values `i` at which the stationary pmf of the number in system is estimated.
    #[serde(default)]
    pub pmf_points: Vec<u64>,
    #[serde(default)]
    pub assignment: ServiceAssignment,
    #[serde(default)]
    pub initial: InitialState,
    /// Stop generating arrivals after this many customers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrival_limit: Option<u64>,
    #[serde(skip)]
    pub exec: Exec,
}

impl SimConfig {
    /// A config with horizons scaled to the instance: warmup of 20 relaxation
    /// times and an observation window holding about `customers` arrivals.
    pub fn for_spec(spec: QueueSpec, customers: f64) -> Self {
        let relax = spec.mean_patience().max(spec.service.mean());
        let warmup = 20.0 * relax;
        let horizon = warmup + customers / spec.arrival_rate;
        Self {
            spec,
            interarrival: None,
            warmup,
            horizon,
            batches: default_batches(),
            seed: 0,
            replications: 1,
            tail_thresholds_w: vec![],
            tail_thresholds_x: vec![],
            service_level_delays: vec![],
            effective_abd_delays: vec![],
            pmf_points: vec![],
            assignment: ServiceAssignment::default(),
            initial: InitialState::default(),
            arrival_limit: None,
            exec: Exec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate().map_err(|e| SimError::Config(e.to_string()))?;
        if !(self.warmup > 0.0 && self.horizon > self.warmup && self.horizon.is_finite()) {
            return Err(SimError::Config(format!(
                "need horizon > warmup > 0, got warmup {} horizon {}",
                self.warmup, self.horizon
            )));
        }
        if self.batches < 10 {
            return Err(SimError::Config(format!("at least 10 batches required, got {}", self.batches)));
        }
        if self.replications == 0 {
            return Err(SimError::Config("at least one replication required".into()));
        }
        for &d in self.service_level_delays.iter().chain(&self.effective_abd_delays) {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(SimError::Config(format!("delays must be finite and >= 0, got {d}")));
            }
        }
        if !(self.tail_thresholds_w.is_empty() && self.tail_thresholds_x.is_empty()) && !(self.spec.traffic_intensity() > 1.0)
        {
            return Err(SimError::Config("scaled tails are centered on overload quantities and need rho > 1".into()));
        }
        self.interarrival_law()?;
        Ok(())
    }

    pub fn interarrival_law(&self) -> Result<Distribution> {
        let lambda = self.spec.arrival_rate;
        let ca2 = self.spec.interarrival_scv;
        match &self.interarrival {
            Some(d) => {
                let m = d.moments();
                if (m.mean * lambda - 1.0).abs() > 1e-9 || (m.scv - ca2).abs() > 1e-9 {
                    return Err(SimError::Config(format!(
                        "interarrival law has mean {} and scv {}, expected {} and {ca2}",
                        m.mean,
                        m.scv,
                        1.0 / lambda
                    )));
                }
                Ok(d.clone())
            }
            None if ca2 == 1.0 => Ok(Distribution::exponential(lambda)?),
            None if ca2 == 0.0 => Ok(Distribution::deterministic(1.0 / lambda)?),
            None => Ok(Distribution::lognormal(1.0 / lambda, ca2)?),
        }
    }
}

/// An estimate attached to the parameter it was requested at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtPoint {
    pub at: f64,
    pub estimate: Estimate,
}

/// Flow balance snapshot at the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conservation {
    pub initial: u64,
    pub arrivals: u64,
    pub completed: u64,
    pub abandoned: u64,
    pub in_system: u64,
}

impl Conservation {
    pub fn holds(&self) -> bool {
        self.arrivals + self.initial == self.completed + self.abandoned + self.in_system
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimDiagnostics {
    /// Fraction of observed time at least one server was idle.
    pub idle_fraction: f64,
    /// Offered waits that could only be estimated (see [`virtual_waits`]).
    pub inexact_waits: u64,
    /// Lag-1 correlation of the batch means of the number in system.
    pub lag1_batch_correlation: f64,
    pub total_batches: usize,
    pub events: u64,
    pub customers_observed: u64,
    pub conservation: Vec<Conservation>,
}

/// Point estimates with 95% half-widths. `queue_*` refer to the number
/// waiting `Q = (X − n)⁺` and `in_system_*` to the number in system `X`.
/// Queue tails are stated for `X` but coincide with those of `n + Q` at
/// nonnegative thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub abandonment_fraction: Estimate,
    pub wait_mean: Estimate,
    pub wait_variance: Estimate,
    pub queue_mean: Estimate,
    pub queue_variance: Estimate,
    pub in_system_mean: Estimate,
    pub in_system_variance: Estimate,
    pub wait_tails: Vec<AtPoint>,
    pub queue_tails: Vec<AtPoint>,
    pub service_levels: Vec<AtPoint>,
    pub effective_abandonment: Vec<AtPoint>,
    pub pmf: Vec<AtPoint>,
    /// Arrival rate observed in the window.
    pub arrival_rate: Estimate,
    /// Mean time in system, counting abandoning customers' waits.
    pub mean_sojourn: Estimate,
    pub diagnostics: SimDiagnostics,
}

const LEVEL: f64 = 0.95;

/// Runs all replications and pools their batches.
pub fn run(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let plan = engine::Plan::new(config)?;
    let reps = config
        .exec
        .map(config.replications, |r| engine::run_replication(config, &plan, r as u64, &engine::Options::default()).0);
    Ok(assemble(config, &plan, &reps))
}

/// Runs replication `replication` alone and returns its complete event log.
pub fn event_log(config: &SimConfig, replication: u64) -> Result<EventLog> {
    config.validate()?;
    let plan = engine::Plan::new(config)?;
    let opts = engine::Options { record_log: true, infinite_patience: None };
    Ok(engine::run_replication(config, &plan, replication, &opts).1.expect("log requested"))
}

/// Re-runs a replication with customer `id` (0-based arrival index) given
/// infinite patience; the returned log shows the wait it would experience.
pub fn counterfactual_log(config: &SimConfig, replication: u64, id: u64) -> Result<EventLog> {
    config.validate()?;
    let plan = engine::Plan::new(config)?;
    let opts = engine::Options { record_log: true, infinite_patience: Some(id) };
    Ok(engine::run_replication(config, &plan, replication, &opts).1.expect("log requested"))
}

/// Scaling used to center and normalize raw samples for tail estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailScaling {
    /// `√(n/γ)(W − w)`
    VirtualWait { n: f64, gamma: f64, w: f64 },
    /// `(X − n − q)/√(nγ)`
    NumberInSystem { n: f64, gamma: f64, q: f64 },
}

impl TailScaling {
    pub fn scale(&self, x: f64) -> f64 {
        match *self {
            TailScaling::VirtualWait { n, gamma, w } => (n / gamma).sqrt() * (x - w),
            TailScaling::NumberInSystem { n, gamma, q } => (x - n - q) / (n * gamma).sqrt(),
        }
    }

    /// Raw level `x` at which the scaled value equals `a`.
    pub fn level(&self, a: f64) -> f64 {
        match *self {
            TailScaling::VirtualWait { n, gamma, w } => w + a * (gamma / n).sqrt(),
            TailScaling::NumberInSystem { n, gamma, q } => n + q + a * (n * gamma).sqrt(),
        }
    }
}

/// Empirical `P[scaled sample > a]` for each threshold.
pub fn estimate_tails(samples: &[f64], scaling: TailScaling, thresholds: &[f64]) -> Vec<f64> {
    let scaled: Vec<f64> = samples.iter().map(|&x| scaling.scale(x)).collect();
    thresholds
        .iter()
        .map(|&a| scaled.iter().filter(|&&z| z > a).count() as f64 / scaled.len().max(1) as f64)
        .collect()
}

fn assemble(config: &SimConfig, plan: &engine::Plan, reps: &[engine::Replication]) -> SimResult {
    let mut cust = engine::CustomerBatches::new(0, plan);
    let mut time = engine::TimeBatches::new(0, plan);
    for r in reps {
        cust.extend(&r.customers);
        time.extend(&r.time);
    }

    let abandonment_fraction = stats::ratio_ci(&cust.abandoned, &cust.count, LEVEL);
    let wait_mean = stats::ratio_ci(&cust.w1, &cust.count, LEVEL);
    let wait_variance = second_moment_ci(&cust.w1, &cust.w2, &cust.count);

    let len = &time.length;
    let in_system_mean = stats::ratio_ci(&time.x1, len, LEVEL);
    let in_system_variance = second_moment_ci(&time.x1, &time.x2, len);
    let queue_mean = stats::ratio_ci(&time.q1, len, LEVEL);
    let queue_variance = second_moment_ci(&time.q1, &time.q2, len);

    let at = |points: &[f64], num: &[Vec<f64>], den: &[f64]| -> Vec<AtPoint> {
        points.iter().zip(num).map(|(&a, v)| AtPoint { at: a, estimate: stats::ratio_ci(v, den, LEVEL) }).collect()
    };
    let wait_tails = at(&config.tail_thresholds_w, &cust.w_tail, &cust.count);
    let queue_tails = at(&config.tail_thresholds_x, &time.x_tail, len);
    let service_levels = at(&config.service_level_delays, &cust.served_within, &cust.count);
    let effective_abandonment = config
        .effective_abd_delays
        .iter()
        .zip(cust.ea_num.iter().zip(&cust.ea_den))
        .map(|(&d, (num, den))| AtPoint { at: d, estimate: stats::ratio_ci(num, den, LEVEL) })
        .collect();
    let pmf_at: Vec<f64> = config.pmf_points.iter().map(|&i| i as f64).collect();
    let pmf = at(&pmf_at, &time.x_point, len);

    let arrival_rate = stats::ratio_ci(&cust.count, len, LEVEL);
    let mean_sojourn = stats::ratio_ci(&cust.sojourn, &cust.count, LEVEL);

    let idle_fraction = time.idle.iter().sum::<f64>() / len.iter().sum::<f64>();
    let x_batch: Vec<f64> = time.x1.iter().zip(len).map(|(a, b)| a / b).collect();
    let diagnostics = SimDiagnostics {
        idle_fraction,
        inexact_waits: reps.iter().map(|r| r.inexact_waits).sum(),
        lag1_batch_correlation: stats::lag1_autocorrelation(&x_batch),
        total_batches: len.len(),
        events: reps.iter().map(|r| r.events).sum(),
        customers_observed: cust.count.iter().sum::<f64>() as u64,
        conservation: reps.iter().map(|r| r.conservation).collect(),
    };
    if diagnostics.lag1_batch_correlation > 0.2 {
        ::log::warn!(
            "lag-1 correlation of batch means is {:.3}; consider a longer horizon",
            diagnostics.lag1_batch_correlation
        );
    }
    SimResult {
        abandonment_fraction,
        wait_mean,
        wait_variance,
        queue_mean,
        queue_variance,
        in_system_mean,
        in_system_variance,
        wait_tails,
        queue_tails,
        service_levels,
        effective_abandonment,
        pmf,
        arrival_rate,
        mean_sojourn,
        diagnostics,
    }
}

/// Variance `M2 − M1²` from batch sums of `x`, `x²` and weights, with an
/// interval from the linearized per-batch values `s2 − 2·M1·s1 + M1²·c`.
fn second_moment_ci(s1: &[f64], s2: &[f64], c: &[f64]) -> Estimate {
    let total: f64 = c.iter().sum();
    let m1 = s1.iter().sum::<f64>() / total;
    let lin: Vec<f64> = s1.iter().zip(s2).zip(c).map(|((a, b), w)| b - 2.0 * m1 * a + m1 * m1 * w).collect();
    stats::ratio_ci(&lin, c, LEVEL)
}
