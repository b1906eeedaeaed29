//! Minimal staffing for service-level and effective-abandonment targets.

use crate::diffusion::{self, DiffusionError, QueueSpec};
use crate::distributions::Distribution;
use crate::par::Exec;
use crate::simulator::{self, ServiceAssignment, SimConfig, SimError};
use serde::{Deserialize, Serialize};
use std::io::{self, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StaffingError {
    #[error("target not met for any n with traffic intensity above 1 (n ≤ {n_max})")]
    InfeasibleWithinEdRegime { n_max: u32 },
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("diffusion evaluator failed at n = {n}: {source}")]
    Diffusion { n: u32, source: DiffusionError },
    #[error("simulation evaluator failed at n = {n}: {source}")]
    Simulation { n: u32, source: SimError },
}

pub type Result<T> = std::result::Result<T, StaffingError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Objective {
    /// Fraction served within `delay` at least `target`.
    ServiceLevel { target: f64, delay: f64 },
    /// Fraction abandoning among those waiting longer than `delay` below
    /// `target`.
    EffectiveAbandonment { target: f64, delay: f64 },
}

impl Objective {
    pub fn target(&self) -> f64 {
        match *self {
            Objective::ServiceLevel { target, .. } | Objective::EffectiveAbandonment { target, .. } => target,
        }
    }

    pub fn delay(&self) -> f64 {
        match *self {
            Objective::ServiceLevel { delay, .. } | Objective::EffectiveAbandonment { delay, .. } => delay,
        }
    }

    pub fn met_by(&self, metric: f64) -> bool {
        match *self {
            Objective::ServiceLevel { target, .. } => metric >= target,
            Objective::EffectiveAbandonment { target, .. } => metric < target,
        }
    }

    /// Whether `metric` is no worse than `other`.
    fn at_least_as_good(&self, metric: f64, other: f64) -> bool {
        match self {
            Objective::ServiceLevel { .. } => metric >= other,
            Objective::EffectiveAbandonment { .. } => metric <= other,
        }
    }
}

fn default_sim_customers() -> f64 {
    2e6
}

fn default_sim_replications() -> usize {
    4
}

fn default_batches() -> usize {
    30
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimTemplate {
    /// Post-warmup arrivals per replication.
    #[serde(default = "default_sim_customers")]
    pub customers: f64,
    #[serde(default = "default_sim_replications")]
    pub replications: usize,
    #[serde(default = "default_batches")]
    pub batches: usize,
    #[serde(default)]
    pub seed: u64,
    /// Overrides the default warmup of twenty mean patience times.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup: Option<f64>,
    #[serde(default)]
    pub assignment: ServiceAssignment,
}

impl Default for SimTemplate {
    fn default() -> Self {
        SimTemplate {
            customers: default_sim_customers(),
            replications: default_sim_replications(),
            batches: default_batches(),
            seed: 0,
            warmup: None,
            assignment: ServiceAssignment::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Evaluator {
    Diffusion,
    /// Diffusion formulas with `c_a² = c_s² = 1`.
    Zm,
    Simulation(SimTemplate),
}

fn default_scv() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaffingProblem {
    pub arrival_rate: f64,
    #[serde(default = "default_scv")]
    pub interarrival_scv: f64,
    pub service: Distribution,
    pub patience: Distribution,
    pub objective: Objective,
    pub evaluator: Evaluator,
    #[serde(skip)]
    pub exec: Exec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub metric: f64,
    /// 95% half-width for the simulation evaluator.
    pub half_width: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: u32,
    pub rho: f64,
    pub metric: f64,
    pub half_width: Option<f64>,
    pub meets: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaffingResult {
    pub n_min: u32,
    /// Every evaluated point, ordered by `n`.
    pub curve: Vec<CurvePoint>,
    pub rho_at_min: f64,
    pub svpr: f64,
    /// `[n_lo, n_hi]` when the target lies inside simulation intervals
    /// for some `n` in the band; `n_min` is then the conservative `n_hi`.
    pub ambiguous: Option<(u32, u32)>,
    /// The metric improved monotonically across the scanned window.
    pub monotone: bool,
    pub warnings: Vec<String>,
}

impl StaffingProblem {
    pub fn spec(&self, n: u32) -> Result<QueueSpec> {
        QueueSpec::new(self.arrival_rate, self.interarrival_scv, n, self.service.clone(), self.patience.clone())
            .map_err(|e| StaffingError::InvalidProblem(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.spec(1)?;
        let t = self.objective.target();
        if !(t > 0.0 && t < 1.0) {
            return Err(StaffingError::InvalidProblem(format!("target must lie in (0, 1), got {t}")));
        }
        if !(self.objective.delay() >= 0.0) {
            return Err(StaffingError::InvalidProblem("delay must be nonnegative".into()));
        }
        Ok(())
    }

    /// Upper end of the search, `⌊λ/μ⌋ − 1`.
    pub fn n_max(&self) -> u32 {
        let load = self.arrival_rate * self.service.mean();
        (load.floor() as u32).saturating_sub(1)
    }

    fn simulation_config(&self, n: u32, t: &SimTemplate) -> Result<SimConfig> {
        let mut cfg = SimConfig::for_spec(self.spec(n)?, t.customers);
        if let Some(w) = t.warmup {
            cfg.horizon += w - cfg.warmup;
            cfg.warmup = w;
        }
        cfg.replications = t.replications;
        cfg.batches = t.batches;
        cfg.seed = t.seed;
        cfg.assignment = t.assignment;
        cfg.exec = self.exec;
        match self.objective {
            Objective::ServiceLevel { delay, .. } => cfg.service_level_delays = vec![delay],
            Objective::EffectiveAbandonment { delay, .. } => cfg.effective_abd_delays = vec![delay],
        }
        Ok(cfg)
    }
}

/// The objective's metric at `n` servers. Simulation runs at different `n`
/// share random numbers through the common seed.
pub fn evaluate_at(problem: &StaffingProblem, n: u32) -> Result<Evaluation> {
    if n == 0 {
        return Err(StaffingError::InvalidProblem("n must be positive".into()));
    }
    let spec = problem.spec(n)?;
    let d = problem.objective.delay();
    let formula = |summary: diffusion::Result<diffusion::DiffusionSummary>| -> Result<Evaluation> {
        let wrap = |source| StaffingError::Diffusion { n, source };
        let summary = summary.map_err(wrap)?;
        let metric = match problem.objective {
            Objective::ServiceLevel { .. } => diffusion::service_level_from(&spec, &summary, d),
            Objective::EffectiveAbandonment { .. } => diffusion::effective_abandonment_from(&spec, &summary, d),
        }
        .map_err(wrap)?;
        Ok(Evaluation { metric, half_width: None })
    };
    match &problem.evaluator {
        Evaluator::Diffusion => formula(diffusion::summarize(&spec)),
        Evaluator::Zm => formula(diffusion::zm_summarize(&spec)),
        Evaluator::Simulation(t) => {
            let cfg = problem.simulation_config(n, t)?;
            let r = simulator::run(&cfg).map_err(|source| StaffingError::Simulation { n, source })?;
            let e = match problem.objective {
                Objective::ServiceLevel { .. } => r.service_levels[0].estimate,
                Objective::EffectiveAbandonment { .. } => r.effective_abandonment[0].estimate,
            };
            Ok(Evaluation { metric: e.value, half_width: Some(e.half_width) })
        }
    }
}

/// Evaluates every `n` in `lo..=hi`.
pub fn curve(problem: &StaffingProblem, lo: u32, hi: u32) -> Result<Vec<CurvePoint>> {
    problem.validate()?;
    let load = problem.arrival_rate * problem.service.mean();
    let ns: Vec<u32> = (lo.max(1)..=hi).collect();
    // Simulation runs parallelize internally over replications.
    let exec = if matches!(problem.evaluator, Evaluator::Simulation(_)) { Exec::Sequential } else { problem.exec };
    let evals = exec.try_map(ns.len(), |i| evaluate_at(problem, ns[i]))?;
    Ok(ns
        .iter()
        .zip(evals)
        .map(|(&n, e)| CurvePoint {
            n,
            rho: load / n as f64,
            metric: e.metric,
            half_width: e.half_width,
            meets: problem.objective.met_by(e.metric),
        })
        .collect())
}

/// Smallest `n` with traffic intensity above 1 that meets the objective.
///
/// A starting guess (fluid sizing, or the diffusion answer for the
/// simulation evaluator) is bracketed by geometric steps and the bracket is
/// then scanned point by point, so the point below `n_min` is always
/// evaluated.
pub fn min_servers(problem: &StaffingProblem) -> Result<StaffingResult> {
    problem.validate()?;
    let n_max = problem.n_max();
    if n_max == 0 {
        return Err(StaffingError::InfeasibleWithinEdRegime { n_max });
    }
    let load = problem.arrival_rate * problem.service.mean();
    let implied_abandonment = match problem.objective {
        Objective::ServiceLevel { target, .. } => 1.0 - target,
        Objective::EffectiveAbandonment { target, .. } => target,
    };
    let fluid = ((load * (1.0 - implied_abandonment)).ceil() as u32).clamp(1, n_max);
    // Simulation searches start from the diffusion answer when there is one.
    let guess = match problem.evaluator {
        Evaluator::Simulation(_) => {
            let formula = StaffingProblem { evaluator: Evaluator::Diffusion, ..problem.clone() };
            min_servers(&formula).map_or(fluid, |r| r.n_min)
        }
        _ => fluid,
    };

    let mut points: Vec<CurvePoint> = Vec::new();
    let eval = |n: u32, points: &mut Vec<CurvePoint>| -> Result<bool> {
        if let Some(p) = points.iter().find(|p| p.n == n) {
            return Ok(p.meets);
        }
        let p = curve(problem, n, n)?[0];
        points.push(p);
        Ok(p.meets)
    };

    // Bracket: `lo` fails (or is 0), `hi` meets.
    let (mut lo, mut hi);
    if eval(guess, &mut points)? {
        hi = guess;
        let mut step = 1;
        loop {
            let cand = hi.saturating_sub(step);
            if cand == 0 {
                lo = 0;
                break;
            }
            if eval(cand, &mut points)? {
                hi = cand;
                step *= 2;
            } else {
                lo = cand;
                break;
            }
        }
    } else {
        lo = guess;
        let mut step = 1;
        loop {
            if lo == n_max {
                return Err(StaffingError::InfeasibleWithinEdRegime { n_max });
            }
            let cand = (lo + step).min(n_max);
            if eval(cand, &mut points)? {
                hi = cand;
                break;
            }
            lo = cand;
            step *= 2;
        }
    }
    if hi > lo + 1 {
        points.extend(curve(problem, lo + 1, hi - 1)?);
    }
    points.sort_by_key(|p| p.n);
    points.dedup_by_key(|p| p.n);

    let window: Vec<&CurvePoint> = points.iter().filter(|p| p.n >= lo && p.n <= hi).collect();
    let monotone = window.windows(2).all(|w| problem.objective.at_least_as_good(w[1].metric, w[0].metric));
    let first_meet = window.iter().find(|p| p.meets).map(|p| p.n).unwrap_or(hi);

    // With simulation intervals, the band of `n` whose interval straddles
    // the target is reported and the conservative end chosen.
    let mut ambiguous = None;
    let mut n_min = first_meet;
    if let Evaluator::Simulation(_) = problem.evaluator {
        let target = problem.objective.target();
        let surely_meets = |p: &CurvePoint| {
            let h = p.half_width.unwrap_or(0.0);
            match problem.objective {
                Objective::ServiceLevel { .. } => p.metric - h >= target,
                Objective::EffectiveAbandonment { .. } => p.metric + h < target,
            }
        };
        let straddles = |p: &CurvePoint| {
            let h = p.half_width.unwrap_or(0.0);
            p.metric - h <= target && target <= p.metric + h
        };
        let mut n_hi = first_meet;
        let mut extra: Vec<CurvePoint> = Vec::new();
        loop {
            let p = match points.iter().chain(&extra).find(|p| p.n == n_hi) {
                Some(p) => *p,
                None => {
                    let p = curve(problem, n_hi, n_hi)?[0];
                    extra.push(p);
                    p
                }
            };
            if surely_meets(&p) || n_hi >= n_max {
                break;
            }
            n_hi += 1;
        }
        points.extend(extra);
        points.sort_by_key(|p| p.n);
        let n_lo = points.iter().filter(|p| p.n <= first_meet && (p.meets || straddles(p))).map(|p| p.n).min();
        let n_lo = n_lo.unwrap_or(first_meet).min(first_meet);
        if n_lo < n_hi {
            ambiguous = Some((n_lo, n_hi));
        }
        n_min = n_hi;
    }

    let spec = problem.spec(n_min)?;
    let mut warnings = Vec::new();
    let svpr = spec.service.scv().sqrt() / (spec.mean_patience() * spec.service_rate());
    if svpr > 0.5 {
        warnings.push(format!("service-variability-to-patience ratio {svpr:.3} exceeds 0.5"));
    }
    if !monotone {
        warnings.push("metric is not monotone in n over the scanned window".into());
    }
    if ambiguous.is_some() {
        warnings.push("target lies inside simulation confidence intervals".into());
    }
    Ok(StaffingResult {
        n_min,
        rho_at_min: load / n_min as f64,
        svpr,
        curve: points,
        ambiguous,
        monotone,
        warnings,
    })
}

/// Writes `n, rho, metric, half_width, meets` rows.
pub fn write_curve_csv<W: Write>(curve: &[CurvePoint], out: W) -> io::Result<W> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "rho", "metric", "half_width", "meets"])?;
    for p in curve {
        w.write_record([
            p.n.to_string(),
            p.rho.to_string(),
            p.metric.to_string(),
            p.half_width.map_or(String::new(), |h| h.to_string()),
            p.meets.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| e.into_error())
}
