//! Scenario files: one JSON document per run, holding exactly one command
//! payload.

use edq::fclt::SuperpositionConfig;
use edq::simulator::{InitialState, ServiceAssignment};
use edq::staffing::StaffingProblem;
use edq::QueueSpec;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Output directory, relative to the working directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approx: Option<ApproxScenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateScenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub staff: Option<StaffScenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fclt: Option<FcltScenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mam: Option<MamScenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareScenario>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Approx,
    Simulate,
    Staff,
    Fclt,
    Mam,
    Compare,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Approx => "approx",
            Command::Simulate => "simulate",
            Command::Staff => "staff",
            Command::Fclt => "fclt",
            Command::Mam => "mam",
            Command::Compare => "compare",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub label: String,
    pub spec: QueueSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproxScenario {
    pub instances: Vec<Instance>,
    /// Scaled thresholds `a` for the virtual-wait and queue-length tails.
    #[serde(default)]
    pub tail_points: Vec<f64>,
    #[serde(default)]
    pub service_level_delays: Vec<f64>,
    #[serde(default)]
    pub effective_abandonment_delays: Vec<f64>,
    /// Use the comparator formulas (`c_a² = c_s² = 1`).
    #[serde(default)]
    pub comparator: bool,
}

fn default_replications() -> usize {
    1
}

fn default_batches() -> usize {
    30
}

/// Run length and output-analysis settings shared by every simulated instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSettings {
    /// Post-warmup arrivals per replication.
    pub customers: f64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_batches")]
    pub batches: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup: Option<f64>,
    #[serde(default)]
    pub assignment: ServiceAssignment,
    #[serde(default)]
    pub initial: InitialState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateScenario {
    pub instances: Vec<Instance>,
    pub settings: SimSettings,
    #[serde(default)]
    pub tail_points: Vec<f64>,
    #[serde(default)]
    pub service_level_delays: Vec<f64>,
    #[serde(default)]
    pub effective_abandonment_delays: Vec<f64>,
    #[serde(default)]
    pub pmf_points: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledProblem {
    pub label: String,
    pub problem: StaffingProblem,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServerRange {
    pub from: u32,
    pub to: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaffScenario {
    pub problems: Vec<LabeledProblem>,
    /// Also evaluate every `n` in this range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<ServerRange>,
}

fn default_correlation_level() -> f64 {
    0.99
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizePoint {
    pub n: u32,
    pub gamma_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FcltScenario {
    pub config: SuperpositionConfig,
    #[serde(default = "default_correlation_level")]
    pub correlation_level: f64,
    /// Grid times at which B̃_n(t) is tested for Gaussianity.
    #[serde(default)]
    pub gaussianity_times: Vec<f64>,
    /// System sizes for the fluid-limit check.
    #[serde(default)]
    pub fslln: Vec<SizePoint>,
    /// Write every scaled path.
    #[serde(default)]
    pub write_paths: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MamScenario {
    pub instances: Vec<Instance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CompareEvaluator {
    Diffusion,
    Zm,
    Simulation(SimSettings),
    Mam,
}

impl CompareEvaluator {
    pub fn name(&self) -> &'static str {
        match self {
            CompareEvaluator::Diffusion => "diffusion",
            CompareEvaluator::Zm => "zm",
            CompareEvaluator::Simulation(_) => "simulation",
            CompareEvaluator::Mam => "mam",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaffingCurve {
    /// The problem's own evaluator is ignored; each compared evaluator is
    /// substituted in turn.
    pub problem: StaffingProblem,
    pub range: ServerRange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareScenario {
    pub evaluators: Vec<CompareEvaluator>,
    #[serde(default)]
    pub instances: Vec<Instance>,
    #[serde(default)]
    pub tail_points: Vec<f64>,
    #[serde(default)]
    pub service_level_delays: Vec<f64>,
    #[serde(default)]
    pub effective_abandonment_delays: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub staffing: Option<StaffingCurve>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

pub fn parse(text: &str) -> Result<ScenarioFile, CliError> {
    serde_json::from_str(text).map_err(|e| invalid(format!("scenario: {e}")))
}

fn check_labels<'a>(labels: impl Iterator<Item = &'a str>) -> Result<(), CliError> {
    let mut seen = std::collections::HashSet::new();
    for l in labels {
        if l.is_empty() || !l.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c)) {
            return Err(invalid(format!("label {l:?} must be non-empty and use only [A-Za-z0-9_.-]")));
        }
        if !seen.insert(l) {
            return Err(invalid(format!("duplicate label {l:?}")));
        }
    }
    Ok(())
}

fn check_instances(instances: &[Instance]) -> Result<(), CliError> {
    if instances.is_empty() {
        return Err(invalid("at least one instance is required"));
    }
    check_labels(instances.iter().map(|i| i.label.as_str()))?;
    for i in instances {
        i.spec.validate().map_err(|e| invalid(format!("{}: {e}", i.label)))?;
    }
    Ok(())
}

fn check_points(name: &str, xs: &[f64], nonnegative: bool) -> Result<(), CliError> {
    for &x in xs {
        if !x.is_finite() || (nonnegative && x < 0.0) {
            return Err(invalid(format!("{name}: bad value {x}")));
        }
    }
    Ok(())
}

fn check_settings(s: &SimSettings) -> Result<(), CliError> {
    if !(s.customers.is_finite() && s.customers >= 1.0) {
        return Err(invalid("settings.customers must be at least 1"));
    }
    if s.replications == 0 {
        return Err(invalid("settings.replications must be positive"));
    }
    if s.batches < 10 {
        return Err(invalid("settings.batches must be at least 10"));
    }
    if let Some(w) = s.warmup {
        if !(w > 0.0 && w.is_finite()) {
            return Err(invalid("settings.warmup must be positive"));
        }
    }
    Ok(())
}

impl ScenarioFile {
    fn present(&self) -> Vec<Command> {
        let mut v = Vec::new();
        if self.approx.is_some() {
            v.push(Command::Approx);
        }
        if self.simulate.is_some() {
            v.push(Command::Simulate);
        }
        if self.staff.is_some() {
            v.push(Command::Staff);
        }
        if self.fclt.is_some() {
            v.push(Command::Fclt);
        }
        if self.mam.is_some() {
            v.push(Command::Mam);
        }
        if self.compare.is_some() {
            v.push(Command::Compare);
        }
        v
    }

    /// Applies the resolved seed to every random component.
    pub fn resolve_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        if let Some(s) = &mut self.staff {
            for p in &mut s.problems {
                if let edq::staffing::Evaluator::Simulation(t) = &mut p.problem.evaluator {
                    t.seed = seed;
                }
            }
        }
        if let Some(f) = &mut self.fclt {
            f.config.seed = seed;
        }
    }

    pub fn validate(&self, command: Command) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(format!(
                "schema_version {} not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let present = self.present();
        if present != [command] {
            let names: Vec<&str> = present.iter().map(|c| c.name()).collect();
            return Err(invalid(format!(
                "`{}` needs exactly one `{}` payload, found [{}]",
                command.name(),
                command.name(),
                names.join(", ")
            )));
        }
        if let Some(a) = &self.approx {
            check_instances(&a.instances)?;
            check_points("tail_points", &a.tail_points, false)?;
            check_points("service_level_delays", &a.service_level_delays, true)?;
            check_points("effective_abandonment_delays", &a.effective_abandonment_delays, true)?;
        }
        if let Some(s) = &self.simulate {
            check_instances(&s.instances)?;
            check_settings(&s.settings)?;
            check_points("tail_points", &s.tail_points, false)?;
            check_points("service_level_delays", &s.service_level_delays, true)?;
            check_points("effective_abandonment_delays", &s.effective_abandonment_delays, true)?;
        }
        if let Some(s) = &self.staff {
            if s.problems.is_empty() {
                return Err(invalid("at least one problem is required"));
            }
            check_labels(s.problems.iter().map(|p| p.label.as_str()))?;
            for p in &s.problems {
                p.problem.validate().map_err(|e| invalid(format!("{}: {e}", p.label)))?;
            }
            if let Some(r) = s.curve {
                if r.from == 0 || r.from > r.to {
                    return Err(invalid("curve range must satisfy 1 <= from <= to"));
                }
            }
        }
        if let Some(f) = &self.fclt {
            f.config.validate().map_err(|e| invalid(e.to_string()))?;
            if !(f.correlation_level > 0.0 && f.correlation_level < 1.0) {
                return Err(invalid("correlation_level must lie in (0, 1)"));
            }
            for t in &f.gaussianity_times {
                if !f.config.grid.contains(t) {
                    return Err(invalid(format!("gaussianity time {t} is not a grid point")));
                }
            }
            for p in &f.fslln {
                if p.n == 0 || !(p.gamma_n > 0.0) {
                    return Err(invalid("fslln sizes need n >= 1 and gamma_n > 0"));
                }
            }
        }
        if let Some(m) = &self.mam {
            check_instances(&m.instances)?;
        }
        if let Some(c) = &self.compare {
            if c.evaluators.len() < 2 {
                return Err(invalid("compare needs at least two evaluators"));
            }
            for e in &c.evaluators {
                if let CompareEvaluator::Simulation(s) = e {
                    check_settings(s)?;
                }
            }
            match (&c.staffing, c.instances.is_empty()) {
                (Some(curve), true) => {
                    curve.problem.validate().map_err(|e| invalid(e.to_string()))?;
                    if curve.range.from == 0 || curve.range.from > curve.range.to {
                        return Err(invalid("staffing range must satisfy 1 <= from <= to"));
                    }
                    if c.evaluators.iter().any(|e| matches!(e, CompareEvaluator::Mam)) {
                        return Err(invalid("the mam evaluator has no staffing metric"));
                    }
                }
                (None, false) => {
                    check_instances(&c.instances)?;
                    check_points("tail_points", &c.tail_points, false)?;
                    check_points("service_level_delays", &c.service_level_delays, true)?;
                    check_points("effective_abandonment_delays", &c.effective_abandonment_delays, true)?;
                }
                _ => return Err(invalid("compare needs either instances or a staffing curve, not both")),
            }
        }
        Ok(())
    }
}
