//! One function per subcommand. Each turns a validated scenario into a set
//! of output files.

use crate::error::{computation, CliError};
use crate::output::{num, opt, Outputs, Provenance, Table};
use crate::scenario::{
    ApproxScenario, CompareEvaluator, CompareScenario, FcltScenario, Instance, MamScenario, ScenarioFile, SimSettings,
    SimulateScenario, StaffScenario, StaffingCurve,
};
use edq::diffusion::{self, DiffusionError, DiffusionSummary};
use edq::distributions::Kind;
use edq::fclt;
use edq::mam::{self, CtmcSolution, MamError};
use edq::simulator::{self, InitialState, SimConfig, SimError, SimResult};
use edq::staffing::{self, Evaluator, SimTemplate, StaffingError, StaffingProblem};
use edq::QueueSpec;
use serde::Serialize;
use std::collections::BTreeMap;

type Result<T> = std::result::Result<T, CliError>;

fn diffusion_error(label: &str, e: DiffusionError) -> CliError {
    match e {
        DiffusionError::InvalidSpec(_) | DiffusionError::Distribution(_) => CliError::Validation(format!("{label}: {e}")),
        _ => CliError::Computation(format!("{label}: {e}")),
    }
}

fn sim_error(label: &str, e: SimError) -> CliError {
    CliError::Validation(format!("{label}: {e}"))
}

fn mam_error(label: &str, e: MamError) -> CliError {
    match e {
        MamError::InvalidInput(_) => CliError::Validation(format!("{label}: {e}")),
        _ => CliError::Computation(format!("{label}: {e}")),
    }
}

fn staffing_error(label: &str, e: StaffingError) -> CliError {
    match e {
        StaffingError::InvalidProblem(_) => CliError::Validation(format!("{label}: {e}")),
        _ => CliError::Computation(format!("{label}: {e}")),
    }
}

/// A performance measure, optionally at a threshold or delay.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
struct Key {
    measure: &'static str,
    at: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Value {
    value: f64,
    half_width: Option<f64>,
}

struct Points<'a> {
    tails: &'a [f64],
    service_levels: &'a [f64],
    effective_abandonment: &'a [f64],
}

impl Points<'_> {
    fn keys(&self) -> Vec<Key> {
        let mut keys: Vec<Key> = ["abandonment_fraction", "wait_mean", "wait_variance", "queue_mean", "queue_variance"]
            .into_iter()
            .map(|m| Key { measure: m, at: None })
            .collect();
        for (name, xs) in [
            ("wait_tail", self.tails),
            ("queue_tail", self.tails),
            ("service_level", self.service_levels),
            ("effective_abandonment", self.effective_abandonment),
        ] {
            keys.extend(xs.iter().map(|&a| Key { measure: name, at: Some(a) }));
        }
        keys
    }
}

fn exact(value: f64) -> Value {
    Value { value, half_width: None }
}

fn formula_values(spec: &QueueSpec, s: &DiffusionSummary, p: &Points) -> std::result::Result<Vec<(Key, Value)>, DiffusionError> {
    let mut out = vec![
        (Key { measure: "abandonment_fraction", at: None }, exact(s.alpha)),
        (Key { measure: "wait_mean", at: None }, exact(s.w)),
        (Key { measure: "wait_variance", at: None }, exact(s.sigma_w_sq)),
        (Key { measure: "queue_mean", at: None }, exact(s.q)),
        (Key { measure: "queue_variance", at: None }, exact(s.sigma_x_sq)),
    ];
    for &a in p.tails {
        out.push((Key { measure: "wait_tail", at: Some(a) }, exact(diffusion::virtual_wait_tail(s, a))));
    }
    for &a in p.tails {
        out.push((Key { measure: "queue_tail", at: Some(a) }, exact(diffusion::queue_tail(s, a))));
    }
    for &d in p.service_levels {
        out.push((Key { measure: "service_level", at: Some(d) }, exact(diffusion::service_level_from(spec, s, d)?)));
    }
    for &d in p.effective_abandonment {
        let v = diffusion::effective_abandonment_from(spec, s, d)?;
        out.push((Key { measure: "effective_abandonment", at: Some(d) }, exact(v)));
    }
    Ok(out)
}

fn simulated_values(r: &SimResult) -> Vec<(Key, Value)> {
    let est = |e: edq::stats::Estimate| Value { value: e.value, half_width: Some(e.half_width) };
    let mut out = vec![
        (Key { measure: "abandonment_fraction", at: None }, est(r.abandonment_fraction)),
        (Key { measure: "wait_mean", at: None }, est(r.wait_mean)),
        (Key { measure: "wait_variance", at: None }, est(r.wait_variance)),
        (Key { measure: "queue_mean", at: None }, est(r.queue_mean)),
        (Key { measure: "queue_variance", at: None }, est(r.queue_variance)),
        (Key { measure: "in_system_mean", at: None }, est(r.in_system_mean)),
        (Key { measure: "in_system_variance", at: None }, est(r.in_system_variance)),
    ];
    for (name, pts) in [
        ("wait_tail", &r.wait_tails),
        ("queue_tail", &r.queue_tails),
        ("service_level", &r.service_levels),
        ("effective_abandonment", &r.effective_abandonment),
        ("pmf", &r.pmf),
    ] {
        out.extend(pts.iter().map(|p| (Key { measure: name, at: Some(p.at) }, est(p.estimate))));
    }
    out
}

fn mam_values(spec: &QueueSpec, sol: &CtmcSolution, summary: Option<&DiffusionSummary>, tails: &[f64]) -> Vec<(Key, Value)> {
    let n = spec.servers as usize;
    let q_mean = sol.queue_mean();
    let q_var: f64 = sol.marginal.iter().enumerate().map(|(i, p)| (i.saturating_sub(n) as f64 - q_mean).powi(2) * p).sum();
    let theta = 1.0 / spec.mean_patience();
    let mut out = vec![
        (Key { measure: "abandonment_fraction", at: None }, exact(theta * q_mean / spec.arrival_rate)),
        (Key { measure: "queue_mean", at: None }, exact(q_mean)),
        (Key { measure: "queue_variance", at: None }, exact(q_var)),
    ];
    if let Some(s) = summary {
        for &a in tails {
            let level = s.servers as f64 + s.q + a * (s.servers as f64 * s.gamma).sqrt();
            let tail: f64 = sol.marginal.iter().enumerate().filter(|(i, _)| *i as f64 > level).map(|(_, p)| p).sum();
            out.push((Key { measure: "queue_tail", at: Some(a) }, exact(tail)));
        }
    }
    out
}

fn sim_config(spec: &QueueSpec, settings: &SimSettings, seed: u64) -> SimConfig {
    let mut cfg = SimConfig::for_spec(spec.clone(), settings.customers);
    if let Some(w) = settings.warmup {
        cfg.horizon += w - cfg.warmup;
        cfg.warmup = w;
    }
    cfg.replications = settings.replications;
    cfg.batches = settings.batches;
    cfg.seed = seed;
    cfg.assignment = settings.assignment;
    cfg.initial = settings.initial;
    cfg
}

fn tag(prefix: &str, x: f64) -> String {
    format!("{prefix}_{x}")
}

// ---------------------------------------------------------------- approx

#[derive(Serialize)]
struct ApproxRecord<'a> {
    label: &'a str,
    summary: DiffusionSummary,
}

pub fn approx(sc: &ApproxScenario, prov: &Provenance) -> Result<Outputs> {
    let points = Points {
        tails: &sc.tail_points,
        service_levels: &sc.service_level_delays,
        effective_abandonment: &sc.effective_abandonment_delays,
    };
    let mut header: Vec<String> = [
        "label",
        "servers",
        "arrival_rate",
        "rho",
        "abandonment_fraction",
        "wait_mean",
        "wait_variance",
        "queue_mean",
        "queue_variance",
        "ou_drift_rate",
        "sigma_hat_w_sq",
        "sigma_hat_x_sq",
        "sigma_hat_g_sq",
        "svpr",
        "svpr_warning",
    ]
    .map(String::from)
    .to_vec();
    header.extend(sc.tail_points.iter().map(|&a| tag("wait_tail", a)));
    header.extend(sc.tail_points.iter().map(|&a| tag("queue_tail", a)));
    header.extend(sc.service_level_delays.iter().map(|&d| tag("service_level", d)));
    header.extend(sc.effective_abandonment_delays.iter().map(|&d| tag("effective_abandonment", d)));
    let mut table = Table::new(header);
    let mut records = Vec::new();
    for Instance { label, spec } in &sc.instances {
        let s = if sc.comparator { diffusion::zm_summarize(spec) } else { diffusion::summarize(spec) }
            .map_err(|e| diffusion_error(label, e))?;
        let values = formula_values(spec, &s, &points).map_err(|e| diffusion_error(label, e))?;
        let mut row = vec![
            label.clone(),
            spec.servers.to_string(),
            num(spec.arrival_rate),
            num(s.rho),
            num(s.alpha),
            num(s.w),
            num(s.sigma_w_sq),
            num(s.q),
            num(s.sigma_x_sq),
            num(s.ou_drift_rate),
            num(s.sigma_hat_w_sq),
            num(s.sigma_hat_x_sq),
            num(s.sigma_hat_g_sq),
            num(s.svpr),
            s.svpr_warning.to_string(),
        ];
        row.extend(values[5..].iter().map(|(_, v)| num(v.value)));
        table.row(row);
        records.push(ApproxRecord { label, summary: s });
    }
    let mut out = Outputs::default();
    out.csv("approx.csv", table);
    out.json("approx.json", prov, &records);
    Ok(out)
}

// ---------------------------------------------------------------- simulate

#[derive(Serialize)]
struct SimRecord<'a> {
    label: &'a str,
    config: SimConfig,
    result: SimResult,
}

pub fn simulate(sc: &SimulateScenario, prov: &Provenance) -> Result<Outputs> {
    let points = Points {
        tails: &sc.tail_points,
        service_levels: &sc.service_level_delays,
        effective_abandonment: &sc.effective_abandonment_delays,
    };
    let mut table = Table::new(["label", "measure", "at", "value", "half_width", "approximation"]);
    let mut records = Vec::new();
    for Instance { label, spec } in &sc.instances {
        let mut cfg = sim_config(spec, &sc.settings, prov.seed);
        cfg.tail_thresholds_w = sc.tail_points.clone();
        cfg.tail_thresholds_x = sc.tail_points.clone();
        cfg.service_level_delays = sc.service_level_delays.clone();
        cfg.effective_abd_delays = sc.effective_abandonment_delays.clone();
        cfg.pmf_points = sc.pmf_points.clone();
        cfg.validate().map_err(|e| sim_error(label, e))?;
        log::info!("simulating {label}");
        let r = simulator::run(&cfg).map_err(|e| sim_error(label, e))?;
        let approx: Vec<(Key, Value)> = diffusion::summarize(spec)
            .ok()
            .and_then(|s| formula_values(spec, &s, &points).ok())
            .unwrap_or_default();
        for (k, v) in simulated_values(&r) {
            let a = approx.iter().find(|(ak, _)| *ak == k).map(|(_, v)| v.value);
            table.row(vec![label.clone(), k.measure.into(), opt(k.at), num(v.value), opt(v.half_width), opt(a)]);
        }
        records.push(SimRecord { label, config: cfg, result: r });
    }
    let mut out = Outputs::default();
    out.csv("simulate.csv", table);
    out.json("simulate.json", prov, &records);
    Ok(out)
}

// ---------------------------------------------------------------- staff

#[derive(Serialize)]
struct StaffRecord<'a> {
    label: &'a str,
    result: staffing::StaffingResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    curve: Option<Vec<staffing::CurvePoint>>,
}

fn evaluator_name(e: &Evaluator) -> &'static str {
    match e {
        Evaluator::Diffusion => "diffusion",
        Evaluator::Zm => "zm",
        Evaluator::Simulation(_) => "simulation",
    }
}

fn curve_row(label: &str, p: &staffing::CurvePoint) -> Vec<String> {
    vec![label.into(), p.n.to_string(), num(p.rho), num(p.metric), opt(p.half_width), p.meets.to_string()]
}

pub fn staff(sc: &StaffScenario, prov: &Provenance) -> Result<Outputs> {
    let mut summary = Table::new([
        "label",
        "evaluator",
        "n_min",
        "rho",
        "svpr",
        "ambiguous_lo",
        "ambiguous_hi",
        "monotone",
        "warnings",
    ]);
    let curve_header = ["label", "n", "rho", "metric", "half_width", "meets"];
    let mut searched = Table::new(curve_header);
    let mut ranged = Table::new(curve_header);
    let mut records = Vec::new();
    for p in &sc.problems {
        log::info!("staffing {}", p.label);
        let r = staffing::min_servers(&p.problem).map_err(|e| staffing_error(&p.label, e))?;
        summary.row(vec![
            p.label.clone(),
            evaluator_name(&p.problem.evaluator).into(),
            r.n_min.to_string(),
            num(r.rho_at_min),
            num(r.svpr),
            r.ambiguous.map_or(String::new(), |a| a.0.to_string()),
            r.ambiguous.map_or(String::new(), |a| a.1.to_string()),
            r.monotone.to_string(),
            r.warnings.join("; "),
        ]);
        for c in &r.curve {
            searched.row(curve_row(&p.label, c));
        }
        let curve = match sc.curve {
            Some(range) => {
                let c = staffing::curve(&p.problem, range.from, range.to).map_err(|e| staffing_error(&p.label, e))?;
                for point in &c {
                    ranged.row(curve_row(&p.label, point));
                }
                Some(c)
            }
            None => None,
        };
        records.push(StaffRecord { label: &p.label, result: r, curve });
    }
    let mut out = Outputs::default();
    out.csv("staff.csv", summary);
    out.csv("search.csv", searched);
    if sc.curve.is_some() {
        out.csv("curve.csv", ranged);
    }
    out.json("staff.json", prov, &records);
    Ok(out)
}

// ---------------------------------------------------------------- fclt

#[derive(Serialize)]
struct FcltRecord {
    variance: fclt::VarianceProfile,
    mean: Vec<fclt::ReportRow>,
    independence: fclt::IndependenceReport,
    gaussianity: Vec<(f64, Option<edq::stats::KsResult>)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fslln: Option<fclt::FsllnReport>,
}

fn in_memory<F>(f: F) -> Result<Vec<u8>>
where
    F: FnOnce(Vec<u8>) -> std::io::Result<Vec<u8>>,
{
    Ok(f(Vec::new())?)
}

pub fn fclt(sc: &FcltScenario, prov: &Provenance) -> Result<Outputs> {
    let ens = fclt::generate(&sc.config).map_err(computation)?;
    let variance = fclt::variance_profile(&ens);
    let mean = fclt::mean_profile(&ens);
    let independence = fclt::increment_independence(&ens, sc.correlation_level);
    let gaussianity: Vec<_> = sc.gaussianity_times.iter().map(|&t| (t, fclt::gaussianity(&ens, t))).collect();
    let fslln = if sc.fslln.is_empty() {
        None
    } else {
        let sizes: Vec<(u32, f64)> = sc.fslln.iter().map(|p| (p.n, p.gamma_n)).collect();
        Some(fclt::fslln_check(&sc.config, &sizes).map_err(computation)?)
    };

    let mut out = Outputs::default();
    out.files.push(crate::output::Artifact {
        name: "fclt_variance.csv".into(),
        bytes: in_memory(|w| fclt::write_report_csv(&variance.points, w))?,
    });
    out.files.push(crate::output::Artifact {
        name: "fclt_mean.csv".into(),
        bytes: in_memory(|w| fclt::write_report_csv(&mean, w))?,
    });
    out.files.push(crate::output::Artifact {
        name: "fclt_correlations.csv".into(),
        bytes: in_memory(|w| fclt::write_correlations_csv(&independence, w))?,
    });
    let mut ks = Table::new(["t", "statistic", "p_value"]);
    for (t, r) in &gaussianity {
        ks.row(vec![num(*t), opt(r.map(|k| k.statistic)), opt(r.map(|k| k.p_value))]);
    }
    out.csv("fclt_gaussianity.csv", ks);
    if let Some(f) = &fslln {
        let mut t = Table::new(["n", "gamma_n", "mean_sup_deviation", "scaled"]);
        for p in &f.points {
            t.row(vec![p.n.to_string(), num(p.gamma_n), num(p.mean_sup_deviation), num(p.scaled)]);
        }
        out.csv("fclt_fslln.csv", t);
    }
    if sc.write_paths {
        out.files.push(crate::output::Artifact {
            name: "fclt_paths.csv".into(),
            bytes: in_memory(|w| fclt::write_ensemble_csv(&ens, w))?,
        });
    }
    out.json("fclt.json", prov, &FcltRecord { variance, mean, independence, gaussianity, fslln });
    Ok(out)
}

// ---------------------------------------------------------------- mam

#[derive(Serialize)]
struct MamRecord<'a> {
    label: &'a str,
    truncation: usize,
    residual: f64,
    cut_balance_error: f64,
    tail_mass: f64,
    phase_balance_error: f64,
    phase_occupancy: Vec<f64>,
    mean: f64,
    variance: f64,
    queue_mean: f64,
    tv_distance: Option<f64>,
    max_pmf_gap: Option<f64>,
}

pub fn mam(sc: &MamScenario, prov: &Provenance) -> Result<Outputs> {
    let mut summary = Table::new([
        "label",
        "truncation",
        "residual",
        "cut_balance_error",
        "tail_mass",
        "phase_balance_error",
        "mean",
        "variance",
        "queue_mean",
        "tv_distance",
        "max_pmf_gap",
    ]);
    let mut pmfs = Vec::new();
    let mut records = Vec::new();
    for Instance { label, spec } in &sc.instances {
        log::info!("solving {label}");
        let sol = mam::solve_spec(spec).map_err(|e| mam_error(label, e))?;
        let s = diffusion::summarize(spec).ok();
        let tv = s.as_ref().map(|s| mam::tv_distance(&sol, s));
        let gap = s.as_ref().map(|s| mam::max_pmf_gap(&sol, s));
        summary.row(vec![
            label.clone(),
            sol.truncation.to_string(),
            num(sol.residual),
            num(sol.cut_balance_error),
            num(sol.tail_mass),
            num(sol.phase_balance_error),
            num(sol.mean()),
            num(sol.variance()),
            num(sol.queue_mean()),
            opt(tv),
            opt(gap),
        ]);
        let mut pmf = Table::new(["i", "probability", "gaussian_probability"]);
        for (i, p) in sol.marginal.iter().enumerate() {
            let g = s.as_ref().map(|s| diffusion::queue_pmf(s, i as u64));
            pmf.row(vec![i.to_string(), num(*p), opt(g)]);
        }
        pmfs.push((format!("mam_{label}.csv"), pmf));
        records.push(MamRecord {
            label,
            truncation: sol.truncation,
            residual: sol.residual,
            cut_balance_error: sol.cut_balance_error,
            tail_mass: sol.tail_mass,
            phase_balance_error: sol.phase_balance_error,
            phase_occupancy: sol.phase_occupancy.clone(),
            mean: sol.mean(),
            variance: sol.variance(),
            queue_mean: sol.queue_mean(),
            tv_distance: tv,
            max_pmf_gap: gap,
        });
    }
    let mut out = Outputs::default();
    out.csv("mam.csv", summary);
    for (name, t) in pmfs {
        out.csv(name, t);
    }
    out.json("mam.json", prov, &records);
    Ok(out)
}

// ---------------------------------------------------------------- compare

fn column_names(evaluators: &[CompareEvaluator]) -> Vec<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    evaluators
        .iter()
        .map(|e| {
            let c = counts.entry(e.name()).or_insert(0);
            *c += 1;
            if *c == 1 {
                e.name().to_string()
            } else {
                format!("{}_{}", e.name(), c)
            }
        })
        .collect()
}

fn compare_header(lead: &[&str], names: &[String]) -> Vec<String> {
    let mut h: Vec<String> = lead.iter().map(|s| s.to_string()).collect();
    h.extend(["svpr".to_string(), "svpr_warning".to_string()]);
    for (k, name) in names.iter().enumerate() {
        h.push(name.clone());
        h.push(format!("{name}_half_width"));
        if k > 0 {
            h.push(format!("{name}_abs_gap"));
            h.push(format!("{name}_rel_gap"));
        }
    }
    h
}

fn compare_cells(values: &[Option<Value>]) -> Vec<String> {
    let mut cells = Vec::new();
    let reference = values[0].map(|v| v.value);
    for (k, v) in values.iter().enumerate() {
        cells.push(opt(v.map(|v| v.value)));
        cells.push(opt(v.and_then(|v| v.half_width)));
        if k > 0 {
            let gap = match (reference, v) {
                (Some(r), Some(v)) => Some(v.value - r),
                _ => None,
            };
            let rel = match (reference, gap) {
                (Some(r), Some(g)) if r != 0.0 => Some(g / r.abs()),
                (Some(_), Some(g)) if g == 0.0 => Some(0.0),
                _ => None,
            };
            cells.push(opt(gap.map(f64::abs)));
            cells.push(opt(rel.map(f64::abs)));
        }
    }
    cells
}

fn svpr_cells(spec: &QueueSpec) -> Vec<String> {
    match diffusion::summarize(spec) {
        Ok(s) => vec![num(s.svpr), s.svpr_warning.to_string()],
        Err(_) => vec![String::new(), String::new()],
    }
}

pub fn compare(sc: &CompareScenario, prov: &Provenance) -> Result<Outputs> {
    let names = column_names(&sc.evaluators);
    let mut out = Outputs::default();
    match &sc.staffing {
        Some(curve) => out.csv("compare.csv", compare_staffing(curve, &sc.evaluators, &names, prov.seed)?),
        None => out.csv("compare.csv", compare_performance(sc, &names, prov.seed)?),
    }
    Ok(out)
}

fn compare_performance(sc: &CompareScenario, names: &[String], seed: u64) -> Result<Table> {
    let points = Points {
        tails: &sc.tail_points,
        service_levels: &sc.service_level_delays,
        effective_abandonment: &sc.effective_abandonment_delays,
    };
    let keys = points.keys();
    let mut table = Table::new(compare_header(&["label", "measure", "at"], names));
    for Instance { label, spec } in &sc.instances {
        let mut per_eval: Vec<Vec<(Key, Value)>> = Vec::new();
        for e in &sc.evaluators {
            let values = match e {
                CompareEvaluator::Diffusion | CompareEvaluator::Zm => {
                    let s = if matches!(e, CompareEvaluator::Zm) {
                        diffusion::zm_summarize(spec)
                    } else {
                        diffusion::summarize(spec)
                    }
                    .map_err(|err| diffusion_error(label, err))?;
                    formula_values(spec, &s, &points).map_err(|err| diffusion_error(label, err))?
                }
                CompareEvaluator::Simulation(settings) => {
                    let mut cfg = sim_config(spec, settings, seed);
                    cfg.tail_thresholds_w = sc.tail_points.clone();
                    cfg.tail_thresholds_x = sc.tail_points.clone();
                    cfg.service_level_delays = sc.service_level_delays.clone();
                    cfg.effective_abd_delays = sc.effective_abandonment_delays.clone();
                    log::info!("simulating {label}");
                    simulated_values(&simulator::run(&cfg).map_err(|err| sim_error(label, err))?)
                }
                CompareEvaluator::Mam => {
                    let sol = mam::solve_spec(spec).map_err(|err| mam_error(label, err))?;
                    let s = diffusion::summarize(spec).ok();
                    mam_values(spec, &sol, s.as_ref(), &sc.tail_points)
                }
            };
            per_eval.push(values);
        }
        for key in &keys {
            let values: Vec<Option<Value>> =
                per_eval.iter().map(|vs| vs.iter().find(|(k, _)| k == key).map(|(_, v)| *v)).collect();
            let mut row = vec![label.clone(), key.measure.to_string(), opt(key.at)];
            row.extend(svpr_cells(spec));
            row.extend(compare_cells(&values));
            table.row(row);
        }
    }
    Ok(table)
}

fn compare_staffing(curve: &StaffingCurve, evaluators: &[CompareEvaluator], names: &[String], seed: u64) -> Result<Table> {
    let mut columns = Vec::new();
    for e in evaluators {
        let evaluator = match e {
            CompareEvaluator::Diffusion => Evaluator::Diffusion,
            CompareEvaluator::Zm => Evaluator::Zm,
            CompareEvaluator::Simulation(s) => {
                if s.initial != InitialState::default() {
                    return Err(CliError::Validation("staffing simulations start from the default initial state".into()));
                }
                Evaluator::Simulation(SimTemplate {
                    customers: s.customers,
                    replications: s.replications,
                    batches: s.batches,
                    seed,
                    warmup: s.warmup,
                    assignment: s.assignment,
                })
            }
            CompareEvaluator::Mam => unreachable!("rejected during validation"),
        };
        let problem = StaffingProblem { evaluator, ..curve.problem.clone() };
        log::info!("evaluating {} curve", e.name());
        let points =
            staffing::curve(&problem, curve.range.from, curve.range.to).map_err(|err| staffing_error(e.name(), err))?;
        columns.push(points);
    }
    let objective = &curve.problem.objective;
    let measure = match objective {
        staffing::Objective::ServiceLevel { .. } => "service_level",
        staffing::Objective::EffectiveAbandonment { .. } => "effective_abandonment",
    };
    let mut table = Table::new(compare_header(&["n", "rho", "measure", "at"], names));
    for (i, p) in columns[0].iter().enumerate() {
        let spec = curve.problem.spec(p.n).map_err(|e| staffing_error("staffing", e))?;
        let values: Vec<Option<Value>> =
            columns.iter().map(|c| Some(Value { value: c[i].metric, half_width: c[i].half_width })).collect();
        let mut row = vec![p.n.to_string(), num(p.rho), measure.into(), num(objective.delay())];
        row.extend(svpr_cells(&spec));
        row.extend(compare_cells(&values));
        table.row(row);
    }
    Ok(table)
}

/// Rejects instances the exact solver cannot take before any work starts.
pub fn check_mam_instances(instances: &[Instance]) -> Result<()> {
    for Instance { label, spec } in instances {
        if !matches!(spec.patience.kind(), Kind::Exponential { .. }) || spec.interarrival_scv != 1.0 {
            return Err(CliError::Validation(format!("{label}: the exact solver needs Poisson arrivals and exponential patience")));
        }
        mam::PhService::from_distribution(&spec.service).map_err(|e| mam_error(label, e))?;
    }
    Ok(())
}

pub fn run(command: crate::scenario::Command, sc: &ScenarioFile, prov: &Provenance) -> Result<Outputs> {
    use crate::scenario::Command::*;
    match command {
        Approx => approx(sc.approx.as_ref().expect("validated"), prov),
        Simulate => simulate(sc.simulate.as_ref().expect("validated"), prov),
        Staff => staff(sc.staff.as_ref().expect("validated"), prov),
        Fclt => fclt(sc.fclt.as_ref().expect("validated"), prov),
        Mam => {
            let m = sc.mam.as_ref().expect("validated");
            check_mam_instances(&m.instances)?;
            mam(m, prov)
        }
        Compare => {
            let c = sc.compare.as_ref().expect("validated");
            if c.evaluators.iter().any(|e| matches!(e, CompareEvaluator::Mam)) {
                check_mam_instances(&c.instances)?;
            }
            compare(c, prov)
        }
    }
}
