//! Property suites shared by the per-module integration tests and the
//! acceptance target. Each suite runs a fixed-seed proptest runner and
//! returns the first counterexample as an error string.

use super::ErlangA;
use edq::diffusion::{self, QueueSpec};
use edq::distributions::Distribution;
use edq::fclt::{self, SuperpositionConfig};
use edq::mam::{self, PhService};
use edq::rng::StreamKey;
use edq::simulator::{event_log, run, virtual_waits, Outcome, SimConfig};
use edq::special::adaptive_simpson;
use edq::staffing::{self, Evaluator, Objective, StaffingProblem};
use edq::stats::{self, Estimate};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

pub type SuiteResult = Result<(), String>;

fn check<S>(name: &str, cases: u32, seed: u8, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> SuiteResult
where
    S: Strategy,
    S::Value: std::fmt::Debug,
{
    let config = Config { cases, failure_persistence: None, max_shrink_iters: 32, ..Config::default() };
    let mut runner = TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]));
    runner.run(&strategy, test).map_err(|e| format!("{name}: {e}"))
}

pub fn arb_distribution() -> impl Strategy<Value = Distribution> {
    prop_oneof![
        arb_continuous(),
        (0.2f64..3.0).prop_map(|m| Distribution::deterministic(m).unwrap()),
    ]
}

pub fn arb_continuous() -> impl Strategy<Value = Distribution> {
    prop_oneof![
        (0.2f64..3.0).prop_map(|m| Distribution::exponential_mean(m).unwrap()),
        (1u32..4, 0.2f64..3.0).prop_map(|(k, m)| Distribution::erlang_mean(k, m).unwrap()),
        (0.2f64..3.0, 0.1f64..4.0).prop_map(|(m, c)| Distribution::lognormal(m, c).unwrap()),
        (0.05f64..0.95, 0.1f64..1.0, 1.0f64..5.0)
            .prop_map(|(p, a, b)| Distribution::hyperexponential_means(&[(p, a), (1.0 - p, b)]).unwrap()),
    ]
}

fn arb_with_equilibrium() -> impl Strategy<Value = Distribution> {
    prop_oneof![
        3 => arb_distribution(),
        1 => arb_distribution().prop_map(|d| d.equilibrium().unwrap()),
    ]
}

fn upper_support(d: &Distribution) -> f64 {
    d.quantile(1.0 - 1e-9).unwrap()
}

// ---------------------------------------------------------------- distributions

pub fn cdf_shape() -> SuiteResult {
    check("cdf shape", 64, 1, arb_with_equilibrium(), |d| {
        prop_assert_eq!(d.cdf(-1.0), 0.0);
        prop_assert_eq!(d.cdf(-1e-300), 0.0);
        let top = 1.5 * upper_support(&d);
        let mut prev = 0.0;
        for i in 0..=1000 {
            let x = top * i as f64 / 1000.0;
            let f = d.cdf(x);
            prop_assert!((0.0..=1.0).contains(&f));
            prop_assert!(f >= prev, "decrease at {}", x);
            let right = d.cdf(x + 1e-10 * x.max(1.0));
            prop_assert!(right - f < 1e-6, "jump to the right of {}: {} -> {}", x, f, right);
            prev = f;
        }
        prop_assert!(d.cdf(1e3 * top) > 1.0 - 1e-9);
        Ok(())
    })
}

pub fn quantile_cdf_galois() -> SuiteResult {
    check("quantile/cdf", 64, 2, arb_with_equilibrium(), |d| {
        for i in 0..200 {
            let p = i as f64 / 200.0;
            let x = d.quantile(p).unwrap();
            prop_assert!(d.cdf(x) >= p - 1e-12, "cdf(quantile({})) = {}", p, d.cdf(x));
        }
        if d.is_absolutely_continuous() {
            // Farther out, rounding of p alone moves x by ulp(p) / pdf(x).
            let top = d.quantile(0.999).unwrap();
            for i in 1..200 {
                let x = top * i as f64 / 200.0;
                let q = d.quantile(d.cdf(x)).unwrap();
                prop_assert!(q <= x * (1.0 + 1e-9), "quantile(cdf({})) = {}", x, q);
            }
        }
        prop_assert!(d.quantile(1.0).is_err());
        Ok(())
    })
}

pub fn pdf_integrates_to_cdf() -> SuiteResult {
    check("pdf integrates to cdf", 48, 3, arb_with_equilibrium(), |d| {
        if !d.is_absolutely_continuous() {
            prop_assert!(d.pdf(1.0).is_err());
            return Ok(());
        }
        for p in [0.05, 0.3, 0.6, 0.9, 0.999] {
            let x = d.quantile(p).unwrap();
            let q = adaptive_simpson(|u| d.pdf(u).unwrap(), 0.0, x, 1e-10);
            prop_assert!((q.value - d.cdf(x)).abs() < 1e-6, "at {}: {} vs {}", x, q.value, d.cdf(x));
        }
        Ok(())
    })
}

pub fn equilibrium_identities() -> SuiteResult {
    check("equilibrium", 64, 4, (0.05f64..20.0, arb_distribution()), |(rate, d)| {
        let e = Distribution::exponential(rate).unwrap();
        let eq = Distribution::exponential(rate).unwrap().equilibrium().unwrap();
        for i in 0..=200 {
            let x = i as f64 * 10.0 / (200.0 * rate);
            prop_assert!((e.cdf(x) - eq.cdf(x)).abs() < 1e-12);
        }
        let m = d.moments();
        prop_assert!(m.third_moment.is_some());
        let expect = (1.0 + m.scv) * m.mean / 2.0;
        let got = d.equilibrium().unwrap().mean();
        prop_assert!((got - expect).abs() <= 1e-9 * expect, "{} vs {}", got, expect);
        Ok(())
    })
}

pub fn sampling_ks() -> SuiteResult {
    check("sampling KS", 16, 5, (arb_with_equilibrium(), any::<u64>()), |(d, seed)| {
        let mut rng = StreamKey::new(seed).rng();
        let xs: Vec<f64> = (0..100_000).map(|_| d.sample(&mut rng)).collect();
        if !d.is_absolutely_continuous() {
            // A point mass: every draw must sit on the atom.
            let atom = d.quantile(0.5).unwrap();
            prop_assert!(xs.iter().all(|&x| x == atom));
            return Ok(());
        }
        let ks = stats::ks_one_sample(&xs, |x| d.cdf(x));
        prop_assert!(ks.p_value > 0.001, "{:?}", ks);
        Ok(())
    })
}

// ---------------------------------------------------------------- diffusion

fn arb_spec() -> impl Strategy<Value = QueueSpec> {
    (10u32..400, 1.05f64..2.0, 0.0f64..3.0, arb_distribution(), arb_continuous()).prop_map(
        |(n, rho, ca2, service, patience)| {
            let lambda = rho * n as f64 / service.mean();
            QueueSpec::new(lambda, ca2, n, service, patience).unwrap()
        },
    )
}

pub fn service_level_shape() -> SuiteResult {
    check("service level monotone and bounded", 32, 6, arb_spec(), |spec| {
        let cap = spec.patience.quantile(1.0 - 1e-9).unwrap();
        let s = diffusion::summarize(&spec).unwrap();
        let top = diffusion::service_level_from(&spec, &s, cap).unwrap();
        let mut prev = 0.0;
        for i in 0..=30 {
            let d = cap * i as f64 / 30.0;
            let v = diffusion::service_level_from(&spec, &s, d).unwrap();
            prop_assert!(v >= prev - 1e-9, "decrease at {}: {} < {}", d, v, prev);
            prop_assert!(v <= top + 1e-9);
            prev = v;
        }
        Ok(())
    })
}

pub fn service_level_fluid_limit() -> SuiteResult {
    check("fluid limit", 16, 7, (1.05f64..2.0, arb_continuous()), |(rho, patience)| {
        let spec = QueueSpec::markovian_arrivals(rho * 1e6, 1_000_000, Distribution::exponential(1.0).unwrap(), patience)
            .unwrap();
        let s = diffusion::summarize(&spec).unwrap();
        let v = diffusion::service_level(&spec, 2.0 * s.w).unwrap();
        prop_assert!((v - 1.0 / rho).abs() < 1e-3, "{} vs {}", v, 1.0 / rho);
        Ok(())
    })
}

pub fn gaussian_tail_symmetry() -> SuiteResult {
    check("tail symmetry", 64, 8, (arb_spec(), 0.0f64..6.0), |(spec, a)| {
        let s = diffusion::summarize(&spec).unwrap();
        prop_assert!((diffusion::virtual_wait_tail(&s, a) + diffusion::virtual_wait_tail(&s, -a) - 1.0).abs() <= 2e-16);
        prop_assert!((diffusion::queue_tail(&s, a) + diffusion::queue_tail(&s, -a) - 1.0).abs() <= 2e-16);
        Ok(())
    })
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

pub fn time_scale_covariance() -> SuiteResult {
    check("time-scale covariance", 48, 9, arb_spec(), |spec| {
        let base = diffusion::summarize(&spec).unwrap();
        for s in [0.1, 10.0] {
            let scaled = QueueSpec::new(
                spec.arrival_rate / s,
                spec.interarrival_scv,
                spec.servers,
                spec.service.scaled(s).unwrap(),
                spec.patience.scaled(s).unwrap(),
            )
            .unwrap();
            let t = diffusion::summarize(&scaled).unwrap();
            prop_assert!(close(t.w, s * base.w, 1e-9), "w {} vs {}", t.w, s * base.w);
            prop_assert!(close(t.sigma_w_sq, s * s * base.sigma_w_sq, 1e-9));
            for (x, y) in [
                (t.alpha, base.alpha),
                (t.q, base.q),
                (t.sigma_x_sq, base.sigma_x_sq),
                (t.svpr, base.svpr),
                (t.normalized_w, base.normalized_w),
            ] {
                prop_assert!(close(x, y, 1e-9), "{} vs {}", x, y);
            }
        }
        Ok(())
    })
}

pub fn exponential_patience_drift() -> SuiteResult {
    let strat = (10u32..400, 1.05f64..2.0, 0.0f64..3.0, arb_distribution(), 0.1f64..20.0);
    check("unit drift for exponential patience", 48, 10, strat, |(n, rho, ca2, service, gamma)| {
        let lambda = rho * n as f64 / service.mean();
        let spec = QueueSpec::new(lambda, ca2, n, service, Distribution::exponential_mean(gamma).unwrap()).unwrap();
        let s = diffusion::summarize(&spec).unwrap();
        prop_assert!((s.ou_drift_rate - 1.0).abs() < 1e-12, "{}", s.ou_drift_rate);
        prop_assert!((gamma * s.f_theta_w - 1.0 / rho).abs() < 1e-12);
        Ok(())
    })
}

pub fn variance_decomposition() -> SuiteResult {
    check("queue variance decomposition", 64, 11, arb_spec(), |spec| {
        let s = diffusion::summarize(&spec).unwrap();
        let rhs = s.mu * s.mu * s.sigma_hat_w_sq + s.sigma_hat_g_sq;
        prop_assert!(close(s.sigma_hat_x_sq, rhs, 1e-10), "{} vs {}", s.sigma_hat_x_sq, rhs);
        Ok(())
    })
}

// ---------------------------------------------------------------- simulator

pub fn simulation_path_invariants() -> SuiteResult {
    let strat = (1u32..8, 0.6f64..1.8, arb_distribution(), arb_distribution(), 0u64..1000);
    check("conservation, FCFS and determinism", 24, 12, strat, |(n, load, service, patience, seed)| {
        let lambda = load * n as f64 / service.mean();
        let spec = QueueSpec::markovian_arrivals(lambda, n, service, patience).unwrap();
        let mut cfg = SimConfig::for_spec(spec, 3000.0);
        cfg.seed = seed;
        cfg.replications = 2;
        let a = run(&cfg).unwrap();
        for c in &a.diagnostics.conservation {
            prop_assert!(c.holds(), "{:?}", c);
        }
        prop_assert_eq!(&a, &run(&cfg).unwrap());
        for p in [a.abandonment_fraction.value, a.diagnostics.idle_fraction] {
            prop_assert!((0.0..=1.0).contains(&p));
        }

        let log = event_log(&cfg, 1).unwrap();
        let mut last = f64::NEG_INFINITY;
        for c in &log.customers {
            match c.outcome {
                Outcome::Served { start, .. } => {
                    prop_assert!(start >= last);
                    prop_assert!(start - c.arrival <= c.patience);
                    last = start;
                }
                Outcome::Abandoned { at } => prop_assert_eq!(at, c.arrival + c.patience),
                Outcome::Pending => prop_assert!(false, "pending customer after drain"),
            }
        }
        for (c, vw) in log.customers.iter().zip(virtual_waits(&log, n)) {
            prop_assert!(vw.offered_wait >= 0.0);
            if let Outcome::Served { start, .. } = c.outcome {
                prop_assert!((vw.offered_wait - (start - c.arrival)).abs() < 1e-9);
            }
        }
        Ok(())
    })
}

pub fn littles_law() -> SuiteResult {
    let strat = (5u32..60, 0.7f64..1.6, 0.0f64..2.0, arb_distribution(), arb_continuous(), 0u64..1000);
    check("Little's law", 8, 13, strat, |(n, load, ca2, service, patience, seed)| {
        let lambda = load * n as f64 / service.mean();
        let spec = QueueSpec::new(lambda, ca2, n, service, patience).unwrap();
        let mut cfg = SimConfig::for_spec(spec, 4e5);
        cfg.seed = seed;
        cfg.replications = 2;
        let r = run(&cfg).unwrap();
        let l = r.in_system_mean;
        let lw = r.arrival_rate.value * r.mean_sojourn.value;
        let slack = l.half_width + r.mean_sojourn.half_width * r.arrival_rate.value + 1e-3 * l.value;
        prop_assert!((l.value - lw).abs() <= 2.0 * slack, "{:?} vs {}", l, lw);
        Ok(())
    })
}

fn erlang_a_config(seed: u64, customers: f64) -> SimConfig {
    let spec = QueueSpec::markovian_arrivals(
        24.0,
        20,
        Distribution::exponential(1.0).unwrap(),
        Distribution::exponential(1.0).unwrap(),
    )
    .unwrap();
    let mut cfg = SimConfig::for_spec(spec, customers);
    cfg.seed = seed;
    cfg.replications = 2;
    cfg.pmf_points = vec![16, 20, 24, 28, 32];
    cfg.service_level_delays = vec![0.05, 0.2];
    cfg
}

/// Fraction of (seed, measure) pairs whose 95% interval covers the exact
/// birth–death value, over 20 seeds of M/M/20+M.
pub fn erlang_a_coverage() -> Result<f64, String> {
    let oracle = ErlangA::new(24.0, 20, 1.0, 1.0);
    let mut hits = 0;
    let mut total = 0;
    for seed in 0..20 {
        let r = run(&erlang_a_config(seed, 2e5)).map_err(|e| e.to_string())?;
        let mut checks: Vec<(Estimate, f64)> = vec![
            (r.abandonment_fraction, oracle.abandonment_fraction()),
            (r.wait_mean, oracle.wait_mean()),
            (r.queue_mean, oracle.queue_mean()),
            (r.queue_variance, oracle.queue_variance()),
            (r.in_system_mean, oracle.in_system_mean()),
        ];
        for p in &r.pmf {
            checks.push((p.estimate, oracle.pmf[p.at as usize]));
        }
        for s in &r.service_levels {
            checks.push((s.estimate, oracle.service_level(s.at)));
        }
        for (est, exact) in checks {
            total += 1;
            if est.contains(exact) {
                hits += 1;
            }
        }
    }
    Ok(hits as f64 / total as f64)
}

pub fn erlang_a_agreement() -> SuiteResult {
    let c = erlang_a_coverage()?;
    if c >= 0.9 {
        Ok(())
    } else {
        Err(format!("Erlang-A coverage {c:.3} below 0.9"))
    }
}

// ---------------------------------------------------------------- fclt

fn arb_superposition() -> impl Strategy<Value = SuperpositionConfig> {
    (arb_continuous(), 20u32..100, 5.0f64..30.0, any::<u64>()).prop_map(|(interrenewal, n, gamma_n, seed)| {
        SuperpositionConfig {
            interrenewal,
            n,
            gamma_n,
            grid: (0..=10).map(|i| i as f64 / 10.0).collect(),
            replications: 400,
            seed,
            exec: Default::default(),
        }
    })
}

pub fn ensemble_reconstruction_and_centering() -> SuiteResult {
    check("ensemble reconstruction and centering", 8, 14, arb_superposition(), |cfg| {
        let ens = fclt::generate(&cfg).unwrap();
        let n = cfg.n as f64;
        let mu = 1.0 / cfg.interrenewal.mean();
        let scale = (n * cfg.gamma_n).sqrt();
        for (counts, values) in ens.counts.iter().zip(&ens.values) {
            prop_assert!(counts.windows(2).all(|w| w[0] <= w[1]));
            for ((&b, &v), &t) in counts.iter().zip(values).zip(&cfg.grid) {
                let back = v * scale + n * mu * cfg.gamma_n * t;
                prop_assert!((back - b as f64).abs() < 1e-6, "{} vs {}", back, b);
            }
        }
        // Eleven grid points at 99.9% each.
        for g in 1..cfg.grid.len() {
            let ci = stats::mean_ci(&ens.column(g), 0.999);
            prop_assert!(ci.contains(0.0), "mean at t = {}: {:?}", cfg.grid[g], ci);
        }
        Ok(())
    })
}

pub fn increment_stationarity() -> SuiteResult {
    check("stationary increments", 8, 15, arb_superposition(), |cfg| {
        let ens = fclt::generate(&cfg).unwrap();
        let early = ens.count_increments(0, 2);
        let late = ens.count_increments(8, 10);
        let ks = stats::ks_two_sample(&early, &late);
        prop_assert!(ks.p_value > 0.01, "{:?}", ks);
        Ok(())
    })
}

pub fn poisson_superposition() -> SuiteResult {
    let strat = (0.2f64..3.0, 20u32..100, 5.0f64..30.0, any::<u64>());
    check("exponential superposition is Poisson", 8, 16, strat, |(mean, n, gamma_n, seed)| {
        let cfg = SuperpositionConfig {
            interrenewal: Distribution::exponential_mean(mean).unwrap(),
            n,
            gamma_n,
            grid: (0..=10).map(|i| i as f64 / 10.0).collect(),
            replications: 1000,
            seed,
            exec: Default::default(),
        };
        let ens = fclt::generate(&cfg).unwrap();
        let m = n as f64 * gamma_n / mean;
        let counts = ens.count_increments(0, 10);
        let mean_ci = stats::mean_ci(&counts, 0.999);
        prop_assert!(mean_ci.contains(m), "mean {:?} vs {}", mean_ci, m);
        let var = stats::variance_ci(&counts, 0.999);
        prop_assert!(var.lo <= m && m <= var.hi, "variance {:?} vs {}", var, m);
        let r = stats::correlation(&ens.count_increments(0, 5), &ens.count_increments(5, 10));
        let (lo, hi) = stats::correlation_ci(r, counts.len(), 0.999);
        prop_assert!(lo <= 0.0 && 0.0 <= hi, "increment correlation {}", r);
        let profile = fclt::variance_profile(&ens);
        let rate = 1.0 / mean;
        prop_assert!((profile.expected_slope - rate).abs() < 1e-12 * rate);
        prop_assert!((profile.slope.value - rate).abs() < 0.1 * rate, "{:?} vs {}", profile.slope, rate);
        Ok(())
    })
}

// ---------------------------------------------------------------- mam

/// Unnormalized Erlang-A weights over `0..=k`, normalized.
pub fn erlang_a_truncated(lambda: f64, n: usize, mu: f64, theta: f64, k: usize) -> Vec<f64> {
    let mut w = vec![1.0f64];
    for i in 1..=k {
        let death = i.min(n) as f64 * mu + i.saturating_sub(n) as f64 * theta;
        w.push(w[i - 1] * lambda / death);
    }
    let t: f64 = w.iter().sum();
    w.into_iter().map(|x| x / t).collect()
}

fn arb_ph() -> impl Strategy<Value = PhService> {
    prop_oneof![
        (0.3f64..3.0).prop_map(|r| PhService::exponential(r).unwrap()),
        (2u32..4, 0.5f64..4.0).prop_map(|(k, r)| PhService::erlang(k, r).unwrap()),
        (0.05f64..0.95, 0.2f64..1.0, 1.0f64..6.0).prop_map(|(p, a, b)| {
            PhService::hyperexponential(&[(p, a), (1.0 - p, b)]).unwrap()
        }),
    ]
}

pub fn ctmc_balance() -> SuiteResult {
    let strat = (1u32..8, 0.5f64..2.5, arb_ph(), 0.2f64..2.0);
    check("CTMC balance residuals", 32, 17, strat, |(n, rho, ph, theta)| {
        let lambda = rho * n as f64 / ph.mean();
        let k = n as usize + (4.0 * lambda / theta).ceil() as usize + 50;
        let sol = mam::solve(lambda, n, &ph, theta, k).unwrap();
        prop_assert!(sol.residual < 1e-10, "residual {}", sol.residual);
        prop_assert!(sol.cut_balance_error < 1e-9, "cut {}", sol.cut_balance_error);
        prop_assert!(sol.phase_balance_error < 1e-6, "phase {}", sol.phase_balance_error);
        prop_assert!((sol.marginal.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(sol.marginal.iter().all(|&p| p >= 0.0));
        Ok(())
    })
}

pub fn one_phase_is_erlang_a() -> SuiteResult {
    let strat = (1u32..30, 0.5f64..2.5, 0.3f64..3.0, 0.1f64..3.0);
    check("one-phase reduction", 32, 18, strat, |(n, rho, mu, theta)| {
        let lambda = rho * n as f64 * mu;
        let k = n as usize + (4.0 * lambda / theta).ceil() as usize + 50;
        let sol = mam::solve(lambda, n, &PhService::exponential(mu).unwrap(), theta, k).unwrap();
        let exact = erlang_a_truncated(lambda, n as usize, mu, theta, k);
        let gap = sol.marginal.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(gap < 1e-10, "max gap {}", gap);
        Ok(())
    })
}

// ---------------------------------------------------------------- staffing

fn arb_objective() -> impl Strategy<Value = Objective> {
    prop_oneof![
        (0.5f64..0.9, 0.0f64..2.0).prop_map(|(target, delay)| Objective::ServiceLevel { target, delay }),
        (0.02f64..0.2, 0.0f64..1.0).prop_map(|(target, delay)| Objective::EffectiveAbandonment { target, delay }),
    ]
}

fn arb_markovian_problem() -> impl Strategy<Value = StaffingProblem> {
    (20.0f64..400.0, 0.5f64..2.0, arb_continuous(), arb_objective()).prop_map(|(lambda, mean, patience, objective)| {
        StaffingProblem {
            arrival_rate: lambda,
            interarrival_scv: 1.0,
            service: Distribution::exponential_mean(mean).unwrap(),
            patience,
            objective,
            evaluator: Evaluator::Diffusion,
            exec: Default::default(),
        }
    })
}

pub fn zm_matches_diffusion_for_markovian_input() -> SuiteResult {
    check("comparator identity", 24, 19, arb_markovian_problem(), |p| {
        let hi = p.n_max();
        let lo = (hi / 2).max(1);
        let a = staffing::curve(&p, lo, hi);
        let b = staffing::curve(&StaffingProblem { evaluator: Evaluator::Zm, ..p.clone() }, lo, hi);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(a), Err(b)) => prop_assert_eq!(a.to_string(), b.to_string()),
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a.is_ok(), b.is_ok()),
        }
        Ok(())
    })
}

pub fn staffing_search_properties() -> SuiteResult {
    let strat = (arb_markovian_problem(), 0.0f64..3.0, 0.0f64..4.0);
    check("staffing search", 24, 20, strat, |(p, ca2, cs2)| {
        let service = if cs2 < 0.05 {
            Distribution::deterministic(p.service.mean()).unwrap()
        } else {
            Distribution::lognormal(p.service.mean(), cs2).unwrap()
        };
        let p = StaffingProblem { interarrival_scv: ca2, service, ..p };
        let first = staffing::min_servers(&p);
        let second = staffing::min_servers(&p);
        match (first, second) {
            (Ok(r), Ok(again)) => {
                prop_assert_eq!(&r, &again);
                let at = |n| r.curve.iter().find(|c| c.n == n);
                prop_assert!(at(r.n_min).is_some_and(|c| c.meets));
                if r.n_min > 1 {
                    prop_assert!(at(r.n_min - 1).is_some_and(|c| !c.meets), "point below n_min not rejected");
                }
                if !r.monotone {
                    prop_assert!(r.warnings.iter().any(|w| w.contains("monotone")));
                }
                prop_assert!(r.curve.windows(2).all(|w| w[0].n < w[1].n));
            }
            (Err(a), Err(b)) => prop_assert_eq!(a.to_string(), b.to_string()),
            _ => prop_assert!(false, "non-reproducible outcome"),
        }
        Ok(())
    })
}

pub const SUITES: &[(&str, fn() -> SuiteResult)] = &[
    ("distributions: cdf shape", cdf_shape),
    ("distributions: quantile/cdf", quantile_cdf_galois),
    ("distributions: pdf integrates to cdf", pdf_integrates_to_cdf),
    ("distributions: equilibrium", equilibrium_identities),
    ("distributions: sampling KS", sampling_ks),
    ("diffusion: service level shape", service_level_shape),
    ("diffusion: fluid limit", service_level_fluid_limit),
    ("diffusion: tail symmetry", gaussian_tail_symmetry),
    ("diffusion: time-scale covariance", time_scale_covariance),
    ("diffusion: exponential patience drift", exponential_patience_drift),
    ("diffusion: variance decomposition", variance_decomposition),
    ("simulator: path invariants", simulation_path_invariants),
    ("simulator: Little's law", littles_law),
    ("simulator: Erlang-A agreement", erlang_a_agreement),
    ("fclt: reconstruction and centering", ensemble_reconstruction_and_centering),
    ("fclt: stationary increments", increment_stationarity),
    ("fclt: Poisson case", poisson_superposition),
    ("mam: balance residuals", ctmc_balance),
    ("mam: one-phase reduction", one_phase_is_erlang_a),
    ("staffing: comparator identity", zm_matches_diffusion_for_markovian_input),
    ("staffing: search properties", staffing_search_properties),
];
