mod common;

use common::{invariants, ErlangA};
use edq::distributions::Distribution;
use edq::simulator::{run, SimConfig};
use edq::QueueSpec;

#[test]
fn erlang_a_coverage() {
    let coverage = invariants::erlang_a_coverage().unwrap();
    assert!(coverage >= 0.9, "coverage {coverage}");
}

#[test]
fn service_level_oracle_limits() {
    let oracle = ErlangA::new(24.0, 20, 1.0, 1.0);
    let immediate: f64 = oracle.pmf[..20].iter().sum();
    assert!((oracle.service_level(0.0) - immediate).abs() < 1e-12);
    // As d grows, everyone who is ever served counts.
    let served = 1.0 - oracle.abandonment_fraction();
    assert!((oracle.service_level(50.0) - served).abs() < 1e-9);
}

#[test]
fn littles_law_with_abandonment() {
    let spec = QueueSpec::new(
        50.0,
        0.5,
        40,
        Distribution::lognormal(1.0, 2.0).unwrap(),
        Distribution::hyperexponential_means(&[(0.7, 2.0), (0.3, 0.2)]).unwrap(),
    )
    .unwrap();
    let mut cfg = SimConfig::for_spec(spec, 1e6);
    cfg.replications = 2;
    let r = run(&cfg).unwrap();
    let l = r.in_system_mean;
    let lw = r.arrival_rate.value * r.mean_sojourn.value;
    let slack = l.half_width + r.mean_sojourn.half_width * r.arrival_rate.value + 1e-3 * l.value;
    assert!((l.value - lw).abs() <= 2.0 * slack, "{l:?} vs {lw}");
}

#[test]
fn conservation_fcfs_and_determinism() {
    if let Err(e) = invariants::simulation_path_invariants() {
        panic!("{e}");
    }
}

#[test]
fn littles_law_on_random_instances() {
    if let Err(e) = invariants::littles_law() {
        panic!("{e}");
    }
}
