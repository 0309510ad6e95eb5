//! Cross-checks between the simulator and the closed form, and between the
//! two simulators themselves.

use swarmlab_core::analytic::{expected_busy_period, SwarmParams};
use swarmlab_core::simulator::{
    busy_run_lengths, run_busy_periods, run_profile_sim, ArrivalProfile, ServiceDistribution,
    SimConfig,
};

#[test]
fn closed_form_lies_in_the_simulated_confidence_interval_across_loads() {
    // Loads from 0.1 to 3.0. The first point needs a smaller publisher rate
    // because with s = mu = 1 and r = 0.2 the load cannot go below 0.2.
    let sets = [
        (0.1, 0.0),
        (0.2, 0.3),
        (0.2, 1.0),
        (0.2, 1.8),
        (0.2, 2.8),
    ];
    let mut hits = 0;
    for (i, &(r, lambda)) in sets.iter().enumerate() {
        let params = SwarmParams::new(1.0, 1.0, r, lambda).unwrap();
        let analytic = expected_busy_period(&params).unwrap();
        let out = run_busy_periods(&params, &SimConfig::new(1000 + i as u64, 30_000)).unwrap();
        let rel = (out.stats.mean - analytic).abs() / analytic;
        assert!(rel < 0.03, "x = {}: relative error {rel}", params.load());
        if out.stats.ci_contains(analytic) {
            hits += 1;
        }
    }
    // One miss in five is within the meaning of a 95% interval.
    assert!(hits >= 4, "analytic value inside only {hits}/5 intervals");
}

#[test]
fn profile_segmentation_agrees_with_the_busy_period_sampler() {
    let params = SwarmParams::new(1.0, 1.0, 0.2, 1.0).unwrap();
    let config = SimConfig::new(2024, 20_000).with_service(ServiceDistribution::Deterministic);
    let direct = run_busy_periods(&params, &config).unwrap().stats;

    // Same swarm as one long run with constant rates, segmented on a grid
    // fine enough that deterministic residences cannot slip between points.
    let profile = ArrivalProfile::constant(params.r(), params.lambda()).unwrap();
    let interval = 0.01;
    let samples = run_profile_sim(
        &params,
        &profile,
        4000.0,
        interval,
        &SimConfig::new(77, 1).with_service(ServiceDistribution::Deterministic),
    )
    .unwrap();
    let runs = busy_run_lengths(&samples, interval);
    assert!(runs.len() > 300, "only {} busy stretches", runs.len());

    let seg_mean = runs.iter().sum::<f64>() / runs.len() as f64;
    let seg_var = runs
        .iter()
        .map(|&x| (x - seg_mean).powi(2))
        .sum::<f64>()
        / (runs.len() - 1) as f64;
    let seg_half = 1.959963984540054 * (seg_var / runs.len() as f64).sqrt();

    let gap = (seg_mean - direct.mean).abs();
    let budget = (seg_half.powi(2) + direct.ci_half_width_95.powi(2)).sqrt();
    assert!(
        gap <= budget,
        "segmented mean {seg_mean} vs sampled mean {} (budget {budget})",
        direct.mean
    );
}

#[test]
fn exponential_and_deterministic_service_estimate_the_same_mean() {
    for (seed, lambda) in [(31u64, 0.5), (32, 1.5)] {
        let params = SwarmParams::new(1.0, 1.0, 0.2, lambda).unwrap();
        let exp = run_busy_periods(
            &params,
            &SimConfig::new(seed, 40_000).with_service(ServiceDistribution::Exponential),
        )
        .unwrap()
        .stats;
        let det = run_busy_periods(
            &params,
            &SimConfig::new(seed + 100, 40_000).with_service(ServiceDistribution::Deterministic),
        )
        .unwrap()
        .stats;
        assert!(
            exp.ci_contains(det.mean) && det.ci_contains(exp.mean),
            "lambda = {lambda}: {} vs {}",
            exp.mean,
            det.mean
        );
    }
}
