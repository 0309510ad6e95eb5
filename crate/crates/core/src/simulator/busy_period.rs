//! The regenerative busy-period sampler and the bundle-size comparison.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::rng::{mix64, sample_exp, stream, PURPOSE_BUNDLE, PURPOSE_DYNAMICS, PURPOSE_TRACE};
use super::{
    BusyPeriodStats, EventKind, PeriodTrace, ServiceDistribution, SimConfig, SimError, SimEvent,
    Welford, Z_95,
};
use crate::analytic::SwarmParams;

/// Busy-period statistics plus the optional per-replication event traces.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub stats: BusyPeriodStats,
    /// One trace per replication when `record_events` was set, in
    /// replication order. Traces of truncated periods end without a
    /// `content_lost` row.
    pub traces: Option<Vec<PeriodTrace>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pending {
    Arrival,
    Departure,
}

/// Queue entry ordered by time, with insertion sequence breaking exact ties.
#[derive(Debug, Clone, Copy)]
struct Queued {
    time: f64,
    seq: u64,
    what: Pending,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .partial_cmp(&other.time)
            .expect("event times are finite")
            .then_with(|| self.seq.cmp(&other.seq))
    }
}

fn sample_residence(rng: &mut ChaCha8Rng, params: &SwarmParams, service: ServiceDistribution) -> f64 {
    match service {
        ServiceDistribution::Deterministic => params.mean_residence(),
        ServiceDistribution::Exponential => sample_exp(rng, 1.0 / params.mean_residence()),
    }
}

enum PeriodOutcome {
    Completed { length: f64 },
    Truncated,
}

/// Simulates one regeneration cycle: the idle wait for the starting
/// publisher, then the busy period it opens. Returns the busy-period length.
///
/// All draws that shape the period come from the dynamics stream; arrival
/// labels and idle-phase peer rejections are trace decoration and come from
/// a separate stream, so recording cannot disturb the statistics.
fn simulate_period(
    params: &SwarmParams,
    config: &SimConfig,
    replication: u64,
) -> (PeriodOutcome, Option<PeriodTrace>) {
    let mut dyn_rng = stream(config.seed, replication, PURPOSE_DYNAMICS);
    let mut trace_rng = config
        .record_events
        .then(|| stream(config.seed, replication, PURPOSE_TRACE));
    let mut trace: Option<PeriodTrace> = config.record_events.then(Vec::new);

    let combined = params.combined_rate();
    let start = sample_exp(&mut dyn_rng, params.r());

    // Peers arriving during the idle wait find nothing and leave.
    if let (Some(tr), Some(trng)) = (trace.as_mut(), trace_rng.as_mut()) {
        if params.lambda() > 0.0 {
            let mut t = sample_exp(trng, params.lambda());
            while t < start {
                tr.push(SimEvent {
                    time: t,
                    kind: EventKind::PeerRejected,
                    holders_after: 0,
                });
                t += sample_exp(trng, params.lambda());
            }
        }
    }

    let mut queue: BinaryHeap<Reverse<Queued>> = BinaryHeap::new();
    let mut seq: u64 = 0;
    let mut push = |queue: &mut BinaryHeap<Reverse<Queued>>, time: f64, what: Pending| {
        queue.push(Reverse(Queued { time, seq, what }));
        seq += 1;
    };

    let mut holders: u32 = 1;
    let mut processed: u64 = 1; // the opening publisher arrival
    if let Some(tr) = trace.as_mut() {
        tr.push(SimEvent {
            time: start,
            kind: EventKind::PublisherArrival,
            holders_after: 1,
        });
    }
    let first_residence = sample_residence(&mut dyn_rng, params, config.service);
    push(&mut queue, start + first_residence, Pending::Departure);
    push(
        &mut queue,
        start + sample_exp(&mut dyn_rng, combined),
        Pending::Arrival,
    );

    loop {
        let Reverse(event) = queue.pop().expect("queue never drains before content loss");
        processed += 1;
        if processed > config.max_events_per_period {
            return (PeriodOutcome::Truncated, trace);
        }
        match event.what {
            Pending::Arrival => {
                holders += 1;
                if let (Some(tr), Some(trng)) = (trace.as_mut(), trace_rng.as_mut()) {
                    let kind = if trng.gen::<f64>() * combined < params.r() {
                        EventKind::PublisherArrival
                    } else {
                        EventKind::PeerArrival
                    };
                    tr.push(SimEvent {
                        time: event.time,
                        kind,
                        holders_after: holders,
                    });
                }
                let residence = sample_residence(&mut dyn_rng, params, config.service);
                push(&mut queue, event.time + residence, Pending::Departure);
                push(
                    &mut queue,
                    event.time + sample_exp(&mut dyn_rng, combined),
                    Pending::Arrival,
                );
            }
            Pending::Departure => {
                holders -= 1;
                if holders == 0 {
                    if let Some(tr) = trace.as_mut() {
                        tr.push(SimEvent {
                            time: event.time,
                            kind: EventKind::ContentLost,
                            holders_after: 0,
                        });
                    }
                    return (
                        PeriodOutcome::Completed {
                            length: event.time - start,
                        },
                        trace,
                    );
                }
                if let Some(tr) = trace.as_mut() {
                    tr.push(SimEvent {
                        time: event.time,
                        kind: EventKind::HolderDeparture,
                        holders_after: holders,
                    });
                }
            }
        }
    }
}

/// Collects `config.replications` busy periods and summarizes them.
///
/// Identical `(params, config)` always produce identical output; the
/// replications draw from independent derived streams, so aggregation in
/// replication order is the only serial step.
pub fn run_busy_periods(params: &SwarmParams, config: &SimConfig) -> Result<SimOutput, SimError> {
    config.validate()?;

    let mut acc = Welford::default();
    let mut truncated: u64 = 0;
    let mut traces = config
        .record_events
        .then(|| Vec::with_capacity(config.replications as usize));

    for replication in 0..config.replications {
        let (outcome, trace) = simulate_period(params, config, replication);
        match outcome {
            PeriodOutcome::Completed { length } => acc.push(length),
            PeriodOutcome::Truncated => truncated += 1,
        }
        if let (Some(all), Some(tr)) = (traces.as_mut(), trace) {
            all.push(tr);
        }
    }

    if acc.count() == 0 {
        return Err(SimError::AllTruncated { truncated });
    }

    let variance = acc.sample_variance();
    let stats = BusyPeriodStats {
        n: config.replications,
        mean: acc.mean(),
        variance,
        ci_half_width_95: Z_95 * (variance / acc.count() as f64).sqrt(),
        truncated_count: truncated,
    };
    Ok(SimOutput { stats, traces })
}

/// Simulated counterpart of the bundling factor: the mean busy period of a
/// single swarm carrying `2s` against the summed means of two independent
/// swarms carrying `s` each.
#[derive(Debug, Clone, Serialize)]
pub struct BundleComparison {
    pub b_single_2s: f64,
    pub b_two_of_s_sum: f64,
    /// `b_single_2s / b_two_of_s_sum`; above 1 whenever bundling pays off.
    pub ratio: f64,
    pub stats_2s: BusyPeriodStats,
    pub stats_s_first: BusyPeriodStats,
    pub stats_s_second: BusyPeriodStats,
}

/// Runs the three sub-simulations on independent streams derived from
/// `config.seed` and reports the bundling ratio.
pub fn compare_bundle(params: &SwarmParams, config: &SimConfig) -> Result<BundleComparison, SimError> {
    config.validate()?;
    let doubled = params.with_file_size(2.0 * params.s())?;

    let sub_config = |tag: u64| SimConfig {
        seed: mix64(config.seed ^ tag),
        record_events: false,
        ..*config
    };

    let stats_2s = run_busy_periods(&doubled, &sub_config(PURPOSE_BUNDLE[0]))?.stats;
    let stats_s_first = run_busy_periods(params, &sub_config(PURPOSE_BUNDLE[1]))?.stats;
    let stats_s_second = run_busy_periods(params, &sub_config(PURPOSE_BUNDLE[2]))?.stats;

    let b_single_2s = stats_2s.mean;
    let b_two_of_s_sum = stats_s_first.mean + stats_s_second.mean;
    Ok(BundleComparison {
        b_single_2s,
        b_two_of_s_sum,
        ratio: b_single_2s / b_two_of_s_sum,
        stats_2s,
        stats_s_first,
        stats_s_second,
    })
}
