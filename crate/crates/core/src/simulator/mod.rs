//! Discrete-event simulation of swarm busy periods.
//!
//! The simulator realizes the same infinite-server dynamics the analytic
//! module solves in closed form: a busy period opens when a publisher
//! arrives into an idle system, every arrival during the period adds an
//! independent holder, and the period closes when the last holder departs.
//! Peers that arrive while the content is gone leave immediately. On top of
//! the regenerative busy-period sampler ([`run_busy_periods`]) there is a
//! bundle-size comparison ([`compare_bundle`]) and a full-process simulation
//! with time-varying arrival rates ([`run_profile_sim`](profile::run_profile_sim))
//! for the regimes the closed form cannot reach.

mod busy_period;
mod profile;
mod rng;

pub use busy_period::{compare_bundle, run_busy_periods, BundleComparison, SimOutput};
pub use profile::{
    busy_fraction, busy_run_lengths, run_profile_sim, ArrivalProfile, ProfileSample,
    ProfileSegment,
};

use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::analytic::AnalyticError;

/// Errors from configuration validation and the simulation runs.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error("invalid simulation config {field}: {requirement}")]
    InvalidConfig {
        field: &'static str,
        requirement: &'static str,
    },
    #[error("invalid arrival profile: {reason}")]
    InvalidProfile { reason: String },
    #[error("invalid argument {name} = {value}: {requirement}")]
    InvalidArgument {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },
    #[error(
        "all {truncated} replications hit the event cap; raise max_events_per_period \
         or pick a smaller load"
    )]
    AllTruncated { truncated: u64 },
}

/// Holder residence-time distribution. Both have mean `s / mu`; the model's
/// mean busy period does not depend on which one is chosen, which the test
/// suite exploits as a cross-check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceDistribution {
    Deterministic,
    Exponential,
}

/// Simulation control knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    /// Master seed; every random draw in a run derives from it.
    pub seed: u64,
    /// Number of busy periods to collect.
    pub replications: u64,
    pub service: ServiceDistribution,
    /// Keep per-replication event traces (costs memory, never changes the
    /// statistics).
    pub record_events: bool,
    /// Safety cap: a period that processes more events than this is cut
    /// short, reported in `truncated_count` and left out of the moments.
    pub max_events_per_period: u64,
}

impl SimConfig {
    /// Exponential service, no traces, one-million-event cap.
    pub fn new(seed: u64, replications: u64) -> Self {
        Self {
            seed,
            replications,
            service: ServiceDistribution::Exponential,
            record_events: false,
            max_events_per_period: 1_000_000,
        }
    }

    pub fn with_service(mut self, service: ServiceDistribution) -> Self {
        self.service = service;
        self
    }

    pub fn with_recording(mut self, record: bool) -> Self {
        self.record_events = record;
        self
    }

    pub fn with_max_events(mut self, cap: u64) -> Self {
        self.max_events_per_period = cap;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.replications < 1 {
            return Err(SimError::InvalidConfig {
                field: "replications",
                requirement: "must be at least 1",
            });
        }
        if self.max_events_per_period < 2 {
            return Err(SimError::InvalidConfig {
                field: "max_events_per_period",
                requirement: "must be at least 2 (one arrival and one departure)",
            });
        }
        Ok(())
    }
}

/// Sample statistics over the collected busy periods.
///
/// `n` counts every collected period; the `truncated_count` periods that hit
/// the event cap are excluded from `mean`, `variance` and the confidence
/// interval, because silently truncating a heavy-tailed quantity would bias
/// the mean invisibly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BusyPeriodStats {
    pub n: u64,
    pub mean: f64,
    /// Unbiased sample variance of the untruncated periods.
    pub variance: f64,
    /// Half-width of the 95% normal confidence interval for the mean.
    pub ci_half_width_95: f64,
    pub truncated_count: u64,
}

impl BusyPeriodStats {
    /// Number of periods entering the moments.
    pub fn effective_n(&self) -> u64 {
        self.n - self.truncated_count
    }

    /// Whether `value` lies inside the 95% confidence interval.
    pub fn ci_contains(&self, value: f64) -> bool {
        (value - self.mean).abs() <= self.ci_half_width_95
    }
}

/// What happened, and with how many holders the system was left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    PublisherArrival,
    PeerArrival,
    HolderDeparture,
    /// Departure of the last holder; always leaves zero holders.
    ContentLost,
    /// Peer turned away because the content was not available.
    PeerRejected,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::PublisherArrival => "publisher_arrival",
            EventKind::PeerArrival => "peer_arrival",
            EventKind::HolderDeparture => "holder_departure",
            EventKind::ContentLost => "content_lost",
            EventKind::PeerRejected => "peer_rejected",
        }
    }
}

/// One trace row. Within a replication, times never decrease.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimEvent {
    pub time: f64,
    pub kind: EventKind,
    pub holders_after: u32,
}

/// Event trace of a single replication, in event order.
pub type PeriodTrace = Vec<SimEvent>;

/// Writes event traces as CSV: `period,seq,time,kind,holders_after`, one
/// row per event, times with 9 significant digits.
pub fn write_event_traces_csv<W: Write>(mut w: W, traces: &[PeriodTrace]) -> io::Result<()> {
    writeln!(w, "period,seq,time,kind,holders_after")?;
    for (period, trace) in traces.iter().enumerate() {
        for (seq, ev) in trace.iter().enumerate() {
            writeln!(
                w,
                "{},{},{:.8e},{},{}",
                period,
                seq,
                ev.time,
                ev.kind.as_str(),
                ev.holders_after
            )?;
        }
    }
    Ok(())
}

/// z quantile for a two-sided 95% interval.
pub(crate) const Z_95: f64 = 1.959963984540054;

/// Streaming mean/variance accumulator (Welford).
#[derive(Debug, Default, Clone)]
pub(crate) struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub(crate) fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub(crate) fn count(&self) -> u64 {
        self.n
    }

    pub(crate) fn mean(&self) -> f64 {
        self.mean
    }

    pub(crate) fn sample_variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(1, 0).validate().is_err());
        assert!(SimConfig::new(1, 1).with_max_events(1).validate().is_err());
        assert!(SimConfig::new(1, 1).validate().is_ok());
    }

    #[test]
    fn welford_matches_direct_formulas() {
        let xs = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        let mut w = Welford::default();
        for &x in &xs {
            w.push(x);
        }
        assert_eq!(w.count(), 8);
        assert!((w.mean() - 5.0).abs() < 1e-12);
        // Sum of squared deviations is 32; unbiased variance 32/7.
        assert!((w.sample_variance() - 32.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn trace_csv_shape() {
        let traces = vec![vec![
            SimEvent {
                time: 0.5,
                kind: EventKind::PublisherArrival,
                holders_after: 1,
            },
            SimEvent {
                time: 1.5,
                kind: EventKind::ContentLost,
                holders_after: 0,
            },
        ]];
        let mut buf = Vec::new();
        write_event_traces_csv(&mut buf, &traces).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("period,seq,time,kind,holders_after"));
        assert_eq!(lines.next(), Some("0,0,5.00000000e-1,publisher_arrival,1"));
        assert_eq!(lines.next(), Some("0,1,1.50000000e0,content_lost,0"));
    }
}
