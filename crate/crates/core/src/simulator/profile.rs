//! One-swarm simulation under time-varying arrival rates.
//!
//! The closed form assumes constant publisher and peer arrival rates, which
//! real swarms violate badly right after a release. This simulator runs the
//! same holder dynamics over a horizon with piecewise-constant rates and
//! samples the holder count on a regular grid. Arrivals are generated by
//! per-segment inversion: draw an exponential gap at the current segment's
//! rate and, when it crosses a segment boundary, restart the draw from the
//! boundary (memorylessness makes this exact, no thinning involved).

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::Rng;
use serde::Serialize;

use super::rng::{sample_exp, stream, PURPOSE_PROFILE};
use super::{ServiceDistribution, SimConfig, SimError};
use crate::analytic::SwarmParams;

/// One span of constant arrival rates. The final segment of a profile may
/// have infinite duration; every other duration is finite and positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileSegment {
    pub duration: f64,
    pub publisher_rate: f64,
    pub peer_rate: f64,
}

impl ProfileSegment {
    pub fn new(duration: f64, publisher_rate: f64, peer_rate: f64) -> Self {
        Self {
            duration,
            publisher_rate,
            peer_rate,
        }
    }

    fn combined_rate(&self) -> f64 {
        self.publisher_rate + self.peer_rate
    }
}

/// Piecewise-constant arrival rates over time. A profile is *constant* when
/// it consists of exactly one unbounded segment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArrivalProfile {
    segments: Vec<ProfileSegment>,
}

impl ArrivalProfile {
    /// Single unbounded segment.
    pub fn constant(publisher_rate: f64, peer_rate: f64) -> Result<Self, SimError> {
        Self::validated(vec![ProfileSegment::new(
            f64::INFINITY,
            publisher_rate,
            peer_rate,
        )])
    }

    /// Finite segments in order; the last one may be unbounded.
    pub fn piecewise(segments: Vec<ProfileSegment>) -> Result<Self, SimError> {
        Self::validated(segments)
    }

    fn validated(segments: Vec<ProfileSegment>) -> Result<Self, SimError> {
        if segments.is_empty() {
            return Err(SimError::InvalidProfile {
                reason: "a profile needs at least one segment".into(),
            });
        }
        let last = segments.len() - 1;
        for (i, seg) in segments.iter().enumerate() {
            if seg.duration.is_nan() || seg.duration <= 0.0 {
                return Err(SimError::InvalidProfile {
                    reason: format!("segment {i} duration must be positive, got {}", seg.duration),
                });
            }
            if seg.duration.is_infinite() && i != last {
                return Err(SimError::InvalidProfile {
                    reason: format!("segment {i} is unbounded but not last"),
                });
            }
            for (name, rate) in [
                ("publisher_rate", seg.publisher_rate),
                ("peer_rate", seg.peer_rate),
            ] {
                if !rate.is_finite() || rate < 0.0 {
                    return Err(SimError::InvalidProfile {
                        reason: format!("segment {i} {name} must be finite and nonnegative, got {rate}"),
                    });
                }
            }
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[ProfileSegment] {
        &self.segments
    }

    pub fn is_constant(&self) -> bool {
        self.segments.len() == 1 && self.segments[0].duration.is_infinite()
    }

    /// Total covered time; infinite when the last segment is unbounded.
    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// End time of segment `i` measured from 0.
    fn end_of(&self, i: usize) -> f64 {
        self.segments[..=i].iter().map(|s| s.duration).sum()
    }
}

/// One grid point of the simulated swarm: the state after all events up to
/// and including `time` were applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileSample {
    pub time: f64,
    pub holders: u32,
    pub cumulative_rejected: u64,
}

/// Fraction of grid points at which the content was available.
pub fn busy_fraction(samples: &[ProfileSample]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().filter(|s| s.holders > 0).count() as f64 / samples.len() as f64
}

/// Lengths of the maximal busy stretches of the sampled series, each run of
/// consecutive grid points with holders online counted as `run * interval`.
/// Runs still open at the end of the series are dropped, mirroring the
/// busy-period sampler's rule of only reporting completed periods.
pub fn busy_run_lengths(samples: &[ProfileSample], sample_interval: f64) -> Vec<f64> {
    let mut runs = Vec::new();
    let mut current: u64 = 0;
    for s in samples {
        if s.holders > 0 {
            current += 1;
        } else {
            if current > 0 {
                runs.push(current as f64 * sample_interval);
            }
            current = 0;
        }
    }
    runs
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Departure {
    time: f64,
    seq: u64,
}

impl Eq for Departure {}

impl PartialOrd for Departure {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Departure {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.time
            .partial_cmp(&other.time)
            .expect("departure times are finite")
            .then_with(|| self.seq.cmp(&other.seq))
    }
}

/// Simulates one swarm over `[0, horizon]` under the profile's arrival
/// rates and reports `(time, holders, cumulative_rejected)` every
/// `sample_interval` time units.
///
/// `params` supplies the residence-time scale `s / mu`; the profile
/// overrides its arrival rates. Of the config only `seed` and `service`
/// matter here. Peers arriving while no holder is online are rejected and
/// counted; publishers always start or join a busy stretch.
pub fn run_profile_sim(
    params: &SwarmParams,
    profile: &ArrivalProfile,
    horizon: f64,
    sample_interval: f64,
    config: &SimConfig,
) -> Result<Vec<ProfileSample>, SimError> {
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(SimError::InvalidArgument {
            name: "horizon",
            value: horizon,
            requirement: "must be finite and positive",
        });
    }
    if !sample_interval.is_finite() || sample_interval <= 0.0 {
        return Err(SimError::InvalidArgument {
            name: "sample_interval",
            value: sample_interval,
            requirement: "must be finite and positive",
        });
    }
    if profile.total_duration() < horizon {
        return Err(SimError::InvalidProfile {
            reason: format!(
                "profile covers {} time units but the horizon is {horizon}",
                profile.total_duration()
            ),
        });
    }

    let mut rng = stream(config.seed, 0, PURPOSE_PROFILE);
    let mut departures: BinaryHeap<Reverse<Departure>> = BinaryHeap::new();
    let mut seq: u64 = 0;
    let mut holders: u32 = 0;
    let mut rejected: u64 = 0;

    let total_samples = (horizon / sample_interval).floor() as u64;
    let mut samples = Vec::with_capacity(total_samples as usize + 1);
    let mut next_sample_index: u64 = 0;

    // Arrival cursor: the segment that contains the next stretch of time.
    let mut seg_idx = 0usize;
    let mut next_arrival = draw_arrival(profile, &mut seg_idx, 0.0, &mut rng);

    let residence = |rng: &mut rand_chacha::ChaCha8Rng| match config.service {
        ServiceDistribution::Deterministic => params.mean_residence(),
        ServiceDistribution::Exponential => sample_exp(rng, 1.0 / params.mean_residence()),
    };

    loop {
        let next_departure = departures.peek().map(|Reverse(d)| *d);
        let arrival_first = match (next_arrival, next_departure) {
            (Some((ta, _)), Some(d)) => ta < d.time,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => break,
        };
        let event_time = if arrival_first {
            next_arrival.unwrap().0
        } else {
            next_departure.unwrap().time
        };
        if event_time > horizon {
            break;
        }

        // Grid points strictly before the event reflect the state so far.
        while (next_sample_index as f64) * sample_interval < event_time {
            let t = next_sample_index as f64 * sample_interval;
            if t > horizon {
                break;
            }
            samples.push(ProfileSample {
                time: t,
                holders,
                cumulative_rejected: rejected,
            });
            next_sample_index += 1;
        }

        if arrival_first {
            let (ta, arrival_seg) = next_arrival.unwrap();
            let seg = &profile.segments()[arrival_seg];
            let is_publisher = rng.gen::<f64>() * seg.combined_rate() < seg.publisher_rate;
            if holders == 0 && !is_publisher {
                rejected += 1;
            } else {
                holders += 1;
                departures.push(Reverse(Departure {
                    time: ta + residence(&mut rng),
                    seq,
                }));
                seq += 1;
            }
            next_arrival = draw_arrival(profile, &mut seg_idx, ta, &mut rng);
        } else {
            departures.pop();
            holders -= 1;
        }
    }

    // Remaining grid points up to the horizon.
    while next_sample_index <= total_samples {
        samples.push(ProfileSample {
            time: next_sample_index as f64 * sample_interval,
            holders,
            cumulative_rejected: rejected,
        });
        next_sample_index += 1;
    }

    Ok(samples)
}

/// Next arrival strictly after `from`, generated segment by segment.
/// Returns the arrival time and the segment it falls in, or `None` when the
/// profile's covered time runs out first.
fn draw_arrival(
    profile: &ArrivalProfile,
    seg_idx: &mut usize,
    from: f64,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Option<(f64, usize)> {
    let segments = profile.segments();
    let mut t = from;
    loop {
        while *seg_idx < segments.len() && profile.end_of(*seg_idx) <= t {
            *seg_idx += 1;
        }
        if *seg_idx >= segments.len() {
            return None;
        }
        let seg_end = profile.end_of(*seg_idx);
        let rate = segments[*seg_idx].combined_rate();
        if rate == 0.0 {
            if seg_end.is_infinite() {
                return None;
            }
            t = seg_end;
            continue;
        }
        let candidate = t + sample_exp(rng, rate);
        if candidate < seg_end {
            return Some((candidate, *seg_idx));
        }
        // Crossed the boundary: restart from it at the next segment's rate.
        t = seg_end;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> SwarmParams {
        SwarmParams::new(1.0, 1.0, 0.2, 1.0).unwrap()
    }

    #[test]
    fn profile_validation() {
        assert!(ArrivalProfile::piecewise(vec![]).is_err());
        assert!(ArrivalProfile::piecewise(vec![ProfileSegment::new(0.0, 1.0, 1.0)]).is_err());
        assert!(ArrivalProfile::piecewise(vec![ProfileSegment::new(1.0, -1.0, 1.0)]).is_err());
        assert!(ArrivalProfile::piecewise(vec![
            ProfileSegment::new(f64::INFINITY, 1.0, 1.0),
            ProfileSegment::new(1.0, 1.0, 1.0),
        ])
        .is_err());
        let constant = ArrivalProfile::constant(0.2, 1.0).unwrap();
        assert!(constant.is_constant());
        let two = ArrivalProfile::piecewise(vec![
            ProfileSegment::new(36.0, 2.0, 10.0),
            ProfileSegment::new(f64::INFINITY, 0.2, 1.0),
        ])
        .unwrap();
        assert!(!two.is_constant());
    }

    #[test]
    fn zero_rate_profile_stays_empty() {
        let profile = ArrivalProfile::constant(0.0, 0.0).unwrap();
        let samples =
            run_profile_sim(&params(), &profile, 100.0, 1.0, &SimConfig::new(4, 1)).unwrap();
        assert_eq!(samples.len(), 101);
        assert!(samples.iter().all(|s| s.holders == 0));
        assert_eq!(samples.last().unwrap().cumulative_rejected, 0);
    }

    #[test]
    fn horizon_must_be_covered() {
        let profile =
            ArrivalProfile::piecewise(vec![ProfileSegment::new(10.0, 0.2, 1.0)]).unwrap();
        let err = run_profile_sim(&params(), &profile, 20.0, 1.0, &SimConfig::new(4, 1));
        assert!(matches!(err, Err(SimError::InvalidProfile { .. })));
    }

    #[test]
    fn grid_is_regular_and_deterministic() {
        let profile = ArrivalProfile::constant(0.2, 1.0).unwrap();
        let a = run_profile_sim(&params(), &profile, 50.0, 0.5, &SimConfig::new(11, 1)).unwrap();
        let b = run_profile_sim(&params(), &profile, 50.0, 0.5, &SimConfig::new(11, 1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 101);
        for (k, s) in a.iter().enumerate() {
            assert_eq!(s.time, k as f64 * 0.5);
        }
        // Rejected counter never decreases, holders change by steps of one
        // arrival/departure at a time between close grid points.
        for w in a.windows(2) {
            assert!(w[1].cumulative_rejected >= w[0].cumulative_rejected);
        }
    }

    #[test]
    fn peers_are_rejected_while_idle() {
        // Publishers extremely rare, peers frequent: almost everything is
        // rejected and holders stay near zero.
        let p = SwarmParams::new(1.0, 1.0, 1e-6, 5.0).unwrap();
        let profile = ArrivalProfile::constant(1e-6, 5.0).unwrap();
        let samples = run_profile_sim(&p, &profile, 200.0, 1.0, &SimConfig::new(7, 1)).unwrap();
        let rejected = samples.last().unwrap().cumulative_rejected;
        assert!(rejected > 500, "rejected = {rejected}");
    }

    #[test]
    fn busy_share_helpers() {
        let mk = |time, holders| ProfileSample {
            time,
            holders,
            cumulative_rejected: 0,
        };
        let series = vec![mk(0.0, 0), mk(1.0, 2), mk(2.0, 1), mk(3.0, 0), mk(4.0, 3)];
        assert!((busy_fraction(&series) - 3.0 / 5.0).abs() < 1e-12);
        // The trailing open run is dropped.
        assert_eq!(busy_run_lengths(&series, 1.0), vec![2.0]);
    }

    #[test]
    fn rate_drop_moves_the_peak_into_the_first_segment() {
        // High arrivals for 36 time units, then a tenfold drop. The holder
        // peak should land in the first segment for nearly every seed.
        let p = SwarmParams::new(1.0, 1.0, 2.0, 10.0).unwrap();
        let profile = ArrivalProfile::piecewise(vec![
            ProfileSegment::new(36.0, 2.0, 10.0),
            ProfileSegment::new(f64::INFINITY, 0.2, 1.0),
        ])
        .unwrap();
        let mut peak_in_first = 0;
        for seed in 0..100 {
            let samples =
                run_profile_sim(&p, &profile, 72.0, 0.25, &SimConfig::new(seed, 1)).unwrap();
            let peak = samples
                .iter()
                .max_by_key(|s| s.holders)
                .expect("nonempty series");
            if peak.time < 36.0 {
                peak_in_first += 1;
            }
        }
        assert!(peak_in_first >= 95, "peak in segment 1 for {peak_in_first}/100 seeds");
    }
}
