//! A content-availability laboratory for P2P file-sharing swarms.
//!
//! Four pieces fit together:
//!
//! - [`analytic`] — closed-form expected busy periods, the bundling factor
//!   and the long-run availability fraction of the infinite-server swarm
//!   model;
//! - [`simulator`] — a seeded discrete-event simulator that validates the
//!   closed form and covers time-varying arrival rates it cannot;
//! - [`schedule`] — the cooperative chunk-exchange protocol with exact
//!   upload accounting, including free-rider accommodation;
//! - [`trace`] — ingestion and life-cycle statistics for timestamped
//!   seeder/leecher tracker observations.
//!
//! Everything is a pure function of its value inputs. All randomness flows
//! from explicit 64-bit seeds; identical inputs produce identical outputs
//! on the same build.

pub mod analytic;
pub mod schedule;
pub mod simulator;
pub mod trace;

pub use analytic::{AnalyticError, AnalyticReport, SwarmParams};
pub use simulator::{BusyPeriodStats, SimConfig, SimError, SimEvent};
pub use trace::TraceRecord;
