//! Chunk-exchange schedules and their replay verifier.
//!
//! The cooperative download works in synchronous rounds over a file cut
//! into `n` equal parts. Round 1: the seeder hands part `k` to leecher `k`,
//! spending exactly one full copy of upload in total. Round 2: every
//! leecher forwards its part to the other `n - 1` leechers, spending
//! `(n-1)/n` of a copy each, after which everyone is complete. Free-riders,
//! who upload nothing, are served in round 3 by spreading the extra
//! `n * free_riders` part-transfers round-robin across the leechers, which
//! minimizes the largest per-leecher upload.
//!
//! All upload accounting is exact: a transfer moves one part, one part is
//! `1/n` of a copy, and totals are kept as integer part counts so the
//! budget claims can be checked with zero tolerance.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

/// Node id convention: 0 is the seeder, `1..=n` the cooperating leechers,
/// `n+1..=n+free_riders` the free-riders.
pub const SEEDER: usize = 0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleError {
    #[error("n must be at least 1 (no leechers, nothing to schedule)")]
    NoLeechers,
    #[error("{free_riders} free-riders exceed the {n} leechers available to serve them; capacity beyond one free-rider per leecher is not defined")]
    TooManyFreeRiders { free_riders: usize, n: usize },
    #[error("malformed transfer in round {round} ({sender} -> {receiver}, chunk {chunk}): {reason}")]
    MalformedTransfer {
        round: u32,
        sender: usize,
        receiver: usize,
        chunk: usize,
        reason: &'static str,
    },
    #[error("causality violation in round {round}: node {sender} sends chunk {chunk} to node {receiver} before holding it")]
    CausalityViolation {
        round: u32,
        sender: usize,
        receiver: usize,
        chunk: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    Seeder,
    Leecher,
    FreeRider,
}

/// One part moving from one node to another in a given round. Chunks are
/// numbered `1..=n`; each carries `1/n` of the file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Transfer {
    pub round: u32,
    pub sender: usize,
    pub receiver: usize,
    pub chunk: usize,
}

/// An ordered transfer plan for `n` leechers, `n` chunks and any number of
/// free-riders up to `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExchangeSchedule {
    n: usize,
    free_riders: usize,
    transfers: Vec<Transfer>,
}

impl ExchangeSchedule {
    /// Number of cooperating leechers; also the number of chunks.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn chunks(&self) -> usize {
        self.n
    }

    pub fn free_riders(&self) -> usize {
        self.free_riders
    }

    /// Seeder plus leechers plus free-riders.
    pub fn node_count(&self) -> usize {
        1 + self.n + self.free_riders
    }

    pub fn transfers(&self) -> &[Transfer] {
        &self.transfers
    }

    /// Size of one transferred part as an exact fraction of the file.
    pub fn chunk_fraction(&self) -> (u64, u64) {
        (1, self.n as u64)
    }

    pub fn role(&self, node: usize) -> Option<NodeRole> {
        match node {
            SEEDER => Some(NodeRole::Seeder),
            k if k <= self.n => Some(NodeRole::Leecher),
            k if k <= self.n + self.free_riders => Some(NodeRole::FreeRider),
            _ => None,
        }
    }

    /// Rebuilds a schedule from raw parts, e.g. one read back from CSV or
    /// edited by hand. Structure is checked here; causality is the
    /// verifier's job.
    pub fn from_parts(
        n: usize,
        free_riders: usize,
        transfers: Vec<Transfer>,
    ) -> Result<Self, ScheduleError> {
        if n == 0 {
            return Err(ScheduleError::NoLeechers);
        }
        let schedule = Self {
            n,
            free_riders,
            transfers,
        };
        schedule.check_structure()?;
        Ok(schedule)
    }

    fn check_structure(&self) -> Result<(), ScheduleError> {
        for t in &self.transfers {
            let bad = |reason| ScheduleError::MalformedTransfer {
                round: t.round,
                sender: t.sender,
                receiver: t.receiver,
                chunk: t.chunk,
                reason,
            };
            if t.round == 0 {
                return Err(bad("rounds are numbered from 1"));
            }
            if t.sender == t.receiver {
                return Err(bad("sender and receiver must differ"));
            }
            if t.sender >= self.node_count() || t.receiver >= self.node_count() {
                return Err(bad("node id out of range"));
            }
            if t.chunk == 0 || t.chunk > self.n {
                return Err(bad("chunk index out of range"));
            }
        }
        Ok(())
    }

    /// CSV export: `round,sender,receiver,chunk`, one row per transfer in
    /// schedule order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "round,sender,receiver,chunk")?;
        for t in &self.transfers {
            writeln!(w, "{},{},{},{}", t.round, t.sender, t.receiver, t.chunk)?;
        }
        Ok(())
    }
}

/// Builds the round-1/round-2 exchange, plus a balanced round 3 when
/// free-riders are present.
pub fn build_schedule(n: usize, free_riders: usize) -> Result<ExchangeSchedule, ScheduleError> {
    if n == 0 {
        return Err(ScheduleError::NoLeechers);
    }
    if free_riders > n {
        return Err(ScheduleError::TooManyFreeRiders { free_riders, n });
    }

    let mut transfers = Vec::with_capacity(n + n * (n - 1) + n * free_riders);

    // Round 1: the k-th leecher downloads the k-th part from the seeder.
    for k in 1..=n {
        transfers.push(Transfer {
            round: 1,
            sender: SEEDER,
            receiver: k,
            chunk: k,
        });
    }

    // Round 2: each leecher donates its part to the other n - 1 leechers.
    for k in 1..=n {
        for j in 1..=n {
            if j != k {
                transfers.push(Transfer {
                    round: 2,
                    sender: k,
                    receiver: j,
                    chunk: k,
                });
            }
        }
    }

    // Round 3: all leechers hold everything now; spread the free-rider
    // deliveries round-robin so the largest per-leecher upload is minimal.
    let mut next_sender = 0usize;
    for g in 0..free_riders {
        let rider = n + 1 + g;
        for chunk in 1..=n {
            let sender = 1 + (next_sender % n);
            next_sender += 1;
            transfers.push(Transfer {
                round: 3,
                sender,
                receiver: rider,
                chunk,
            });
        }
    }

    Ok(ExchangeSchedule {
        n,
        free_riders,
        transfers,
    })
}

/// Per-node outcome of a replay. Uploads are exact part counts; one part is
/// `1/n` of a copy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NodeReport {
    pub node: usize,
    pub role: NodeRole,
    pub upload_chunks: u64,
    pub download_chunks: u64,
    /// Whether the node holds all `n` chunks after the last round.
    pub complete: bool,
}

/// Replay result for a whole schedule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScheduleReport {
    pub n: usize,
    pub free_riders: usize,
    pub nodes: Vec<NodeReport>,
    pub seeder_upload_chunks: u64,
    pub max_leecher_upload_chunks: u64,
}

impl ScheduleReport {
    /// Upload of `node` in copy-equivalents.
    pub fn upload_copies(&self, node: usize) -> f64 {
        self.nodes[node].upload_chunks as f64 / self.n as f64
    }

    /// Upload of `node` as an exact fraction (numerator, denominator).
    pub fn upload_fraction(&self, node: usize) -> (u64, u64) {
        (self.nodes[node].upload_chunks, self.n as u64)
    }

    pub fn seeder_upload_copies(&self) -> f64 {
        self.seeder_upload_chunks as f64 / self.n as f64
    }

    pub fn max_leecher_upload_copies(&self) -> f64 {
        self.max_leecher_upload_chunks as f64 / self.n as f64
    }

    pub fn all_complete(&self) -> bool {
        self.nodes.iter().all(|node| node.complete)
    }

    /// Incomplete nodes, if any; an empty list means everyone finished.
    pub fn incomplete_nodes(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter(|node| !node.complete)
            .map(|node| node.node)
            .collect()
    }

    /// Flat JSON object with per-node arrays.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "n": self.n,
            "free_riders": self.free_riders,
            "chunk_fraction": format!("1/{}", self.n),
            "nodes": self.nodes.iter().map(|node| json!({
                "node": node.node,
                "role": node.role,
                "upload_chunks": node.upload_chunks,
                "upload_copies": node.upload_chunks as f64 / self.n as f64,
                "download_chunks": node.download_chunks,
                "complete": node.complete,
            })).collect::<Vec<_>>(),
            "seeder_upload_copies": self.seeder_upload_copies(),
            "max_leecher_upload_copies": self.max_leecher_upload_copies(),
            "all_complete": self.all_complete(),
        })
    }
}

/// Replays a schedule round by round, rejecting any send of a chunk the
/// sender does not hold at the start of that round (a chunk received in
/// round `t` becomes sendable in round `t + 1`; the seeder starts with all
/// of them). Incompleteness is reported, not an error.
pub fn verify_schedule(schedule: &ExchangeSchedule) -> Result<ScheduleReport, ScheduleError> {
    schedule.check_structure()?;

    let n = schedule.n();
    let nodes = schedule.node_count();
    // holdings[node][chunk - 1]
    let mut holdings = vec![vec![false; n]; nodes];
    holdings[SEEDER] = vec![true; n];

    let mut uploads = vec![0u64; nodes];
    let mut downloads = vec![0u64; nodes];

    let mut rounds: Vec<u32> = schedule.transfers().iter().map(|t| t.round).collect();
    rounds.sort_unstable();
    rounds.dedup();

    for round in rounds {
        let in_round: Vec<&Transfer> = schedule
            .transfers()
            .iter()
            .filter(|t| t.round == round)
            .collect();
        // Sends are checked against holdings at the start of the round.
        for t in &in_round {
            if !holdings[t.sender][t.chunk - 1] {
                return Err(ScheduleError::CausalityViolation {
                    round: t.round,
                    sender: t.sender,
                    receiver: t.receiver,
                    chunk: t.chunk,
                });
            }
        }
        for t in &in_round {
            uploads[t.sender] += 1;
            downloads[t.receiver] += 1;
            holdings[t.receiver][t.chunk - 1] = true;
        }
    }

    let node_reports: Vec<NodeReport> = (0..nodes)
        .map(|node| NodeReport {
            node,
            role: schedule.role(node).expect("node id in range"),
            upload_chunks: uploads[node],
            download_chunks: downloads[node],
            complete: holdings[node].iter().all(|&h| h),
        })
        .collect();

    let max_leecher_upload_chunks = (1..=n).map(|k| uploads[k]).max().unwrap_or(0);

    Ok(ScheduleReport {
        n,
        free_riders: schedule.free_riders(),
        seeder_upload_chunks: uploads[SEEDER],
        max_leecher_upload_chunks,
        nodes: node_reports,
    })
}
