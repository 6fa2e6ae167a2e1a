//! Event-driven simulation of the open exclusion process with long jumps.

mod config;
mod engine;
mod martingale;

pub use config::{empirical_pairing, sample_initial, Configuration};
pub use engine::{
    exit_rate, simulate, simulate_with, AcceptanceStats, Engine, Event, Proposal, SimOptions,
    SimResult, Snapshot, SnapshotData, SnapshotMode, FULL_SNAPSHOT_LIMIT,
};
pub use martingale::{track_martingale, MartingalePoint};
