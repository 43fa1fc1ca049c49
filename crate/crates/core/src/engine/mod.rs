//! Step-by-step evolution of the weight system.
//!
//! Group selection uses an exact anchor-plus-uniform sampler backed by a
//! Fenwick tree, so each step costs `O(log n + k)`.

mod fenwick;
mod rng;
mod run;
mod state;
mod weight;

pub use fenwick::Fenwick;
pub use rng::{stream_rng, RngStreams, Stream};
pub use run::{
    geometric_checkpoints, run, run_ensemble, snapshot_csv_rows, RunOptions, RunOutcome, RunOutput,
    Snapshot, SnapshotKind, SnapshotRow, DEFAULT_MAX_STEPS,
};
pub use state::{anchor_uniform_law, CompiledModel, SimState, Simulator, StepRecord};
pub use weight::{CompensatedSum, Weight};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("group size {k} out of range for population {population}")]
    GroupSizeOutOfRange { k: usize, population: usize },
    #[error("researcher index {i} out of range for population {population}")]
    IndexOutOfRange { i: usize, population: usize },
    #[error("integer weight overflow")]
    Overflow,
    #[error("weight draw {0} is not representable in this mode")]
    NonIntegerWeight(f64),
    #[error("threshold grid must be nondecreasing")]
    UnsortedGrid,
    #[error("empirical fractions need at least one step")]
    NoSteps,
    #[error("state needs at least one researcher")]
    EmptyState,
    #[error("n_steps = {requested} exceeds the configured cap {cap}")]
    StepCap { requested: u64, cap: u64 },
}
