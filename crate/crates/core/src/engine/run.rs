use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::state::{SimState, Simulator};
use super::weight::Weight;
use super::EngineError;
use crate::model::{Mode, ModelConfig};

/// Largest `n_steps` a run accepts unless overridden.
pub const DEFAULT_MAX_STEPS: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Step counts at which snapshots are taken; `None` means geometric
    /// spacing `10^3, 10^3.2, ...` up to `n_steps`.
    pub checkpoints: Option<Vec<u64>>,
    /// Largest weight recorded in `count` snapshots (discrete mode).
    pub count_j_max: usize,
    /// Thresholds for `tail` snapshots.
    pub tail_grid: Vec<f64>,
    pub max_steps: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            checkpoints: None,
            count_j_max: 50,
            tail_grid: vec![0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0],
            max_steps: DEFAULT_MAX_STEPS,
        }
    }
}

/// `10^3, 10^3.2, 10^3.4, ...` below `n_steps`, then `n_steps` itself.
pub fn geometric_checkpoints(n_steps: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut e = 3.0f64;
    loop {
        let n = 10f64.powf(e).round() as u64;
        if n >= n_steps {
            break;
        }
        out.push(n);
        e += 0.2;
    }
    if n_steps > 0 {
        out.push(n_steps);
    }
    out.dedup();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotKind {
    Count,
    Tail,
}

impl SnapshotKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SnapshotKind::Count => "count",
            SnapshotKind::Tail => "tail",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRow {
    pub kind: SnapshotKind,
    pub key: f64,
    pub value: f64,
}

/// Empirical distributions at one checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub n: u64,
    pub rows: Vec<SnapshotRow>,
}

/// Rows of the `n,kind,key,value` table (no header).
pub fn snapshot_csv_rows(snapshots: &[Snapshot]) -> String {
    let mut s = String::new();
    for snap in snapshots {
        for r in &snap.rows {
            let _ = writeln!(s, "{},{},{},{:e}", snap.n, r.kind.as_str(), r.key, r.value);
        }
    }
    s
}

#[derive(Debug, Clone)]
pub struct RunOutput<W: Weight> {
    pub state: SimState<W>,
    pub snapshots: Vec<Snapshot>,
}

/// Result of a run in either mode.
#[derive(Debug, Clone)]
pub enum RunOutcome {
    Discrete(RunOutput<u64>),
    Continuous(RunOutput<f64>),
}

impl RunOutcome {
    pub fn snapshots(&self) -> &[Snapshot] {
        match self {
            RunOutcome::Discrete(o) => &o.snapshots,
            RunOutcome::Continuous(o) => &o.snapshots,
        }
    }

    pub fn n(&self) -> u64 {
        match self {
            RunOutcome::Discrete(o) => o.state.n(),
            RunOutcome::Continuous(o) => o.state.n(),
        }
    }

    pub fn total(&self) -> f64 {
        match self {
            RunOutcome::Discrete(o) => o.state.total() as f64,
            RunOutcome::Continuous(o) => o.state.total(),
        }
    }

    pub fn weights_f64(&self) -> Vec<f64> {
        match self {
            RunOutcome::Discrete(o) => o.state.weights().iter().map(|&w| w as f64).collect(),
            RunOutcome::Continuous(o) => o.state.weights().to_vec(),
        }
    }

    pub fn tail_fraction(&self, grid: &[f64]) -> Result<Vec<f64>, EngineError> {
        match self {
            RunOutcome::Discrete(o) => o.state.empirical_tail_fraction(grid),
            RunOutcome::Continuous(o) => o.state.empirical_tail_fraction(grid),
        }
    }

    pub fn discrete_state(&self) -> Option<&SimState<u64>> {
        match self {
            RunOutcome::Discrete(o) => Some(&o.state),
            RunOutcome::Continuous(_) => None,
        }
    }
}

fn snapshot<W: Weight>(
    state: &SimState<W>,
    opts: &RunOptions,
    counts: Option<Vec<f64>>,
) -> Result<Snapshot, EngineError> {
    let mut rows = Vec::new();
    if let Some(counts) = counts {
        rows.extend(
            counts
                .into_iter()
                .enumerate()
                .skip(1)
                .map(|(j, v)| SnapshotRow {
                    kind: SnapshotKind::Count,
                    key: j as f64,
                    value: v,
                }),
        );
    }
    let tails = state.empirical_tail_fraction(&opts.tail_grid)?;
    rows.extend(opts.tail_grid.iter().zip(tails).map(|(&t, v)| SnapshotRow {
        kind: SnapshotKind::Tail,
        key: t,
        value: v,
    }));
    Ok(Snapshot { n: state.n(), rows })
}

fn run_typed<W: Weight>(
    cfg: &ModelConfig,
    opts: &RunOptions,
    replica: u64,
    counts: impl Fn(&SimState<W>) -> Result<Option<Vec<f64>>, EngineError>,
) -> Result<RunOutput<W>, EngineError> {
    let mut checkpoints = opts
        .checkpoints
        .clone()
        .unwrap_or_else(|| geometric_checkpoints(cfg.n_steps));
    checkpoints.retain(|&c| c > 0 && c <= cfg.n_steps);
    checkpoints.sort_unstable();
    checkpoints.dedup();

    let mut sim = Simulator::<W>::new(cfg, replica);
    let mut state = sim.init_state()?;
    let mut snapshots = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().peekable();
    for _ in 0..cfg.n_steps {
        sim.step(&mut state)?;
        if next.peek().is_some_and(|&&c| c == state.n()) {
            next.next();
            let c = counts(&state)?;
            snapshots.push(snapshot(&state, opts, c)?);
        }
    }
    Ok(RunOutput { state, snapshots })
}

/// Run one replica of a validated config for `cfg.n_steps` steps.
pub fn run(cfg: &ModelConfig, opts: &RunOptions, replica: u64) -> Result<RunOutcome, EngineError> {
    if cfg.n_steps > opts.max_steps {
        return Err(EngineError::StepCap {
            requested: cfg.n_steps,
            cap: opts.max_steps,
        });
    }
    match cfg.mode {
        Mode::Discrete => {
            let j_max = opts.count_j_max;
            run_typed::<u64>(cfg, opts, replica, |s| {
                s.empirical_weight_counts(j_max).map(Some)
            })
            .map(RunOutcome::Discrete)
        }
        Mode::Continuous => {
            run_typed::<f64>(cfg, opts, replica, |_| Ok(None)).map(RunOutcome::Continuous)
        }
    }
}

/// Independent replicas `0..replicas`, run in parallel.
pub fn run_ensemble(
    cfg: &ModelConfig,
    opts: &RunOptions,
    replicas: u32,
) -> Result<Vec<RunOutcome>, EngineError> {
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| run(cfg, opts, r))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_spacing() {
        let c = geometric_checkpoints(10_000);
        assert_eq!(c, vec![1000, 1585, 2512, 3981, 6310, 10000]);
        assert_eq!(geometric_checkpoints(500), vec![500]);
        assert!(geometric_checkpoints(0).is_empty());
    }

    #[test]
    fn zero_steps_keeps_initial_researcher() {
        let cfg = ModelConfig {
            n_steps: 0,
            ..ModelConfig::albert_barabasi()
        };
        let out = run(&cfg, &RunOptions::default(), 0).unwrap();
        assert_eq!(out.n(), 0);
        assert_eq!(out.weights_f64(), vec![1.0]);
        assert!(out.snapshots().is_empty());
    }

    #[test]
    fn step_cap_enforced() {
        let cfg = ModelConfig {
            n_steps: 11,
            ..ModelConfig::albert_barabasi()
        };
        let opts = RunOptions {
            max_steps: 10,
            ..RunOptions::default()
        };
        assert!(matches!(
            run(&cfg, &opts, 0),
            Err(EngineError::StepCap { .. })
        ));
    }

    #[test]
    fn same_seed_same_snapshots() {
        let cfg = ModelConfig {
            n_steps: 3000,
            ..ModelConfig::albert_barabasi()
        };
        let opts = RunOptions::default();
        let a = run(&cfg, &opts, 0).unwrap();
        let b = run(&cfg, &opts, 0).unwrap();
        assert_eq!(
            snapshot_csv_rows(a.snapshots()),
            snapshot_csv_rows(b.snapshots())
        );
        let c = run(&cfg, &opts, 1).unwrap();
        assert_ne!(
            snapshot_csv_rows(a.snapshots()),
            snapshot_csv_rows(c.snapshots())
        );
    }
}
