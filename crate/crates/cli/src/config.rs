//! TOML run configuration: model laws plus per-verb sections.

use std::path::Path;

use pubweight::engine::DEFAULT_MAX_STEPS;
use pubweight::model::{AuthorCountLaw, BonusScheme, Mode, ModelConfig, WeightLaw};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub mode: Mode,
    pub n_steps: u64,
    #[serde(default)]
    pub seed: u64,
    pub x_law: WeightLaw,
    pub nu_law: AuthorCountLaw,
    pub bonus: BonusScheme,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub snapshots: SnapshotSection,
    #[serde(default)]
    pub inclusion: InclusionSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    /// Largest `j` of the discrete recursion.
    pub j_max: usize,
    /// Window for the tail constant and the doubling-ratio exponent;
    /// defaults to `[J / 10, J / 2 - 1]`.
    pub window: Option<(usize, usize)>,
    pub h: f64,
    pub t_max: f64,
    /// `t`-range of the log-slope fit of `G`.
    pub t_window: (f64, f64),
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            j_max: 10_000,
            window: None,
            h: 0.01,
            t_max: 50.0,
            t_window: (20.0, 40.0),
        }
    }
}

impl SolverSection {
    pub fn window_or_default(&self) -> (usize, usize) {
        self.window.unwrap_or((
            (self.j_max / 10).max(1),
            (self.j_max / 2).saturating_sub(1).max(1),
        ))
    }
}

/// Tolerances set here make `compare` fail with exit code 4 when exceeded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub tail_fraction: f64,
    /// Extra Hill fractions reported alongside `tail_fraction`.
    pub hill_sensitivity: Vec<f64>,
    /// Discrete comparisons use `j = 1..=compare_j_max`.
    pub compare_j_max: usize,
    /// Continuous comparisons use these `t`.
    pub compare_grid: Vec<f64>,
    pub replicas: u32,
    pub sup_tolerance: Option<f64>,
    /// Relative tolerance on the exponent of the solved limit.
    pub exponent_tolerance: Option<f64>,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            tail_fraction: pubweight::analysis::DEFAULT_TAIL_FRACTION,
            hill_sensitivity: vec![0.001, 0.005, 0.05],
            compare_j_max: 10,
            compare_grid: vec![0.5, 1.0, 2.0, 5.0, 10.0],
            replicas: 1,
            sup_tolerance: None,
            exponent_tolerance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnapshotSection {
    pub checkpoints: Option<Vec<u64>>,
    pub j_max: usize,
    pub tail_grid: Vec<f64>,
    /// Also write every final weight of replica 0.
    pub full_dump: bool,
    pub max_steps: u64,
}

impl Default for SnapshotSection {
    fn default() -> Self {
        let d = pubweight::engine::RunOptions::default();
        SnapshotSection {
            checkpoints: None,
            j_max: d.count_j_max,
            tail_grid: d.tail_grid,
            full_dump: false,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InclusionSection {
    pub weights: Vec<u64>,
    pub k: usize,
    pub draws: u64,
    /// Largest allowed `|empirical - exact|`.
    pub tolerance: Option<f64>,
}

impl Default for InclusionSection {
    fn default() -> Self {
        InclusionSection {
            weights: vec![1, 2, 3],
            k: 2,
            draws: 1_000_000,
            tolerance: None,
        }
    }
}

/// Command-line values that replace config entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub n_steps: Option<u64>,
    pub replicas: Option<u32>,
    pub j_max: Option<usize>,
    pub h: Option<f64>,
    pub t_max: Option<f64>,
    pub tail_fraction: Option<f64>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.n_steps {
            self.n_steps = v;
        }
        if let Some(v) = o.replicas {
            self.analysis.replicas = v;
        }
        if let Some(v) = o.j_max {
            self.solver.j_max = v;
        }
        if let Some(v) = o.h {
            self.solver.h = v;
        }
        if let Some(v) = o.t_max {
            self.solver.t_max = v;
        }
        if let Some(v) = o.tail_fraction {
            self.analysis.tail_fraction = v;
        }
    }

    pub fn model(&self) -> ModelConfig {
        ModelConfig {
            mode: self.mode,
            n_steps: self.n_steps,
            seed: self.seed,
            x_law: self.x_law.clone(),
            nu_law: self.nu_law.clone(),
            bonus: self.bonus.clone(),
        }
    }

    /// SHA-256 of the effective config (after overrides), as hex.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const AB: &str = r#"
mode = "discrete"
n_steps = 1000
seed = 5

[x_law]
kind = "constant"
value = 1.0

[nu_law]
pmf = [[1, 1.0]]

[bonus]
scheme = "full_bonus"
y_law = { kind = "constant", value = 1.0 }
"#;

    #[test]
    fn parses_minimal_config() {
        let c = ConfigFile::parse(AB).unwrap();
        let m = c.model();
        assert_eq!(
            m,
            ModelConfig {
                n_steps: 1000,
                seed: 5,
                ..ModelConfig::albert_barabasi()
            }
        );
        assert_eq!(c.solver, SolverSection::default());
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(ConfigFile::parse(&format!("{AB}\n[solver]\nstep = 3\n")).is_err());
        assert!(ConfigFile::parse(&AB.replace("n_steps", "steps")).is_err());
    }

    #[test]
    fn overrides_change_digest() {
        let mut c = ConfigFile::parse(AB).unwrap();
        let before = c.digest();
        assert_eq!(before, ConfigFile::parse(AB).unwrap().digest());
        c.apply(&Overrides {
            seed: Some(9),
            j_max: Some(3),
            ..Overrides::default()
        });
        assert_eq!(c.seed, 9);
        assert_eq!(c.solver.j_max, 3);
        assert_ne!(c.digest(), before);
    }

    #[test]
    fn default_window() {
        let s = SolverSection::default();
        assert_eq!(s.window_or_default(), (1000, 4999));
    }
}
