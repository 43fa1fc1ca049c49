use std::fmt;

use serde::{Deserialize, Serialize};

use super::law::{ScaledLaw, WeightLaw};

const PMF_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Discrete,
    Continuous,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Discrete => f.write_str("discrete"),
            Mode::Continuous => f.write_str("continuous"),
        }
    }
}

/// How the author count is cut down while the population is still smaller
/// than the drawn count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// `min(population, nu)`.
    #[default]
    Min,
    /// `nu` conditioned on `nu <= population`.
    Conditional,
}

/// Finite-support law of the number of authors of a paper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuthorCountLaw {
    pub pmf: Vec<(u32, f64)>,
    #[serde(default)]
    pub truncation: Truncation,
}

impl AuthorCountLaw {
    pub fn constant(k: u32) -> Self {
        AuthorCountLaw {
            pmf: vec![(k, 1.0)],
            truncation: Truncation::Min,
        }
    }

    pub fn new(pmf: &[(u32, f64)]) -> Self {
        AuthorCountLaw {
            pmf: pmf.to_vec(),
            truncation: Truncation::Min,
        }
    }

    /// `(k, p)` pairs with `p > 0`, merged and sorted by `k`.
    pub fn support(&self) -> Vec<(u32, f64)> {
        let mut acc: Vec<(u32, f64)> = Vec::new();
        for &(k, p) in self.pmf.iter().filter(|&&(_, p)| p > 0.0) {
            match acc.iter_mut().find(|(a, _)| *a == k) {
                Some(slot) => slot.1 += p,
                None => acc.push((k, p)),
            }
        }
        acc.sort_by_key(|&(k, _)| k);
        acc
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().map(|&(k, p)| k as f64 * p).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.pmf.iter().map(|&(k, p)| (k as f64).powi(2) * p).sum()
    }

    pub fn max_k(&self) -> u32 {
        self.support().last().map_or(0, |&(k, _)| k)
    }

    pub fn min_k(&self) -> u32 {
        self.support().first().map_or(0, |&(k, _)| k)
    }

    /// Every group size that can occur at some population size.
    pub fn realizable_sizes(&self) -> Vec<u32> {
        let forced_below = match self.truncation {
            Truncation::Min => self.max_k(),
            Truncation::Conditional => self.min_k(),
        };
        let mut ks: Vec<u32> = self.support().iter().map(|&(k, _)| k).collect();
        ks.extend(1..forced_below);
        ks.sort_unstable();
        ks.dedup();
        ks
    }
}

/// How the total weight of a paper is shared among its authors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case", deny_unknown_fields)]
pub enum BonusScheme {
    /// Paper weight `Z` split evenly: each author gets `Z / nu`.
    EqualSplit { z_law: WeightLaw },
    /// One draw `Y` credited in full to every author, so `Z = nu * Y`.
    FullBonus { y_law: WeightLaw },
    /// Independent draws per author; `Z` is their sum.
    ExchangeableIid { y_law: WeightLaw },
}

impl BonusScheme {
    pub fn source_law(&self) -> &WeightLaw {
        match self {
            BonusScheme::EqualSplit { z_law } => z_law,
            BonusScheme::FullBonus { y_law } | BonusScheme::ExchangeableIid { y_law } => y_law,
        }
    }

    /// Law of one author's bonus given `k` authors.
    pub fn conditional(&self, k: u32) -> ScaledLaw<'_> {
        match self {
            BonusScheme::EqualSplit { z_law } => ScaledLaw {
                law: z_law,
                scale: 1.0 / k as f64,
            },
            BonusScheme::FullBonus { y_law } | BonusScheme::ExchangeableIid { y_law } => {
                ScaledLaw {
                    law: y_law,
                    scale: 1.0,
                }
            }
        }
    }

    fn label(&self) -> &'static str {
        match self {
            BonusScheme::EqualSplit { .. } => "Z",
            _ => "Y",
        }
    }
}

/// Laws of the model plus run parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub mode: Mode,
    pub n_steps: u64,
    pub seed: u64,
    pub x_law: WeightLaw,
    pub nu_law: AuthorCountLaw,
    pub bonus: BonusScheme,
}

/// One failed assumption or compatibility rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// `A1`..`A8`, or `MODE` for the discrete/continuous hypotheses.
    pub tag: String,
    pub message: String,
}

impl Violation {
    fn new(tag: &str, message: impl Into<String>) -> Self {
        Violation {
            tag: tag.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.tag, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{} assumption violation(s): {}", .0.len(), join(.0))]
pub struct ValidationErrors(pub Vec<Violation>);

fn join(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl ModelConfig {
    /// The single-author, unit-weight configuration that reduces to the
    /// Albert–Barabási tree.
    pub fn albert_barabasi() -> Self {
        ModelConfig {
            mode: Mode::Discrete,
            n_steps: 1000,
            seed: 1,
            x_law: WeightLaw::constant(1.0),
            nu_law: AuthorCountLaw::constant(1),
            bonus: BonusScheme::FullBonus {
                y_law: WeightLaw::constant(1.0),
            },
        }
    }

    /// Check every assumption; returns the config unchanged when all hold.
    pub fn validated(self) -> Result<Self, ValidationErrors> {
        let v = self.violations();
        if v.is_empty() {
            Ok(self)
        } else {
            Err(ValidationErrors(v))
        }
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();

        for p in self.x_law.parameter_problems() {
            out.push(Violation::new("A1", format!("X law: {p}")));
        }
        let x_nonpositive = match self.x_law.atoms() {
            Some(atoms) => atoms.iter().any(|&(v, _)| v <= 0.0),
            None => false,
        };
        if x_nonpositive {
            out.push(Violation::new(
                "A1",
                "initial weights must be positive; X support contains 0",
            ));
        }

        let nu = &self.nu_law;
        if nu.pmf.is_empty() {
            out.push(Violation::new("A4", "author-count pmf is empty"));
        }
        if nu.pmf.iter().any(|&(k, _)| k == 0) {
            out.push(Violation::new("A4", "ν_n ≥ 1 required; pmf contains k=0"));
        }
        if nu.pmf.iter().any(|&(_, p)| !p.is_finite() || p < 0.0) {
            out.push(Violation::new(
                "A4",
                "author-count pmf has a negative or non-finite probability",
            ));
        }
        let nu_total: f64 = nu.pmf.iter().map(|&(_, p)| p).sum();
        if (nu_total - 1.0).abs() > PMF_SUM_TOL {
            out.push(Violation::new(
                "A4",
                format!("author-count probabilities sum to {nu_total}, not 1"),
            ));
        }

        let source = self.bonus.source_law();
        let label = self.bonus.label();
        for p in source.parameter_problems() {
            out.push(Violation::new("A7", format!("{label} law: {p}")));
        }

        // Positivity checks need sane parameters to be meaningful.
        if !out.is_empty() {
            return out;
        }

        if self.x_law.survival(0.0) <= 0.0 {
            out.push(Violation::new("A8", "P(X > 0) = 0"));
        }
        let p_y_pos: f64 = nu
            .support()
            .iter()
            .map(|&(k, p)| p * self.bonus.conditional(k).survival(0.0))
            .sum();
        if p_y_pos <= 0.0 {
            out.push(Violation::new("A8", "P(Y > 0) = 0"));
        }

        match self.mode {
            Mode::Discrete => self.discrete_violations(&mut out),
            Mode::Continuous => {
                if !self.x_law.is_continuous() {
                    out.push(Violation::new(
                        "MODE",
                        "continuous mode requires a continuous X law",
                    ));
                }
                if !source.is_continuous() {
                    out.push(Violation::new(
                        "MODE",
                        format!("continuous mode requires a continuous {label} law"),
                    ));
                }
            }
        }
        out
    }

    fn discrete_violations(&self, out: &mut Vec<Violation>) {
        if !self.x_law.is_integer_valued() {
            out.push(Violation::new(
                "MODE",
                "discrete mode requires an integer-valued X law",
            ));
        }
        let source = self.bonus.source_law();
        if !source.is_integer_valued() {
            out.push(Violation::new(
                "MODE",
                format!(
                    "discrete mode requires an integer-valued {} law",
                    self.bonus.label()
                ),
            ));
            return;
        }
        if let BonusScheme::EqualSplit { z_law } = &self.bonus {
            let atoms = z_law.atoms().unwrap_or_default();
            for k in self.nu_law.realizable_sizes() {
                if let Some(&(z, _)) = atoms.iter().find(|&&(z, _)| (z / k as f64).fract() != 0.0) {
                    out.push(Violation::new(
                        "MODE",
                        format!("equal split of Z={z} among k={k} authors is not an integer"),
                    ));
                }
            }
        }
        let g = self
            .y_atoms()
            .iter()
            .filter(|&&(v, _)| v > 0.0)
            .fold(0u64, |g, &(v, _)| gcd(g, v as u64));
        if g > 1 {
            out.push(Violation::new("A8", format!("gcd of Y support is {g}")));
        }
    }

    /// Positive-probability atoms of the marginal bonus `Y` (atomic laws only).
    pub fn y_atoms(&self) -> Vec<(f64, f64)> {
        let mut acc: Vec<(f64, f64)> = Vec::new();
        for (k, pk) in self.nu_law.support() {
            let Some(atoms) = self.bonus.conditional(k).atoms() else {
                return Vec::new();
            };
            for (v, p) in atoms {
                match acc.iter_mut().find(|(a, _)| *a == v) {
                    Some(slot) => slot.1 += pk * p,
                    None => acc.push((v, pk * p)),
                }
            }
        }
        acc.sort_by(|a, b| a.0.total_cmp(&b.0));
        acc
    }
}
