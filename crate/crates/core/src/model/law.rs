//! Whitelisted distribution families for initial weights and bonuses.
//!
//! Every family has a finite moment generating function near zero, so the
//! light-tail hypotheses on `X`, `Y` and `Z` hold by construction.

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma as GammaSampler};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Gamma as GammaDist};

const PMF_SUM_TOL: f64 = 1e-12;

/// Law of a nonnegative weight (initial weight, bonus or paper total).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightLaw {
    /// Finite pmf over nonnegative integers, as `(value, probability)` pairs.
    DiscretePmf {
        support: Vec<(u64, f64)>,
    },
    Exponential {
        rate: f64,
    },
    Gamma {
        shape: f64,
        scale: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    Constant {
        value: f64,
    },
}

impl WeightLaw {
    pub fn constant(value: f64) -> Self {
        WeightLaw::Constant { value }
    }

    pub fn pmf(support: &[(u64, f64)]) -> Self {
        WeightLaw::DiscretePmf {
            support: support.to_vec(),
        }
    }

    pub fn exponential(rate: f64) -> Self {
        WeightLaw::Exponential { rate }
    }

    pub fn gamma(shape: f64, scale: f64) -> Self {
        WeightLaw::Gamma { shape, scale }
    }

    pub fn uniform(lo: f64, hi: f64) -> Self {
        WeightLaw::Uniform { lo, hi }
    }

    /// Structural problems with the parameters, as human-readable messages.
    pub fn parameter_problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            WeightLaw::DiscretePmf { support } => {
                if support.is_empty() {
                    out.push("pmf support is empty".to_string());
                }
                if support.iter().any(|&(_, p)| !p.is_finite() || p < 0.0) {
                    out.push("pmf has a negative or non-finite probability".to_string());
                }
                let total: f64 = support.iter().map(|&(_, p)| p).sum();
                if (total - 1.0).abs() > PMF_SUM_TOL {
                    out.push(format!("pmf probabilities sum to {total}, not 1"));
                }
            }
            WeightLaw::Exponential { rate } => {
                if !(*rate > 0.0 && rate.is_finite()) {
                    out.push(format!("exponential rate must be positive, got {rate}"));
                }
            }
            WeightLaw::Gamma { shape, scale } => {
                if !(*shape > 0.0 && shape.is_finite() && *scale > 0.0 && scale.is_finite()) {
                    out.push(format!(
                        "gamma shape and scale must be positive, got ({shape}, {scale})"
                    ));
                }
            }
            WeightLaw::Uniform { lo, hi } => {
                if !(*lo >= 0.0 && hi > lo && hi.is_finite()) {
                    out.push(format!("uniform needs 0 <= lo < hi, got [{lo}, {hi}]"));
                }
            }
            WeightLaw::Constant { value } => {
                if !(*value > 0.0 && value.is_finite()) {
                    out.push(format!("constant must be positive, got {value}"));
                }
            }
        }
        out
    }

    /// True for families whose values are all integers.
    pub fn is_integer_valued(&self) -> bool {
        match self {
            WeightLaw::DiscretePmf { .. } => true,
            WeightLaw::Constant { value } => value.fract() == 0.0,
            _ => false,
        }
    }

    /// True for families with a density.
    pub fn is_continuous(&self) -> bool {
        matches!(
            self,
            WeightLaw::Exponential { .. } | WeightLaw::Gamma { .. } | WeightLaw::Uniform { .. }
        )
    }

    /// Atoms with positive probability, for the atomic families.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            WeightLaw::DiscretePmf { support } => {
                let mut acc: Vec<(f64, f64)> = Vec::new();
                for &(v, p) in support.iter().filter(|&&(_, p)| p > 0.0) {
                    match acc.iter_mut().find(|(a, _)| *a == v as f64) {
                        Some(slot) => slot.1 += p,
                        None => acc.push((v as f64, p)),
                    }
                }
                acc.sort_by(|a, b| a.0.total_cmp(&b.0));
                Some(acc)
            }
            WeightLaw::Constant { value } => Some(vec![(*value, 1.0)]),
            _ => None,
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            WeightLaw::DiscretePmf { support } => support.iter().map(|&(v, p)| v as f64 * p).sum(),
            WeightLaw::Exponential { rate } => 1.0 / rate,
            WeightLaw::Gamma { shape, scale } => shape * scale,
            WeightLaw::Uniform { lo, hi } => 0.5 * (lo + hi),
            WeightLaw::Constant { value } => *value,
        }
    }

    /// `P(V > t)`.
    pub fn survival(&self, t: f64) -> f64 {
        match self {
            WeightLaw::DiscretePmf { support } => support
                .iter()
                .filter(|&&(v, _)| v as f64 > t)
                .map(|&(_, p)| p)
                .sum(),
            WeightLaw::Exponential { rate } => {
                if t <= 0.0 {
                    1.0
                } else {
                    (-rate * t).exp()
                }
            }
            WeightLaw::Gamma { shape, scale } => {
                if t <= 0.0 {
                    1.0
                } else {
                    gamma_dist(*shape, *scale).sf(t)
                }
            }
            WeightLaw::Uniform { lo, hi } => {
                if t < *lo {
                    1.0
                } else if t >= *hi {
                    0.0
                } else {
                    (hi - t) / (hi - lo)
                }
            }
            WeightLaw::Constant { value } => {
                if *value > t {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `P(V = v)`; zero for the continuous families.
    pub fn point_mass(&self, v: f64) -> f64 {
        match self {
            WeightLaw::DiscretePmf { support } => support
                .iter()
                .filter(|&&(x, _)| x as f64 == v)
                .map(|&(_, p)| p)
                .sum(),
            WeightLaw::Constant { value } if *value == v => 1.0,
            _ => 0.0,
        }
    }

    /// Density at `t`, for the continuous families.
    pub fn density(&self, t: f64) -> Option<f64> {
        let d = match self {
            WeightLaw::Exponential { rate } => {
                if t < 0.0 {
                    0.0
                } else {
                    rate * (-rate * t).exp()
                }
            }
            WeightLaw::Gamma { shape, scale } => {
                if t <= 0.0 {
                    if *shape < 1.0 && t == 0.0 {
                        f64::INFINITY
                    } else if *shape == 1.0 && t == 0.0 {
                        1.0 / scale
                    } else {
                        0.0
                    }
                } else {
                    gamma_dist(*shape, *scale).pdf(t)
                }
            }
            WeightLaw::Uniform { lo, hi } => {
                if t >= *lo && t <= *hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            _ => return None,
        };
        Some(d)
    }

    /// Points where the density is discontinuous (interior breakpoints for quadrature).
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            WeightLaw::Uniform { lo, hi } => vec![*lo, *hi],
            _ => Vec::new(),
        }
    }

    /// A point beyond which `P(V > t) < eps`.
    pub fn tail_bound(&self, eps: f64) -> f64 {
        match self {
            WeightLaw::DiscretePmf { support } => {
                support.iter().map(|&(v, _)| v as f64).fold(0.0, f64::max)
            }
            WeightLaw::Exponential { rate } => -eps.ln() / rate,
            WeightLaw::Gamma { .. } => {
                let mut t = self.mean().max(1e-3);
                while self.survival(t) >= eps {
                    t *= 1.5;
                }
                t
            }
            WeightLaw::Uniform { hi, .. } => *hi,
            WeightLaw::Constant { value } => *value,
        }
    }

    /// Compile into a reusable sampler. The law must have valid parameters.
    pub fn sampler(&self) -> LawSampler {
        match self {
            WeightLaw::DiscretePmf { support } => {
                let atoms = self.atoms().unwrap_or_default();
                debug_assert!(!support.is_empty());
                LawSampler::Atoms(CdfTable::new(&atoms))
            }
            WeightLaw::Exponential { rate } => {
                LawSampler::Exponential(Exp::new(*rate).expect("validated rate"))
            }
            WeightLaw::Gamma { shape, scale } => LawSampler::Gamma(
                GammaSampler::new(*shape, *scale).expect("validated gamma parameters"),
            ),
            WeightLaw::Uniform { lo, hi } => LawSampler::Uniform { lo: *lo, hi: *hi },
            WeightLaw::Constant { value } => LawSampler::Constant(*value),
        }
    }
}

fn gamma_dist(shape: f64, scale: f64) -> GammaDist {
    GammaDist::new(shape, 1.0 / scale).expect("validated gamma parameters")
}

/// Inverse-CDF table over a finite set of atoms.
#[derive(Debug, Clone)]
pub struct CdfTable {
    values: Vec<f64>,
    cdf: Vec<f64>,
}

impl CdfTable {
    pub fn new(atoms: &[(f64, f64)]) -> Self {
        let mut values = Vec::with_capacity(atoms.len());
        let mut cdf = Vec::with_capacity(atoms.len());
        let mut acc = 0.0;
        for &(v, p) in atoms {
            acc += p;
            values.push(v);
            cdf.push(acc);
        }
        CdfTable { values, cdf }
    }

    /// Draw conditioned on the first `len` atoms.
    pub fn sample_prefix<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> f64 {
        let mass = self.cdf[len - 1];
        let u = rng.random::<f64>() * mass;
        let pos = self.cdf[..len].partition_point(|&c| c <= u);
        self.values[pos.min(len - 1)]
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_prefix(self.values.len(), rng)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone)]
pub enum LawSampler {
    Atoms(CdfTable),
    Exponential(Exp<f64>),
    Gamma(GammaSampler<f64>),
    Uniform { lo: f64, hi: f64 },
    Constant(f64),
}

impl LawSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            LawSampler::Atoms(table) => table.sample(rng),
            LawSampler::Exponential(d) => d.sample(rng),
            LawSampler::Gamma(d) => d.sample(rng),
            LawSampler::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            LawSampler::Constant(v) => *v,
        }
    }
}

/// View of a law scaled by a positive factor: `scale * V`.
#[derive(Debug, Clone, Copy)]
pub struct ScaledLaw<'a> {
    pub law: &'a WeightLaw,
    pub scale: f64,
}

impl ScaledLaw<'_> {
    pub fn mean(&self) -> f64 {
        self.scale * self.law.mean()
    }

    pub fn survival(&self, t: f64) -> f64 {
        self.law.survival(t / self.scale)
    }

    pub fn point_mass(&self, v: f64) -> f64 {
        self.law.point_mass(v / self.scale)
    }

    pub fn density(&self, t: f64) -> Option<f64> {
        self.law.density(t / self.scale).map(|d| d / self.scale)
    }

    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        self.law
            .atoms()
            .map(|a| a.into_iter().map(|(v, p)| (v * self.scale, p)).collect())
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.law
            .breakpoints()
            .into_iter()
            .map(|b| b * self.scale)
            .collect()
    }

    pub fn tail_bound(&self, eps: f64) -> f64 {
        self.law.tail_bound(eps) * self.scale
    }
}
