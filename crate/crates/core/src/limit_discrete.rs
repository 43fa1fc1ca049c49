//! Limiting weight distribution for integer weights.
//!
//! `x_j` is the almost-sure limit of the share of researchers with weight
//! exactly `j`. It solves a forward recursion in `j` whose coefficients
//! split as `w_{j,i} = a_i + b_i / j + c_{j,i}`; the decay exponent follows
//! from the sums of `a` and `b`.

use serde::{Deserialize, Serialize};

use crate::model::{Mode, ModelConfig, Moments};

/// Values below this are carried in log space.
const LOG_SWITCH: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("this solver needs a {expected} mode config")]
    WrongMode { expected: Mode },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("window ({lo}, {hi}) contains a zero value at j = {j}")]
    ZeroInWindow { lo: usize, hi: usize, j: usize },
    #[error("exponent routes disagree: closed form {closed_form} vs ratio {ratio}")]
    ExponentMismatch { closed_form: f64, ratio: f64 },
    #[error("fixed point did not converge at grid point {k} (bracket width {bracket})")]
    NoConvergence { k: usize, bracket: f64 },
}

/// Solution of the forward recursion for `j = 1..=J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteLimit {
    /// `x[j - 1] = x_j`; may underflow to 0 where `log_x` is still finite.
    pub x: Vec<f64>,
    /// `ln x_j` (`-inf` where `x_j = 0` exactly).
    pub log_x: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub c_estimate: Option<f64>,
    /// Largest relative re-substitution residual.
    pub residual_max: f64,
}

impl DiscreteLimit {
    pub fn j_max(&self) -> usize {
        self.x.len()
    }

    pub fn get(&self, j: usize) -> f64 {
        self.x[j - 1]
    }
}

/// Positive bonus atoms `(i, P(Y = i), H(i))`.
fn bonus_terms(cfg: &ModelConfig) -> Vec<(usize, f64, f64)> {
    cfg.y_atoms()
        .into_iter()
        .filter(|&(v, _)| v > 0.0)
        .map(|(v, p)| {
            let i = v as usize;
            let h = cfg.eval_h_atom(i as u64).expect("discrete mode");
            (i, p, h)
        })
        .collect()
}

fn require_discrete(cfg: &ModelConfig) -> Result<(), SolverError> {
    if cfg.mode != Mode::Discrete {
        return Err(SolverError::WrongMode {
            expected: Mode::Discrete,
        });
    }
    Ok(())
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|&t| (t - m).exp()).sum::<f64>().ln()
}

/// `x_j` for `j = 1..=j_max` by forward substitution.
pub fn solve_recursion(cfg: &ModelConfig, j_max: usize) -> Result<DiscreteLimit, SolverError> {
    require_discrete(cfg)?;
    if j_max == 0 {
        return Err(SolverError::InvalidArgument("J must be at least 1".into()));
    }
    let m = cfg.moments();
    let growth = m.growth_rate();
    let terms = bonus_terms(cfg);
    let px = |j: usize| cfg.x_law.point_mass(j as f64);

    let mut x = vec![0.0; j_max];
    let mut log_x = vec![f64::NEG_INFINITY; j_max];
    let mut in_log = false;
    let mut scratch = Vec::with_capacity(terms.len() + 1);

    for j in 1..=j_max {
        let denom = m.alpha * j as f64 + m.beta + 1.0;
        if !in_log {
            let mut num = px(j);
            for &(i, py, h) in terms.iter().take_while(|t| t.0 < j) {
                num += x[j - i - 1] * ((j - i) as f64 * py / growth + h);
            }
            let v = num / denom;
            x[j - 1] = v;
            log_x[j - 1] = v.ln();
            if v > 0.0 && v < LOG_SWITCH {
                in_log = true;
            }
        } else {
            scratch.clear();
            let p = px(j);
            if p > 0.0 {
                scratch.push(p.ln());
            }
            for &(i, py, h) in terms.iter().take_while(|t| t.0 < j) {
                let coef = (j - i) as f64 * py / growth + h;
                if coef > 0.0 {
                    scratch.push(log_x[j - i - 1] + coef.ln());
                }
            }
            let lv = log_sum_exp(&scratch) - denom.ln();
            log_x[j - 1] = lv;
            x[j - 1] = lv.exp();
        }
    }

    let residual_max = recursion_residual(cfg, &m, &terms, &log_x);
    Ok(DiscreteLimit {
        x,
        log_x,
        alpha: m.alpha,
        beta: m.beta,
        gamma: m.growth_rate() / m.ey + 1.0,
        c_estimate: None,
        residual_max,
    })
}

/// Re-substitute the solution: for each `j` compare `ln x_j` with the log of
/// the recursion's right-hand side, summed in a different order.
fn recursion_residual(
    cfg: &ModelConfig,
    m: &Moments,
    terms: &[(usize, f64, f64)],
    log_x: &[f64],
) -> f64 {
    let growth = m.growth_rate();
    let mut worst = 0.0f64;
    let mut buf = Vec::new();
    for j in 1..=log_x.len() {
        buf.clear();
        for &(i, py, h) in terms.iter().rev().filter(|t| t.0 < j) {
            let coef = (j - i) as f64 * py / growth + h;
            if coef > 0.0 {
                buf.push(log_x[j - i - 1] + coef.ln());
            }
        }
        let p = cfg.x_law.point_mass(j as f64);
        if p > 0.0 {
            buf.push(p.ln());
        }
        let rhs = log_sum_exp(&buf) - (m.alpha * j as f64 + m.beta + 1.0).ln();
        let lhs = log_x[j - 1];
        if lhs == f64::NEG_INFINITY && rhs == f64::NEG_INFINITY {
            continue;
        }
        worst = worst.max((lhs - rhs).abs());
    }
    worst
}

/// Coefficients of the split `w_{j,i} = a_i + b_i / j + c_{j,i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientDecomposition {
    /// `a[i - 1] = a_i = P(Y = i | Y > 0)`.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// `r[j - 1] = P(X = j) / (alpha j + beta + 1)`.
    pub r: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    /// `P(Y = i)` and `H(i)`, kept for direct evaluation of `w_{j,i}`.
    py: Vec<f64>,
    h: Vec<f64>,
    growth: f64,
}

impl CoefficientDecomposition {
    /// `c_{j,i} = -b_i (beta + 1) / (j (alpha j + beta + 1))`.
    pub fn c(&self, j: usize, i: usize) -> f64 {
        let jf = j as f64;
        -self.b[i - 1] * (self.beta + 1.0) / (jf * (self.alpha * jf + self.beta + 1.0))
    }

    /// `w_{j,i}` straight from the recursion coefficients.
    pub fn w(&self, j: usize, i: usize) -> f64 {
        let jf = j as f64;
        ((j - i) as f64 * self.py[i - 1] / self.growth + self.h[i - 1])
            / (self.alpha * jf + self.beta + 1.0)
    }

    /// `a_i + b_i / j + c_{j,i}`.
    pub fn w_split(&self, j: usize, i: usize) -> f64 {
        self.a[i - 1] + self.b[i - 1] / j as f64 + self.c(j, i)
    }

    pub fn sum_i_a(&self) -> f64 {
        self.a
            .iter()
            .enumerate()
            .map(|(k, a)| (k + 1) as f64 * a)
            .sum()
    }

    pub fn sum_b(&self) -> f64 {
        self.b.iter().sum()
    }
}

/// Coefficients for bonus indices `i = 1..=i_max` (and `r_j` for `j <= i_max`).
pub fn coefficient_decomposition(
    cfg: &ModelConfig,
    i_max: usize,
) -> Result<CoefficientDecomposition, SolverError> {
    require_discrete(cfg)?;
    let m = cfg.moments();
    let growth = m.growth_rate();
    let py: Vec<f64> = (1..=i_max).map(|i| cfg.y_point_mass(i as f64)).collect();
    let h: Vec<f64> = (1..=i_max)
        .map(|i| cfg.eval_h_atom(i as u64).expect("discrete mode"))
        .collect();
    let a: Vec<f64> = py.iter().map(|p| p / (m.alpha * growth)).collect();
    let b: Vec<f64> = (0..i_max)
        .map(|k| {
            let i = (k + 1) as f64;
            (h[k] - (m.alpha * i + m.beta + 1.0) * a[k]) / m.alpha
        })
        .collect();
    let r = (1..=i_max)
        .map(|j| cfg.x_law.point_mass(j as f64) / (m.alpha * j as f64 + m.beta + 1.0))
        .collect();
    Ok(CoefficientDecomposition {
        a,
        b,
        r,
        alpha: m.alpha,
        beta: m.beta,
        py,
        h,
        growth,
    })
}

/// The decay exponent by two routes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentCheck {
    /// Closed form from the moments.
    pub gamma: f64,
    /// Ratio of coefficient sums (or integrals).
    pub ratio: f64,
}

/// `gamma = (EX + EZ) / EY + 1`, checked against `-sum b_i / sum i a_i`.
pub fn gamma_discrete(cfg: &ModelConfig) -> Result<ExponentCheck, SolverError> {
    require_discrete(cfg)?;
    let m = cfg.moments();
    let gamma = m.growth_rate() / m.ey + 1.0;
    let i_max = cfg
        .y_atoms()
        .last()
        .map_or(1, |&(v, _)| (v as usize).max(1));
    let dec = coefficient_decomposition(cfg, i_max)?;
    let ratio = -dec.sum_b() / dec.sum_i_a();
    if (gamma - ratio).abs() > 1e-10 * gamma.abs().max(1.0) {
        return Err(SolverError::ExponentMismatch {
            closed_form: gamma,
            ratio,
        });
    }
    Ok(ExponentCheck { gamma, ratio })
}

/// Least-squares estimate of `C` in `x_j ~ C j^-gamma` over `j_lo..=j_hi`,
/// with `gamma` held fixed. Window-sensitive: `C` has no closed form.
pub fn tail_constant_estimate(
    limit: &DiscreteLimit,
    window: (usize, usize),
) -> Result<f64, SolverError> {
    let (lo, hi) = window;
    if lo == 0 || hi < lo || hi > limit.j_max() {
        return Err(SolverError::InvalidArgument(format!(
            "window ({lo}, {hi}) outside 1..={}",
            limit.j_max()
        )));
    }
    let mut acc = 0.0;
    for j in lo..=hi {
        let lx = limit.log_x[j - 1];
        if lx == f64::NEG_INFINITY {
            return Err(SolverError::ZeroInWindow { lo, hi, j });
        }
        acc += lx + limit.gamma * (j as f64).ln();
    }
    Ok((acc / (hi - lo + 1) as f64).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AuthorCountLaw, BonusScheme, WeightLaw};

    fn ab_closed_form(j: usize) -> f64 {
        let j = j as f64;
        4.0 / (j * (j + 1.0) * (j + 2.0))
    }

    #[test]
    fn ab_first_values_by_hand() {
        let lim = solve_recursion(&ModelConfig::albert_barabasi(), 3).unwrap();
        assert!((lim.get(1) - 2.0 / 3.0).abs() < 1e-15);
        assert!((lim.get(2) - 1.0 / 6.0).abs() < 1e-15);
        assert!((lim.get(3) - 1.0 / 15.0).abs() < 1e-15);
    }

    #[test]
    fn ab_matches_closed_form_and_sums_to_one() {
        let lim = solve_recursion(&ModelConfig::albert_barabasi(), 10_000).unwrap();
        for j in [1, 5, 50, 500, 5000, 10_000] {
            let rel = (lim.get(j) / ab_closed_form(j) - 1.0).abs();
            assert!(rel < 1e-10, "j={j} rel={rel}");
        }
        let partial: f64 = lim.x.iter().sum();
        assert!((partial - 1.0).abs() < 1e-3);
        assert!(lim.residual_max < 1e-12);
        assert!(lim.x.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn no_small_weights_without_a_source() {
        let cfg = ModelConfig {
            x_law: WeightLaw::constant(4.0),
            ..ModelConfig::albert_barabasi()
        };
        let lim = solve_recursion(&cfg, 8).unwrap();
        assert_eq!(&lim.x[..3], &[0.0, 0.0, 0.0]);
        assert!(lim.x[3..].iter().all(|&v| v > 0.0));
    }

    #[test]
    fn continuous_config_rejected() {
        let cfg = ModelConfig {
            mode: Mode::Continuous,
            ..ModelConfig::albert_barabasi()
        };
        assert!(matches!(
            solve_recursion(&cfg, 5),
            Err(SolverError::WrongMode { .. })
        ));
        assert!(solve_recursion(&ModelConfig::albert_barabasi(), 0).is_err());
    }

    #[test]
    fn log_space_continues_past_underflow() {
        // nu = 1000 full bonus: gamma = 1002, so x_j underflows f64 well before J.
        let cfg = ModelConfig {
            nu_law: AuthorCountLaw::constant(1000),
            ..ModelConfig::albert_barabasi()
        };
        let j = 2_000_000usize;
        let lim = solve_recursion(&cfg, j).unwrap();
        let last = *lim.log_x.last().unwrap();
        assert!(last.is_finite() && last < (1e-300f64).ln());
        assert!(lim.residual_max < 1e-10, "{}", lim.residual_max);
        // x_j / x_{j-1} = (j + 999_998) / (j + 1_001_000) for j >= 2.
        let step = lim.log_x[j - 1] - lim.log_x[j - 2];
        let expect = ((j as f64 + 999_998.0) / (j as f64 + 1_001_000.0)).ln();
        assert!((step - expect).abs() < 1e-9);
    }

    #[test]
    fn ab_coefficients() {
        let dec = coefficient_decomposition(&ModelConfig::albert_barabasi(), 3).unwrap();
        assert_eq!(dec.a, vec![1.0, 0.0, 0.0]);
        assert!((dec.b[0] + 3.0).abs() < 1e-15);
        assert!((dec.sum_b() + 3.0).abs() < 1e-15);
        assert!((dec.sum_i_a() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn split_identity_dense() {
        let cfg = ModelConfig {
            nu_law: AuthorCountLaw::new(&[(1, 0.2), (2, 0.5), (4, 0.3)]),
            x_law: WeightLaw::pmf(&[(1, 0.6), (2, 0.4)]),
            bonus: BonusScheme::ExchangeableIid {
                y_law: WeightLaw::pmf(&[(0, 0.1), (1, 0.3), (2, 0.4), (5, 0.2)]),
            },
            ..ModelConfig::albert_barabasi()
        };
        let dec = coefficient_decomposition(&cfg, 6).unwrap();
        for j in 2..=1000 {
            for i in 1..j.min(7) {
                assert!(
                    (dec.w(j, i) - dec.w_split(j, i)).abs() < 1e-12,
                    "j={j} i={i}"
                );
            }
        }
        let total_a: f64 = dec.a.iter().sum();
        assert!((total_a - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_examples() {
        let g = gamma_discrete(&ModelConfig::albert_barabasi()).unwrap();
        assert!((g.gamma - 3.0).abs() < 1e-15);
        let fb = ModelConfig {
            nu_law: AuthorCountLaw::constant(2),
            ..ModelConfig::albert_barabasi()
        };
        assert!((gamma_discrete(&fb).unwrap().gamma - 4.0).abs() < 1e-15);
        let es = ModelConfig {
            nu_law: AuthorCountLaw::constant(2),
            bonus: BonusScheme::EqualSplit {
                z_law: WeightLaw::constant(2.0),
            },
            ..ModelConfig::albert_barabasi()
        };
        assert!((gamma_discrete(&es).unwrap().gamma - 4.0).abs() < 1e-15);
    }

    fn synthetic(c: f64, gamma: f64, j_max: usize) -> DiscreteLimit {
        let x: Vec<f64> = (1..=j_max).map(|j| c * (j as f64).powf(-gamma)).collect();
        DiscreteLimit {
            log_x: x.iter().map(|v| v.ln()).collect(),
            x,
            alpha: 0.0,
            beta: 0.0,
            gamma,
            c_estimate: None,
            residual_max: 0.0,
        }
    }

    #[test]
    fn constant_of_exact_power_law() {
        let lim = synthetic(5.0, 3.0, 100);
        assert!((tail_constant_estimate(&lim, (10, 90)).unwrap() - 5.0).abs() < 1e-12);
        let one = tail_constant_estimate(&lim, (7, 7)).unwrap();
        assert!((one - lim.get(7) * 7f64.powf(3.0)).abs() < 1e-12);
    }

    #[test]
    fn ab_constant_near_four() {
        let lim = solve_recursion(&ModelConfig::albert_barabasi(), 10_000).unwrap();
        let c = tail_constant_estimate(&lim, (1000, 10_000)).unwrap();
        assert!((c - 4.0).abs() < 0.01, "{c}");
    }

    #[test]
    fn window_with_zero_rejected() {
        let cfg = ModelConfig {
            x_law: WeightLaw::constant(4.0),
            ..ModelConfig::albert_barabasi()
        };
        let lim = solve_recursion(&cfg, 8).unwrap();
        assert!(matches!(
            tail_constant_estimate(&lim, (2, 6)),
            Err(SolverError::ZeroInWindow { j: 2, .. })
        ));
    }
}
