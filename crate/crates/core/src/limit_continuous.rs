//! Limiting tail function for continuous weights.
//!
//! `G(t)` is the almost-sure limit of the share of researchers heavier than
//! `t`. It solves the Volterra–Stieltjes equation
//!
//! ```text
//! G(t) (t / (EX + EZ) + E nu) = ∫_0^t G(t - s) d_s L(t, s) + H(t) + P(X > t),   G(0) = 1,
//! L(t, s) = (s F(s) + t (1 - F(s))) / (EX + EZ) - H(s).
//! ```
//!
//! `L(t, .)` is nondecreasing and `G` nonincreasing, so on each cell of the
//! `s`-grid the Stieltjes sum with `G` taken at the right endpoint bounds the
//! integral from above and the one with `G` at the left endpoint bounds it
//! from below. The solver marches forward in `t`, reports both sums as
//! `g_upper` / `g_lower` and takes their midpoint as `G`.

use serde::{Deserialize, Serialize};

use crate::limit_discrete::{ExponentCheck, SolverError};
use crate::model::{Mode, ModelConfig};
use crate::quadrature::integrate;

const FIXED_POINT_TOL: f64 = 1e-12;
const FIXED_POINT_MAX_ITER: usize = 100;
/// `F` and `H` are treated as zero past the point where both drop below this.
const TAIL_CUTOFF: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousLimit {
    /// `t_k = k h`, `k = 0..=K`.
    pub grid: Vec<f64>,
    pub g: Vec<f64>,
    pub g_upper: Vec<f64>,
    pub g_lower: Vec<f64>,
    pub gamma: f64,
    pub h: f64,
    pub t_max: f64,
}

impl ContinuousLimit {
    pub fn bracket_widths(&self) -> Vec<f64> {
        self.g_upper
            .iter()
            .zip(&self.g_lower)
            .map(|(u, l)| u - l)
            .collect()
    }

    pub fn max_bracket(&self) -> f64 {
        self.bracket_widths().into_iter().fold(0.0, f64::max)
    }

    /// `G` at a grid point `t` (nearest grid index).
    pub fn at(&self, t: f64) -> f64 {
        let k = (t / self.h).round() as usize;
        self.g[k.min(self.g.len() - 1)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelEval {
    pub t: f64,
    pub s: f64,
    pub value: f64,
}

fn require_continuous(cfg: &ModelConfig) -> Result<(), SolverError> {
    if cfg.mode != Mode::Continuous {
        return Err(SolverError::WrongMode {
            expected: Mode::Continuous,
        });
    }
    Ok(())
}

/// `L(t, s)` for `0 <= s <= t`.
pub fn eval_kernel_l(cfg: &ModelConfig, t: f64, s: f64) -> Result<KernelEval, SolverError> {
    require_continuous(cfg)?;
    if !(0.0..=t).contains(&s) {
        return Err(SolverError::InvalidArgument(format!(
            "kernel needs 0 <= s <= t, got s = {s}, t = {t}"
        )));
    }
    let growth = cfg.moments().growth_rate();
    let f = cfg.eval_f(s);
    Ok(KernelEval {
        t,
        s,
        value: (s * f + t * (1.0 - f)) / growth - cfg.eval_h(s),
    })
}

fn grid_steps(t_max: f64, h: f64) -> Result<usize, SolverError> {
    if !(h > 0.0 && h.is_finite()) || !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(SolverError::InvalidArgument(format!(
            "need h > 0 and t_max >= 0, got h = {h}, t_max = {t_max}"
        )));
    }
    let k = (t_max / h).round();
    if (k * h - t_max).abs() > 1e-9 * t_max.max(1.0) {
        return Err(SolverError::InvalidArgument(format!(
            "t_max = {t_max} is not a multiple of h = {h}"
        )));
    }
    Ok(k as usize)
}

/// Number of grid cells past which `F` and `H` are negligible.
fn tail_cells(cfg: &ModelConfig, h: f64, k_max: usize) -> usize {
    let scale = cfg.nu_law.mean().max(1.0);
    let bound = cfg.bonus_tail_bound(TAIL_CUTOFF / scale);
    ((bound / h).ceil() as usize + 1).clamp(1, k_max.max(1))
}

/// March the equation forward on `t_k = k h` up to `t_max`.
pub fn solve_g(cfg: &ModelConfig, t_max: f64, h: f64) -> Result<ContinuousLimit, SolverError> {
    require_continuous(cfg)?;
    let k_max = grid_steps(t_max, h)?;
    let m = cfg.moments();
    let growth = m.growth_rate();
    let cells = tail_cells(cfg, h, k_max);

    let f_grid: Vec<f64> = (0..=cells).map(|i| cfg.eval_f(i as f64 * h)).collect();
    let h_grid: Vec<f64> = (0..=cells).map(|i| cfg.eval_h(i as f64 * h)).collect();
    // L(t, ih) - L(t, (i-1)h) on cell i, for t = k h.
    let cell_increment = |k: usize, i: usize| {
        (h * f_grid[i - 1] + (k - i) as f64 * h * (f_grid[i - 1] - f_grid[i])) / growth
            + (h_grid[i - 1] - h_grid[i])
    };

    let mut g = Vec::with_capacity(k_max + 1);
    let mut g_upper = Vec::with_capacity(k_max + 1);
    let mut g_lower = Vec::with_capacity(k_max + 1);
    g.push(1.0);
    g_upper.push(1.0);
    g_lower.push(1.0);

    for k in 1..=k_max {
        let t = k as f64 * h;
        let denom = t / growth + m.enu;
        let source = cfg.eval_h(t) + cfg.x_law.survival(t);
        let last = k.min(cells);

        let first = cell_increment(k, 1);
        let mut sum_upper = g[k - 1] * first;
        let mut sum_lower_rest = 0.0;
        for i in 2..=last {
            let inc = cell_increment(k, i);
            sum_upper += g[k - i] * inc;
            sum_lower_rest += g[k - i + 1] * inc;
        }
        let upper = (sum_upper + source) / denom;
        let lower_of = |gk: f64| (gk * first + sum_lower_rest + source) / denom;

        let mut gk = g[k - 1];
        let mut converged = false;
        for _ in 0..FIXED_POINT_MAX_ITER {
            let next = 0.5 * (upper + lower_of(gk));
            let delta = (next - gk).abs();
            gk = next;
            if delta <= FIXED_POINT_TOL {
                converged = true;
                break;
            }
        }
        let lower = lower_of(gk);
        if !converged || !gk.is_finite() {
            return Err(SolverError::NoConvergence {
                k,
                bracket: upper - lower,
            });
        }
        g.push(gk);
        g_upper.push(upper);
        g_lower.push(lower);
    }

    Ok(ContinuousLimit {
        grid: (0..=k_max).map(|k| k as f64 * h).collect(),
        g,
        g_upper,
        g_lower,
        gamma: growth / m.ey,
        h,
        t_max,
    })
}

/// `|RHS(G) - G|` at each grid point, with the right-hand side recomputed by
/// an independent finer quadrature: `G` interpolated linearly, `L`-increments
/// on sub-cells of width `h / refine`, `G` at sub-cell midpoints.
pub fn resubstitution_residual(
    cfg: &ModelConfig,
    limit: &ContinuousLimit,
    refine: usize,
) -> Result<Vec<f64>, SolverError> {
    require_continuous(cfg)?;
    let refine = refine.max(1);
    let m = cfg.moments();
    let growth = m.growth_rate();
    let h = limit.h;
    let k_max = limit.g.len() - 1;
    let dh = h / refine as f64;
    let sub_cells = tail_cells(cfg, h, k_max) * refine;
    let f_sub: Vec<f64> = (0..=sub_cells).map(|j| cfg.eval_f(j as f64 * dh)).collect();
    let h_sub: Vec<f64> = (0..=sub_cells).map(|j| cfg.eval_h(j as f64 * dh)).collect();
    let g_at = |x: f64| {
        let pos = (x / h).max(0.0);
        let lo = (pos.floor() as usize).min(k_max);
        let hi = (lo + 1).min(k_max);
        let w = pos - lo as f64;
        limit.g[lo] * (1.0 - w) + limit.g[hi] * w
    };

    let mut out = Vec::with_capacity(k_max + 1);
    out.push((limit.g[0] - 1.0).abs());
    for k in 1..=k_max {
        let t = k as f64 * h;
        let last = (k * refine).min(sub_cells);
        let mut integral = 0.0;
        for j in 1..=last {
            let s0 = (j - 1) as f64 * dh;
            let s1 = j as f64 * dh;
            let inc = (s1 * f_sub[j] - s0 * f_sub[j - 1] + t * (f_sub[j - 1] - f_sub[j])) / growth
                + (h_sub[j - 1] - h_sub[j]);
            integral += g_at(t - 0.5 * (s0 + s1)) * inc;
        }
        let rhs = (integral + cfg.eval_h(t) + cfg.x_law.survival(t)) / (t / growth + m.enu);
        out.push((rhs - limit.g[k]).abs());
    }
    Ok(out)
}

/// Pieces of the density form `w_{t,s} = f(s) + b(s) / (t + d)`.
#[derive(Debug, Clone)]
pub struct ContinuousCoefficients {
    cfg: ModelConfig,
    /// `EX + EZ`.
    pub growth: f64,
    pub enu: f64,
    /// `(EX + EZ) E nu`.
    pub d: f64,
}

impl ContinuousCoefficients {
    /// Bonus density `f(s)`.
    pub fn f(&self, s: f64) -> f64 {
        self.cfg.y_density(s).expect("checked at construction")
    }

    /// Density of `H`: `H(t) = ∫_t^∞ h`.
    pub fn h_density(&self, s: f64) -> f64 {
        self.cfg.h_density(s).expect("checked at construction")
    }

    /// `b(s) = F(s) - (s + d) f(s) + h(s) (EX + EZ)`.
    pub fn b(&self, s: f64) -> f64 {
        self.cfg.eval_f(s) - (s + self.d) * self.f(s) + self.h_density(s) * self.growth
    }

    /// `r(t) = (H(t) + P(X > t)) / (t / (EX + EZ) + E nu)`.
    pub fn r(&self, t: f64) -> f64 {
        (self.cfg.eval_h(t) + self.cfg.x_law.survival(t)) / (t / self.growth + self.enu)
    }

    fn support_end(&self) -> f64 {
        self.cfg.bonus_tail_bound(1e-17)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.cfg.bonus_breakpoints()
    }

    /// `∫_0^∞ b(s) ds`.
    pub fn integral_b(&self) -> f64 {
        integrate(
            &|s| self.b(s),
            0.0,
            self.support_end(),
            &self.breakpoints(),
            1e-11,
        )
    }

    /// `∫_0^∞ s f(s) ds`.
    pub fn mean_bonus(&self) -> f64 {
        integrate(
            &|s| s * self.f(s),
            0.0,
            self.support_end(),
            &self.breakpoints(),
            1e-11,
        )
    }
}

pub fn continuous_coefficients(cfg: &ModelConfig) -> Result<ContinuousCoefficients, SolverError> {
    require_continuous(cfg)?;
    if cfg.y_density(1.0).is_none() || cfg.h_density(1.0).is_none() {
        return Err(SolverError::InvalidArgument(
            "bonus law has no closed-form density".into(),
        ));
    }
    let m = cfg.moments();
    Ok(ContinuousCoefficients {
        cfg: cfg.clone(),
        growth: m.growth_rate(),
        enu: m.enu,
        d: m.growth_rate() * m.enu,
    })
}

/// `gamma = (EX + EZ) / EY`, checked against `-∫ b / ∫ s f` by quadrature.
pub fn gamma_continuous(cfg: &ModelConfig) -> Result<ExponentCheck, SolverError> {
    let coeffs = continuous_coefficients(cfg)?;
    let m = cfg.moments();
    let gamma = m.growth_rate() / m.ey;
    let ratio = -coeffs.integral_b() / coeffs.mean_bonus();
    if (gamma - ratio).abs() > 1e-6 * gamma.abs() {
        return Err(SolverError::ExponentMismatch {
            closed_form: gamma,
            ratio,
        });
    }
    Ok(ExponentCheck { gamma, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AuthorCountLaw, BonusScheme, WeightLaw};

    fn exp_config() -> ModelConfig {
        ModelConfig {
            mode: Mode::Continuous,
            x_law: WeightLaw::exponential(1.0),
            bonus: BonusScheme::FullBonus {
                y_law: WeightLaw::exponential(1.0),
            },
            ..ModelConfig::albert_barabasi()
        }
    }

    // Solution for exp_config, checked symbolically by substitution.
    fn exp_closed_form(t: f64) -> f64 {
        4.0 / ((t + 2.0) * (t + 2.0))
    }

    #[test]
    fn kernel_values() {
        let cfg = exp_config();
        let l0 = eval_kernel_l(&cfg, 3.0, 0.0).unwrap().value;
        assert!((l0 + cfg.eval_h(0.0)).abs() < 1e-15);
        let lt = eval_kernel_l(&cfg, 3.0, 3.0).unwrap().value;
        assert!((lt - (3.0 / 2.0 - cfg.eval_h(3.0))).abs() < 1e-15);
        let (t, s): (f64, f64) = (2.5, 0.7);
        let expect = (s * (-s).exp() + t * (1.0 - (-s).exp())) / 2.0;
        assert!((eval_kernel_l(&cfg, t, s).unwrap().value - expect).abs() < 1e-15);
        assert!(eval_kernel_l(&cfg, 1.0, 2.0).is_err());
    }

    #[test]
    fn kernel_at_zero_with_multiple_authors() {
        let cfg = ModelConfig {
            nu_law: AuthorCountLaw::new(&[(1, 0.5), (3, 0.5)]),
            ..exp_config()
        };
        let l0 = eval_kernel_l(&cfg, 4.0, 0.0).unwrap().value;
        assert!((l0 + 1.0).abs() < 1e-15);
    }

    #[test]
    fn solver_tracks_closed_form() {
        let lim = solve_g(&exp_config(), 20.0, 0.01).unwrap();
        assert_eq!(lim.g[0], 1.0);
        let widths = lim.bracket_widths();
        for (k, &t) in lim.grid.iter().enumerate() {
            let err = (lim.g[k] - exp_closed_form(t)).abs();
            assert!(
                err <= widths[k].max(1e-12),
                "t={t} err={err} width={}",
                widths[k]
            );
            assert!(lim.g_lower[k] <= lim.g[k] && lim.g[k] <= lim.g_upper[k]);
        }
        assert!(lim.g.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn bracket_halves_with_step() {
        let coarse = solve_g(&exp_config(), 10.0, 0.02).unwrap().max_bracket();
        let fine = solve_g(&exp_config(), 10.0, 0.01).unwrap().max_bracket();
        let ratio = fine / coarse;
        assert!((ratio - 0.5).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn refinement_within_bracket() {
        let cfg = exp_config();
        let coarse = solve_g(&cfg, 10.0, 0.02).unwrap();
        let fine = solve_g(&cfg, 10.0, 0.01).unwrap();
        for (k, &gc) in coarse.g.iter().enumerate() {
            let width = coarse.g_upper[k] - coarse.g_lower[k];
            assert!((gc - fine.g[2 * k]).abs() <= width.max(1e-12), "k={k}");
        }
    }

    #[test]
    fn residual_inside_bracket() {
        let cfg = exp_config();
        let lim = solve_g(&cfg, 10.0, 0.01).unwrap();
        let res = resubstitution_residual(&cfg, &lim, 4).unwrap();
        for (k, r) in res.iter().enumerate() {
            let width = lim.g_upper[k] - lim.g_lower[k];
            assert!(*r <= width.max(1e-12), "k={k} r={r} w={width}");
        }
    }

    #[test]
    fn bad_arguments() {
        let cfg = exp_config();
        assert!(solve_g(&cfg, 1.0, 0.0).is_err());
        assert!(solve_g(&cfg, 1.005, 0.01).is_err());
        assert!(matches!(
            solve_g(&ModelConfig::albert_barabasi(), 1.0, 0.1),
            Err(SolverError::WrongMode { .. })
        ));
    }

    #[test]
    fn coefficients_for_exponential() {
        let c = continuous_coefficients(&exp_config()).unwrap();
        assert_eq!(c.d, 2.0);
        assert!((c.r(0.0) - 1.0).abs() < 1e-15);
        assert!((c.integral_b() + 2.0).abs() < 1e-6);
    }

    #[test]
    fn r_at_zero_is_one_with_coauthors() {
        let cfg = ModelConfig {
            nu_law: AuthorCountLaw::new(&[(1, 0.3), (2, 0.3), (4, 0.4)]),
            ..exp_config()
        };
        let c = continuous_coefficients(&cfg).unwrap();
        assert!((c.r(0.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gamma_examples() {
        let g = gamma_continuous(&exp_config()).unwrap();
        assert!((g.gamma - 2.0).abs() < 1e-15);

        let es = ModelConfig {
            nu_law: AuthorCountLaw::constant(2),
            bonus: BonusScheme::EqualSplit {
                z_law: WeightLaw::gamma(2.0, 1.0),
            },
            ..exp_config()
        };
        assert!((gamma_continuous(&es).unwrap().gamma - 3.0).abs() < 1e-14);

        let fb = ModelConfig {
            nu_law: AuthorCountLaw::constant(2),
            bonus: BonusScheme::FullBonus {
                y_law: WeightLaw::exponential(2.0),
            },
            ..exp_config()
        };
        assert!((gamma_continuous(&fb).unwrap().gamma - 4.0).abs() < 1e-14);
    }

    #[test]
    fn integral_of_b_for_other_families() {
        for (nu, bonus) in [
            (
                AuthorCountLaw::new(&[(1, 0.5), (3, 0.5)]),
                BonusScheme::EqualSplit {
                    z_law: WeightLaw::uniform(0.5, 3.0),
                },
            ),
            (
                AuthorCountLaw::new(&[(2, 0.7), (5, 0.3)]),
                BonusScheme::ExchangeableIid {
                    y_law: WeightLaw::gamma(3.0, 0.5),
                },
            ),
        ] {
            let cfg = ModelConfig {
                nu_law: nu,
                bonus,
                ..exp_config()
            };
            let c = continuous_coefficients(&cfg).unwrap();
            let growth = cfg.moments().growth_rate();
            assert!((c.integral_b() + growth).abs() < 1e-6, "{}", c.integral_b());
            assert!(gamma_continuous(&cfg).is_ok());
        }
    }
}
