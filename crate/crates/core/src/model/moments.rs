use serde::{Deserialize, Serialize};

use super::config::{Mode, ModelConfig};

/// Exact moments of the limiting laws and the derived recursion constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub ex: f64,
    pub ey: f64,
    pub ez: f64,
    pub enu: f64,
    pub enu2: f64,
    pub p_y_pos: f64,
    /// `P(Y>0) / (EX + EZ)`.
    pub alpha: f64,
    /// `E((nu - 1) 1{Y > 0})`.
    pub beta: f64,
}

impl Moments {
    /// `EX + EZ`, the asymptotic growth rate of the total weight.
    pub fn growth_rate(&self) -> f64 {
        self.ex + self.ez
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("atom evaluation of H is only defined in discrete mode")]
pub struct NotDiscrete;

impl ModelConfig {
    /// All moments by conditioning on the author count.
    pub fn moments(&self) -> Moments {
        let ex = self.x_law.mean();
        let (mut ey, mut ez, mut p_y_pos, mut beta) = (0.0, 0.0, 0.0, 0.0);
        for (k, p) in self.nu_law.support() {
            let cond = self.bonus.conditional(k);
            let mean = cond.mean();
            let pos = cond.survival(0.0);
            ey += p * mean;
            ez += p * k as f64 * mean;
            p_y_pos += p * pos;
            beta += p * (k as f64 - 1.0) * pos;
        }
        Moments {
            ex,
            ey,
            ez,
            enu: self.nu_law.mean(),
            enu2: self.nu_law.second_moment(),
            p_y_pos,
            alpha: p_y_pos / (ex + ez),
            beta,
        }
    }

    /// `F(t) = P(Y > t)` for the marginal bonus.
    pub fn eval_f(&self, t: f64) -> f64 {
        self.nu_law
            .support()
            .iter()
            .map(|&(k, p)| p * self.bonus.conditional(k).survival(t))
            .sum()
    }

    /// `H(t) = E((nu - 1) 1{Y > t})`.
    pub fn eval_h(&self, t: f64) -> f64 {
        self.nu_law
            .support()
            .iter()
            .map(|&(k, p)| p * (k as f64 - 1.0) * self.bonus.conditional(k).survival(t))
            .sum()
    }

    /// `H(i) = E((nu - 1) 1{Y = i})`, discrete mode only.
    pub fn eval_h_atom(&self, i: u64) -> Result<f64, NotDiscrete> {
        if self.mode != Mode::Discrete {
            return Err(NotDiscrete);
        }
        Ok(self
            .nu_law
            .support()
            .iter()
            .map(|&(k, p)| p * (k as f64 - 1.0) * self.bonus.conditional(k).point_mass(i as f64))
            .sum())
    }

    /// `P(Y = i)` for the marginal bonus.
    pub fn y_point_mass(&self, i: f64) -> f64 {
        self.nu_law
            .support()
            .iter()
            .map(|&(k, p)| p * self.bonus.conditional(k).point_mass(i))
            .sum()
    }

    /// Density `f` of the marginal bonus, when every conditional law has one.
    pub fn y_density(&self, s: f64) -> Option<f64> {
        let mut acc = 0.0;
        for (k, p) in self.nu_law.support() {
            acc += p * self.bonus.conditional(k).density(s)?;
        }
        Some(acc)
    }

    /// Density `h` with `H(t) = ∫_t^∞ h(s) ds`.
    pub fn h_density(&self, s: f64) -> Option<f64> {
        let mut acc = 0.0;
        for (k, p) in self.nu_law.support() {
            if k > 1 {
                acc += p * (k as f64 - 1.0) * self.bonus.conditional(k).density(s)?;
            }
        }
        Some(acc)
    }

    /// Point beyond which both `F` and `H` are below `eps` (relative to `E(nu-1)`).
    pub fn bonus_tail_bound(&self, eps: f64) -> f64 {
        self.nu_law
            .support()
            .iter()
            .map(|&(k, _)| self.bonus.conditional(k).tail_bound(eps))
            .fold(0.0, f64::max)
    }

    /// Density breakpoints of the marginal bonus.
    pub fn bonus_breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self
            .nu_law
            .support()
            .iter()
            .flat_map(|&(k, _)| self.bonus.conditional(k).breakpoints())
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}
