//! Comparing simulated weight distributions with the solved limits.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::model::Mode;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("value {value} at index {index} is not strictly positive")]
    NonPositive { index: usize, value: f64 },
    #[error("window [{lo}, {hi}] does not fit in {len} values")]
    WindowOutOfRange { lo: usize, hi: usize, len: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate sample: {0}")]
    Degenerate(String),
    #[error("replica {replica} has a different grid")]
    GridMismatch { replica: usize },
    #[error("non-finite entry at key {key}")]
    NonFinite { key: f64 },
}

/// Largest pointwise absolute difference.
pub fn sup_distance(empirical: &[f64], theoretical: &[f64]) -> Result<f64, AnalysisError> {
    if empirical.len() != theoretical.len() {
        return Err(AnalysisError::LengthMismatch {
            left: empirical.len(),
            right: theoretical.len(),
        });
    }
    Ok(empirical
        .iter()
        .zip(theoretical)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoublingEstimate {
    pub mean: f64,
    pub std_dev: f64,
    /// Inclusive index window the average was taken over.
    pub window: (usize, usize),
}

/// Mean of `-log2(v[2i] / v[i])` for `i` in the inclusive window `[lo, hi]`.
///
/// `values` is indexed by position; for a `t`-grid with step `h`, index `i`
/// stands for `t = i h` and `2i` for `2t`.
pub fn doubling_ratio_exponent(
    values: &[f64],
    window: (usize, usize),
) -> Result<DoublingEstimate, AnalysisError> {
    let (lo, hi) = window;
    if lo == 0 || lo > hi || 2 * hi >= values.len() {
        return Err(AnalysisError::WindowOutOfRange {
            lo,
            hi,
            len: values.len(),
        });
    }
    let mut slopes = Vec::with_capacity(hi - lo + 1);
    for i in lo..=hi {
        for idx in [i, 2 * i] {
            let v = values[idx];
            if !(v > 0.0 && v.is_finite()) {
                return Err(AnalysisError::NonPositive {
                    index: idx,
                    value: v,
                });
            }
        }
        slopes.push(-(values[2 * i] / values[i]).log2());
    }
    let n = slopes.len() as f64;
    let mean = slopes.iter().sum::<f64>() / n;
    let var = slopes.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    Ok(DoublingEstimate {
        mean,
        std_dev: var.sqrt(),
        window,
    })
}

/// Exponent `a` of a least-squares fit `values ~ C t^{-a}` over grid points
/// with `lo <= t <= hi`.
pub fn local_log_slope(
    grid: &[f64],
    values: &[f64],
    lo: f64,
    hi: f64,
) -> Result<f64, AnalysisError> {
    if grid.len() != values.len() {
        return Err(AnalysisError::LengthMismatch {
            left: grid.len(),
            right: values.len(),
        });
    }
    let mut pts = Vec::new();
    for (i, (&t, &v)) in grid.iter().zip(values).enumerate() {
        if t < lo || t > hi {
            continue;
        }
        if !(v > 0.0 && t > 0.0) {
            return Err(AnalysisError::NonPositive { index: i, value: v });
        }
        pts.push((t.ln(), v.ln()));
    }
    if pts.len() < 2 {
        return Err(AnalysisError::InvalidArgument(format!(
            "fewer than two grid points in [{lo}, {hi}]"
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(-sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillEstimate {
    pub value: f64,
    /// Number of upper order statistics used.
    pub k: usize,
    pub tail_fraction: f64,
}

pub const DEFAULT_TAIL_FRACTION: f64 = 0.01;

/// Hill estimate of the tail index from the top `tail_fraction` of `sample`.
pub fn hill_exponent(sample: &[f64], tail_fraction: f64) -> Result<HillEstimate, AnalysisError> {
    if sample.len() < 100 {
        return Err(AnalysisError::InvalidArgument(format!(
            "need at least 100 samples, got {}",
            sample.len()
        )));
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 0.1) {
        return Err(AnalysisError::InvalidArgument(format!(
            "tail_fraction must be in (0, 0.1], got {tail_fraction}"
        )));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    if sorted[0] == sorted[sorted.len() - 1] {
        return Err(AnalysisError::Degenerate("all values equal".into()));
    }
    let k = ((tail_fraction * sorted.len() as f64).floor() as usize).max(1);
    let threshold = sorted[k];
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(AnalysisError::Degenerate(format!(
            "order statistic {k} is {threshold}, not positive"
        )));
    }
    let mean_log = sorted[..k]
        .iter()
        .map(|x| (x / threshold).ln())
        .sum::<f64>()
        / k as f64;
    if mean_log <= 0.0 {
        return Err(AnalysisError::Degenerate(
            "top order statistics are tied".into(),
        ));
    }
    Ok(HillEstimate {
        value: 1.0 / mean_log,
        k,
        tail_fraction,
    })
}

/// Tail index a Hill estimate on simulated weights should approach.
///
/// In discrete mode `gamma` is the exponent of the pmf `x_j`, so the tail
/// `sum_{i >= j} x_i` decays with exponent `gamma - 1`. In continuous mode
/// `G` is already a tail function and its exponent is `gamma` itself.
pub fn tail_exponent_target(mode: Mode, gamma: f64) -> f64 {
    match mode {
        Mode::Discrete => gamma - 1.0,
        Mode::Continuous => gamma,
    }
}

/// One replica's empirical values on a grid of keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub keys: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledSeries {
    pub keys: Vec<f64>,
    pub mean: Vec<f64>,
    /// Standard error of the mean; absent for a single replica.
    pub std_error: Option<Vec<f64>>,
    pub replicas: usize,
}

fn sorted_sum(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs.iter().sum()
}

/// Pointwise mean and standard error across replicas.
///
/// Values at each key are summed in sorted order, so the result does not
/// depend on the order of `replicas`.
pub fn aggregate_ensemble(replicas: &[Series]) -> Result<PooledSeries, AnalysisError> {
    let first = replicas
        .first()
        .ok_or_else(|| AnalysisError::InvalidArgument("no replicas".into()))?;
    for (r, s) in replicas.iter().enumerate() {
        if s.keys != first.keys || s.values.len() != first.keys.len() {
            return Err(AnalysisError::GridMismatch { replica: r });
        }
    }
    let n = replicas.len();
    let mut mean = Vec::with_capacity(first.keys.len());
    let mut se = Vec::with_capacity(first.keys.len());
    let mut column = vec![0.0; n];
    for p in 0..first.keys.len() {
        for (c, s) in column.iter_mut().zip(replicas) {
            *c = s.values[p];
        }
        let m = sorted_sum(&mut column) / n as f64;
        mean.push(m);
        if n > 1 {
            let mut sq: Vec<f64> = column.iter().map(|v| (v - m).powi(2)).collect();
            let var = sorted_sum(&mut sq) / (n - 1) as f64;
            se.push((var / n as f64).sqrt());
        }
    }
    Ok(PooledSeries {
        keys: first.keys.clone(),
        mean,
        std_error: (n > 1).then_some(se),
        replicas: n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointComparison {
    pub key: f64,
    pub empirical: f64,
    pub theoretical: f64,
    pub abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    pub method: String,
    pub value: f64,
    pub window: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub sup_distance: f64,
    pub per_point: Vec<PointComparison>,
    pub n: u64,
    pub replicas: u32,
    pub exponent_estimates: Vec<ExponentEstimate>,
}

impl ComparisonReport {
    pub fn new(
        keys: &[f64],
        empirical: &[f64],
        theoretical: &[f64],
        n: u64,
        replicas: u32,
    ) -> Result<Self, AnalysisError> {
        if keys.len() != empirical.len() {
            return Err(AnalysisError::LengthMismatch {
                left: keys.len(),
                right: empirical.len(),
            });
        }
        let sup = sup_distance(empirical, theoretical)?;
        let mut per_point = Vec::with_capacity(keys.len());
        for ((&key, &e), &t) in keys.iter().zip(empirical).zip(theoretical) {
            if !(key.is_finite() && e.is_finite() && t.is_finite()) {
                return Err(AnalysisError::NonFinite { key });
            }
            per_point.push(PointComparison {
                key,
                empirical: e,
                theoretical: t,
                abs_diff: (e - t).abs(),
            });
        }
        Ok(ComparisonReport {
            sup_distance: sup,
            per_point,
            n,
            replicas,
            exponent_estimates: Vec::new(),
        })
    }

    pub fn push_estimate(
        &mut self,
        method: &str,
        value: f64,
        window: (f64, f64),
    ) -> Result<(), AnalysisError> {
        if !value.is_finite() {
            return Err(AnalysisError::NonFinite { key: window.0 });
        }
        self.exponent_estimates.push(ExponentEstimate {
            method: method.to_string(),
            value,
            window,
        });
        Ok(())
    }

    /// `key,empirical,theoretical,abs_diff` rows, header included.
    pub fn per_point_csv(&self) -> String {
        let mut s = String::from("key,empirical,theoretical,abs_diff\n");
        for p in &self.per_point {
            let _ = writeln!(
                s,
                "{},{:e},{:e},{:e}",
                p.key, p.empirical, p.theoretical, p.abs_diff
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limit_discrete::solve_recursion;
    use crate::model::ModelConfig;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sup_distance_examples() {
        assert_eq!(sup_distance(&[0.5, 0.25], &[0.5, 0.25]).unwrap(), 0.0);
        assert!((sup_distance(&[0.5, 0.25], &[0.5, 0.20]).unwrap() - 0.05).abs() < 1e-15);
        assert!(sup_distance(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn doubling_on_power_law() {
        let v: Vec<f64> = (0..=200)
            .map(|j| if j == 0 { 0.0 } else { (j as f64).powi(-3) })
            .collect();
        let d = doubling_ratio_exponent(&v, (10, 100)).unwrap();
        assert!((d.mean - 3.0).abs() < 1e-12);
        assert!(d.std_dev < 1e-12);
        assert!(doubling_ratio_exponent(&v, (0, 10)).is_err());
        assert!(doubling_ratio_exponent(&v, (10, 101)).is_err());
        let mut bad = v.clone();
        bad[40] = 0.0;
        assert!(matches!(
            doubling_ratio_exponent(&bad, (10, 30)),
            Err(AnalysisError::NonPositive { index: 40, .. })
        ));
    }

    proptest! {
        #[test]
        fn doubling_scale_invariant(c in 1e-6f64..1e6, gamma in 0.5f64..6.0) {
            let v: Vec<f64> = (0..=100).map(|j| (j as f64 + 1.0).powf(-gamma)).collect();
            let w: Vec<f64> = v.iter().map(|x| c * x).collect();
            let a = doubling_ratio_exponent(&v, (5, 50)).unwrap();
            let b = doubling_ratio_exponent(&w, (5, 50)).unwrap();
            prop_assert!((a.mean - b.mean).abs() < 1e-12);
        }

        #[test]
        fn aggregate_permutation_invariant(
            rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 4), 1..12),
            seed in any::<u64>(),
        ) {
            let keys = vec![1.0, 2.0, 3.0, 4.0];
            let series: Vec<Series> = rows
                .iter()
                .map(|v| Series { keys: keys.clone(), values: v.clone() })
                .collect();
            let mut shuffled = series.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..shuffled.len()).rev() {
                shuffled.swap(i, rng.random_range(0..=i));
            }
            prop_assert_eq!(aggregate_ensemble(&series).unwrap(), aggregate_ensemble(&shuffled).unwrap());
        }
    }

    #[test]
    fn local_slope_on_power_law() {
        let grid: Vec<f64> = (0..=400).map(|k| k as f64 * 0.1).collect();
        let vals: Vec<f64> = grid.iter().map(|t| 5.0 * t.powf(-2.5)).collect();
        let s = local_log_slope(&grid, &vals, 20.0, 40.0).unwrap();
        assert!((s - 2.5).abs() < 1e-12);
        assert!(local_log_slope(&grid, &vals, 100.0, 200.0).is_err());
    }

    fn pareto(n: usize, index: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let u: f64 = 1.0 - rng.random::<f64>();
                u.powf(-1.0 / index)
            })
            .collect()
    }

    #[test]
    fn hill_on_pareto() {
        let est = hill_exponent(&pareto(1_000_000, 2.0, 7), DEFAULT_TAIL_FRACTION).unwrap();
        assert_eq!(est.k, 10_000);
        assert!((est.value - 2.0).abs() < 0.1, "{}", est.value);
    }

    #[test]
    fn hill_error_shrinks_with_sample_size() {
        let (mut small, mut large) = (0.0, 0.0);
        for seed in 0..50 {
            small += (hill_exponent(&pareto(20_000, 2.0, seed), 0.01)
                .unwrap()
                .value
                - 2.0)
                .abs();
            large += (hill_exponent(&pareto(40_000, 2.0, 1000 + seed), 0.01)
                .unwrap()
                .value
                - 2.0)
                .abs();
        }
        assert!(large < small, "{large} vs {small}");
    }

    #[test]
    fn hill_rejects_bad_input() {
        assert!(matches!(
            hill_exponent(&[3.0; 500], 0.01),
            Err(AnalysisError::Degenerate(_))
        ));
        assert!(hill_exponent(&[1.0; 99], 0.01).is_err());
        let p = pareto(1000, 2.0, 1);
        assert!(hill_exponent(&p, 0.0).is_err());
        assert!(hill_exponent(&p, 0.2).is_err());
    }

    #[test]
    fn aggregate_small_cases() {
        let s = Series {
            keys: vec![1.0, 2.0],
            values: vec![0.6, 0.2],
        };
        let one = aggregate_ensemble(std::slice::from_ref(&s)).unwrap();
        assert_eq!(one.mean, s.values);
        assert!(one.std_error.is_none());
        let two = aggregate_ensemble(&[s.clone(), s.clone()]).unwrap();
        assert_eq!(two.mean, s.values);
        assert_eq!(two.std_error, Some(vec![0.0, 0.0]));
        let other = Series {
            keys: vec![1.0, 3.0],
            values: vec![0.0, 0.0],
        };
        assert_eq!(
            aggregate_ensemble(&[s, other]),
            Err(AnalysisError::GridMismatch { replica: 1 })
        );
        assert!(aggregate_ensemble(&[]).is_err());
    }

    // Tail of the solved pmf decays one power slower than the pmf itself.
    #[test]
    fn discrete_tail_exponent_is_gamma_minus_one() {
        let cfg = ModelConfig::albert_barabasi();
        let lim = solve_recursion(&cfg, 200_000).unwrap();
        // Index j holds x_j; the tail past J is below 1e-3 relative on the window.
        let mut pmf = vec![0.0];
        pmf.extend_from_slice(&lim.x);
        let mut tail = vec![0.0; pmf.len() + 1];
        for j in (1..pmf.len()).rev() {
            tail[j] = tail[j + 1] + pmf[j];
        }
        tail.pop();
        let pmf_exp = doubling_ratio_exponent(&pmf, (1000, 5000)).unwrap().mean;
        let tail_exp = doubling_ratio_exponent(&tail, (1000, 5000)).unwrap().mean;
        assert!((pmf_exp - lim.gamma).abs() < 0.01 * lim.gamma);
        let target = tail_exponent_target(Mode::Discrete, lim.gamma);
        assert!((tail_exp - target).abs() < 0.01 * target, "{tail_exp}");
        assert_eq!(tail_exponent_target(Mode::Continuous, 2.0), 2.0);
    }

    #[test]
    fn report_invariants() {
        let mut r = ComparisonReport::new(&[1.0, 2.0], &[0.6, 0.2], &[0.66, 0.16], 10, 1).unwrap();
        let max = r.per_point.iter().map(|p| p.abs_diff).fold(0.0, f64::max);
        assert_eq!(r.sup_distance, max);
        r.push_estimate("hill", 2.0, (0.0, 1.0)).unwrap();
        assert!(r.push_estimate("hill", f64::NAN, (0.0, 1.0)).is_err());
        assert!(r
            .per_point_csv()
            .starts_with("key,empirical,theoretical,abs_diff\n1,"));
        assert!(ComparisonReport::new(&[1.0], &[f64::NAN], &[0.0], 1, 1).is_err());
    }
}
