use std::fmt::Write as _;

use pubweight::analysis::{
    aggregate_ensemble, doubling_ratio_exponent, hill_exponent, local_log_slope,
    tail_exponent_target, ComparisonReport, PooledSeries, Series,
};
use pubweight::engine::{
    run_ensemble, snapshot_csv_rows, stream_rng, RunOptions, RunOutcome, SimState, Snapshot,
    SnapshotRow, Stream,
};
use pubweight::limit_continuous::{gamma_continuous, resubstitution_residual, solve_g};
use pubweight::limit_discrete::{gamma_discrete, solve_recursion, tail_constant_estimate};
use pubweight::model::{Mode, ModelConfig};
use serde::Serialize;
use serde_json::json;

use crate::config::ConfigFile;
use crate::output::{num, OutDir, Provenance};
use crate::{CliError, Command, Verb};

/// Run one command; returns the lines to print on success.
pub fn dispatch(cmd: &Command) -> Result<Vec<String>, CliError> {
    let mut cfg = ConfigFile::load(&cmd.config_path)?;
    cfg.apply(&cmd.overrides);
    if let Some(w) = &cmd.inclusion.weights {
        cfg.inclusion.weights = w.clone();
    }
    if let Some(k) = cmd.inclusion.k {
        cfg.inclusion.k = k;
    }
    if let Some(d) = cmd.inclusion.draws {
        cfg.inclusion.draws = d;
    }
    if cmd.verb == Verb::Validate {
        return validate(&cfg, cmd);
    }
    let model = cfg.model().validated()?;
    let mut out = OutDir::create(&cmd.out_dir, Provenance::new(cfg.digest(), cfg.seed))?;
    let mut lines = match cmd.verb {
        Verb::Simulate => simulate(&cfg, &model, &mut out)?,
        Verb::SolveDiscrete => solve_discrete(&cfg, &model, &mut out)?,
        Verb::SolveContinuous => solve_continuous(&cfg, &model, &mut out)?,
        Verb::Compare => compare(&cfg, &model, &mut out)?,
        Verb::InclusionCheck => inclusion_check(&cfg, &mut out)?,
        Verb::Validate => unreachable!(),
    };
    lines.extend(
        out.written()
            .iter()
            .map(|p| format!("wrote {}", p.display())),
    );
    Ok(lines)
}

fn validate(cfg: &ConfigFile, cmd: &Command) -> Result<Vec<String>, CliError> {
    let violations = cfg.model().violations();
    let report = if violations.is_empty() {
        "A1\u{2013}A8 satisfied\n".to_string()
    } else {
        violations.iter().map(|v| format!("{v}\n")).collect()
    };
    if cmd.out_dir.as_os_str() != "" {
        let mut out = OutDir::create(&cmd.out_dir, Provenance::new(cfg.digest(), cfg.seed))?;
        out.text("validation.txt", &report)?;
    }
    if violations.is_empty() {
        Ok(vec![report.trim_end().to_string()])
    } else {
        Err(CliError::Validation(pubweight::model::ValidationErrors(
            violations,
        )))
    }
}

fn run_options(cfg: &ConfigFile) -> RunOptions {
    RunOptions {
        checkpoints: cfg.snapshots.checkpoints.clone(),
        count_j_max: cfg.snapshots.j_max,
        tail_grid: cfg.snapshots.tail_grid.clone(),
        max_steps: cfg.snapshots.max_steps,
    }
}

fn replicas(cfg: &ConfigFile) -> Result<u32, CliError> {
    match cfg.analysis.replicas {
        0 => Err(CliError::Usage("replicas must be at least 1".into())),
        r => Ok(r),
    }
}

fn pool(series: &[Series]) -> Result<PooledSeries, CliError> {
    Ok(aggregate_ensemble(series)?)
}

fn simulate(
    cfg: &ConfigFile,
    model: &ModelConfig,
    out: &mut OutDir,
) -> Result<Vec<String>, CliError> {
    let r = replicas(cfg)?;
    let outs = run_ensemble(model, &run_options(cfg), r)?;
    let header = "n,kind,key,value";
    let layout: Vec<Snapshot> = outs[0].snapshots().to_vec();
    if r == 1 {
        out.csv("snapshots.csv", header, &snapshot_csv_rows(&layout))?;
    } else {
        let flat = |o: &RunOutcome| -> Vec<f64> {
            o.snapshots()
                .iter()
                .flat_map(|s| s.rows.iter().map(|row| row.value))
                .collect()
        };
        let keys: Vec<f64> = (0..flat(&outs[0]).len()).map(|i| i as f64).collect();
        let series: Vec<Series> = outs
            .iter()
            .map(|o| Series {
                keys: keys.clone(),
                values: flat(o),
            })
            .collect();
        let pooled = pool(&series)?;
        let se = pooled.std_error.clone().unwrap_or_default();
        out.csv(
            "snapshots.csv",
            header,
            &snapshot_csv_rows(&relabel(&layout, &pooled.mean)),
        )?;
        out.csv(
            "snapshots_stderr.csv",
            header,
            &snapshot_csv_rows(&relabel(&layout, &se)),
        )?;
        let mut body = String::new();
        for (i, o) in outs.iter().enumerate() {
            for line in snapshot_csv_rows(o.snapshots()).lines() {
                let _ = writeln!(body, "{i},{line}");
            }
        }
        out.csv("snapshots_replicas.csv", "replica,n,kind,key,value", &body)?;
    }
    if cfg.snapshots.full_dump {
        let mut body = String::new();
        for (i, w) in outs[0].weights_f64().iter().enumerate() {
            let _ = writeln!(body, "{i},{}", num(*w));
        }
        out.csv("weights.csv", "index,weight", &body)?;
    }
    let growth = model.moments().growth_rate();
    let ratios: Vec<f64> = outs
        .iter()
        .map(|o| {
            if o.n() == 0 {
                f64::NAN
            } else {
                o.total() / o.n() as f64
            }
        })
        .collect();
    out.json(
        "simulate.json",
        &json!({
            "n_steps": model.n_steps,
            "replicas": r,
            "growth_rate": growth,
            "total_over_n": ratios.iter().map(|v| v.is_finite().then_some(*v)).collect::<Vec<_>>(),
        }),
    )?;
    Ok(vec![format!(
        "simulated {r} replica(s) of {} steps",
        model.n_steps
    )])
}

/// Same checkpoints and keys as `layout`, values replaced in order.
fn relabel(layout: &[Snapshot], values: &[f64]) -> Vec<Snapshot> {
    let mut it = values.iter();
    layout
        .iter()
        .map(|s| Snapshot {
            n: s.n,
            rows: s
                .rows
                .iter()
                .map(|r| SnapshotRow {
                    kind: r.kind,
                    key: r.key,
                    value: *it.next().expect("layout matches"),
                })
                .collect(),
        })
        .collect()
}

fn require_mode(model: &ModelConfig, mode: Mode, verb: &str) -> Result<(), CliError> {
    if model.mode != mode {
        return Err(CliError::mode(format!(
            "{verb} requires a {mode} config, got {}",
            model.mode
        )));
    }
    Ok(())
}

/// `v[j] = x_j`, with `v[0]` unused.
fn one_based(x: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(x.len() + 1);
    v.push(0.0);
    v.extend_from_slice(x);
    v
}

#[derive(Serialize)]
struct DiscreteSummary {
    j_max: usize,
    gamma: f64,
    gamma_ratio: f64,
    alpha: f64,
    beta: f64,
    c_estimate: Option<f64>,
    window: (usize, usize),
    doubling_exponent: Option<f64>,
    doubling_std_dev: Option<f64>,
    residual_max: f64,
}

fn solve_discrete(
    cfg: &ConfigFile,
    model: &ModelConfig,
    out: &mut OutDir,
) -> Result<Vec<String>, CliError> {
    require_mode(model, Mode::Discrete, "solve-discrete")?;
    let j_max = cfg.solver.j_max;
    let lim = solve_recursion(model, j_max)?;
    let check = gamma_discrete(model)?;
    let window = cfg.solver.window_or_default();
    let c_estimate = tail_constant_estimate(&lim, window).ok();
    let doubling = doubling_ratio_exponent(&one_based(&lim.x), window).ok();

    let mut body = String::new();
    for (j, x) in lim.x.iter().enumerate() {
        let _ = writeln!(body, "{},{}", j + 1, num(*x));
    }
    out.csv("limit_discrete.csv", "j,x_j", &body)?;
    out.json(
        "limit_discrete.json",
        &DiscreteSummary {
            j_max,
            gamma: lim.gamma,
            gamma_ratio: check.ratio,
            alpha: lim.alpha,
            beta: lim.beta,
            c_estimate,
            window,
            doubling_exponent: doubling.map(|d| d.mean),
            doubling_std_dev: doubling.map(|d| d.std_dev),
            residual_max: lim.residual_max,
        },
    )?;
    Ok(vec![format!("gamma = {}", lim.gamma)])
}

#[derive(Serialize)]
struct ContinuousSummary {
    gamma: f64,
    gamma_ratio: f64,
    h: f64,
    t_max: f64,
    max_bracket: f64,
    residual_max: f64,
    t_window: (f64, f64),
    local_log_slope: Option<f64>,
}

fn solve_continuous(
    cfg: &ConfigFile,
    model: &ModelConfig,
    out: &mut OutDir,
) -> Result<Vec<String>, CliError> {
    require_mode(model, Mode::Continuous, "solve-continuous")?;
    let s = &cfg.solver;
    let g = solve_g(model, s.t_max, s.h)?;
    let check = gamma_continuous(model)?;
    let residual = resubstitution_residual(model, &g, 4)?;
    let slope = local_log_slope(&g.grid, &g.g, s.t_window.0, s.t_window.1).ok();

    let mut body = String::new();
    for k in 0..g.grid.len() {
        let _ = writeln!(
            body,
            "{},{},{},{}",
            num(g.grid[k]),
            num(g.g[k]),
            num(g.g_lower[k]),
            num(g.g_upper[k])
        );
    }
    out.csv("limit_continuous.csv", "t,G,G_lower,G_upper", &body)?;
    out.json(
        "limit_continuous.json",
        &ContinuousSummary {
            gamma: g.gamma,
            gamma_ratio: check.ratio,
            h: g.h,
            t_max: g.t_max,
            max_bracket: g.max_bracket(),
            residual_max: residual.iter().copied().fold(0.0, f64::max),
            t_window: s.t_window,
            local_log_slope: slope,
        },
    )?;
    Ok(vec![format!(
        "gamma = {}, max bracket = {}",
        g.gamma,
        g.max_bracket()
    )])
}

fn compare(
    cfg: &ConfigFile,
    model: &ModelConfig,
    out: &mut OutDir,
) -> Result<Vec<String>, CliError> {
    let r = replicas(cfg)?;
    let a = &cfg.analysis;
    let opts = RunOptions {
        checkpoints: Some(Vec::new()),
        ..run_options(cfg)
    };
    let outs = run_ensemble(model, &opts, r)?;

    let (keys, theory, gamma, limit_exponent, window) = match model.mode {
        Mode::Discrete => {
            let cj = a.compare_j_max;
            if cj == 0 {
                return Err(CliError::Usage("compare_j_max must be at least 1".into()));
            }
            let lim = solve_recursion(model, cfg.solver.j_max.max(cj))?;
            let w = cfg.solver.window_or_default();
            let d = doubling_ratio_exponent(&one_based(&lim.x), w)
                .ok()
                .map(|d| d.mean);
            let keys: Vec<f64> = (1..=cj).map(|j| j as f64).collect();
            (
                keys,
                lim.x[..cj].to_vec(),
                lim.gamma,
                d.map(|v| ("doubling_ratio", v)),
                (w.0 as f64, w.1 as f64),
            )
        }
        Mode::Continuous => {
            let s = &cfg.solver;
            if a.compare_grid
                .iter()
                .any(|&t| !(0.0..=s.t_max).contains(&t))
            {
                return Err(CliError::Usage(format!(
                    "compare_grid must lie in [0, t_max = {}]",
                    s.t_max
                )));
            }
            let g = solve_g(model, s.t_max, s.h)?;
            let slope = local_log_slope(&g.grid, &g.g, s.t_window.0, s.t_window.1).ok();
            let theory = a.compare_grid.iter().map(|&t| g.at(t)).collect();
            (
                a.compare_grid.clone(),
                theory,
                g.gamma,
                slope.map(|v| ("local_log_slope", v)),
                s.t_window,
            )
        }
    };

    let empirical = |o: &RunOutcome| -> Result<Vec<f64>, CliError> {
        Ok(match model.mode {
            Mode::Discrete => {
                let c = o
                    .discrete_state()
                    .expect("discrete run")
                    .empirical_weight_counts(keys.len())?;
                c[1..].to_vec()
            }
            Mode::Continuous => o.tail_fraction(&keys)?,
        })
    };
    let series = outs
        .iter()
        .map(|o| {
            Ok(Series {
                keys: keys.clone(),
                values: empirical(o)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let pooled = pool(&series)?;

    let mut report = ComparisonReport::new(&keys, &pooled.mean, &theory, model.n_steps, r)?;
    report.push_estimate("closed_form_gamma", gamma, window)?;
    if let Some((method, v)) = limit_exponent {
        report.push_estimate(method, v, window)?;
    }
    let target = tail_exponent_target(model.mode, gamma);
    let weights = outs[0].weights_f64();
    let mut fractions = vec![a.tail_fraction];
    fractions.extend(
        a.hill_sensitivity
            .iter()
            .copied()
            .filter(|&f| f != a.tail_fraction),
    );
    for f in fractions {
        if let Ok(h) = hill_exponent(&weights, f) {
            report.push_estimate("hill", h.value, (f, f))?;
        }
    }

    let mut value = serde_json::to_value(&report).expect("report serializes");
    value["mode"] = json!(model.mode);
    value["tail_exponent_target"] = json!(target);
    value["std_error"] = json!(pooled.std_error);
    out.json("comparison.json", &value)?;
    let csv = report.per_point_csv();
    let (header, body) = csv.split_once('\n').expect("csv has a header");
    out.csv("comparison.csv", header, body)?;

    let mut failures = Vec::new();
    if let Some(tol) = a.sup_tolerance {
        if report.sup_distance > tol {
            failures.push(format!("sup distance {} > {tol}", report.sup_distance));
        }
    }
    if let Some(tol) = a.exponent_tolerance {
        match limit_exponent {
            Some((_, v)) if (v - gamma).abs() <= tol * gamma => {}
            Some((method, v)) => {
                failures.push(format!("{method} {v} not within {tol} of gamma {gamma}"))
            }
            None => failures.push("exponent window does not fit the solved limit".into()),
        }
    }
    let summary = format!("sup distance = {}", report.sup_distance);
    if failures.is_empty() {
        Ok(vec![summary])
    } else {
        Err(CliError::Tolerance(failures.join("; ")))
    }
}

fn inclusion_check(cfg: &ConfigFile, out: &mut OutDir) -> Result<Vec<String>, CliError> {
    let inc = &cfg.inclusion;
    let state = SimState::from_weights(inc.weights.clone())?;
    let k = inc.k;
    if inc.draws == 0 {
        return Err(CliError::Usage("draws must be at least 1".into()));
    }
    let exact = (0..inc.weights.len())
        .map(|i| state.inclusion_probability(i, k))
        .collect::<Result<Vec<_>, _>>()?;
    let mut anchor = stream_rng(cfg.seed, 0, Stream::Anchor);
    let mut uniform = stream_rng(cfg.seed, 0, Stream::UniformSet);
    let mut hits = vec![0u64; inc.weights.len()];
    let mut group = Vec::with_capacity(k);
    for _ in 0..inc.draws {
        state.sample_group(k, &mut anchor, &mut uniform, &mut group)?;
        group.iter().for_each(|&i| hits[i] += 1);
    }
    let n = inc.draws as f64;
    let mut body = String::new();
    let mut worst: f64 = 0.0;
    for (i, (&p, &h)) in exact.iter().zip(&hits).enumerate() {
        let freq = h as f64 / n;
        let diff = (freq - p).abs();
        worst = worst.max(diff);
        let se = (p * (1.0 - p) / n).sqrt();
        let _ = writeln!(
            body,
            "{i},{},{},{},{},{}",
            inc.weights[i],
            num(p),
            num(freq),
            num(diff),
            num(se)
        );
    }
    out.csv(
        "inclusion.csv",
        "index,weight,exact,empirical,abs_diff,std_error",
        &body,
    )?;
    let summary = format!("max |empirical - exact| = {worst}");
    match inc.tolerance {
        Some(tol) if worst > tol => Err(CliError::Tolerance(format!("{summary} > {tol}"))),
        _ => Ok(vec![summary]),
    }
}
