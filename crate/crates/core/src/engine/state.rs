use std::marker::PhantomData;

use rand::Rng;

use super::fenwick::Fenwick;
use super::rng::RngStreams;
use super::weight::Weight;
use super::EngineError;
use crate::model::{BonusScheme, CdfTable, LawSampler, ModelConfig, Truncation};

/// Weights of all researchers after `n` steps.
#[derive(Debug, Clone)]
pub struct SimState<W: Weight> {
    weights: Vec<W>,
    index: Fenwick<W>,
    total: W::Total,
    n: u64,
}

impl<W: Weight> SimState<W> {
    /// State holding the given weights, as if `weights.len() - 1` steps had run.
    pub fn from_weights(weights: Vec<W>) -> Result<Self, EngineError> {
        if weights.is_empty() {
            return Err(EngineError::EmptyState);
        }
        let index = Fenwick::from_weights(&weights)?;
        let mut total = W::Total::default();
        for &w in &weights {
            W::total_add(&mut total, w)?;
        }
        let n = weights.len() as u64 - 1;
        Ok(SimState {
            weights,
            index,
            total,
            n,
        })
    }

    pub fn weights(&self) -> &[W] {
        &self.weights
    }

    /// Number of steps taken.
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn population(&self) -> usize {
        self.weights.len()
    }

    /// `S_n`.
    pub fn total(&self) -> W {
        W::total_value(&self.total)
    }

    /// Probability that researcher `i` belongs to a group of size `k` drawn
    /// with probability proportional to the group's total weight.
    pub fn inclusion_probability(&self, i: usize, k: usize) -> Result<f64, EngineError> {
        let pop = self.population();
        self.check_k(k)?;
        if i >= pop {
            return Err(EngineError::IndexOutOfRange { i, population: pop });
        }
        if k == pop {
            return Ok(1.0);
        }
        let share = self.weights[i].to_f64() / self.total().to_f64();
        let n = (pop - 1) as f64;
        Ok((k as f64 - 1.0) / n * (1.0 - share) + share)
    }

    fn check_k(&self, k: usize) -> Result<(), EngineError> {
        let pop = self.population();
        if k == 0 || k > pop {
            Err(EngineError::GroupSizeOutOfRange { k, population: pop })
        } else {
            Ok(())
        }
    }

    /// Draw a `k`-set with probability proportional to its total weight.
    ///
    /// One anchor is drawn proportionally to weight, then the other `k - 1`
    /// members uniformly from the remaining researchers. A set `H` is reached
    /// through each of its members as anchor, so its probability is
    /// `sum_{j in H} W_j / S / C(n, k - 1)`, the target law.
    ///
    /// The result is written to `out` in increasing label order.
    pub fn sample_group<RA, RU>(
        &self,
        k: usize,
        anchor_rng: &mut RA,
        uniform_rng: &mut RU,
        out: &mut Vec<usize>,
    ) -> Result<(), EngineError>
    where
        RA: Rng + ?Sized,
        RU: Rng + ?Sized,
    {
        self.check_k(k)?;
        out.clear();
        let pop = self.population();
        if k == pop {
            out.extend(0..pop);
            return Ok(());
        }
        let target = W::uniform_below(self.index.total(), anchor_rng);
        let anchor = self.index.search(target);
        out.push(anchor);

        // Partial Fisher-Yates over the virtual array of the other pop - 1
        // labels; only displaced slots are stored.
        let others = pop - 1;
        let mut displaced: Vec<(usize, usize)> = Vec::with_capacity(2 * k);
        let get = |d: &[(usize, usize)], p: usize| {
            d.iter()
                .rev()
                .find(|&&(q, _)| q == p)
                .map_or(p, |&(_, v)| v)
        };
        for t in 0..k - 1 {
            let r = uniform_rng.random_range(t..others);
            let vr = get(&displaced, r);
            let vt = get(&displaced, t);
            displaced.push((r, vt));
            displaced.push((t, vr));
            out.push(if vr < anchor { vr } else { vr + 1 });
        }
        out.sort_unstable();
        Ok(())
    }

    /// Add `delta` to researcher `i`.
    fn credit(&mut self, i: usize, delta: W) -> Result<(), EngineError> {
        self.weights[i] = self.weights[i].try_add(delta)?;
        self.index.add(i, delta)?;
        W::total_add(&mut self.total, delta)
    }

    fn push_researcher(&mut self, w: W) -> Result<(), EngineError> {
        self.weights.push(w);
        self.index.push(w)?;
        W::total_add(&mut self.total, w)
    }

    /// Fraction `|{i : W_i > t}| / n` for every `t` of an increasing grid.
    pub fn empirical_tail_fraction(&self, grid: &[f64]) -> Result<Vec<f64>, EngineError> {
        if grid
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]).is_none_or(|o| o.is_gt()))
        {
            return Err(EngineError::UnsortedGrid);
        }
        if self.n == 0 {
            return Err(EngineError::NoSteps);
        }
        let mut sorted: Vec<f64> = self.weights.iter().map(|w| w.to_f64()).collect();
        sorted.sort_by(f64::total_cmp);
        let n = self.n as f64;
        Ok(grid
            .iter()
            .map(|&t| (sorted.len() - sorted.partition_point(|&w| w <= t)) as f64 / n)
            .collect())
    }
}

impl SimState<u64> {
    /// `xi_n(j) / n` for `j = 0..=j_max`: the share of researchers of weight
    /// exactly `j`, normalised by the step count.
    pub fn empirical_weight_counts(&self, j_max: usize) -> Result<Vec<f64>, EngineError> {
        if self.n == 0 {
            return Err(EngineError::NoSteps);
        }
        let mut counts = vec![0u64; j_max + 1];
        for &w in &self.weights {
            if let Some(c) = usize::try_from(w).ok().and_then(|j| counts.get_mut(j)) {
                *c += 1;
            }
        }
        let n = self.n as f64;
        Ok(counts.into_iter().map(|c| c as f64 / n).collect())
    }
}

/// What happened in one step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepRecord<W> {
    /// Number of authors.
    pub k: usize,
    /// Authors, in increasing label order.
    pub group: Vec<usize>,
    /// Bonus of each author, aligned with `group`.
    pub bonuses: Vec<W>,
    /// Initial weight of the newcomer.
    pub new_weight: W,
}

#[derive(Debug, Clone)]
struct AuthorCountSampler {
    sizes: Vec<usize>,
    table: CdfTable,
    truncation: Truncation,
}

impl AuthorCountSampler {
    fn draw<R: Rng + ?Sized>(&self, population: usize, rng: &mut R) -> usize {
        match self.truncation {
            Truncation::Min => {
                let k = self.table.sample(rng) as usize;
                k.min(population)
            }
            Truncation::Conditional => {
                let len = self.sizes.partition_point(|&k| k <= population);
                if len == 0 {
                    population
                } else {
                    self.table.sample_prefix(len, rng) as usize
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
enum BonusSampler {
    EqualSplit(LawSampler),
    FullBonus(LawSampler),
    Iid(LawSampler),
}

impl BonusSampler {
    fn draw<R: Rng + ?Sized>(&self, k: usize, rng: &mut R, out: &mut Vec<f64>) {
        out.clear();
        match self {
            BonusSampler::EqualSplit(z) => {
                let share = z.sample(rng) / k as f64;
                out.resize(k, share);
            }
            BonusSampler::FullBonus(y) => {
                let y = y.sample(rng);
                out.resize(k, y);
            }
            BonusSampler::Iid(y) => out.extend((0..k).map(|_| y.sample(rng))),
        }
    }
}

/// Samplers compiled from a validated config.
#[derive(Debug, Clone)]
pub struct CompiledModel {
    x: LawSampler,
    nu: AuthorCountSampler,
    bonus: BonusSampler,
}

impl CompiledModel {
    pub fn new(cfg: &ModelConfig) -> Self {
        let support = cfg.nu_law.support();
        let atoms: Vec<(f64, f64)> = support.iter().map(|&(k, p)| (k as f64, p)).collect();
        let bonus = match &cfg.bonus {
            BonusScheme::EqualSplit { z_law } => BonusSampler::EqualSplit(z_law.sampler()),
            BonusScheme::FullBonus { y_law } => BonusSampler::FullBonus(y_law.sampler()),
            BonusScheme::ExchangeableIid { y_law } => BonusSampler::Iid(y_law.sampler()),
        };
        CompiledModel {
            x: cfg.x_law.sampler(),
            nu: AuthorCountSampler {
                sizes: support.iter().map(|&(k, _)| k as usize).collect(),
                table: CdfTable::new(&atoms),
                truncation: cfg.nu_law.truncation,
            },
            bonus,
        }
    }

    /// Author count for a step taken at the given population size.
    pub fn draw_author_count<R: Rng + ?Sized>(&self, population: usize, rng: &mut R) -> usize {
        self.nu.draw(population, rng)
    }

    pub fn draw_bonuses<R: Rng + ?Sized>(&self, k: usize, rng: &mut R, out: &mut Vec<f64>) {
        self.bonus.draw(k, rng, out)
    }

    pub fn draw_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.x.sample(rng)
    }
}

/// Drives one replica of the weight system.
#[derive(Debug, Clone)]
pub struct Simulator<W: Weight> {
    model: CompiledModel,
    streams: RngStreams,
    record: StepRecord<W>,
    scratch: Vec<f64>,
    _weight: PhantomData<W>,
}

impl<W: Weight> Simulator<W> {
    /// `cfg` must already be validated.
    pub fn new(cfg: &ModelConfig, replica: u64) -> Self {
        Simulator {
            model: CompiledModel::new(cfg),
            streams: RngStreams::new(cfg.seed, replica),
            record: StepRecord {
                k: 0,
                group: Vec::new(),
                bonuses: Vec::new(),
                new_weight: W::ZERO,
            },
            scratch: Vec::new(),
            _weight: PhantomData,
        }
    }

    /// A single researcher with a fresh initial weight.
    pub fn init_state(&mut self) -> Result<SimState<W>, EngineError> {
        let x = W::from_draw(self.model.draw_initial(&mut self.streams.initial_weight))?;
        SimState::from_weights(vec![x])
    }

    /// Publish one paper and add one researcher.
    pub fn step(&mut self, state: &mut SimState<W>) -> Result<&StepRecord<W>, EngineError> {
        let population = state.population();
        let k = self
            .model
            .draw_author_count(population, &mut self.streams.author_count);
        let rec = &mut self.record;
        rec.k = k;
        state.sample_group(
            k,
            &mut self.streams.anchor,
            &mut self.streams.uniform_set,
            &mut rec.group,
        )?;
        self.model
            .draw_bonuses(k, &mut self.streams.bonus, &mut self.scratch);
        rec.bonuses.clear();
        for (&i, &b) in rec.group.iter().zip(&self.scratch) {
            let b = W::from_draw(b)?;
            rec.bonuses.push(b);
            state.credit(i, b)?;
        }
        let x = W::from_draw(self.model.draw_initial(&mut self.streams.initial_weight))?;
        rec.new_weight = x;
        state.push_researcher(x)?;
        state.n += 1;
        Ok(&self.record)
    }
}

/// Group law realised by the anchor-plus-uniform sampler, enumerated
/// analytically: every `(anchor, uniform (k-1)-subset)` pair contributes
/// `W_anchor / S * 1 / C(n, k - 1)` to the union set.
///
/// Sets are listed in lexicographic order of their sorted labels.
pub fn anchor_uniform_law(weights: &[f64], k: usize) -> Vec<(Vec<usize>, f64)> {
    let pop = weights.len();
    assert!(k >= 1 && k <= pop, "group size out of range");
    let total: f64 = weights.iter().sum();
    let others = pop - 1;
    let subsets_of_others = binomial(others, k - 1);
    let mut law: std::collections::BTreeMap<Vec<usize>, f64> = Default::default();
    for (anchor, &w) in weights.iter().enumerate() {
        let rest: Vec<usize> = (0..pop).filter(|&j| j != anchor).collect();
        for_each_subset(&rest, k - 1, &mut |sub| {
            let mut set = sub.to_vec();
            set.push(anchor);
            set.sort_unstable();
            *law.entry(set).or_insert(0.0) += w / total / subsets_of_others;
        });
    }
    law.into_iter().collect()
}

fn binomial(n: usize, r: usize) -> f64 {
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn for_each_subset(items: &[usize], r: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(
        items: &[usize],
        r: usize,
        start: usize,
        cur: &mut Vec<usize>,
        f: &mut dyn FnMut(&[usize]),
    ) {
        if cur.len() == r {
            f(cur);
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            rec(items, r, i + 1, cur, f);
            cur.pop();
        }
    }
    rec(items, r, 0, &mut Vec::with_capacity(r), f);
}
