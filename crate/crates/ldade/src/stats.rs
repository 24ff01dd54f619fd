//! Statistical comparison of treatment result distributions: Vargha–Delaney
//! A12 effect size, a pooled bootstrap test of the mean difference, and
//! Scott-Knott ranking that accepts a split only when it is both significant
//! and non-small.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{seeds, Error, Result};

/// Median of a nonempty slice; an even count averages the two middle values.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty slice");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("values are finite"));
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// A named sample of result values (per-seed scores, per-fold metrics, ...).
#[derive(Debug, Clone)]
pub struct SampleGroup {
    pub name: String,
    pub values: Vec<f64>,
}

impl SampleGroup {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        SampleGroup { name: name.into(), values }
    }
}

/// Vargha–Delaney A12: the probability that a draw from `xs` beats a draw
/// from `ys`, ties counting half.
pub fn a12(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::invalid("a12 requires two nonempty samples"));
    }
    let mut wins = 0.0;
    for &x in xs {
        for &y in ys {
            if x > y {
                wins += 1.0;
            } else if x == y {
                wins += 0.5;
            }
        }
    }
    Ok(wins / (xs.len() as f64 * ys.len() as f64))
}

/// Two-sided bootstrap test of the mean difference under the pooled null:
/// resample both groups from the pooled values B times and report the
/// fraction of resampled |mean differences| at least as large as observed.
pub fn bootstrap_test(xs: &[f64], ys: &[f64], b: usize, seed: u64) -> Result<f64> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::invalid("bootstrap requires two nonempty samples"));
    }
    if b < 1 {
        return Err(Error::invalid("bootstrap resample count must be at least 1"));
    }
    let observed = (mean(xs) - mean(ys)).abs();
    let pooled: Vec<f64> = xs.iter().chain(ys).copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw_mean = |n: usize, rng: &mut ChaCha8Rng| {
        let mut sum = 0.0;
        for _ in 0..n {
            sum += pooled[rng.gen_range(0..pooled.len())];
        }
        sum / n as f64
    };
    let mut hits = 0usize;
    for _ in 0..b {
        let m1 = draw_mean(xs.len(), &mut rng);
        let m2 = draw_mean(ys.len(), &mut rng);
        if (m1 - m2).abs() >= observed {
            hits += 1;
        }
    }
    Ok(hits as f64 / b as f64)
}

/// Knobs for `scott_knott`; defaults follow the 99%-confidence / non-small
/// effect convention.
#[derive(Debug, Clone, Copy)]
pub struct ScottKnottConfig {
    pub significance: f64,
    pub a12_threshold: f64,
    pub bootstrap_samples: usize,
    pub seed: u64,
}

impl Default for ScottKnottConfig {
    fn default() -> Self {
        ScottKnottConfig { significance: 0.01, a12_threshold: 0.6, bootstrap_samples: 1000, seed: 0 }
    }
}

/// A group's position in the Scott-Knott ranking; rank 1 holds the best
/// medians. `index` refers back to the input order.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedGroup {
    pub index: usize,
    pub name: String,
    pub median: f64,
    pub rank: usize,
}

/// Rank groups by recursive partitioning: sort by median (best first), find
/// the split maximizing the between-group sum of squares, and accept it only
/// when the bootstrap test rejects at `significance` and A12 clears the
/// threshold; otherwise the whole run shares one rank.
pub fn scott_knott(groups: &[SampleGroup], config: &ScottKnottConfig) -> Result<Vec<RankedGroup>> {
    if groups.is_empty() {
        return Err(Error::invalid("scott_knott requires at least one group"));
    }
    for g in groups {
        if g.values.is_empty() {
            return Err(Error::invalid(format!("group {:?} has no values", g.name)));
        }
    }
    if !(config.significance > 0.0 && config.significance < 1.0) {
        return Err(Error::invalid("significance must lie in (0, 1)"));
    }

    let medians: Vec<f64> = groups.iter().map(|g| median(&g.values)).collect();
    // Canonical order: best median first, names breaking ties, so the
    // ranking never depends on input order.
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.sort_by(|&a, &b| {
        medians[b]
            .partial_cmp(&medians[a])
            .expect("medians are finite")
            .then_with(|| groups[a].name.cmp(&groups[b].name))
    });

    let mut ranks = vec![0usize; groups.len()];
    partition(groups, config, &order, 0, &mut ranks, 1);

    Ok((0..groups.len())
        .map(|i| RankedGroup {
            index: i,
            name: groups[i].name.clone(),
            median: medians[i],
            rank: ranks[i],
        })
        .collect())
}

/// Assign ranks to `order[..]` (sorted best-first) starting at `next_rank`;
/// returns the first unused rank. `offset` is the slice's position in the
/// full sorted order and pins the per-split bootstrap seed.
fn partition(
    groups: &[SampleGroup],
    config: &ScottKnottConfig,
    order: &[usize],
    offset: usize,
    ranks: &mut [usize],
    next_rank: usize,
) -> usize {
    if order.len() <= 1 {
        if let Some(&g) = order.first() {
            ranks[g] = next_rank;
            return next_rank + 1;
        }
        return next_rank;
    }

    let pooled = |idx: &[usize]| -> Vec<f64> {
        idx.iter().flat_map(|&g| groups[g].values.iter().copied()).collect()
    };
    let all = pooled(order);
    let grand = mean(&all);
    let mut best_cut = 1;
    let mut best_bss = f64::NEG_INFINITY;
    for cut in 1..order.len() {
        let left = pooled(&order[..cut]);
        let right = pooled(&order[cut..]);
        let bss = left.len() as f64 * (mean(&left) - grand).powi(2)
            + right.len() as f64 * (mean(&right) - grand).powi(2);
        if bss > best_bss {
            best_bss = bss;
            best_cut = cut;
        }
    }

    let left = pooled(&order[..best_cut]);
    let right = pooled(&order[best_cut..]);
    let split_seed = seeds::derive(config.seed, &[offset as u64, order.len() as u64]);
    let p = bootstrap_test(&left, &right, config.bootstrap_samples, split_seed)
        .expect("slices are nonempty");
    let effect = a12(&left, &right).expect("slices are nonempty");
    if p < config.significance && effect >= config.a12_threshold {
        let next = partition(groups, config, &order[..best_cut], offset, ranks, next_rank);
        partition(groups, config, &order[best_cut..], offset + best_cut, ranks, next)
    } else {
        for &g in order {
            ranks[g] = next_rank;
        }
        next_rank + 1
    }
}
