//! Differential evolution over ⟨k, α, β⟩ maximizing the stability score,
//! plus a random-search baseline at a matched budget. Both searches are
//! fully seeded: candidate generation, fitness evaluation and the final
//! re-score all derive their streams from one seed.

use std::time::Instant;

use rayon::prelude::*;

use crate::corpus::DocumentTermMatrix;
use crate::seeds;
use crate::stability::{ldascore, ScorePoint, StabilityConfig};
use crate::{Error, Result};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seed-stream labels: candidate draws, inner fitness, final re-score.
const CANDIDATE_STREAM: u64 = 10;
const FITNESS_STREAM: u64 = 11;
const RESCORE_STREAM: u64 = 12;

/// Search box for the three tuned parameters. The α/β floor is ε rather
/// than 0 because Gibbs priors must stay strictly positive.
#[derive(Debug, Clone)]
pub struct Bounds {
    pub k_range: (usize, usize),
    pub alpha_range: (f64, f64),
    pub beta_range: (f64, f64),
}

pub const EPS: f64 = 1e-3;

impl Default for Bounds {
    fn default() -> Self {
        Bounds { k_range: (10, 100), alpha_range: (EPS, 1.0), beta_range: (EPS, 1.0) }
    }
}

impl Bounds {
    pub fn validate(&self) -> Result<()> {
        if self.k_range.0 < 1 || self.k_range.0 > self.k_range.1 {
            return Err(Error::invalid(format!("bad k range {:?}", self.k_range)));
        }
        for (name, range) in [("alpha", self.alpha_range), ("beta", self.beta_range)] {
            if !(range.0 > 0.0 && range.0 <= range.1) {
                return Err(Error::invalid(format!("bad {name} range {range:?}")));
            }
        }
        Ok(())
    }

    /// Clamp, with k rounded half-up to an integer first.
    pub fn trim_k(&self, x: f64) -> f64 {
        x.round().clamp(self.k_range.0 as f64, self.k_range.1 as f64)
    }

    pub fn trim_alpha(&self, x: f64) -> f64 {
        x.clamp(self.alpha_range.0, self.alpha_range.1)
    }

    pub fn trim_beta(&self, x: f64) -> f64 {
        x.clamp(self.beta_range.0, self.beta_range.1)
    }
}

/// One parameter vector; `k` stays a real and is trimmed to an integer at
/// every evaluation.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub k: f64,
    pub alpha: f64,
    pub beta: f64,
    pub fitness: Option<f64>,
}

impl Candidate {
    pub fn trimmed(k: f64, alpha: f64, beta: f64, bounds: &Bounds) -> Self {
        Candidate {
            k: bounds.trim_k(k),
            alpha: bounds.trim_alpha(alpha),
            beta: bounds.trim_beta(beta),
            fitness: None,
        }
    }

    pub fn point(&self) -> ScorePoint {
        ScorePoint { k: self.k as usize, alpha: self.alpha, beta: self.beta }
    }

    fn same_params(&self, other: &Candidate) -> bool {
        self.k == other.k && self.alpha == other.alpha && self.beta == other.beta
    }

    /// Tie-break order for equal fitness: smaller k, then α, then β.
    fn params_key(&self) -> (f64, f64, f64) {
        (self.k, self.alpha, self.beta)
    }
}

/// Differential-evolution settings. `inner_repeats` is the (cheap) repeat
/// count used for fitness inside the search; the winner is re-scored at
/// `final_repeats`.
#[derive(Debug, Clone)]
pub struct DeConfig {
    pub np: usize,
    pub f: f64,
    pub cr: f64,
    pub iter: usize,
    pub inner_repeats: usize,
    pub final_repeats: usize,
}

impl Default for DeConfig {
    fn default() -> Self {
        DeConfig { np: 10, f: 0.7, cr: 0.3, iter: 3, inner_repeats: 1, final_repeats: 10 }
    }
}

impl DeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.np < 4 {
            return Err(Error::config("np", "population must be at least 4"));
        }
        if !(0.0..=2.0).contains(&self.f) {
            return Err(Error::config("f", "differential weight must lie in [0, 2]"));
        }
        if !(0.0..=1.0).contains(&self.cr) {
            return Err(Error::config("cr", "crossover probability must lie in [0, 1]"));
        }
        if self.iter < 1 {
            return Err(Error::config("generations", "must be at least 1"));
        }
        if self.inner_repeats < 1 || self.final_repeats < 1 {
            return Err(Error::config("repeats", "must be at least 1"));
        }
        Ok(())
    }
}

/// One fitness evaluation in the search history.
#[derive(Debug, Clone)]
pub struct EvalRecord {
    pub generation: usize,
    pub k: f64,
    pub alpha: f64,
    pub beta: f64,
    pub fitness: f64,
    pub lda_fits: u64,
    pub elapsed_ms: u64,
}

/// Search outcome: the winner, its search-time score, the re-score at full
/// repeats, and complete evaluation accounting.
#[derive(Debug, Clone)]
pub struct TuningResult {
    pub best: Candidate,
    /// Best fitness seen during the search (at `inner_repeats`).
    pub best_score: f64,
    /// The winner re-scored at `final_repeats`.
    pub final_score: f64,
    pub evaluations: usize,
    pub history: Vec<EvalRecord>,
    pub lda_fit_count: u64,
    pub elapsed: std::time::Duration,
}

/// The DE mutation with explicit donors: each dimension mutates to
/// trim(a + f·(b − c)) with probability cr and keeps the old value
/// otherwise.
pub fn mutate(
    old: &Candidate,
    a: &Candidate,
    b: &Candidate,
    c: &Candidate,
    cr: f64,
    f: f64,
    bounds: &Bounds,
    rng: &mut ChaCha8Rng,
) -> Candidate {
    let mut pick = |old_v: f64, a_v: f64, b_v: f64, c_v: f64, trim: &dyn Fn(f64) -> f64| {
        if rng.gen::<f64>() < cr {
            trim(a_v + f * (b_v - c_v))
        } else {
            old_v
        }
    };
    let k = pick(old.k, a.k, b.k, c.k, &|x| bounds.trim_k(x));
    let alpha = pick(old.alpha, a.alpha, b.alpha, c.alpha, &|x| bounds.trim_alpha(x));
    let beta = pick(old.beta, a.beta, b.beta, c.beta, &|x| bounds.trim_beta(x));
    Candidate { k, alpha, beta, fitness: None }
}

/// Build a challenger for `old`: draw three distinct candidates (all with
/// parameters different from `old`) from the population and mutate.
pub fn extrapolate(
    old: &Candidate,
    pop: &[Candidate],
    cr: f64,
    f: f64,
    bounds: &Bounds,
    rng: &mut ChaCha8Rng,
) -> Result<Candidate> {
    let mut others: Vec<usize> =
        (0..pop.len()).filter(|&i| !pop[i].same_params(old)).collect();
    if others.len() < 3 {
        return Err(Error::invalid(format!(
            "population of {} leaves only {} donors distinct from the incumbent; need 3",
            pop.len(),
            others.len()
        )));
    }
    for i in 0..3 {
        let j = rng.gen_range(i..others.len());
        others.swap(i, j);
    }
    let (a, b, c) = (&pop[others[0]], &pop[others[1]], &pop[others[2]]);
    Ok(mutate(old, a, b, c, cr, f, bounds, rng))
}

fn sample_candidate(bounds: &Bounds, rng: &mut ChaCha8Rng) -> Candidate {
    let k = rng.gen_range(bounds.k_range.0 as f64..=bounds.k_range.1 as f64);
    let alpha = rng.gen_range(bounds.alpha_range.0..=bounds.alpha_range.1);
    let beta = rng.gen_range(bounds.beta_range.0..=bounds.beta_range.1);
    Candidate::trimmed(k, alpha, beta, bounds)
}

/// Evaluate candidates in parallel with a shared stability seed (so rivals
/// face identical shuffles) and append history records in slot order.
fn evaluate_batch(
    candidates: &mut [Candidate],
    generation: usize,
    matrix: &DocumentTermMatrix,
    n: usize,
    inner: &StabilityConfig,
    lda_iterations: usize,
    history: &mut Vec<EvalRecord>,
) -> Result<()> {
    let fits_per_eval = (inner.runs_m * inner.repeats_j) as u64;
    let scored: Vec<Result<(f64, u64)>> = candidates
        .par_iter()
        .map(|cand| {
            let start = Instant::now();
            let fitness = ldascore(n, cand.point(), matrix, inner, lda_iterations)?;
            Ok((fitness, start.elapsed().as_millis() as u64))
        })
        .collect();
    for (cand, outcome) in candidates.iter_mut().zip(scored) {
        let (fitness, elapsed_ms) = outcome?;
        cand.fitness = Some(fitness);
        history.push(EvalRecord {
            generation,
            k: cand.k,
            alpha: cand.alpha,
            beta: cand.beta,
            fitness,
            lda_fits: fits_per_eval,
            elapsed_ms,
        });
    }
    Ok(())
}

fn best_of(pop: &[Candidate]) -> Candidate {
    pop.iter()
        .min_by(|a, b| {
            let fa = a.fitness.expect("population is evaluated");
            let fb = b.fitness.expect("population is evaluated");
            fb.partial_cmp(&fa)
                .expect("fitness is finite")
                .then_with(|| a.params_key().partial_cmp(&b.params_key()).unwrap())
        })
        .expect("population is nonempty")
        .clone()
}

fn finish(
    mut history: Vec<EvalRecord>,
    best: Candidate,
    matrix: &DocumentTermMatrix,
    n: usize,
    stability: &StabilityConfig,
    de: &DeConfig,
    lda_iterations: usize,
    seed: u64,
    started: Instant,
) -> Result<TuningResult> {
    let best_score = best.fitness.expect("winner is evaluated");
    let rescore_cfg = StabilityConfig {
        runs_m: stability.runs_m,
        repeats_j: de.final_repeats,
        n_words: stability.n_words,
        base_seed: seeds::derive(seed, &[RESCORE_STREAM]),
    };
    let final_score = ldascore(n, best.point(), matrix, &rescore_cfg, lda_iterations)?;
    history.shrink_to_fit();
    let evaluations = history.len();
    let inner_fits: u64 = history.iter().map(|r| r.lda_fits).sum();
    Ok(TuningResult {
        best,
        best_score,
        final_score,
        evaluations,
        history,
        lda_fit_count: inner_fits + (rescore_cfg.runs_m * rescore_cfg.repeats_j) as u64,
        elapsed: started.elapsed(),
    })
}

/// Differential evolution (Algorithm-style ≥-replacement over generation
/// snapshots). Total fitness evaluations: np·(1 + iter).
pub fn tune_de(
    matrix: &DocumentTermMatrix,
    n: usize,
    de: &DeConfig,
    bounds: &Bounds,
    stability: &StabilityConfig,
    lda_iterations: usize,
    seed: u64,
) -> Result<TuningResult> {
    de.validate()?;
    bounds.validate()?;
    let started = Instant::now();
    let inner = StabilityConfig {
        runs_m: stability.runs_m,
        repeats_j: de.inner_repeats,
        n_words: stability.n_words,
        base_seed: seeds::derive(seed, &[FITNESS_STREAM]),
    };
    inner.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, &[CANDIDATE_STREAM]));
    let mut pop: Vec<Candidate> =
        (0..de.np).map(|_| sample_candidate(bounds, &mut rng)).collect();
    let mut history = Vec::with_capacity(de.np * (1 + de.iter));
    evaluate_batch(&mut pop, 0, matrix, n, &inner, lda_iterations, &mut history)?;

    for generation in 1..=de.iter {
        // Challengers come from the previous generation's snapshot; the RNG
        // is consumed in slot order before any evaluation runs.
        let snapshot = pop.clone();
        let mut challengers: Vec<Candidate> = snapshot
            .iter()
            .map(|old| extrapolate(old, &snapshot, de.cr, de.f, bounds, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        evaluate_batch(&mut challengers, generation, matrix, n, &inner, lda_iterations, &mut history)?;
        for (slot, challenger) in challengers.into_iter().enumerate() {
            if challenger.fitness >= pop[slot].fitness {
                pop[slot] = challenger;
            }
        }
    }

    let best = best_of(&pop);
    finish(history, best, matrix, n, stability, de, lda_iterations, seed, started)
}

/// Uniform random search at a fixed evaluation budget; fitness repeats and
/// the final re-score mirror the DE configuration for a fair comparison.
pub fn random_search(
    matrix: &DocumentTermMatrix,
    n: usize,
    budget: usize,
    de: &DeConfig,
    bounds: &Bounds,
    stability: &StabilityConfig,
    lda_iterations: usize,
    seed: u64,
) -> Result<TuningResult> {
    if budget < 1 {
        return Err(Error::config("budget", "must be at least 1"));
    }
    de.validate()?;
    bounds.validate()?;
    let started = Instant::now();
    let inner = StabilityConfig {
        runs_m: stability.runs_m,
        repeats_j: de.inner_repeats,
        n_words: stability.n_words,
        base_seed: seeds::derive(seed, &[FITNESS_STREAM]),
    };
    inner.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, &[CANDIDATE_STREAM]));
    let mut pop: Vec<Candidate> =
        (0..budget).map(|_| sample_candidate(bounds, &mut rng)).collect();
    let mut history = Vec::with_capacity(budget);
    evaluate_batch(&mut pop, 0, matrix, n, &inner, lda_iterations, &mut history)?;
    let best = best_of(&pop);
    finish(history, best, matrix, n, stability, de, lda_iterations, seed, started)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_matrix, preprocess_text, select_vocabulary, PreprocessConfig, RawDocument};
    use std::sync::Arc;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn cand(k: f64, alpha: f64, beta: f64) -> Candidate {
        Candidate { k, alpha, beta, fitness: None }
    }

    #[test]
    fn trim_rounds_half_up_and_clamps() {
        let b = Bounds::default();
        assert_eq!(b.trim_k(33.5), 34.0);
        assert_eq!(b.trim_k(33.4), 33.0);
        assert_eq!(b.trim_k(3.0), 10.0);
        assert_eq!(b.trim_k(250.0), 100.0);
        assert_eq!(b.trim_alpha(-0.5), EPS);
        assert_eq!(b.trim_beta(1.5), 1.0);
    }

    #[test]
    fn mutate_hand_example() {
        let b = Bounds::default();
        let old = cand(50.0, 0.9, 0.9);
        let a = cand(20.0, 0.5, 0.5);
        let bb = cand(30.0, 0.8, 0.2);
        let c = cand(10.0, 0.4, 0.6);
        // cr = 1: every dimension mutates.
        let new = mutate(&old, &a, &bb, &c, 1.0, 0.7, &b, &mut rng(0));
        assert!((new.k - 34.0).abs() < 1e-9);
        assert!((new.alpha - 0.78).abs() < 1e-9);
        assert!((new.beta - 0.22).abs() < 1e-9);
    }

    #[test]
    fn mutate_degenerate_cases() {
        let b = Bounds::default();
        let old = cand(50.0, 0.9, 0.9);
        let a = cand(20.0, 0.5, 0.5);
        let bb = cand(30.0, 0.8, 0.2);
        let c = cand(10.0, 0.4, 0.6);
        // f = 0 with full crossover: the challenger is trim(a).
        let new = mutate(&old, &a, &bb, &c, 1.0, 0.0, &b, &mut rng(0));
        assert_eq!((new.k, new.alpha, new.beta), (a.k, a.alpha, a.beta));
        // cr = 0: nothing mutates.
        let new = mutate(&old, &a, &bb, &c, 0.0, 0.7, &b, &mut rng(0));
        assert_eq!((new.k, new.alpha, new.beta), (old.k, old.alpha, old.beta));
    }

    #[test]
    fn extrapolate_needs_three_distinct_donors() {
        let b = Bounds::default();
        let old = cand(50.0, 0.5, 0.5);
        let pop = vec![old.clone(), cand(20.0, 0.2, 0.2), cand(30.0, 0.3, 0.3)];
        assert!(extrapolate(&old, &pop, 0.3, 0.7, &b, &mut rng(1)).is_err());
        // A duplicate of the incumbent is not a donor.
        let pop = vec![
            old.clone(),
            old.clone(),
            cand(20.0, 0.2, 0.2),
            cand(30.0, 0.3, 0.3),
        ];
        assert!(extrapolate(&old, &pop, 0.3, 0.7, &b, &mut rng(1)).is_err());
        let pop = vec![
            old.clone(),
            cand(20.0, 0.2, 0.2),
            cand(30.0, 0.3, 0.3),
            cand(40.0, 0.4, 0.4),
        ];
        let new = extrapolate(&old, &pop, 1.0, 0.7, &b, &mut rng(1)).unwrap();
        assert!(new.k >= 10.0 && new.k <= 100.0 && new.k.fract() == 0.0);
        assert!(new.alpha >= EPS && new.alpha <= 1.0);
        assert!(new.beta >= EPS && new.beta <= 1.0);
    }

    fn tiny_matrix() -> crate::corpus::DocumentTermMatrix {
        let cfg = PreprocessConfig {
            keep_fraction: 1.0,
            stemming_enabled: false,
            ..PreprocessConfig::default()
        };
        let texts = [
            "socket packet route",
            "query table index",
            "socket packet port",
            "query table join",
            "socket route port",
            "query index join",
        ];
        let docs: Vec<RawDocument> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| RawDocument::new(format!("d{i:03}"), *t))
            .collect();
        let tokens: Vec<Vec<String>> =
            docs.iter().map(|d| preprocess_text(&d.text, &cfg)).collect();
        let vocab = Arc::new(select_vocabulary(&tokens, &cfg).unwrap());
        build_matrix(&docs, &vocab, &cfg).unwrap().matrix
    }

    fn small_setup() -> (DeConfig, Bounds, StabilityConfig) {
        let de = DeConfig { np: 4, iter: 2, ..DeConfig::default() };
        let bounds = Bounds {
            k_range: (1, 4),
            alpha_range: (EPS, 1.0),
            beta_range: (EPS, 1.0),
        };
        let stability = StabilityConfig { runs_m: 2, repeats_j: 1, n_words: 2, base_seed: 0 };
        (de, bounds, stability)
    }

    #[test]
    fn tune_de_accounting_and_determinism() {
        let m = tiny_matrix();
        let (de, bounds, stability) = small_setup();
        let r1 = tune_de(&m, 2, &de, &bounds, &stability, 15, 77).unwrap();
        assert_eq!(r1.evaluations, de.np * (1 + de.iter));
        assert_eq!(r1.history.len(), r1.evaluations);
        let expected_fits = (r1.evaluations * de.inner_repeats * stability.runs_m) as u64
            + (de.final_repeats * stability.runs_m) as u64;
        assert_eq!(r1.lda_fit_count, expected_fits);
        let best_in_history =
            r1.history.iter().map(|r| r.fitness).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(r1.best_score, best_in_history);
        assert!(r1.best.k.fract() == 0.0, "k is integral after trim");

        let r2 = tune_de(&m, 2, &de, &bounds, &stability, 15, 77).unwrap();
        assert_eq!(r1.best_score, r2.best_score);
        assert_eq!(r1.final_score, r2.final_score);
        let h1: Vec<(f64, f64, f64, f64)> =
            r1.history.iter().map(|r| (r.k, r.alpha, r.beta, r.fitness)).collect();
        let h2: Vec<(f64, f64, f64, f64)> =
            r2.history.iter().map(|r| (r.k, r.alpha, r.beta, r.fitness)).collect();
        assert_eq!(h1, h2);
    }

    #[test]
    fn best_so_far_is_non_decreasing_across_generations() {
        let m = tiny_matrix();
        let (de, bounds, stability) = small_setup();
        let result = tune_de(&m, 2, &de, &bounds, &stability, 15, 3).unwrap();
        let mut best = f64::NEG_INFINITY;
        let mut per_gen: Vec<f64> = Vec::new();
        for generation in 0..=de.iter {
            for record in result.history.iter().filter(|r| r.generation == generation) {
                best = best.max(record.fitness);
            }
            per_gen.push(best);
        }
        for pair in per_gen.windows(2) {
            assert!(pair[1] >= pair[0]);
        }
    }

    #[test]
    fn random_search_budget_and_determinism() {
        let m = tiny_matrix();
        let (de, bounds, stability) = small_setup();
        let r1 = random_search(&m, 2, 5, &de, &bounds, &stability, 15, 9).unwrap();
        assert_eq!(r1.evaluations, 5);
        let r2 = random_search(&m, 2, 5, &de, &bounds, &stability, 15, 9).unwrap();
        assert_eq!(r1.best_score, r2.best_score);
        assert_eq!(r1.best.k, r2.best.k);

        let single = random_search(&m, 2, 1, &de, &bounds, &stability, 15, 9).unwrap();
        assert_eq!(single.evaluations, 1);
        assert_eq!(single.best_score, single.history[0].fitness);
    }

    #[test]
    fn config_validation() {
        assert!(DeConfig { np: 3, ..DeConfig::default() }.validate().is_err());
        assert!(DeConfig { f: 2.5, ..DeConfig::default() }.validate().is_err());
        assert!(DeConfig { cr: -0.1, ..DeConfig::default() }.validate().is_err());
        assert!(DeConfig { iter: 0, ..DeConfig::default() }.validate().is_err());
        assert!(Bounds { k_range: (0, 5), ..Bounds::default() }.validate().is_err());
        assert!(Bounds { alpha_range: (0.0, 1.0), ..Bounds::default() }.validate().is_err());
    }

    #[test]
    fn evaluated_candidates_lie_in_bounds() {
        let m = tiny_matrix();
        let (de, bounds, stability) = small_setup();
        let result = tune_de(&m, 2, &de, &bounds, &stability, 15, 21).unwrap();
        for record in &result.history {
            assert!(record.k >= 1.0 && record.k <= 4.0 && record.k.fract() == 0.0);
            assert!(record.alpha >= EPS && record.alpha <= 1.0);
            assert!(record.beta >= EPS && record.beta <= 1.0);
            assert!(record.fitness >= 0.5 && record.fitness <= 1.0, "m=2 floors fractions at 1/2");
        }
    }
}
