//! The order-shuffled stability score ℜₙ: fit LDA m times, each on a freshly
//! shuffled document order, and measure how often each reference topic's
//! top-n word set reappears verbatim; take the median over topics, then the
//! median over j repeats of the whole procedure.

use rayon::prelude::*;

use crate::corpus::{shuffle, DocumentTermMatrix};
use crate::lda::{fit_gibbs, top_words, LdaParams};
use crate::seeds;
use crate::stats::median;
use crate::{Error, Result};

/// Seed-stream labels keeping shuffle and fit randomness independent.
const SHUFFLE_STREAM: u64 = 1;
const FIT_STREAM: u64 = 2;

/// How many runs (m), repeats (j), and top words (n) the score uses.
#[derive(Debug, Clone)]
pub struct StabilityConfig {
    pub runs_m: usize,
    pub repeats_j: usize,
    pub n_words: usize,
    pub base_seed: u64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig { runs_m: 10, repeats_j: 10, n_words: 5, base_seed: 0 }
    }
}

impl StabilityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs_m < 2 {
            return Err(Error::config("runs", "must be at least 2"));
        }
        if self.repeats_j < 1 {
            return Err(Error::config("repeats", "must be at least 1"));
        }
        if !(1..=9).contains(&self.n_words) {
            return Err(Error::config("n-words", "must lie in 1..=9"));
        }
        Ok(())
    }
}

/// One run's topics, each summarized by its ordered top words.
#[derive(Debug, Clone)]
pub struct TopicSnapshot {
    pub run_index: usize,
    pub topics: Vec<Vec<String>>,
}

/// One repeat's outcome: the k per-topic match fractions and their median.
#[derive(Debug, Clone)]
pub struct OverlapOutcome {
    pub overlap_score: f64,
    pub per_topic_fraction: Vec<f64>,
}

/// Full scoring record for one n: all j repeats plus the median raw score.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub n_words: usize,
    pub runs_m: usize,
    pub repeats_j: usize,
    pub base_seed: u64,
    pub repeats: Vec<OverlapOutcome>,
    pub raw_score: f64,
}

/// Match fractions against the reference run (snapshot 0).
///
/// A reference topic matches run r when some topic of r has exactly the same
/// top-n word set (|∩| ≥ n over n-sized sets is set equality). The reference
/// run counts itself, so every fraction is at least 1/m.
pub fn overlap(snapshots: &[TopicSnapshot], n: usize, k: usize) -> Result<(f64, Vec<f64>)> {
    if snapshots.is_empty() {
        return Err(Error::invalid("overlap needs at least one snapshot"));
    }
    if n < 1 {
        return Err(Error::invalid("n must be at least 1"));
    }
    for snap in snapshots {
        if snap.topics.len() < k {
            return Err(Error::invalid(format!(
                "snapshot {} has {} topics, expected {k}",
                snap.run_index,
                snap.topics.len()
            )));
        }
        for topic in &snap.topics {
            if topic.len() < n {
                return Err(Error::invalid(format!(
                    "snapshot {} has a topic with {} words, need {n}",
                    snap.run_index,
                    topic.len()
                )));
            }
        }
    }

    // Sorted top-n word lists; set equality becomes slice equality.
    let keys: Vec<Vec<Vec<&str>>> = snapshots
        .iter()
        .map(|snap| {
            snap.topics
                .iter()
                .map(|topic| {
                    let mut key: Vec<&str> = topic[..n].iter().map(String::as_str).collect();
                    key.sort_unstable();
                    key
                })
                .collect()
        })
        .collect();

    let m = snapshots.len() as f64;
    let fractions: Vec<f64> = keys[0][..k]
        .iter()
        .map(|reference| {
            let matches = keys
                .iter()
                .filter(|run| run.iter().any(|candidate| candidate == reference))
                .count();
            matches as f64 / m
        })
        .collect();
    Ok((median(&fractions), fractions))
}

/// Candidate parameters as the stability score sees them.
#[derive(Debug, Clone, Copy)]
pub struct ScorePoint {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
}

fn run_snapshot(
    canonical: &DocumentTermMatrix,
    point: ScorePoint,
    iterations: usize,
    base_seed: u64,
    repeat: usize,
    run: usize,
    top_n: usize,
) -> Result<TopicSnapshot> {
    let shuffled = shuffle(
        canonical,
        seeds::derive(base_seed, &[SHUFFLE_STREAM, repeat as u64, run as u64]),
    );
    let params = LdaParams {
        k: point.k,
        alpha: point.alpha,
        beta: point.beta,
        iterations,
        seed: seeds::derive(base_seed, &[FIT_STREAM, repeat as u64, run as u64]),
    };
    let model = fit_gibbs(&shuffled, &params)?;
    let topics = (0..point.k)
        .map(|t| top_words(&model, t, top_n))
        .collect::<Result<Vec<_>>>()?;
    Ok(TopicSnapshot { run_index: run, topics })
}

/// All m×j snapshots, extracted once at `top_n` words per topic. Runs in
/// parallel; results are ordered by (repeat, run) regardless of thread count.
fn collect_snapshots(
    matrix: &DocumentTermMatrix,
    point: ScorePoint,
    config: &StabilityConfig,
    iterations: usize,
    top_n: usize,
) -> Result<Vec<Vec<TopicSnapshot>>> {
    config.validate()?;
    if point.k < 1 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let canonical = matrix.sorted_by_doc_id();
    let (m, j) = (config.runs_m, config.repeats_j);
    let flat: Vec<Result<TopicSnapshot>> = (0..m * j)
        .into_par_iter()
        .map(|idx| {
            run_snapshot(&canonical, point, iterations, config.base_seed, idx / m, idx % m, top_n)
        })
        .collect();
    let mut out: Vec<Vec<TopicSnapshot>> = Vec::with_capacity(j);
    let mut iter = flat.into_iter();
    for _ in 0..j {
        out.push((0..m).map(|_| iter.next().unwrap()).collect::<Result<Vec<_>>>()?);
    }
    Ok(out)
}

fn report_for_n(
    snapshots: &[Vec<TopicSnapshot>],
    n: usize,
    k: usize,
    config: &StabilityConfig,
) -> Result<StabilityReport> {
    let repeats = snapshots
        .iter()
        .map(|snaps| {
            overlap(snaps, n, k)
                .map(|(score, fractions)| OverlapOutcome { overlap_score: score, per_topic_fraction: fractions })
        })
        .collect::<Result<Vec<_>>>()?;
    let scores: Vec<f64> = repeats.iter().map(|r| r.overlap_score).collect();
    Ok(StabilityReport {
        n_words: n,
        runs_m: config.runs_m,
        repeats_j: config.repeats_j,
        base_seed: config.base_seed,
        repeats,
        raw_score: median(&scores),
    })
}

/// The raw stability score ℜₙ for one candidate: median over j repeats of
/// the per-repeat overlap score. Deterministic in (matrix contents, point,
/// config) and independent of the incoming row order.
pub fn ldascore(
    n: usize,
    point: ScorePoint,
    matrix: &DocumentTermMatrix,
    config: &StabilityConfig,
    iterations: usize,
) -> Result<f64> {
    Ok(ldascore_report(n, point, matrix, config, iterations)?.raw_score)
}

/// As `ldascore`, returning the full per-repeat detail.
pub fn ldascore_report(
    n: usize,
    point: ScorePoint,
    matrix: &DocumentTermMatrix,
    config: &StabilityConfig,
    iterations: usize,
) -> Result<StabilityReport> {
    if n < 1 || n > matrix.vocab_size() {
        return Err(Error::invalid(format!("n = {n} out of range for this vocabulary")));
    }
    let snapshots = collect_snapshots(matrix, point, config, iterations, n)?;
    report_for_n(&snapshots, n, point.k, config)
}

/// ℜₙ for every n in 1..=9 from a single set of m×j runs (topics are
/// extracted once at the deepest n and truncated).
pub fn stability_curve(
    point: ScorePoint,
    matrix: &DocumentTermMatrix,
    config: &StabilityConfig,
    iterations: usize,
) -> Result<Vec<StabilityReport>> {
    let top_n = 9.min(matrix.vocab_size());
    let snapshots = collect_snapshots(matrix, point, config, iterations, top_n)?;
    (1..=top_n).map(|n| report_for_n(&snapshots, n, point.k, config)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_matrix, preprocess_text, select_vocabulary, PreprocessConfig, RawDocument};
    use std::sync::Arc;

    fn snap(run_index: usize, topics: &[&[&str]]) -> TopicSnapshot {
        TopicSnapshot {
            run_index,
            topics: topics
                .iter()
                .map(|t| t.iter().map(|w| w.to_string()).collect())
                .collect(),
        }
    }

    /// Four runs of four topics with per-topic reference fractions
    /// 1/2, 3/4, 1/4 and 1: the worked overlap example.
    fn worked_example() -> Vec<TopicSnapshot> {
        let a = ["trace", "stack", "heap", "frame", "dump"];
        let b = ["socket", "packet", "route", "port", "buffer"];
        let c = ["query", "table", "index", "join", "schema"];
        let d = ["thread", "lock", "mutex", "race", "deadlock"];
        // Reordered copies: matching is over word sets, not sequences.
        let a_perm = ["dump", "frame", "heap", "stack", "trace"];
        let b_perm = ["buffer", "port", "route", "packet", "socket"];
        let d_perm = ["deadlock", "race", "mutex", "lock", "thread"];
        // Near misses share only 4 of 5 words and must not count.
        let near_c1 = ["query", "table", "index", "join", "pivot"];
        let near_c2 = ["query", "table", "join", "schema", "plan"];
        let near_a = ["trace", "stack", "heap", "frame", "segv"];
        let near_b = ["socket", "packet", "route", "port", "retry"];
        let x1 = ["alloc", "free", "leak", "slab", "page"];
        let x2 = ["cache", "evict", "flush", "dirty", "clean"];
        vec![
            snap(0, &[&a, &b, &c, &d]),
            snap(1, &[&a_perm, &b, &d, &near_c1]),
            snap(2, &[&b_perm, &d, &near_a, &x1]),
            snap(3, &[&d_perm, &near_c2, &near_b, &x2]),
        ]
    }

    #[test]
    fn worked_example_fractions_and_median() {
        let (score, fractions) = overlap(&worked_example(), 5, 4).unwrap();
        assert_eq!(fractions, vec![0.5, 0.75, 0.25, 1.0]);
        assert_eq!(score, 0.625);
    }

    #[test]
    fn identical_runs_score_one() {
        let t = ["socket", "packet", "route", "port", "buffer"];
        let u = ["query", "table", "index", "join", "schema"];
        let snaps: Vec<TopicSnapshot> = (0..6).map(|r| snap(r, &[&t, &u])).collect();
        let (score, fractions) = overlap(&snaps, 5, 2).unwrap();
        assert_eq!(score, 1.0);
        assert_eq!(fractions, vec![1.0, 1.0]);
    }

    #[test]
    fn disjoint_runs_score_one_over_m() {
        let snaps: Vec<TopicSnapshot> = (0..4)
            .map(|r| {
                let words: Vec<String> = (0..5).map(|i| format!("w{r}{i}")).collect();
                TopicSnapshot { run_index: r, topics: vec![words] }
            })
            .collect();
        let (score, fractions) = overlap(&snaps, 5, 1).unwrap();
        assert_eq!(score, 0.25);
        assert_eq!(fractions, vec![0.25]);
    }

    #[test]
    fn overlap_is_invariant_to_topic_and_run_relabeling() {
        let mut snaps = worked_example();
        let baseline = overlap(&snaps, 5, 4).unwrap();
        // Permute topics inside a non-reference run and swap two runs.
        snaps[2].topics.reverse();
        snaps.swap(1, 3);
        assert_eq!(overlap(&snaps, 5, 4).unwrap(), baseline);
    }

    #[test]
    fn truncation_changes_the_match_structure() {
        // At n=4 the 4-of-5 near misses become exact matches while the
        // reordered copies (whose fifth word is up front) stop matching.
        let (score, fractions) = overlap(&worked_example(), 4, 4).unwrap();
        assert_eq!(fractions, vec![0.5, 0.75, 0.5, 0.75]);
        assert_eq!(score, 0.625);
        // At n=1 a topic's key is just its leading word.
        let (score, fractions) = overlap(&worked_example(), 1, 4).unwrap();
        assert_eq!(fractions, vec![0.5, 0.75, 0.75, 0.75]);
        assert_eq!(score, 0.75);
    }

    #[test]
    fn overlap_rejects_short_snapshots() {
        let snaps = worked_example();
        assert!(overlap(&snaps, 6, 4).is_err(), "topics only have 5 words");
        assert!(overlap(&snaps, 5, 5).is_err(), "runs only have 4 topics");
    }

    fn tiny_corpus(texts: &[&str]) -> DocumentTermMatrix {
        let cfg = PreprocessConfig {
            keep_fraction: 1.0,
            stemming_enabled: false,
            ..PreprocessConfig::default()
        };
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

    #[test]
    fn single_word_corpus_is_perfectly_stable() {
        let m = tiny_corpus(&["socket socket socket"]);
        let config = StabilityConfig { runs_m: 2, repeats_j: 1, n_words: 1, base_seed: 3 };
        let point = ScorePoint { k: 1, alpha: 0.1, beta: 0.1 };
        assert_eq!(ldascore(1, point, &m, &config, 10).unwrap(), 1.0);
    }

    #[test]
    fn ldascore_is_deterministic_and_order_invariant() {
        let m = tiny_corpus(&[
            "socket packet route",
            "query table index",
            "socket packet port",
            "query table join",
        ]);
        let config = StabilityConfig { runs_m: 3, repeats_j: 2, n_words: 2, base_seed: 17 };
        let point = ScorePoint { k: 2, alpha: 0.1, beta: 0.1 };
        let a = ldascore(2, point, &m, &config, 20).unwrap();
        let b = ldascore(2, point, &m, &config, 20).unwrap();
        assert_eq!(a, b);
        let permuted = crate::corpus::shuffle(&m, 999);
        let c = ldascore(2, point, &permuted, &config, 20).unwrap();
        assert_eq!(a, c, "score must not depend on incoming row order");
    }

    #[test]
    fn curve_matches_individual_scores() {
        let m = tiny_corpus(&[
            "socket packet route port buffer",
            "query table index join schema",
            "socket packet route buffer port",
            "query table index schema join",
        ]);
        let config = StabilityConfig { runs_m: 3, repeats_j: 2, n_words: 5, base_seed: 5 };
        let point = ScorePoint { k: 2, alpha: 0.1, beta: 0.1 };
        let curve = stability_curve(point, &m, &config, 20).unwrap();
        assert_eq!(curve.len(), 9);
        for report in &curve {
            assert!(report.raw_score >= 1.0 / config.runs_m as f64);
            assert!(report.raw_score <= 1.0);
            assert_eq!(report.repeats.len(), 2);
            for repeat in &report.repeats {
                assert_eq!(repeat.per_topic_fraction.len(), 2);
                for &f in &repeat.per_topic_fraction {
                    let scaled = f * config.runs_m as f64;
                    assert!((scaled - scaled.round()).abs() < 1e-12, "fraction {f} not a multiple of 1/m");
                }
            }
        }
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let bad = StabilityConfig { runs_m: 1, ..StabilityConfig::default() };
        assert!(bad.validate().is_err());
        let bad = StabilityConfig { repeats_j: 0, ..StabilityConfig::default() };
        assert!(bad.validate().is_err());
        let bad = StabilityConfig { n_words: 10, ..StabilityConfig::default() };
        assert!(bad.validate().is_err());
    }
}
