//! Latent Dirichlet Allocation fitted by collapsed Gibbs sampling with
//! symmetric priors. A fit is fully determined by (matrix row order, params,
//! seed); presenting the same documents in a different order may converge to
//! a different model, which is exactly the order effect the stability score
//! measures.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{DocumentTermMatrix, Vocabulary};
use crate::{Error, Result};

/// Sampler parameters: topic count, symmetric Dirichlet priors, sweep count,
/// and the seed that makes the fit reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaParams {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

pub const DEFAULT_ITERATIONS: usize = 100;
pub const DEFAULT_K: usize = 10;

impl LdaParams {
    /// Untuned defaults: k = 10, alpha = beta = 1/k, 100 sweeps.
    pub fn untuned(seed: u64) -> Self {
        let k = DEFAULT_K;
        LdaParams {
            k,
            alpha: 1.0 / k as f64,
            beta: 1.0 / k as f64,
            iterations: DEFAULT_ITERATIONS,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if !(self.alpha > 0.0) || !(self.beta > 0.0) {
            return Err(Error::invalid(format!(
                "priors must be strictly positive, got alpha={} beta={}",
                self.alpha, self.beta
            )));
        }
        if self.iterations < 1 {
            return Err(Error::invalid("iterations must be at least 1"));
        }
        Ok(())
    }
}

/// Final tallies of the sampler: token counts per (doc, topic), (topic,
/// word) and topic, plus per-document totals.
#[derive(Debug, Clone)]
pub struct AssignmentCounts {
    pub k: usize,
    pub vocab_size: usize,
    /// Row-major D×k.
    pub doc_topic: Vec<u32>,
    /// Row-major k×V.
    pub topic_word: Vec<u32>,
    pub topic: Vec<u32>,
    pub doc: Vec<u32>,
}

impl AssignmentCounts {
    pub fn n_dk(&self, d: usize, t: usize) -> u32 {
        self.doc_topic[d * self.k + t]
    }

    pub fn n_kw(&self, t: usize, w: usize) -> u32 {
        self.topic_word[t * self.vocab_size + w]
    }
}

/// A fitted topic model: smoothed topic-word (`phi`) and document-topic
/// (`theta`) distributions plus the raw tallies they came from.
#[derive(Debug, Clone)]
pub struct TopicModel {
    pub params: LdaParams,
    pub vocabulary: Arc<Vocabulary>,
    /// k rows of length V, each summing to 1.
    pub phi: Vec<Vec<f64>>,
    /// D rows of length k, each summing to 1.
    pub theta: Vec<Vec<f64>>,
    pub counts: AssignmentCounts,
}

impl TopicModel {
    pub fn num_topics(&self) -> usize {
        self.params.k
    }

    pub fn num_docs(&self) -> usize {
        self.theta.len()
    }

    /// Re-estimate phi from the stored tallies under a different beta.
    pub fn phi_with_beta(&self, beta: f64) -> Vec<Vec<f64>> {
        let v = self.counts.vocab_size;
        (0..self.counts.k)
            .map(|t| {
                let denom = self.counts.topic[t] as f64 + v as f64 * beta;
                (0..v).map(|w| (self.counts.n_kw(t, w) as f64 + beta) / denom).collect()
            })
            .collect()
    }
}

/// Fit by collapsed Gibbs: seeded uniform initialization, then `iterations`
/// full sweeps resampling every token's topic from
/// P(z=t | ·) ∝ (n_dt + α)(n_tw + β)/(n_t + Vβ), all counts excluding the
/// token itself. Estimates come from the final sweep's tallies.
pub fn fit_gibbs(matrix: &DocumentTermMatrix, params: &LdaParams) -> Result<TopicModel> {
    params.validate()?;
    let d_count = matrix.num_docs();
    let v = matrix.vocab_size();
    if d_count == 0 || v == 0 {
        return Err(Error::invalid("cannot fit LDA on an empty matrix"));
    }
    if params.k > d_count {
        log::warn!("k = {} exceeds the document count {}", params.k, d_count);
    }
    let k = params.k;
    let (alpha, beta) = (params.alpha, params.beta);
    let vbeta = v as f64 * beta;

    // Flatten to a token stream in row order (terms ascending within a row);
    // this order is the one the seeded RNG is consumed in.
    let total: usize = matrix.total_tokens() as usize;
    if total == 0 {
        return Err(Error::invalid("cannot fit LDA on a matrix with zero tokens"));
    }
    let mut tokens: Vec<u32> = Vec::with_capacity(total);
    let mut doc_offsets: Vec<usize> = Vec::with_capacity(d_count + 1);
    doc_offsets.push(0);
    for row in &matrix.rows {
        for &(t, c) in row {
            for _ in 0..c {
                tokens.push(t);
            }
        }
        doc_offsets.push(tokens.len());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut z: Vec<u32> = Vec::with_capacity(total);
    let mut n_dk = vec![0u32; d_count * k];
    let mut n_wk = vec![0u32; v * k];
    let mut n_k = vec![0u32; k];
    for d in 0..d_count {
        for i in doc_offsets[d]..doc_offsets[d + 1] {
            let t = rng.gen_range(0..k as u32);
            z.push(t);
            n_dk[d * k + t as usize] += 1;
            n_wk[tokens[i] as usize * k + t as usize] += 1;
            n_k[t as usize] += 1;
        }
    }

    // Per-topic reciprocal denominators, updated incrementally: only the two
    // topics touched by a move change.
    let mut inv_nk: Vec<f64> = n_k.iter().map(|&c| 1.0 / (c as f64 + vbeta)).collect();
    let mut weights = vec![0.0f64; k];
    for _ in 0..params.iterations {
        for d in 0..d_count {
            let dk = d * k;
            for i in doc_offsets[d]..doc_offsets[d + 1] {
                let w = tokens[i] as usize;
                let wk = w * k;
                let old = z[i] as usize;
                n_dk[dk + old] -= 1;
                n_wk[wk + old] -= 1;
                n_k[old] -= 1;
                inv_nk[old] = 1.0 / (n_k[old] as f64 + vbeta);

                let mut sum = 0.0;
                for t in 0..k {
                    let wgt = (n_dk[dk + t] as f64 + alpha)
                        * (n_wk[wk + t] as f64 + beta)
                        * inv_nk[t];
                    weights[t] = wgt;
                    sum += wgt;
                }
                let u = rng.gen::<f64>() * sum;
                let mut acc = 0.0;
                let mut new = k - 1;
                for (t, &wgt) in weights.iter().enumerate() {
                    acc += wgt;
                    if u < acc {
                        new = t;
                        break;
                    }
                }
                n_dk[dk + new] += 1;
                n_wk[wk + new] += 1;
                n_k[new] += 1;
                inv_nk[new] = 1.0 / (n_k[new] as f64 + vbeta);
                z[i] = new as u32;
            }
        }
    }

    let phi: Vec<Vec<f64>> = (0..k)
        .map(|t| {
            let denom = n_k[t] as f64 + vbeta;
            (0..v).map(|w| (n_wk[w * k + t] as f64 + beta) / denom).collect()
        })
        .collect();
    let n_d: Vec<u32> = (0..d_count)
        .map(|d| (doc_offsets[d + 1] - doc_offsets[d]) as u32)
        .collect();
    let theta: Vec<Vec<f64>> = (0..d_count)
        .map(|d| {
            let denom = n_d[d] as f64 + k as f64 * alpha;
            (0..k).map(|t| (n_dk[d * k + t] as f64 + alpha) / denom).collect()
        })
        .collect();

    // Repack topic-word counts into k×V row-major for the public tallies.
    let mut topic_word = vec![0u32; k * v];
    for w in 0..v {
        for t in 0..k {
            topic_word[t * v + w] = n_wk[w * k + t];
        }
    }
    Ok(TopicModel {
        params: params.clone(),
        vocabulary: Arc::clone(&matrix.vocabulary),
        phi,
        theta,
        counts: AssignmentCounts {
            k,
            vocab_size: v,
            doc_topic: n_dk,
            topic_word,
            topic: n_k,
            doc: n_d,
        },
    })
}

/// The n highest-weight terms of a topic, descending by weight, ties to the
/// lexicographically smaller term.
pub fn top_words(model: &TopicModel, topic: usize, n: usize) -> Result<Vec<String>> {
    let v = model.vocabulary.len();
    if topic >= model.params.k {
        return Err(Error::invalid(format!("topic {topic} out of range")));
    }
    if n < 1 || n > v {
        return Err(Error::invalid(format!("n = {n} must lie in 1..={v}")));
    }
    let row = &model.phi[topic];
    let mut idx: Vec<usize> = (0..v).collect();
    idx.sort_by(|&a, &b| {
        row[b]
            .partial_cmp(&row[a])
            .expect("phi entries are finite")
            .then_with(|| model.vocabulary.terms[a].cmp(&model.vocabulary.terms[b]))
    });
    Ok(idx[..n].iter().map(|&i| model.vocabulary.terms[i].clone()).collect())
}

/// Document-topic feature matrix for downstream classifiers: theta.
pub fn doc_topic_features(model: &TopicModel) -> &[Vec<f64>] {
    &model.theta
}
