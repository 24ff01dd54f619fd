//! Corpus ingestion and preprocessing: tokenization, stopword removal,
//! Porter stemming, tf-idf vocabulary selection, and construction of the
//! document-term matrix that every downstream stage consumes.

pub mod io;
pub mod porter;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

pub use porter::stem;

/// One input document. `text` may be empty; such documents are dropped when
/// the matrix is built.
#[derive(Debug, Clone)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
    pub label: Option<String>,
}

impl RawDocument {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        RawDocument { id: id.into(), text: text.into(), label: None }
    }

    pub fn labeled(id: impl Into<String>, text: impl Into<String>, label: impl Into<String>) -> Self {
        RawDocument { id: id.into(), text: text.into(), label: Some(label.into()) }
    }
}

/// Settings for the three preprocessing filters.
#[derive(Debug, Clone)]
pub struct PreprocessConfig {
    pub stopwords: BTreeSet<String>,
    pub stemming_enabled: bool,
    /// Fraction of distinct terms retained by tf-idf selection, in (0, 1].
    pub keep_fraction: f64,
    /// Tokens with fewer characters are discarded.
    pub min_token_length: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            stopwords: default_stopwords(),
            stemming_enabled: true,
            keep_fraction: 0.05,
            min_token_length: 2,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.keep_fraction > 0.0 && self.keep_fraction <= 1.0) {
            return Err(Error::config(
                "keep-fraction",
                format!("must lie in (0, 1], got {}", self.keep_fraction),
            ));
        }
        if self.min_token_length < 1 {
            return Err(Error::config("min-token-length", "must be at least 1"));
        }
        Ok(())
    }
}

/// The bundled English stopword list.
pub fn default_stopwords() -> BTreeSet<String> {
    io::parse_stopword_text(include_str!("../../data/stopwords_english.txt"))
}

/// Lowercase and split on any non-alphanumeric character; drop tokens below
/// the length floor and purely numeric tokens.
pub fn tokenize(text: &str, config: &PreprocessConfig) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(|t| t.chars().count() >= config.min_token_length)
        .filter(|t| !t.chars().all(char::is_numeric))
        .collect()
}

/// Order-preserving stopword filter.
pub fn remove_stopwords(tokens: Vec<String>, stopwords: &BTreeSet<String>) -> Vec<String> {
    tokens.into_iter().filter(|t| !stopwords.contains(t)).collect()
}

/// Full token pipeline for one document: tokenize, remove stopwords, stem.
pub fn preprocess_text(text: &str, config: &PreprocessConfig) -> Vec<String> {
    let tokens = remove_stopwords(tokenize(text, config), &config.stopwords);
    if config.stemming_enabled {
        tokens.iter().map(|t| stem(t)).collect()
    } else {
        tokens
    }
}

/// The retained term set with the statistics behind its selection.
///
/// `terms` is sorted lexicographically; the parallel vectors hold each term's
/// corpus frequency `w`, document frequency `d`, and tf-idf score.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    pub terms: Vec<String>,
    pub term_index: HashMap<String, u32>,
    pub corpus_tf: Vec<u64>,
    pub doc_freq: Vec<u64>,
    pub tfidf_score: Vec<f64>,
    /// W: total token count of the corpus the vocabulary was selected from.
    pub total_tokens: u64,
    /// D: document count of that corpus.
    pub num_docs: u64,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<u32> {
        self.term_index.get(term).copied()
    }
}

/// tf-idf score (w/W)·ln(D/d).
fn tfidf(w: u64, total: u64, docs: u64, d: u64) -> f64 {
    (w as f64 / total as f64) * (docs as f64 / d as f64).ln()
}

/// Score every distinct term by (w/W)·ln(D/d) and retain the
/// ⌈keep_fraction·distinct⌉ best, ties going to the lexicographically
/// smaller term.
pub fn select_vocabulary(docs: &[Vec<String>], config: &PreprocessConfig) -> Result<Vocabulary> {
    config.validate()?;
    let mut stats: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    let mut total: u64 = 0;
    for doc in docs {
        let mut seen: HashSet<&str> = HashSet::new();
        for token in doc {
            total += 1;
            let entry = stats.entry(token).or_insert((0, 0));
            entry.0 += 1;
            if seen.insert(token) {
                entry.1 += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::invalid("cannot select a vocabulary from a corpus with zero tokens"));
    }
    let num_docs = docs.len() as u64;
    let retain = ((config.keep_fraction * stats.len() as f64).ceil() as usize).max(1);

    // BTreeMap iteration is lexicographic, so a stable sort by descending
    // score leaves ties in lexicographic order.
    let mut scored: Vec<(&str, u64, u64, f64)> = stats
        .iter()
        .map(|(&term, &(w, d))| (term, w, d, tfidf(w, total, num_docs, d)))
        .collect();
    scored.sort_by(|a, b| b.3.partial_cmp(&a.3).expect("tf-idf scores are finite"));
    scored.truncate(retain);
    scored.sort_by(|a, b| a.0.cmp(b.0));

    let mut vocab = Vocabulary {
        terms: Vec::with_capacity(scored.len()),
        term_index: HashMap::with_capacity(scored.len()),
        corpus_tf: Vec::with_capacity(scored.len()),
        doc_freq: Vec::with_capacity(scored.len()),
        tfidf_score: Vec::with_capacity(scored.len()),
        total_tokens: total,
        num_docs,
    };
    for (i, (term, w, d, score)) in scored.into_iter().enumerate() {
        vocab.terms.push(term.to_string());
        vocab.term_index.insert(term.to_string(), i as u32);
        vocab.corpus_tf.push(w);
        vocab.doc_freq.push(d);
        vocab.tfidf_score.push(score);
    }
    Ok(vocab)
}

/// Ordered documents × selected vocabulary with per-cell token counts.
/// Row order is significant: it is the order LDA consumes documents in.
#[derive(Debug, Clone)]
pub struct DocumentTermMatrix {
    pub doc_ids: Vec<String>,
    pub vocabulary: Arc<Vocabulary>,
    /// Per document: (term index, count) pairs in ascending term order.
    pub rows: Vec<Vec<(u32, u32)>>,
    /// Per-document labels, present only when every document carries one.
    pub labels: Option<Vec<String>>,
}

impl DocumentTermMatrix {
    pub fn num_docs(&self) -> usize {
        self.rows.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn total_tokens(&self) -> u64 {
        self.rows.iter().flatten().map(|&(_, c)| c as u64).sum()
    }

    pub fn row_tokens(&self, row: usize) -> u64 {
        self.rows[row].iter().map(|&(_, c)| c as u64).sum()
    }

    /// A copy with rows sorted by document id: the canonical order that
    /// seeded shuffles are defined over.
    pub fn sorted_by_doc_id(&self) -> DocumentTermMatrix {
        let mut order: Vec<usize> = (0..self.num_docs()).collect();
        order.sort_by(|&a, &b| self.doc_ids[a].cmp(&self.doc_ids[b]));
        self.permuted(&order)
    }

    fn permuted(&self, order: &[usize]) -> DocumentTermMatrix {
        DocumentTermMatrix {
            doc_ids: order.iter().map(|&i| self.doc_ids[i].clone()).collect(),
            vocabulary: Arc::clone(&self.vocabulary),
            rows: order.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: self
                .labels
                .as_ref()
                .map(|ls| order.iter().map(|&i| ls[i].clone()).collect()),
        }
    }
}

/// A built matrix plus the ids of documents dropped for having no retained
/// tokens.
#[derive(Debug, Clone)]
pub struct MatrixBuild {
    pub matrix: DocumentTermMatrix,
    pub dropped: Vec<String>,
}

/// Count vocabulary terms per preprocessed document; drop empty rows.
pub fn build_matrix(
    docs: &[RawDocument],
    vocab: &Arc<Vocabulary>,
    config: &PreprocessConfig,
) -> Result<MatrixBuild> {
    let mut seen_ids: HashSet<&str> = HashSet::new();
    for doc in docs {
        if !seen_ids.insert(&doc.id) {
            return Err(Error::invalid(format!("duplicate document id {:?}", doc.id)));
        }
    }
    let mut matrix = DocumentTermMatrix {
        doc_ids: Vec::new(),
        vocabulary: Arc::clone(vocab),
        rows: Vec::new(),
        labels: None,
    };
    let mut labels: Vec<Option<String>> = Vec::new();
    let mut dropped = Vec::new();
    for doc in docs {
        let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
        for token in preprocess_text(&doc.text, config) {
            if let Some(idx) = vocab.index_of(&token) {
                *counts.entry(idx).or_insert(0) += 1;
            }
        }
        if counts.is_empty() {
            dropped.push(doc.id.clone());
            continue;
        }
        matrix.doc_ids.push(doc.id.clone());
        matrix.rows.push(counts.into_iter().collect());
        labels.push(doc.label.clone());
    }
    if matrix.rows.is_empty() {
        return Err(Error::invalid("every document was empty after preprocessing"));
    }
    if labels.iter().all(|l| l.is_some()) {
        matrix.labels = Some(labels.into_iter().map(Option::unwrap).collect());
    }
    if !dropped.is_empty() {
        log::warn!("dropped {} document(s) with no retained tokens", dropped.len());
    }
    Ok(MatrixBuild { matrix, dropped })
}

/// Return a copy with rows permuted by a seeded uniform (Fisher–Yates)
/// permutation; ids and labels stay aligned with their rows.
pub fn shuffle(matrix: &DocumentTermMatrix, seed: u64) -> DocumentTermMatrix {
    let mut order: Vec<usize> = (0..matrix.num_docs()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..order.len()).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    matrix.permuted(&order)
}
