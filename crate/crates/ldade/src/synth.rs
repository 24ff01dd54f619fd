//! Seeded synthetic corpora with known structure, used as oracles: a
//! planted two-topic labeled corpus and a larger semi-synthetic corpus
//! with many fine-grained themes, surface-form variation and filler
//! terms.

use crate::corpus::RawDocument;
use crate::seeds;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeds behind the files bundled under `data/`.
pub const BUNDLED_PLANTED_SEED: u64 = 707;
pub const BUNDLED_SEMISYNTH_SEED: u64 = 1320;

/// The two disjoint planted vocabularies. Every word is a fixed point of
/// the stemmer, so planted sets can be compared against topic words
/// directly.
pub const PLANTED_NEG: [&str; 10] = [
    "socket", "packet", "router", "buffer", "subnet", "modem", "kernel", "uplink", "bandwidth",
    "ping",
];
pub const PLANTED_POS: [&str; 10] = [
    "schema", "cursor", "commit", "rollback", "shard", "index", "join", "lookup", "offset",
    "insert",
];

/// Within-theme word weights, steep enough that the top-5 set is
/// unambiguous and the tail is rare.
pub const PLANTED_WEIGHTS: [f64; 10] = [0.32, 0.24, 0.16, 0.10, 0.08, 0.03, 0.03, 0.02, 0.01, 0.01];

fn weighted_index(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Two-topic corpus: each document draws all its tokens from exactly one
/// planted vocabulary and is labeled `neg` or `pos` accordingly.
pub fn planted_corpus(num_docs: usize, seed: u64) -> Vec<RawDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::with_capacity(num_docs);
    for i in 0..num_docs {
        let (theme, label): (&[&str], &str) =
            if i % 2 == 0 { (&PLANTED_NEG, "neg") } else { (&PLANTED_POS, "pos") };
        let len = rng.gen_range(4..=6);
        let tokens: Vec<&str> =
            (0..len).map(|_| theme[weighted_index(&PLANTED_WEIGHTS, &mut rng)]).collect();
        docs.push(RawDocument::labeled(format!("p{i:04}"), tokens.join(" "), label));
    }
    docs
}

/// The planted corpus serialized as the bundled CSV (id, text, label).
pub fn planted_csv(num_docs: usize, seed: u64) -> String {
    let mut out = String::from("id,text,label\n");
    for doc in planted_corpus(num_docs, seed) {
        out.push_str(&doc.id);
        out.push(',');
        out.push_str(&doc.text);
        out.push(',');
        out.push_str(doc.label.as_deref().unwrap_or(""));
        out.push('\n');
    }
    out
}

const FINE_THEMES: usize = 22;
const WORDS_PER_THEME: usize = 9;
const CONTENT_COUNT: usize = FINE_THEMES * WORDS_PER_THEME;
const FILLER_COUNT: usize = 3800;
const CONTENT_TOKENS_PER_DOC: usize = 5;
const FILLER_TOKENS_PER_DOC: usize = 4;
const STOPWORD_TOKENS_PER_DOC: usize = 2;
/// Fraction of content tokens drawn from a uniformly random other theme.
const CROSS_THEME_SHARE: f64 = 0.10;
/// Within-theme word weights, steep at the head (per-theme counts near
/// 70/42/28 pin the leading ranks even for fragments of a theme) and
/// gently spaced at the tail.
const THEME_WEIGHTS: [f64; WORDS_PER_THEME] =
    [10.0, 6.0, 4.0, 3.0, 2.4, 2.0, 1.7, 1.45, 1.25];

const INJECTED_STOPWORDS: [&str; 8] = ["the", "and", "for", "that", "with", "this", "from", "have"];

/// Synthetic stems shaped onset–vowel–onset–vowel–coda. The codas dodge
/// every stemmer suffix, so each base is a fixed point, and base+s,
/// base+ed, base+ing all stem back to it.
fn stem_pool() -> Vec<String> {
    let onsets = ["b", "d", "f", "g", "h", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"];
    let vowels = ["a", "e", "i", "o", "u"];
    let codas = ["rd", "rk", "rt", "nd", "mp", "sk", "ld", "lf", "lp", "rn"];
    let mut pool = Vec::with_capacity(onsets.len() * vowels.len() * onsets.len() * vowels.len());
    for c1 in onsets {
        for v1 in vowels {
            for c2 in onsets {
                for v2 in vowels {
                    for coda in codas {
                        pool.push(format!("{c1}{v1}{c2}{v2}{coda}"));
                    }
                }
            }
        }
    }
    pool
}

fn shuffle<T>(xs: &mut [T], rng: &mut ChaCha8Rng) {
    for i in (1..xs.len()).rev() {
        let j = rng.gen_range(0..=i);
        xs.swap(i, j);
    }
}

/// Content stems and filler stems for a seed. Content layout: 22 themes ×
/// 9 exclusive stems, theme-major and weight-ordered within each theme.
pub fn semisynth_vocab(seed: u64) -> (Vec<String>, Vec<String>) {
    let mut pool = stem_pool();
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, &[0]));
    shuffle(&mut pool, &mut rng);
    let content = pool[..CONTENT_COUNT].to_vec();
    let fillers = pool[CONTENT_COUNT..][..FILLER_COUNT].to_vec();
    (content, fillers)
}

fn surface_variant(base: &str, choice: usize) -> String {
    match choice {
        0 => base.to_string(),
        1 => format!("{base}ed"),
        2 => format!("{base}ing"),
        _ => format!("{base}s"),
    }
}

/// Corpus of short documents over 22 fine-grained themes — more latent
/// structure than the default topic count, which is the point: a model
/// with too few topics must merge themes, and which themes share a topic
/// varies from run to run, destabilizing the reported top words at every
/// depth. A model with enough topics recovers the themes and their steep
/// exclusive word stacks, which pin the top-word sets regardless of
/// document order.
///
/// Per document: 5 content tokens from the document's theme (each with a
/// 10% chance of straying to a random other theme), 4 filler tokens
/// cycling through all fillers (so each occurs at least once) and 2
/// injected stopwords. Content tokens vary their surface form.
pub fn semisynth_corpus(num_docs: usize, seed: u64) -> Vec<RawDocument> {
    let (content, fillers) = semisynth_vocab(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, &[1]));
    let mut docs = Vec::with_capacity(num_docs);
    let mut filler_cursor = 0usize;
    for i in 0..num_docs {
        let theme = i % FINE_THEMES;
        let mut tokens: Vec<String> = Vec::with_capacity(
            CONTENT_TOKENS_PER_DOC + FILLER_TOKENS_PER_DOC + STOPWORD_TOKENS_PER_DOC,
        );
        for _ in 0..CONTENT_TOKENS_PER_DOC {
            let t = if rng.gen::<f64>() < CROSS_THEME_SHARE {
                loop {
                    let other = rng.gen_range(0..FINE_THEMES);
                    if other != theme {
                        break other;
                    }
                }
            } else {
                theme
            };
            let rank = weighted_index(&THEME_WEIGHTS, &mut rng);
            let base = &content[t * WORDS_PER_THEME + rank];
            tokens.push(surface_variant(base, rng.gen_range(0..4)));
        }
        for _ in 0..FILLER_TOKENS_PER_DOC {
            tokens.push(fillers[filler_cursor % FILLER_COUNT].clone());
            filler_cursor += 1;
        }
        for _ in 0..STOPWORD_TOKENS_PER_DOC {
            tokens.push(INJECTED_STOPWORDS[rng.gen_range(0..INJECTED_STOPWORDS.len())].to_string());
        }
        shuffle(&mut tokens, &mut rng);
        let mut text = tokens.join(" ");
        text.push('.');
        docs.push(RawDocument::new(format!("s{i:04}"), text));
    }
    docs
}

/// The semi-synthetic corpus serialized as the bundled one-document-per-line
/// text file.
pub fn semisynth_lines(num_docs: usize, seed: u64) -> String {
    let mut out = String::new();
    for doc in semisynth_corpus(num_docs, seed) {
        out.push_str(&doc.text);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{porter, preprocess_text, select_vocabulary, PreprocessConfig};
    use std::collections::BTreeSet;

    #[test]
    fn planted_words_are_stemmer_fixed_points_and_disjoint() {
        let mut seen = BTreeSet::new();
        for w in PLANTED_NEG.iter().chain(PLANTED_POS.iter()) {
            assert_eq!(porter::stem(w), *w, "{w} must survive stemming unchanged");
            assert!(seen.insert(*w), "{w} appears in both themes");
            assert!(w.len() >= 4);
        }
        let sum: f64 = PLANTED_WEIGHTS.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn planted_docs_stay_inside_their_theme() {
        let docs = planted_corpus(200, BUNDLED_PLANTED_SEED);
        assert_eq!(docs.len(), 200);
        let neg: BTreeSet<&str> = PLANTED_NEG.iter().copied().collect();
        let pos: BTreeSet<&str> = PLANTED_POS.iter().copied().collect();
        for (i, doc) in docs.iter().enumerate() {
            let theme = if i % 2 == 0 { &neg } else { &pos };
            let label = if i % 2 == 0 { "neg" } else { "pos" };
            assert_eq!(doc.label.as_deref(), Some(label));
            let words: Vec<&str> = doc.text.split(' ').collect();
            assert!(words.len() >= 4 && words.len() <= 6);
            for w in words {
                assert!(theme.contains(w), "{w} outside theme in doc {i}");
            }
        }
    }

    #[test]
    fn planted_generation_is_deterministic() {
        let a = planted_csv(50, 3);
        let b = planted_csv(50, 3);
        assert_eq!(a, b);
        let c = planted_csv(50, 4);
        assert_ne!(a, c);
    }

    #[test]
    fn semisynth_stems_and_variants_collapse_correctly() {
        let (content, fillers) = semisynth_vocab(BUNDLED_SEMISYNTH_SEED);
        assert_eq!(content.len(), 198);
        assert_eq!(fillers.len(), 3800);
        let mut all: BTreeSet<&String> = content.iter().collect();
        for f in &fillers {
            assert!(all.insert(f), "{f} duplicated across content and filler");
        }
        for base in content.iter().take(25).chain(fillers.iter().take(25)) {
            assert_eq!(porter::stem(base), *base);
            for choice in 0..4 {
                assert_eq!(porter::stem(&surface_variant(base, choice)), *base);
            }
        }
    }

    /// The lightest stem of a theme can realize only a couple of tokens and
    /// land on the tf-idf cut line; the invariant is that every theme keeps
    /// its eight heaviest stems and that content stems dominate the
    /// selected vocabulary.
    #[test]
    fn semisynth_preprocessing_keeps_each_themes_heavy_stems() {
        let docs = semisynth_corpus(1000, BUNDLED_SEMISYNTH_SEED);
        let cfg = PreprocessConfig::default();
        let token_lists: Vec<Vec<String>> =
            docs.iter().map(|d| preprocess_text(&d.text, &cfg)).collect();
        let distinct: BTreeSet<&String> = token_lists.iter().flatten().collect();
        assert_eq!(distinct.len(), 3998, "content stems plus fillers, nothing else");
        let vocab = select_vocabulary(&token_lists, &cfg).unwrap();
        assert_eq!(vocab.len(), 200);
        let (content, _) = semisynth_vocab(BUNDLED_SEMISYNTH_SEED);
        let got: BTreeSet<&String> = vocab.terms.iter().collect();
        for theme in 0..FINE_THEMES {
            for rank in 0..WORDS_PER_THEME - 1 {
                let stem = &content[theme * WORDS_PER_THEME + rank];
                assert!(
                    got.contains(stem),
                    "{stem} (theme {theme}, rank {rank}) must survive tf-idf selection"
                );
            }
        }
        let retained = content.iter().filter(|s| got.contains(s)).count();
        assert!(retained >= 190, "only {retained} of 198 content stems selected");
    }

    #[test]
    fn semisynth_serialization_is_deterministic() {
        let a = semisynth_lines(30, 5);
        let b = semisynth_lines(30, 5);
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 30);
    }

    #[test]
    fn bundled_files_match_their_generators() {
        let planted = include_str!("../data/planted_200.csv");
        assert_eq!(planted, planted_csv(200, BUNDLED_PLANTED_SEED));
        let semisynth = include_str!("../data/semisynth_1k.txt");
        assert_eq!(semisynth, semisynth_lines(1000, BUNDLED_SEMISYNTH_SEED));
    }
}
