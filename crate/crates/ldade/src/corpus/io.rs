//! File formats: raw corpora (line-per-document text and id/text/label CSV),
//! stopword lists, and the on-disk matrix directory written by `preprocess`
//! and consumed by the other commands.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::corpus::{DocumentTermMatrix, RawDocument, Vocabulary};
use crate::{Error, Result};

/// Files making up an exported matrix directory.
pub const MATRIX_FILES: &[&str] =
    &["triplets.csv", "terms.txt", "vocabulary.csv", "docs.csv", "meta.json"];

/// Load a plain-text corpus: one document per line, ids are 1-based line
/// numbers, no labels.
pub fn load_lines(path: &Path) -> Result<Vec<RawDocument>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, line)| RawDocument::new((i + 1).to_string(), line))
        .collect())
}

/// Load a CSV corpus with header columns `id,text[,label]`.
pub fn load_csv(path: &Path) -> Result<Vec<RawDocument>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let id_col = col("id")
        .ok_or_else(|| Error::parse(path, 1, "missing required column `id`"))?;
    let text_col = col("text")
        .ok_or_else(|| Error::parse(path, 1, "missing required column `text`"))?;
    let label_col = col("label");

    let mut docs = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| csv_error(path, e))?;
        let field = |c: usize| {
            record
                .get(c)
                .map(str::to_string)
                .ok_or_else(|| Error::parse(path, line, format!("missing column {c}")))
        };
        docs.push(RawDocument {
            id: field(id_col)?,
            text: field(text_col)?,
            label: label_col.map(field).transpose()?,
        });
    }
    Ok(docs)
}

/// Load a stopword file: one word per line, `#` comments and blank lines
/// ignored, entries lowercased.
pub fn load_stopwords(path: &Path) -> Result<BTreeSet<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_stopword_text(&text))
}

pub(crate) fn parse_stopword_text(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

/// Render the matrix directory contents: sparse triplets, the term list,
/// per-term selection statistics, per-document ids/labels, and corpus
/// totals. Returned in `MATRIX_FILES` order.
pub fn render_matrix(matrix: &DocumentTermMatrix, dropped: &[String]) -> Vec<(String, String)> {
    let mut files = Vec::with_capacity(MATRIX_FILES.len());

    let mut triplets = String::from("doc_index,term_index,count\n");
    for (d, row) in matrix.rows.iter().enumerate() {
        for &(t, c) in row {
            triplets.push_str(&format!("{d},{t},{c}\n"));
        }
    }
    files.push(("triplets.csv".to_string(), triplets));

    let mut terms = String::new();
    for term in &matrix.vocabulary.terms {
        terms.push_str(term);
        terms.push('\n');
    }
    files.push(("terms.txt".to_string(), terms));

    let v = &matrix.vocabulary;
    let mut vocab_csv = String::from("term,corpus_tf,doc_freq,tfidf_score\n");
    for i in 0..v.len() {
        vocab_csv.push_str(&format!(
            "{},{},{},{}\n",
            v.terms[i], v.corpus_tf[i], v.doc_freq[i], v.tfidf_score[i]
        ));
    }
    files.push(("vocabulary.csv".to_string(), vocab_csv));

    let mut docs = csv::Writer::from_writer(Vec::new());
    docs.write_record(["doc_index", "doc_id", "label"]).expect("in-memory csv");
    for (i, id) in matrix.doc_ids.iter().enumerate() {
        let label = matrix.labels.as_ref().map(|ls| ls[i].as_str()).unwrap_or("");
        docs.write_record([i.to_string().as_str(), id, label]).expect("in-memory csv");
    }
    let docs_bytes = docs.into_inner().expect("in-memory csv flushes");
    files.push(("docs.csv".to_string(), String::from_utf8(docs_bytes).expect("utf-8 records")));

    let meta = serde_json::json!({
        "dropped_doc_ids": dropped,
        "has_labels": matrix.labels.is_some(),
        "num_docs": matrix.num_docs(),
        "vocab_num_docs": v.num_docs,
        "vocab_size": v.len(),
        "vocab_total_tokens": v.total_tokens,
    });
    files.push(("meta.json".to_string(), format!("{:#}\n", meta)));
    files
}

/// Write the matrix directory (see `render_matrix` for the contents).
pub fn export_matrix(matrix: &DocumentTermMatrix, dropped: &[String], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, content) in render_matrix(matrix, dropped) {
        let path = dir.join(&name);
        fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Read back a matrix directory written by `export_matrix`.
pub fn load_matrix(dir: &Path) -> Result<DocumentTermMatrix> {
    let meta_path = dir.join("meta.json");
    let meta_text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: serde_json::Value = serde_json::from_str(&meta_text)
        .map_err(|e| Error::parse(&meta_path, e.line(), e.to_string()))?;
    let meta_u64 = |key: &str| -> Result<u64> {
        meta.get(key)
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::parse(&meta_path, 1, format!("missing integer field {key:?}")))
    };
    let has_labels = meta.get("has_labels").and_then(|v| v.as_bool()).unwrap_or(false);

    let vocab_path = dir.join("vocabulary.csv");
    let text = fs::read_to_string(&vocab_path).map_err(|e| Error::io(&vocab_path, e))?;
    let mut vocab = Vocabulary {
        terms: Vec::new(),
        term_index: HashMap::new(),
        corpus_tf: Vec::new(),
        doc_freq: Vec::new(),
        tfidf_score: Vec::new(),
        total_tokens: meta_u64("vocab_total_tokens")?,
        num_docs: meta_u64("vocab_num_docs")?,
    };
    for (i, line) in text.lines().enumerate().skip(1) {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(Error::parse(&vocab_path, i + 1, "expected 4 comma-separated fields"));
        }
        let parse_err = |what: &str| Error::parse(&vocab_path, i + 1, format!("bad {what}"));
        vocab.term_index.insert(parts[0].to_string(), vocab.terms.len() as u32);
        vocab.terms.push(parts[0].to_string());
        vocab.corpus_tf.push(parts[1].parse().map_err(|_| parse_err("corpus_tf"))?);
        vocab.doc_freq.push(parts[2].parse().map_err(|_| parse_err("doc_freq"))?);
        vocab.tfidf_score.push(parts[3].parse().map_err(|_| parse_err("tfidf_score"))?);
    }

    let docs_path = dir.join("docs.csv");
    let mut reader = csv::Reader::from_path(&docs_path).map_err(|e| csv_error(&docs_path, e))?;
    let mut doc_ids = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(&docs_path, e))?;
        doc_ids.push(record.get(1).unwrap_or_default().to_string());
        labels.push(record.get(2).unwrap_or_default().to_string());
    }

    let trip_path = dir.join("triplets.csv");
    let text = fs::read_to_string(&trip_path).map_err(|e| Error::io(&trip_path, e))?;
    let mut rows: Vec<BTreeMap<u32, u32>> = vec![BTreeMap::new(); doc_ids.len()];
    for (i, line) in text.lines().enumerate().skip(1) {
        let mut parts = line.split(',');
        let mut next = |what: &str| -> Result<u64> {
            parts
                .next()
                .and_then(|p| p.parse().ok())
                .ok_or_else(|| Error::parse(&trip_path, i + 1, format!("bad {what}")))
        };
        let (d, t, c) = (next("doc_index")?, next("term_index")?, next("count")?);
        if d as usize >= rows.len() || t as usize >= vocab.len() {
            return Err(Error::parse(&trip_path, i + 1, "index out of range"));
        }
        rows[d as usize].insert(t as u32, c as u32);
    }

    Ok(DocumentTermMatrix {
        doc_ids,
        vocabulary: Arc::new(vocab),
        rows: rows.into_iter().map(|r| r.into_iter().collect()).collect(),
        labels: if has_labels { Some(labels) } else { None },
    })
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = match e.position() {
        Some(pos) => pos.line() as usize,
        None => 0,
    };
    Error::parse(path, line, e.to_string())
}
