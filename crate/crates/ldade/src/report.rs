//! Report rendering: JSON with sorted keys and 12-significant-digit reals,
//! plain CSV with `\n` endings, a provenance block, and an output writer
//! that removes partial results on failure. No artifact carries timestamps
//! or wall-clock fields, so every file is byte-reproducible from its
//! inputs and seed; timing stays on the in-memory `TuningResult`.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::classify::Metrics;
use crate::stability::StabilityReport;
use crate::stats::RankedGroup;
use crate::tuner::TuningResult;
use crate::{Error, Result};

/// Round to 12 significant digits so equal quantities computed along
/// different (reordered) reduction paths print identically.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("scientific notation round-trips")
}

/// A JSON number carrying the rounded real.
pub fn real(x: f64) -> Value {
    Value::Number(serde_json::Number::from_f64(round_sig(x)).expect("reports hold finite reals"))
}

/// Provenance block: hash of the resolved configuration, the seed, and the
/// tool version. No timestamps — reports must be byte-reproducible.
pub fn provenance(config_text: &str, seed: u64) -> Value {
    let digest = Sha256::digest(config_text.as_bytes());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    json!({
        "config_sha256": hex,
        "seed": seed,
        "tool": "ldade",
        "version": env!("CARGO_PKG_VERSION"),
    })
}

/// Pretty JSON with a trailing newline; object keys are always sorted.
pub fn to_json_string(value: &Value) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("report values serialize");
    out.push('\n');
    out
}

/// Files rendered in memory first, then written together; a failure midway
/// removes everything already written so no partial result set survives.
#[derive(Debug, Default)]
pub struct OutputSet {
    files: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn add_text(&mut self, name: &str, text: String) {
        self.add(name, text.into_bytes());
    }

    pub fn add_json(&mut self, name: &str, value: &Value) {
        self.add_text(name, to_json_string(value));
    }

    pub fn names(&self) -> Vec<&str> {
        self.files.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn write_all(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            if let Err(e) = fs::write(&path, bytes) {
                for done in &written {
                    let _ = fs::remove_file(done);
                }
                return Err(Error::io(&path, e));
            }
            written.push(path);
        }
        Ok(written)
    }
}

fn stability_report_value(report: &StabilityReport) -> Value {
    let repeats: Vec<Value> = report
        .repeats
        .iter()
        .map(|o| {
            json!({
                "overlap_score": real(o.overlap_score),
                "per_topic_fraction": o.per_topic_fraction.iter().map(|&f| real(f)).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "base_seed": report.base_seed,
        "n_words": report.n_words,
        "raw_score": real(report.raw_score),
        "repeats": repeats,
        "repeats_j": report.repeats_j,
        "runs_m": report.runs_m,
    })
}

/// Detail JSON for a stability run: the focal-n report plus the full curve.
pub fn stability_json(focal: &StabilityReport, curve: &[StabilityReport], prov: Value) -> Value {
    let curve_points: Vec<Value> = curve
        .iter()
        .map(|r| json!({"n": r.n_words, "raw_score": real(r.raw_score)}))
        .collect();
    json!({
        "curve": curve_points,
        "n_words": focal.n_words,
        "provenance": prov,
        "raw_score": real(focal.raw_score),
        "report": stability_report_value(focal),
    })
}

/// CSV `n,raw_score` over a stability curve.
pub fn curve_csv(curve: &[StabilityReport]) -> String {
    let mut out = String::from("n,raw_score\n");
    for report in curve {
        out.push_str(&format!("{},{}\n", report.n_words, round_sig(report.raw_score)));
    }
    out
}

/// CSV `n,before,after,delta` with delta = after − before pointwise.
pub fn delta_csv(before: &[StabilityReport], after: &[StabilityReport]) -> String {
    let mut out = String::from("n,before,after,delta\n");
    for (b, a) in before.iter().zip(after) {
        out.push_str(&format!(
            "{},{},{},{}\n",
            b.n_words,
            round_sig(b.raw_score),
            round_sig(a.raw_score),
            round_sig(a.raw_score - b.raw_score)
        ));
    }
    out
}

/// Tuning summary (no timing: wall-clock lives in the log stream).
pub fn tuning_json(result: &TuningResult, method: &str, prov: Value) -> Value {
    json!({
        "best": {
            "alpha": real(result.best.alpha),
            "beta": real(result.best.beta),
            "k": result.best.k as u64,
        },
        "best_score": real(result.best_score),
        "evaluations": result.evaluations,
        "final_score": real(result.final_score),
        "lda_fit_count": result.lda_fit_count,
        "method": method,
        "provenance": prov,
    })
}

/// One JSON line per evaluation, in evaluation order.
pub fn tune_log_jsonl(result: &TuningResult) -> String {
    let mut out = String::new();
    for record in &result.history {
        let line = json!({
            "alpha": real(record.alpha),
            "beta": real(record.beta),
            "fitness": real(record.fitness),
            "generation": record.generation,
            "k": record.k as u64,
            "lda_fits": record.lda_fits,
        });
        out.push_str(&serde_json::to_string(&line).expect("log line serializes"));
        out.push('\n');
    }
    out
}

/// Metrics block: medians plus the per-fold breakdown.
pub fn metrics_json(metrics: &Metrics) -> Value {
    let folds: Vec<Value> = metrics
        .per_fold
        .iter()
        .map(|f| {
            json!({
                "f1": real(f.f1),
                "f2": real(f.f2),
                "fold": f.fold,
                "fn": f.fn_,
                "fp": f.fp,
                "precision": real(f.precision),
                "recall": real(f.recall),
                "test_size": f.test_size,
                "tn": f.tn,
                "tp": f.tp,
                "train_size": f.train_size,
                "validation_size": f.validation_size,
            })
        })
        .collect();
    json!({
        "f1": real(metrics.f1),
        "f2": real(metrics.f2),
        "per_fold": folds,
        "positive_label": metrics.positive_label,
        "precision": real(metrics.precision),
        "recall": real(metrics.recall),
    })
}

/// Tuned-vs-untuned comparison emitted by the classify command.
pub fn classify_json(
    untuned: &Metrics,
    tuned: &Metrics,
    tuned_params: (usize, f64, f64),
    prov: Value,
) -> Value {
    json!({
        "provenance": prov,
        "tuned": metrics_json(tuned),
        "tuned_params": {
            "alpha": real(tuned_params.1),
            "beta": real(tuned_params.2),
            "k": tuned_params.0 as u64,
        },
        "untuned": metrics_json(untuned),
    })
}

/// Ranked-group table as JSON.
pub fn stats_json(ranked: &[RankedGroup], prov: Value) -> Value {
    let groups: Vec<Value> = ranked
        .iter()
        .map(|g| {
            json!({
                "median": real(g.median),
                "name": g.name,
                "rank": g.rank,
            })
        })
        .collect();
    json!({"groups": groups, "provenance": prov})
}

/// CSV `group,median,rank` in rank order (best first), name-tiebroken.
pub fn ranks_csv(ranked: &[RankedGroup]) -> String {
    let mut rows: Vec<&RankedGroup> = ranked.iter().collect();
    rows.sort_by(|a, b| a.rank.cmp(&b.rank).then_with(|| a.name.cmp(&b.name)));
    let mut out = String::from("group,median,rank\n");
    for g in rows {
        out.push_str(&format!("{},{},{}\n", g.name, round_sig(g.median), g.rank));
    }
    out
}

/// Flatten a JSON object into sorted `path = value` lines; the canonical
/// text fed to the provenance hash.
pub fn canonical_config_text(value: &Value) -> String {
    fn walk(prefix: &str, value: &Value, out: &mut Vec<String>) {
        match value {
            Value::Object(map) => {
                for (k, v) in map {
                    let next = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&next, v, out);
                }
            }
            other => out.push(format!("{prefix} = {other}")),
        }
    }
    let mut lines = Vec::new();
    match value {
        Value::Object(_) => walk("", value, &mut lines),
        other => lines.push(other.to_string()),
    }
    lines.sort();
    let mut text = lines.join("\n");
    text.push('\n');
    text
}

/// Sorted-key object from explicit pairs (convenience for config blocks).
pub fn sorted_object(pairs: Vec<(&str, Value)>) -> Value {
    let mut map = Map::new();
    for (k, v) in pairs {
        map.insert(k.to_string(), v);
    }
    Value::Object(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_trims_reduction_noise() {
        assert_eq!(round_sig(0.1 + 0.2), 0.3);
        assert_eq!(round_sig(0.625), 0.625);
        assert_eq!(round_sig(0.0), 0.0);
        assert_eq!(round_sig(-1.0 / 3.0), -0.333333333333);
        assert_eq!(round_sig(1.23456789012349e-7), 1.23456789012e-7);
    }

    #[test]
    fn json_keys_are_sorted() {
        let v = json!({"zeta": 1, "alpha": 2, "mid": {"b": 1, "a": 2}});
        let s = to_json_string(&v);
        let alpha = s.find("\"alpha\"").unwrap();
        let mid = s.find("\"mid\"").unwrap();
        let zeta = s.find("\"zeta\"").unwrap();
        assert!(alpha < mid && mid < zeta);
        let a = s.find("\"a\"").unwrap();
        let b = s.find("\"b\"").unwrap();
        assert!(a < b);
        assert!(s.ends_with('\n'));
    }

    #[test]
    fn provenance_is_stable_and_sensitive() {
        let p1 = provenance("k = 10\n", 7);
        let p2 = provenance("k = 10\n", 7);
        assert_eq!(p1, p2);
        let p3 = provenance("k = 11\n", 7);
        assert_ne!(p1["config_sha256"], p3["config_sha256"]);
        assert_eq!(p1["seed"], json!(7));
    }

    #[test]
    fn canonical_text_sorts_and_flattens() {
        let v = json!({"b": {"y": 2.5, "x": 1}, "a": "s"});
        let text = canonical_config_text(&v);
        assert_eq!(text, "a = \"s\"\nb.x = 1\nb.y = 2.5\n");
    }

    #[test]
    fn output_set_writes_everything() {
        let dir = tempfile::tempdir().unwrap();
        let mut set = OutputSet::new();
        set.add_text("a.csv", "n,raw_score\n".to_string());
        set.add_json("b.json", &json!({"k": 1}));
        let written = set.write_all(dir.path()).unwrap();
        assert_eq!(written.len(), 2);
        assert!(dir.path().join("a.csv").exists());
        assert!(dir.path().join("b.json").exists());
    }

    #[test]
    fn output_set_cleans_up_after_failure() {
        let dir = tempfile::tempdir().unwrap();
        let mut set = OutputSet::new();
        set.add_text("ok.csv", "x\n".to_string());
        // A name containing a missing subdirectory fails the second write.
        set.add_text("missing/child.csv", "y\n".to_string());
        assert!(set.write_all(dir.path()).is_err());
        assert!(!dir.path().join("ok.csv").exists(), "partial output must be removed");
    }
}
