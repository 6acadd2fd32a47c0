//! Summary evaluation: ROUGE-1/2/L F1, a METEOR-style score with exact
//! and stemmed matching stages, and corpus-level reports.

mod meteor;
mod porter;

pub use meteor::meteor_lite;
pub use porter::porter_stem;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Precision / recall / F1, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricTriple {
    #[serde(rename = "p")]
    pub precision: f64,
    #[serde(rename = "r")]
    pub recall: f64,
    pub f1: f64,
}

impl MetricTriple {
    pub fn new(precision: f64, recall: f64) -> MetricTriple {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        MetricTriple {
            precision,
            recall,
            f1,
        }
    }

    pub fn zero() -> MetricTriple {
        MetricTriple::new(0.0, 0.0)
    }
}

fn ngram_counts<T: AsRef<str>>(tokens: &[T], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            let key: Vec<&str> = window.iter().map(AsRef::as_ref).collect();
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    counts
}

/// ROUGE-N: clipped n-gram multiset overlap, reported as P/R/F1.
pub fn rouge_n<T: AsRef<str>>(candidate: &[T], reference: &[T], n: usize) -> MetricTriple {
    assert!(n >= 1, "n-gram order must be positive");
    let cand = ngram_counts(candidate, n);
    let refr = ngram_counts(reference, n);
    let cand_total: usize = cand.values().sum();
    let ref_total: usize = refr.values().sum();
    let overlap: usize = cand
        .iter()
        .map(|(gram, c)| (*c).min(refr.get(gram).copied().unwrap_or(0)))
        .sum();
    let precision = if cand_total > 0 {
        overlap as f64 / cand_total as f64
    } else {
        0.0
    };
    let recall = if ref_total > 0 {
        overlap as f64 / ref_total as f64
    } else {
        0.0
    };
    MetricTriple::new(precision, recall)
}

pub(crate) fn lcs_length<T: AsRef<str>>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            row[j + 1] = if x.as_ref() == y.as_ref() {
                prev[j] + 1
            } else {
                row[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut row);
    }
    prev[b.len()]
}

/// ROUGE-L: longest common subsequence over the whole token sequences.
pub fn rouge_l<T: AsRef<str>>(candidate: &[T], reference: &[T]) -> MetricTriple {
    let lcs = lcs_length(candidate, reference);
    let precision = if candidate.is_empty() {
        0.0
    } else {
        lcs as f64 / candidate.len() as f64
    };
    let recall = if reference.is_empty() {
        0.0
    } else {
        lcs as f64 / reference.len() as f64
    };
    MetricTriple::new(precision, recall)
}

/// Corpus-level evaluation report: macro-averaged metrics plus summary
/// length. Scores are decimals in `[0, 1]`; published tables print ×100.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rouge1: MetricTriple,
    pub rouge2: MetricTriple,
    #[serde(rename = "rougeL")]
    pub rouge_l: MetricTriple,
    pub meteor: f64,
    pub avg_tokens: f64,
    pub n_examples: usize,
}

/// Score system summaries against references, macro-averaging
/// per-example metrics. Both sides are token lists; inputs must be
/// parallel and nonempty.
pub fn evaluate<T: AsRef<str>>(system: &[Vec<T>], references: &[Vec<T>]) -> Result<EvalReport> {
    if system.len() != references.len() {
        return Err(Error::LengthMismatch(system.len(), references.len()));
    }
    if system.is_empty() {
        return Err(Error::EmptyInput("evaluate needs at least one example"));
    }
    let mut sums = [[0.0f64; 3]; 3];
    let mut meteor_sum = 0.0;
    let mut token_sum = 0.0;
    for (cand, refr) in system.iter().zip(references) {
        let triples = [
            rouge_n(cand, refr, 1),
            rouge_n(cand, refr, 2),
            rouge_l(cand, refr),
        ];
        for (sum, t) in sums.iter_mut().zip(triples) {
            sum[0] += t.precision;
            sum[1] += t.recall;
            sum[2] += t.f1;
        }
        meteor_sum += meteor_lite(cand, refr);
        token_sum += cand.len() as f64;
    }
    let n = system.len() as f64;
    let mean = |s: [f64; 3]| MetricTriple {
        precision: s[0] / n,
        recall: s[1] / n,
        f1: s[2] / n,
    };
    Ok(EvalReport {
        rouge1: mean(sums[0]),
        rouge2: mean(sums[1]),
        rouge_l: mean(sums[2]),
        meteor: meteor_sum / n,
        avg_tokens: token_sum / n,
        n_examples: system.len(),
    })
}
