//! Unsupervised sentence extraction: Lead, LexRank (TF-IDF similarity
//! graph + PageRank centrality), the ROUGE-1 extractive oracle, and
//! K estimation from a summary corpus.

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, TokenizedSentence};
use crate::embed::{tfidf_cosine, tfidf_vector, TfIdfModel};
use crate::metrics::rouge_n;
use crate::{Error, Result};

/// Extraction method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtractMethod {
    Lead,
    LexRank,
}

/// Extractor configuration. The LexRank knobs follow the original
/// LexRank literature and are fully exposed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractConfig {
    pub k: usize,
    pub method: ExtractMethod,
    /// similarity threshold `t`: edges require tfidf cosine above this
    pub lexrank_threshold: f64,
    pub damping: f64,
    pub epsilon: f64,
    pub max_iterations: usize,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            k: 4,
            method: ExtractMethod::Lead,
            lexrank_threshold: 0.1,
            damping: 0.85,
            epsilon: 1e-8,
            max_iterations: 200,
        }
    }
}

/// The selected sentences of one document, in original document order.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedSummary {
    pub doc_id: String,
    pub picks: Vec<(usize, TokenizedSentence)>,
}

impl ExtractedSummary {
    pub fn indices(&self) -> Vec<usize> {
        self.picks.iter().map(|(i, _)| *i).collect()
    }

    /// All tokens of the extract, concatenated in document order.
    pub fn tokens(&self) -> Vec<String> {
        self.picks
            .iter()
            .flat_map(|(_, s)| s.tokens.iter().cloned())
            .collect()
    }

    pub fn raw_sentences(&self) -> Vec<String> {
        self.picks.iter().map(|(_, s)| s.raw.clone()).collect()
    }
}

/// Serialization record for extract JSONL output.
#[derive(Debug, Serialize, Deserialize)]
pub struct ExtractRecord {
    pub doc_id: String,
    pub indices: Vec<usize>,
    pub sentences: Vec<String>,
}

impl From<&ExtractedSummary> for ExtractRecord {
    fn from(s: &ExtractedSummary) -> Self {
        ExtractRecord {
            doc_id: s.doc_id.clone(),
            indices: s.indices(),
            sentences: s.raw_sentences(),
        }
    }
}

fn picks_from_indices(doc: &Document, mut indices: Vec<usize>) -> Vec<(usize, TokenizedSentence)> {
    indices.sort_unstable();
    indices
        .into_iter()
        .map(|i| (i, doc.sentences[i].clone()))
        .collect()
}

/// The first `min(k, N)` sentences.
pub fn lead(doc: &Document, k: usize) -> ExtractedSummary {
    let n = doc.sentences.len().min(k);
    ExtractedSummary {
        doc_id: doc.id.clone(),
        picks: picks_from_indices(doc, (0..n).collect()),
    }
}

/// Power iteration for PageRank centrality over a nonnegative weight
/// matrix. Rows are normalized to sum to one; zero rows redistribute
/// uniformly. Stops when the L1 change drops below `epsilon` or after
/// `max_iterations`. The output is a distribution (sums to 1).
pub fn pagerank(
    weights: &[Vec<f64>],
    damping: f64,
    epsilon: f64,
    max_iterations: usize,
) -> Result<Vec<f64>> {
    let n = weights.len();
    if n == 0 {
        return Err(Error::EmptyInput("pagerank needs at least one node"));
    }
    debug_assert!(weights.iter().all(|row| row.len() == n));
    let row_sums: Vec<f64> = weights.iter().map(|row| row.iter().sum()).collect();
    let uniform = 1.0 / n as f64;
    let teleport = (1.0 - damping) * uniform;
    let mut p = vec![uniform; n];
    let mut next = vec![0.0; n];
    for _ in 0..max_iterations {
        next.fill(teleport);
        for j in 0..n {
            if row_sums[j] > 0.0 {
                let scale = damping * p[j] / row_sums[j];
                for (x, w) in next.iter_mut().zip(&weights[j]) {
                    *x += scale * w;
                }
            } else {
                let share = damping * p[j] * uniform;
                for x in next.iter_mut() {
                    *x += share;
                }
            }
        }
        let delta: f64 = p.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut p, &mut next);
        if delta < epsilon {
            break;
        }
    }
    Ok(p)
}

/// LexRank over an explicit TF-IDF model: sentences are nodes, edges
/// carry their TF-IDF cosine when it exceeds the threshold, and the
/// top-k sentences by PageRank centrality are returned in document
/// order. Ties break toward the lower index.
pub fn lexrank(doc: &Document, model: &TfIdfModel, config: &ExtractConfig) -> ExtractedSummary {
    let n = doc.sentences.len();
    if n == 0 {
        return ExtractedSummary {
            doc_id: doc.id.clone(),
            picks: Vec::new(),
        };
    }
    let vectors: Vec<_> = doc
        .sentences
        .iter()
        .map(|s| tfidf_vector(s, model))
        .collect();
    let mut weights = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let sim = tfidf_cosine(&vectors[i], &vectors[j]);
            if sim > config.lexrank_threshold {
                weights[i][j] = sim;
                weights[j][i] = sim;
            }
        }
    }
    let centrality = pagerank(&weights, config.damping, config.epsilon, config.max_iterations)
        .expect("nonempty graph");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        centrality[b]
            .partial_cmp(&centrality[a])
            .expect("finite centrality")
            .then(a.cmp(&b))
    });
    let picked: Vec<usize> = order.into_iter().take(config.k).collect();
    ExtractedSummary {
        doc_id: doc.id.clone(),
        picks: picks_from_indices(doc, picked),
    }
}

/// LexRank with its TF-IDF model fit over this document's own sentences
/// (each sentence counts as one document for document frequency), so
/// extraction depends on no corpus-level state.
pub fn lexrank_auto(doc: &Document, config: &ExtractConfig) -> ExtractedSummary {
    let model = TfIdfModel::fit(doc.sentences.iter().map(|s| &s.tokens));
    lexrank(doc, &model, config)
}

/// Extractive upper bound: for each reference sentence, pick the
/// article sentence with the highest ROUGE-1 F1 against it (ties to the
/// lower index), deduplicated and returned in document order.
pub fn oracle_extract(article: &Document, reference: &Document) -> ExtractedSummary {
    let mut chosen: Vec<usize> = Vec::new();
    for ref_sentence in &reference.sentences {
        let mut best: Option<(usize, f64)> = None;
        for (i, sentence) in article.sentences.iter().enumerate() {
            let f1 = rouge_n(&sentence.tokens, &ref_sentence.tokens, 1).f1;
            if best.is_none_or(|(_, b)| f1 > b) {
                best = Some((i, f1));
            }
        }
        if let Some((i, _)) = best {
            if !chosen.contains(&i) {
                chosen.push(i);
            }
        }
    }
    ExtractedSummary {
        doc_id: article.id.clone(),
        picks: picks_from_indices(article, chosen),
    }
}

/// K selection rule: the mean sentences-per-document of the target
/// summary corpus, rounded half up.
pub fn estimate_k<'a, I: IntoIterator<Item = &'a Document>>(summary_corpus: I) -> Result<usize> {
    let mut docs = 0usize;
    let mut sentences = 0usize;
    for doc in summary_corpus {
        docs += 1;
        sentences += doc.sentences.len();
    }
    if docs == 0 {
        return Err(Error::EmptyInput("estimate_k needs a nonempty corpus"));
    }
    let k = (sentences as f64 / docs as f64 + 0.5).floor() as usize;
    if k == 0 {
        return Err(Error::EmptyInput("estimate_k: corpus has no sentences"));
    }
    Ok(k)
}
