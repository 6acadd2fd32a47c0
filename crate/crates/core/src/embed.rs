//! Vector representations: dense sentence/document embeddings from a
//! pretrained word-vector table (mining side) and sparse TF-IDF vectors
//! (LexRank side).
//!
//! The dense provider is a unit-normalized mean of word vectors behind
//! [`load_word_vectors`]; any pretrained table in the common text format
//! plugs in.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::corpus::{Document, TokenizedSentence};
use crate::{Error, Result};

/// Pretrained word vectors of one fixed dimension.
#[derive(Debug, Clone)]
pub struct WordVectorTable {
    dimension: usize,
    entries: HashMap<String, Vec<f64>>,
}

impl WordVectorTable {
    pub fn new(dimension: usize) -> Self {
        WordVectorTable {
            dimension,
            entries: HashMap::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.entries.get(token).map(Vec::as_slice)
    }

    /// Insert a vector; a repeated word overwrites the earlier entry.
    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dimension {
            return Err(Error::DimensionMismatch(self.dimension, vector.len()));
        }
        self.entries.insert(token.into(), vector);
        Ok(())
    }
}

/// Load a table in text word-vector format: an optional `<vocab> <dim>`
/// header line, then `word v1 ... vd` lines.
pub fn load_word_vectors(path: impl AsRef<Path>) -> Result<WordVectorTable> {
    let path = path.as_ref();
    let format_err = |line: usize, message: String| Error::Format {
        path: path.display().to_string(),
        line,
        message,
    };
    let reader = BufReader::new(File::open(path)?);
    let mut dimension: Option<usize> = None;
    let mut entries: HashMap<String, Vec<f64>> = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let word = fields.next().unwrap();
        let values: Vec<&str> = fields.collect();
        // header: first line of exactly two integer fields
        if line_no == 1 && values.len() == 1 {
            if let (Ok(_vocab), Ok(dim)) = (word.parse::<usize>(), values[0].parse::<usize>()) {
                dimension = Some(dim);
                continue;
            }
        }
        let mut vector = Vec::with_capacity(values.len());
        for v in &values {
            let x: f64 = v
                .parse()
                .map_err(|_| format_err(line_no, format!("non-numeric component {v:?}")))?;
            if !x.is_finite() {
                return Err(format_err(line_no, format!("non-finite component {v:?}")));
            }
            vector.push(x);
        }
        match dimension {
            None => dimension = Some(vector.len()),
            Some(d) if d != vector.len() => {
                return Err(format_err(
                    line_no,
                    format!("expected dimension {d}, found {}", vector.len()),
                ));
            }
            Some(_) => {}
        }
        entries.insert(word.to_string(), vector);
    }
    let dimension = dimension.ok_or_else(|| format_err(0, "empty word-vector file".into()))?;
    Ok(WordVectorTable { dimension, entries })
}

/// A unit-length dense vector, or the zero vector when nothing in the
/// input was in vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseEmbedding {
    pub values: Vec<f64>,
    pub is_zero: bool,
}

impl DenseEmbedding {
    pub fn zero(dimension: usize) -> Self {
        DenseEmbedding {
            values: vec![0.0; dimension],
            is_zero: true,
        }
    }

    fn from_sum(mut sum: Vec<f64>) -> Self {
        let norm = sum.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            let d = sum.len();
            return DenseEmbedding::zero(d);
        }
        for x in &mut sum {
            *x /= norm;
        }
        DenseEmbedding {
            values: sum,
            is_zero: false,
        }
    }
}

/// Unit-normalized mean of the in-vocabulary token vectors; zero when
/// every token is out of vocabulary.
pub fn embed_sentence(sentence: &TokenizedSentence, table: &WordVectorTable) -> DenseEmbedding {
    let mut sum = vec![0.0; table.dimension()];
    let mut hits = 0usize;
    for token in &sentence.tokens {
        if let Some(v) = table.get(token) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            hits += 1;
        }
    }
    if hits == 0 {
        return DenseEmbedding::zero(table.dimension());
    }
    // mean then normalize; dividing by the count first changes nothing
    // after normalization, so normalize the sum directly
    DenseEmbedding::from_sum(sum)
}

/// Unit-normalized mean of the non-zero sentence embeddings.
pub fn embed_document(doc: &Document, table: &WordVectorTable) -> DenseEmbedding {
    let mut sum = vec![0.0; table.dimension()];
    let mut hits = 0usize;
    for sentence in &doc.sentences {
        let e = embed_sentence(sentence, table);
        if !e.is_zero {
            for (s, x) in sum.iter_mut().zip(&e.values) {
                *s += x;
            }
            hits += 1;
        }
    }
    if hits == 0 {
        return DenseEmbedding::zero(table.dimension());
    }
    DenseEmbedding::from_sum(sum)
}

/// Cosine similarity of two unit embeddings; 0 when either is zero.
pub fn cosine(a: &DenseEmbedding, b: &DenseEmbedding) -> Result<f64> {
    if a.is_zero || b.is_zero {
        return Ok(0.0);
    }
    if a.values.len() != b.values.len() {
        return Err(Error::DimensionMismatch(a.values.len(), b.values.len()));
    }
    Ok(dot(&a.values, &b.values))
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Document-frequency model backing TF-IDF weights.
#[derive(Debug, Clone)]
pub struct TfIdfModel {
    doc_count: usize,
    document_frequency: HashMap<String, usize>,
}

impl TfIdfModel {
    /// Fit document frequencies over token lists, each list counting as
    /// one document.
    pub fn fit<'a, I, T>(docs: I) -> TfIdfModel
    where
        I: IntoIterator<Item = T>,
        T: IntoIterator<Item = &'a String>,
    {
        let mut doc_count = 0;
        let mut document_frequency: HashMap<String, usize> = HashMap::new();
        for doc in docs {
            doc_count += 1;
            let distinct: HashSet<&String> = doc.into_iter().collect();
            for token in distinct {
                *document_frequency.entry(token.clone()).or_insert(0) += 1;
            }
        }
        TfIdfModel {
            doc_count,
            document_frequency,
        }
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn df(&self, token: &str) -> usize {
        self.document_frequency.get(token).copied().unwrap_or(0)
    }

    /// Smoothed idf: `ln((1 + N) / (1 + df)) + 1`; unseen tokens use df 0.
    pub fn idf(&self, token: &str) -> f64 {
        ((1.0 + self.doc_count as f64) / (1.0 + self.df(token) as f64)).ln() + 1.0
    }
}

/// Sparse token-weight vector; zero weights are never stored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    pub entries: HashMap<String, f64>,
}

impl SparseVector {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// TF-IDF weights for one sentence: raw term frequency times smoothed idf.
pub fn tfidf_vector(sentence: &TokenizedSentence, model: &TfIdfModel) -> SparseVector {
    let mut tf: HashMap<&String, usize> = HashMap::new();
    for token in &sentence.tokens {
        *tf.entry(token).or_insert(0) += 1;
    }
    let entries = tf
        .into_iter()
        .map(|(token, count)| (token.clone(), count as f64 * model.idf(token)))
        .filter(|(_, w)| *w != 0.0)
        .collect();
    SparseVector { entries }
}

/// Cosine over sparse weights; 0 when either vector is empty.
pub fn tfidf_cosine(a: &SparseVector, b: &SparseVector) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let (small, large) = if a.entries.len() <= b.entries.len() {
        (a, b)
    } else {
        (b, a)
    };
    let mut dot = 0.0;
    for (token, w) in &small.entries {
        if let Some(v) = large.entries.get(token) {
            dot += w * v;
        }
    }
    if dot == 0.0 {
        return 0.0;
    }
    let norm = |v: &SparseVector| v.entries.values().map(|w| w * w).sum::<f64>().sqrt();
    dot / (norm(a) * norm(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;
    use proptest::prelude::*;
    use std::io::Write;

    fn table(entries: &[(&str, &[f64])]) -> WordVectorTable {
        let mut t = WordVectorTable::new(entries[0].1.len());
        for (w, v) in entries {
            t.insert(*w, v.to_vec()).unwrap();
        }
        t
    }

    fn write_vectors(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn load_basic_table() {
        let f = write_vectors(&["a 1 0 0", "b 0 1 0"]);
        let t = load_word_vectors(f.path()).unwrap();
        assert_eq!(t.dimension(), 3);
        assert_eq!(t.len(), 2);
        assert_eq!(t.get("a"), Some([1.0, 0.0, 0.0].as_slice()));
    }

    #[test]
    fn load_with_header() {
        let f = write_vectors(&["2 3", "a 1 0 0", "b 0 1 0"]);
        let t = load_word_vectors(f.path()).unwrap();
        assert_eq!(t.dimension(), 3);
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn load_rejects_inconsistent_dimension() {
        let f = write_vectors(&["a 1 0 0", "b 0 1"]);
        match load_word_vectors(f.path()) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn load_rejects_non_numeric() {
        let f = write_vectors(&["a 1 x 0"]);
        assert!(matches!(load_word_vectors(f.path()), Err(Error::Format { .. })));
    }

    #[test]
    fn load_last_duplicate_wins() {
        let f = write_vectors(&["a 1 0", "a 0 1"]);
        let t = load_word_vectors(f.path()).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.get("a"), Some([0.0, 1.0].as_slice()));
    }

    #[test]
    fn embed_single_token_normalizes() {
        let t = table(&[("a", &[3.0, 4.0])]);
        let e = embed_sentence(&tokenize("a").unwrap(), &t);
        assert!((e.values[0] - 0.6).abs() < 1e-12);
        assert!((e.values[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn embed_all_oov_is_zero() {
        let t = table(&[("a", &[1.0, 0.0])]);
        let e = embed_sentence(&tokenize("b c").unwrap(), &t);
        assert!(e.is_zero);
        assert_eq!(e.values, vec![0.0, 0.0]);
    }

    #[test]
    fn embed_mean_then_normalize() {
        let t = table(&[("a", &[1.0, 0.0]), ("b", &[0.0, 1.0])]);
        let e = embed_sentence(&tokenize("a b").unwrap(), &t);
        let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
        assert!((e.values[0] - inv_sqrt2).abs() < 1e-12);
        assert!((e.values[1] - inv_sqrt2).abs() < 1e-12);
    }

    #[test]
    fn document_embedding_cases() {
        let t = table(&[("a", &[1.0, 0.0]), ("b", &[0.0, 1.0])]);
        let one = Document::from_raw_sentences("d", &["a"], "");
        assert_eq!(
            embed_document(&one, &t),
            embed_sentence(&one.sentences[0], &t)
        );
        let same = Document::from_raw_sentences("d", &["a", "a"], "");
        let e = embed_document(&same, &t);
        assert!((e.values[0] - 1.0).abs() < 1e-12);
        let ortho = Document::from_raw_sentences("d", &["a", "b"], "");
        let e = embed_document(&ortho, &t);
        let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
        assert!((e.values[0] - inv_sqrt2).abs() < 1e-12);
        assert!((e.values[1] - inv_sqrt2).abs() < 1e-12);
    }

    #[test]
    fn cosine_conventions() {
        let t = table(&[("a", &[1.0, 0.0]), ("b", &[0.0, 1.0])]);
        let ea = embed_sentence(&tokenize("a").unwrap(), &t);
        let eb = embed_sentence(&tokenize("b").unwrap(), &t);
        let zero = DenseEmbedding::zero(2);
        assert!((cosine(&ea, &ea).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&ea, &eb).unwrap(), 0.0);
        assert_eq!(cosine(&zero, &ea).unwrap(), 0.0);
        let e3 = DenseEmbedding {
            values: vec![1.0, 0.0, 0.0],
            is_zero: false,
        };
        assert!(matches!(cosine(&ea, &e3), Err(Error::DimensionMismatch(2, 3))));
    }

    #[test]
    fn tfidf_weights_match_formula() {
        // df(a)=N, df(b)=1, N=1: idf both ln(2/2)+1 = 1
        let docs = [vec!["a".to_string(), "b".to_string()]];
        let model = TfIdfModel::fit(docs.iter());
        let v = tfidf_vector(&tokenize("a a b").unwrap(), &model);
        assert_eq!(v.entries["a"], 2.0);
        assert_eq!(v.entries["b"], 1.0);
    }

    #[test]
    fn tfidf_unseen_token_idf() {
        let docs: [Vec<String>; 1] = [vec![]];
        let model = TfIdfModel::fit(docs.iter());
        let expected = (2.0_f64 / 1.0).ln() + 1.0;
        assert!((model.idf("anything") - expected).abs() < 1e-12);
        let v = tfidf_vector(&tokenize("x").unwrap(), &model);
        assert!((v.entries["x"] - expected).abs() < 1e-12);
    }

    #[test]
    fn tfidf_cosine_cases() {
        let a = SparseVector {
            entries: [("a".to_string(), 1.0)].into(),
        };
        let ab = SparseVector {
            entries: [("a".to_string(), 1.0), ("b".to_string(), 1.0)].into(),
        };
        let c = SparseVector {
            entries: [("c".to_string(), 2.0)].into(),
        };
        assert!((tfidf_cosine(&ab, &ab) - 1.0).abs() < 1e-12);
        assert_eq!(tfidf_cosine(&a, &c), 0.0);
        assert!((tfidf_cosine(&a, &ab) - 1.0 / 2.0_f64.sqrt()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn nonzero_embeddings_have_unit_norm(
            vs in prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 4), 1..6),
            picks in prop::collection::vec(0usize..6, 1..8),
        ) {
            let mut t = WordVectorTable::new(4);
            for (i, v) in vs.iter().enumerate() {
                t.insert(format!("w{i}"), v.clone()).unwrap();
            }
            let text: Vec<String> = picks.iter().map(|i| format!("w{i}")).collect();
            let sentence = TokenizedSentence { tokens: text.clone(), raw: text.join(" ") };
            let e = embed_sentence(&sentence, &t);
            if !e.is_zero {
                let norm: f64 = e.values.iter().map(|x| x * x).sum::<f64>().sqrt();
                prop_assert!((norm - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn embedding_scale_invariance(
            v1 in prop::collection::vec(-5.0..5.0f64, 3),
            v2 in prop::collection::vec(-5.0..5.0f64, 3),
            scale in 0.01..100.0f64,
        ) {
            let base = table(&[("a", &v1), ("b", &v2)]);
            let scaled = table(&[
                ("a", &v1.iter().map(|x| x * scale).collect::<Vec<_>>()),
                ("b", &v2.iter().map(|x| x * scale).collect::<Vec<_>>()),
            ]);
            let s = tokenize("a b").unwrap();
            let e1 = embed_sentence(&s, &base);
            let e2 = embed_sentence(&s, &scaled);
            prop_assert_eq!(e1.is_zero, e2.is_zero);
            for (x, y) in e1.values.iter().zip(&e2.values) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn cosine_symmetric(
            v1 in prop::collection::vec(-5.0..5.0f64, 3),
            v2 in prop::collection::vec(-5.0..5.0f64, 3),
        ) {
            let t = table(&[("a", &v1), ("b", &v2)]);
            let ea = embed_sentence(&tokenize("a").unwrap(), &t);
            let eb = embed_sentence(&tokenize("b").unwrap(), &t);
            prop_assert_eq!(cosine(&ea, &eb).unwrap(), cosine(&eb, &ea).unwrap());
        }

        #[test]
        fn tfidf_self_cosine_is_one(tokens in prop::collection::vec("[a-e]", 1..10)) {
            let docs = [tokens.clone()];
            let model = TfIdfModel::fit(docs.iter());
            let raw = tokens.join(" ");
            let v = tfidf_vector(&tokenize(&raw).unwrap(), &model);
            prop_assert!(!v.is_empty());
            prop_assert!((tfidf_cosine(&v, &v) - 1.0).abs() < 1e-12);
        }
    }
}
