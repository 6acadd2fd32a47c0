//! Corpus ingestion: sentence splitting, tokenization, JSONL streaming,
//! corpus statistics, and DOI detection for test-set construction.
//!
//! The canonical corpus format is JSONL, one document per line with an
//! `id` and either raw `text` (run through the splitter) or a pre-split
//! `sentences` array.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Lines};
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Sentence-final periods after these words do not end a sentence.
/// Matched against the lowercased word immediately before the period,
/// with surrounding brackets/quotes stripped.
const ABBREVIATIONS: &[&str] = &[
    "al", "approx", "cf", "dr", "e.g", "eq", "eqs", "etc", "fig", "figs", "i.e", "mr", "mrs",
    "ms", "no", "prof", "resp", "st", "vs",
];

/// A tokenized sentence alongside its original surface form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedSentence {
    pub tokens: Vec<String>,
    pub raw: String,
}

/// A document: an article, or a summary whose sentences are bullet points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub sentences: Vec<TokenizedSentence>,
    #[serde(default)]
    pub source: String,
}

impl Document {
    /// Build a document from raw text, splitting and tokenizing it.
    /// Sentences that are empty after trimming are dropped.
    pub fn from_text(id: impl Into<String>, text: &str, source: impl Into<String>) -> Document {
        let sentences = split_sentences(text)
            .iter()
            .filter_map(|s| tokenize(s).ok())
            .collect();
        Document {
            id: id.into(),
            sentences,
            source: source.into(),
        }
    }

    /// Build a document from pre-split sentences; the splitter is
    /// bypassed but the tokenizer still runs. Degenerate sentences are
    /// dropped.
    pub fn from_raw_sentences<S: AsRef<str>>(
        id: impl Into<String>,
        sentences: &[S],
        source: impl Into<String>,
    ) -> Document {
        let sentences = sentences
            .iter()
            .filter_map(|s| tokenize(s.as_ref()).ok())
            .collect();
        Document {
            id: id.into(),
            sentences,
            source: source.into(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

/// Split text into sentences at `.`, `!` or `?` followed by whitespace
/// (or end of text), unless the period closes a known abbreviation.
/// Purely rule-based and deterministic; only whitespace at the cut
/// points is trimmed.
pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut start = 0;
    for i in 0..chars.len() {
        let c = chars[i];
        if c != '.' && c != '!' && c != '?' {
            continue;
        }
        let at_end = i + 1 == chars.len();
        if !at_end && !chars[i + 1].is_whitespace() {
            continue;
        }
        if c == '.' && is_abbreviation_end(&chars[start..i]) {
            continue;
        }
        let piece: String = chars[start..=i].iter().collect();
        let piece = piece.trim();
        if !piece.is_empty() {
            out.push(piece.to_string());
        }
        start = i + 1;
    }
    let tail: String = chars[start..].iter().collect();
    let tail = tail.trim();
    if !tail.is_empty() {
        out.push(tail.to_string());
    }
    out
}

fn is_abbreviation_end(prefix: &[char]) -> bool {
    // word immediately before the period, sans enclosing punctuation
    let mut end = prefix.len();
    while end > 0 && !prefix[end - 1].is_alphanumeric() && prefix[end - 1] != '.' {
        end -= 1;
    }
    let mut begin = end;
    while begin > 0 && !prefix[begin - 1].is_whitespace() {
        begin -= 1;
    }
    let word: String = prefix[begin..end]
        .iter()
        .filter(|c| c.is_alphanumeric() || **c == '.')
        .collect::<String>()
        .to_lowercase();
    if word.is_empty() {
        return false;
    }
    ABBREVIATIONS.contains(&word.as_str())
}

/// Lowercase whitespace tokenizer that splits punctuation into
/// standalone tokens. Errors on input that is empty after trimming.
pub fn tokenize(sentence: &str) -> Result<TokenizedSentence> {
    let raw = sentence.trim();
    if raw.is_empty() {
        return Err(Error::DegenerateSentence(sentence.to_string()));
    }
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in raw.chars() {
        if c.is_whitespace() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
        } else if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            tokens.push(c.to_lowercase().collect());
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    Ok(TokenizedSentence {
        tokens,
        raw: raw.to_string(),
    })
}

static DOI_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"10\.[0-9]{4,9}/\S+").unwrap());

/// Find DOI mentions (`10.<registrant>/<suffix>`), stripping trailing
/// sentence punctuation. Order of appearance, duplicates preserved.
pub fn detect_dois(text: &str) -> Vec<String> {
    DOI_RE
        .find_iter(text)
        .map(|m| m.as_str().trim_end_matches(['.', ',', ';', ':', '!', '?', ')', ']']))
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// Descriptive statistics over a corpus; stds are population stds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub doc_count: u64,
    /// (mean, std) of token counts per sentence.
    pub tokens_per_sentence: (f64, f64),
    /// (mean, std) of sentence counts per document.
    pub sentences_per_doc: (f64, f64),
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn mean_std(&self) -> (f64, f64) {
        if self.n == 0 {
            return (0.0, 0.0);
        }
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = (self.sum_sq / n - mean * mean).max(0.0);
        (mean, var.sqrt())
    }
}

/// Streaming accumulator behind [`corpus_stats`]; usable directly when
/// the corpus does not fit in memory.
#[derive(Debug, Default)]
pub struct StatsAccumulator {
    docs: u64,
    sentence_tokens: Moments,
    doc_sentences: Moments,
}

impl StatsAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, doc: &Document) {
        self.docs += 1;
        self.doc_sentences.push(doc.sentences.len() as f64);
        for s in &doc.sentences {
            self.sentence_tokens.push(s.tokens.len() as f64);
        }
    }

    pub fn finish(&self) -> CorpusStats {
        CorpusStats {
            doc_count: self.docs,
            tokens_per_sentence: self.sentence_tokens.mean_std(),
            sentences_per_doc: self.doc_sentences.mean_std(),
        }
    }
}

/// Exact mean and population std over a document stream. An empty
/// stream yields all-zero stats.
pub fn corpus_stats<'a, I: IntoIterator<Item = &'a Document>>(corpus: I) -> CorpusStats {
    let mut acc = StatsAccumulator::new();
    for doc in corpus {
        acc.push(doc);
    }
    acc.finish()
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    sentences: Option<Vec<String>>,
    #[serde(default)]
    source: Option<String>,
}

/// Streaming reader over a corpus JSONL file.
///
/// Malformed lines surface as [`Error::Record`] items and the stream
/// continues; a repeated id surfaces as [`Error::DuplicateId`], which
/// callers should treat as fatal for the corpus.
pub struct JsonlReader {
    lines: Lines<BufReader<File>>,
    line_no: usize,
    seen_ids: HashSet<String>,
}

impl JsonlReader {
    fn parse(&mut self, line: &str) -> Result<Document> {
        let record: RawRecord = serde_json::from_str(line).map_err(|e| Error::Record {
            line: self.line_no,
            message: e.to_string(),
        })?;
        if !self.seen_ids.insert(record.id.clone()) {
            return Err(Error::DuplicateId(record.id));
        }
        let source = record.source.unwrap_or_default();
        match (record.sentences, record.text) {
            (Some(sentences), _) => Ok(Document::from_raw_sentences(record.id, &sentences, source)),
            (None, Some(text)) => Ok(Document::from_text(record.id, &text, source)),
            (None, None) => Err(Error::Record {
                line: self.line_no,
                message: "record has neither \"text\" nor \"sentences\"".into(),
            }),
        }
    }
}

impl Iterator for JsonlReader {
    type Item = Result<Document>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            return Some(self.parse(&line));
        }
    }
}

/// Open a corpus JSONL file for streaming ingestion.
pub fn ingest_jsonl(path: impl AsRef<Path>) -> Result<JsonlReader> {
    let file = File::open(path.as_ref())?;
    Ok(JsonlReader {
        lines: BufReader::new(file).lines(),
        line_no: 0,
        seen_ids: HashSet::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    #[test]
    fn split_empty() {
        assert_eq!(split_sentences(""), Vec::<String>::new());
    }

    #[test]
    fn split_two_sentences() {
        assert_eq!(split_sentences("A b. C d!"), vec!["A b.", "C d!"]);
    }

    #[test]
    fn split_suppresses_abbreviation() {
        assert_eq!(split_sentences("See Fig. 3 here."), vec!["See Fig. 3 here."]);
        assert_eq!(
            split_sentences("Smith et al. showed this. Twice."),
            vec!["Smith et al. showed this.", "Twice."]
        );
    }

    #[test]
    fn split_preserves_characters() {
        let text = "One two. Three four? Five, e.g. six! Seven 10.5 eight.";
        let joined: String = split_sentences(text).concat();
        let strip = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<String>();
        assert_eq!(strip(&joined), strip(text));
    }

    #[test]
    fn tokenize_splits_punctuation() {
        let t = tokenize("The cat sat.").unwrap();
        assert_eq!(t.tokens, vec!["the", "cat", "sat", "."]);
        assert_eq!(t.raw, "The cat sat.");
    }

    #[test]
    fn tokenize_single_token() {
        assert_eq!(tokenize("a").unwrap().tokens, vec!["a"]);
    }

    #[test]
    fn tokenize_rejects_whitespace_only() {
        assert!(matches!(tokenize("   "), Err(Error::DegenerateSentence(_))));
    }

    #[test]
    fn detect_dois_examples() {
        assert_eq!(detect_dois("no identifiers here"), Vec::<String>::new());
        assert_eq!(
            detect_dois("doi:10.1016/j.cell.2019.01.001."),
            vec!["10.1016/j.cell.2019.01.001"]
        );
        assert_eq!(detect_dois("10.1000/a 10.1000/a"), vec!["10.1000/a", "10.1000/a"]);
    }

    #[test]
    fn corpus_stats_single_doc() {
        let doc = Document::from_raw_sentences("d1", &["a b", "a b c d"], "");
        let stats = corpus_stats([&doc]);
        assert_eq!(stats.doc_count, 1);
        assert_eq!(stats.tokens_per_sentence.0, 3.0);
        assert_eq!(stats.sentences_per_doc.0, 2.0);
    }

    #[test]
    fn corpus_stats_empty() {
        let stats = corpus_stats(std::iter::empty());
        assert_eq!(stats.doc_count, 0);
        assert_eq!(stats.tokens_per_sentence, (0.0, 0.0));
        assert_eq!(stats.sentences_per_doc, (0.0, 0.0));
    }

    fn write_jsonl(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn ingest_yields_in_order() {
        let f = write_jsonl(&[
            r#"{"id": "a", "text": "One two. Three."}"#,
            r#"{"id": "b", "sentences": ["Four five", "Six"]}"#,
        ]);
        let docs: Vec<Document> = ingest_jsonl(f.path()).unwrap().map(|d| d.unwrap()).collect();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].id, "a");
        assert_eq!(docs[0].sentences.len(), 2);
        // pre-split input bypasses the splitter but not the tokenizer
        assert_eq!(docs[1].sentences[0].tokens, vec!["four", "five"]);
    }

    #[test]
    fn ingest_skips_malformed_line() {
        let f = write_jsonl(&[
            r#"{"id": "a", "text": "One."}"#,
            r#"not json"#,
            r#"{"id": "b", "text": "Two."}"#,
        ]);
        let items: Vec<_> = ingest_jsonl(f.path()).unwrap().collect();
        assert_eq!(items.len(), 3);
        assert!(items[0].is_ok());
        match &items[1] {
            Err(Error::Record { line, .. }) => assert_eq!(*line, 2),
            other => panic!("expected record error, got {other:?}"),
        }
        assert_eq!(items[2].as_ref().unwrap().id, "b");
    }

    #[test]
    fn ingest_flags_duplicate_id() {
        let f = write_jsonl(&[r#"{"id": "a", "text": "One."}"#, r#"{"id": "a", "text": "Two."}"#]);
        let items: Vec<_> = ingest_jsonl(f.path()).unwrap().collect();
        assert!(matches!(&items[1], Err(Error::DuplicateId(id)) if id == "a"));
    }

    #[test]
    fn streaming_equals_materialized() {
        let docs: Vec<Document> = (0..20)
            .map(|i| Document::from_text(format!("d{i}"), "Alpha beta. Gamma delta epsilon.", ""))
            .collect();
        let mut acc = StatsAccumulator::new();
        for d in &docs {
            acc.push(d);
        }
        assert_eq!(acc.finish(), corpus_stats(docs.iter()));
    }

    proptest! {
        #[test]
        fn tokenize_idempotent(s in "[ -~]{1,60}") {
            if let Ok(t) = tokenize(&s) {
                let rejoined = t.tokens.join(" ");
                let again = tokenize(&rejoined).unwrap();
                prop_assert_eq!(t.tokens, again.tokens);
            }
        }

        #[test]
        fn tokens_have_no_whitespace(s in "\\PC{1,60}") {
            if let Ok(t) = tokenize(&s) {
                for tok in &t.tokens {
                    prop_assert!(!tok.is_empty());
                    prop_assert!(!tok.chars().any(char::is_whitespace));
                    prop_assert_eq!(tok.clone(), tok.to_lowercase());
                }
            }
        }

        #[test]
        fn dois_are_input_substrings(s in "[ -~]{0,80}") {
            for doi in detect_dois(&s) {
                prop_assert!(doi.starts_with("10."));
                prop_assert!(s.contains(&doi));
            }
        }
    }
}
