//! Large-scale hierarchical alignment: match example summaries to
//! comparable articles on document embeddings, then harvest
//! pseudo-parallel sentence pairs above a similarity threshold.
//!
//! All nearest-neighbor search is exact brute force, chunked over
//! summaries with rayon; results are sorted, so output is byte-identical
//! regardless of worker count.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, Document, TokenizedSentence};
use crate::embed::{cosine, embed_document, embed_sentence, DenseEmbedding, WordVectorTable};
use crate::{Error, Result};

/// Similarity placed on backtranslated pairs, which carry no mined score.
pub const SIMILARITY_UNSET: f64 = -1.0;

/// Alignment thresholds and search shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlignConfig {
    /// document-level cosine threshold
    pub theta_d: f64,
    /// sentence-level cosine threshold
    pub theta_s: f64,
    /// articles kept per summary at the document level
    pub doc_neighbors: usize,
    pub batch_size: usize,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            theta_d: 0.5,
            theta_s: 0.63,
            doc_neighbors: 5,
            batch_size: 10_000,
        }
    }
}

/// A summary-article match at the document level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocPair {
    pub summary_id: String,
    pub article_id: String,
    pub similarity: f64,
}

/// Where a sentence pair came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    PseudoParallel,
    Backtranslated,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::PseudoParallel => "pseudo_parallel",
            Provenance::Backtranslated => "backtranslated",
        }
    }

    pub fn parse(s: &str) -> Option<Provenance> {
        match s {
            "pseudo_parallel" => Some(Provenance::PseudoParallel),
            "backtranslated" => Some(Provenance::Backtranslated),
            _ => None,
        }
    }
}

/// An article-side → summary-side sentence pair, mined or synthetic.
#[derive(Debug, Clone, PartialEq)]
pub struct SentencePair {
    /// article side
    pub source: TokenizedSentence,
    /// summary side
    pub target: TokenizedSentence,
    /// cosine similarity for mined pairs; [`SIMILARITY_UNSET`] for
    /// backtranslated ones
    pub similarity: f64,
    pub provenance: Provenance,
    /// `summary_id:article_id` for mined pairs, generator tag otherwise
    pub origin: String,
}

/// Mixture accounting for an abstractor training set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureStats {
    pub pseudo_parallel_count: usize,
    pub backtranslated_count: usize,
    pub fraction_pp: f64,
}

impl MixtureStats {
    pub fn from_pairs(pairs: &[SentencePair]) -> MixtureStats {
        let pp = pairs
            .iter()
            .filter(|p| p.provenance == Provenance::PseudoParallel)
            .count();
        let bt = pairs.len() - pp;
        let fraction_pp = if pp + bt > 0 {
            pp as f64 / (pp + bt) as f64
        } else {
            0.0
        };
        MixtureStats {
            pseudo_parallel_count: pp,
            backtranslated_count: bt,
            fraction_pp,
        }
    }
}

/// The assembled pair collection with its mixture stats.
#[derive(Debug, Clone, PartialEq)]
pub struct MinedDataset {
    pub pairs: Vec<SentencePair>,
    pub stats: MixtureStats,
}

impl MinedDataset {
    pub fn from_pairs(pairs: Vec<SentencePair>) -> MinedDataset {
        let stats = MixtureStats::from_pairs(&pairs);
        MinedDataset { pairs, stats }
    }
}

/// Exact top-k document alignment: for each summary, the
/// `doc_neighbors` closest articles by embedding cosine with similarity
/// at least `theta_d`. Output sorted by (summary_id, -similarity,
/// article_id).
pub fn align_documents(
    summaries: &[Document],
    summary_embeddings: &[DenseEmbedding],
    articles: &[Document],
    article_embeddings: &[DenseEmbedding],
    config: &AlignConfig,
) -> Vec<DocPair> {
    let mut pairs: Vec<DocPair> = summaries
        .par_iter()
        .zip(summary_embeddings)
        .flat_map_iter(|(summary, emb)| {
            let mut candidates: Vec<DocPair> = Vec::new();
            if !emb.is_zero {
                for (article, art_emb) in articles.iter().zip(article_embeddings) {
                    let sim = cosine(emb, art_emb).expect("uniform dimension");
                    if sim >= config.theta_d {
                        candidates.push(DocPair {
                            summary_id: summary.id.clone(),
                            article_id: article.id.clone(),
                            similarity: sim,
                        });
                    }
                }
            }
            candidates.sort_by(|a, b| {
                b.similarity
                    .partial_cmp(&a.similarity)
                    .expect("finite similarity")
                    .then_with(|| a.article_id.cmp(&b.article_id))
            });
            candidates.truncate(config.doc_neighbors);
            candidates
        })
        .collect();
    pairs.sort_by(|a, b| {
        a.summary_id
            .cmp(&b.summary_id)
            .then_with(|| b.similarity.partial_cmp(&a.similarity).unwrap())
            .then_with(|| a.article_id.cmp(&b.article_id))
    });
    pairs
}

/// Sentence-level alignment inside one document pair: every summary
/// sentence is matched to its single nearest article sentence (ties to
/// the lower index) and kept when the cosine reaches `theta_s`.
pub fn align_sentences(
    pair: &DocPair,
    summary: &Document,
    article: &Document,
    table: &WordVectorTable,
    theta_s: f64,
) -> Vec<SentencePair> {
    debug_assert_eq!(pair.summary_id, summary.id);
    debug_assert_eq!(pair.article_id, article.id);
    let article_embeddings: Vec<DenseEmbedding> = article
        .sentences
        .iter()
        .map(|s| embed_sentence(s, table))
        .collect();
    let origin = format!("{}:{}", summary.id, article.id);
    let mut out = Vec::new();
    for target in &summary.sentences {
        let target_emb = embed_sentence(target, table);
        if target_emb.is_zero {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, art_emb) in article_embeddings.iter().enumerate() {
            let sim = cosine(&target_emb, art_emb).expect("uniform dimension");
            if best.is_none_or(|(_, b)| sim > b) {
                best = Some((i, sim));
            }
        }
        if let Some((i, sim)) = best {
            if sim >= theta_s {
                out.push(SentencePair {
                    source: article.sentences[i].clone(),
                    target: target.clone(),
                    similarity: sim,
                    provenance: Provenance::PseudoParallel,
                    origin: origin.clone(),
                });
            }
        }
    }
    out
}

/// Canonical ordering and exact-string deduplication shared by the
/// miner and the dataset merge: sort by (origin, target, source), drop
/// repeats of (source, target) keeping the first occurrence.
pub fn normalize_pairs(mut pairs: Vec<SentencePair>) -> Vec<SentencePair> {
    pairs.sort_by(|a, b| {
        a.origin
            .cmp(&b.origin)
            .then_with(|| a.target.raw.cmp(&b.target.raw))
            .then_with(|| a.source.raw.cmp(&b.source.raw))
    });
    let mut seen: HashSet<(String, String)> = HashSet::new();
    pairs.retain(|p| seen.insert((p.source.raw.clone(), p.target.raw.clone())));
    pairs
}

/// Full mining pass: document alignment, then sentence alignment over
/// every document pair, deduplicated and deterministically ordered.
pub fn mine(
    summaries: &[Document],
    articles: &[Document],
    table: &WordVectorTable,
    config: &AlignConfig,
) -> MinedDataset {
    let summary_embeddings: Vec<DenseEmbedding> = summaries
        .par_iter()
        .map(|d| embed_document(d, table))
        .collect();
    let article_embeddings: Vec<DenseEmbedding> = articles
        .par_iter()
        .map(|d| embed_document(d, table))
        .collect();
    let doc_pairs = align_documents(
        summaries,
        &summary_embeddings,
        articles,
        &article_embeddings,
        config,
    );
    let summary_by_id: HashMap<&str, &Document> =
        summaries.iter().map(|d| (d.id.as_str(), d)).collect();
    let article_by_id: HashMap<&str, &Document> =
        articles.iter().map(|d| (d.id.as_str(), d)).collect();
    let pairs: Vec<SentencePair> = doc_pairs
        .par_iter()
        .flat_map_iter(|pair| {
            align_sentences(
                pair,
                summary_by_id[pair.summary_id.as_str()],
                article_by_id[pair.article_id.as_str()],
                table,
                config.theta_s,
            )
        })
        .collect();
    MinedDataset::from_pairs(normalize_pairs(pairs))
}

fn sanitize_field(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

/// Write pairs in the pair TSV format:
/// `source_raw<TAB>target_raw<TAB>similarity<TAB>provenance<TAB>origin`.
/// Tabs and newlines inside text become single spaces. Returns the line
/// count.
pub fn write_pairs_tsv<W: Write>(pairs: &[SentencePair], mut writer: W) -> Result<usize> {
    let mut written = 0;
    for pair in pairs {
        writeln!(
            writer,
            "{}\t{}\t{}\t{}\t{}",
            sanitize_field(&pair.source.raw),
            sanitize_field(&pair.target.raw),
            pair.similarity,
            pair.provenance.as_str(),
            sanitize_field(&pair.origin),
        )?;
        written += 1;
    }
    Ok(written)
}

/// Read a pair TSV file back into sentence pairs, re-tokenizing the raw
/// strings.
pub fn read_pairs_tsv(path: impl AsRef<Path>) -> Result<Vec<SentencePair>> {
    let path = path.as_ref();
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut pairs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let fail = |message: String| Error::Format {
            path: path.display().to_string(),
            line: line_no,
            message,
        };
        if fields.len() != 5 {
            return Err(fail(format!("expected 5 tab-separated fields, found {}", fields.len())));
        }
        let similarity: f64 = fields[2]
            .parse()
            .map_err(|_| fail(format!("bad similarity {:?}", fields[2])))?;
        let provenance = Provenance::parse(fields[3])
            .ok_or_else(|| fail(format!("bad provenance {:?}", fields[3])))?;
        let source = tokenize(fields[0]).map_err(|_| fail("empty source".into()))?;
        let target = tokenize(fields[1]).map_err(|_| fail("empty target".into()))?;
        pairs.push(SentencePair {
            source,
            target,
            similarity,
            provenance,
            origin: fields[4].to_string(),
        });
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::WordVectorTable;

    fn table(entries: &[(&str, Vec<f64>)]) -> WordVectorTable {
        let mut t = WordVectorTable::new(entries[0].1.len());
        for (w, v) in entries {
            t.insert(*w, v.clone()).unwrap();
        }
        t
    }

    fn basis_table() -> WordVectorTable {
        table(&[
            ("a", vec![1.0, 0.0, 0.0]),
            ("b", vec![0.0, 1.0, 0.0]),
            ("c", vec![0.0, 0.0, 1.0]),
        ])
    }

    #[test]
    fn align_documents_finds_identical_copy() {
        let t = basis_table();
        let summaries = vec![Document::from_raw_sentences("s0", &["a b"], "")];
        let articles = vec![
            Document::from_raw_sentences("x0", &["c"], ""),
            Document::from_raw_sentences("x1", &["a b"], ""),
        ];
        let config = AlignConfig {
            theta_d: 0.99,
            ..Default::default()
        };
        let se: Vec<_> = summaries.iter().map(|d| embed_document(d, &t)).collect();
        let ae: Vec<_> = articles.iter().map(|d| embed_document(d, &t)).collect();
        let pairs = align_documents(&summaries, &se, &articles, &ae, &config);
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].article_id, "x1");
        assert!((pairs[0].similarity - 1.0).abs() < 1e-9);
    }

    #[test]
    fn align_documents_threshold_excludes_all() {
        let t = basis_table();
        let summaries = vec![Document::from_raw_sentences("s0", &["a"], "")];
        let articles = vec![Document::from_raw_sentences("x0", &["a b"], "")];
        let config = AlignConfig {
            theta_d: 1.0,
            ..Default::default()
        };
        let se: Vec<_> = summaries.iter().map(|d| embed_document(d, &t)).collect();
        let ae: Vec<_> = articles.iter().map(|d| embed_document(d, &t)).collect();
        assert!(align_documents(&summaries, &se, &articles, &ae, &config).is_empty());
    }

    #[test]
    fn align_sentences_identity_and_threshold() {
        let t = basis_table();
        let summary = Document::from_raw_sentences("s0", &["a b"], "");
        let article = Document::from_raw_sentences("x0", &["c", "a b"], "");
        let pair = DocPair {
            summary_id: "s0".into(),
            article_id: "x0".into(),
            similarity: 1.0,
        };
        let got = align_sentences(&pair, &summary, &article, &t, 0.99);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].source.raw, "a b");
        assert!((got[0].similarity - 1.0).abs() < 1e-9);
        assert_eq!(got[0].provenance, Provenance::PseudoParallel);
        // threshold above attainable similarity
        assert!(align_sentences(&pair, &summary, &article, &t, 1.1).is_empty());
    }

    #[test]
    fn align_sentences_matches_exhaustive_grid() {
        // 3 summary x 4 article sentences over hand-built embeddings
        let t = table(&[
            ("p", vec![1.0, 0.0, 0.0, 0.0]),
            ("q", vec![0.0, 1.0, 0.0, 0.0]),
            ("r", vec![0.0, 0.0, 1.0, 0.0]),
            ("s", vec![0.0, 0.0, 0.0, 1.0]),
        ]);
        let summary = Document::from_raw_sentences("s0", &["p q", "r", "p s"], "");
        let article = Document::from_raw_sentences("x0", &["p", "q", "r s", "p q s"], "");
        let pair = DocPair {
            summary_id: "s0".into(),
            article_id: "x0".into(),
            similarity: 1.0,
        };
        let theta = 0.5;
        let got = align_sentences(&pair, &summary, &article, &t, theta);
        // brute force oracle over all 12 combinations
        let mut expect = Vec::new();
        for ts in &summary.sentences {
            let te = embed_sentence(ts, &t);
            let sims: Vec<f64> = article
                .sentences
                .iter()
                .map(|a| cosine(&te, &embed_sentence(a, &t)).unwrap())
                .collect();
            let best = (0..sims.len())
                .max_by(|&a, &b| sims[a].partial_cmp(&sims[b]).unwrap().then(b.cmp(&a)))
                .unwrap();
            if sims[best] >= theta {
                expect.push((article.sentences[best].raw.clone(), ts.raw.clone()));
            }
        }
        let got_keys: Vec<(String, String)> = got
            .iter()
            .map(|p| (p.source.raw.clone(), p.target.raw.clone()))
            .collect();
        assert_eq!(got_keys, expect);
    }

    #[test]
    fn mine_disjoint_vocabulary_is_empty() {
        let t = table(&[("a", vec![1.0, 0.0]), ("z", vec![0.0, 1.0])]);
        let summaries = vec![Document::from_raw_sentences("s0", &["a"], "")];
        let articles = vec![Document::from_raw_sentences("x0", &["z"], "")];
        let config = AlignConfig {
            theta_d: 0.5,
            theta_s: 0.5,
            ..Default::default()
        };
        let mined = mine(&summaries, &articles, &t, &config);
        assert!(mined.pairs.is_empty());
        assert_eq!(mined.stats.pseudo_parallel_count, 0);
    }

    #[test]
    fn mine_threshold_monotonicity() {
        // overlapping token mixtures give a spread of similarities
        let t = table(&[
            ("a", vec![1.0, 0.0, 0.0]),
            ("b", vec![0.0, 1.0, 0.0]),
            ("c", vec![0.0, 0.0, 1.0]),
        ]);
        let summaries: Vec<Document> = (0..5)
            .map(|i| Document::from_raw_sentences(format!("s{i}"), &["a b", "b c"], ""))
            .collect();
        let articles: Vec<Document> = (0..5)
            .map(|i| {
                Document::from_raw_sentences(format!("x{i}"), &["a", "a b c", "b", "c c b"], "")
            })
            .collect();
        let run = |theta_s: f64| {
            let config = AlignConfig {
                theta_d: 0.3,
                theta_s,
                ..Default::default()
            };
            mine(&summaries, &articles, &t, &config)
                .pairs
                .into_iter()
                .map(|p| (p.source.raw, p.target.raw))
                .collect::<HashSet<_>>()
        };
        let loose = run(0.60);
        let mid = run(0.63);
        let tight = run(0.67);
        assert!(tight.is_subset(&mid));
        assert!(mid.is_subset(&loose));
        assert!(!loose.is_empty());
    }

    #[test]
    fn mined_pairs_satisfy_threshold() {
        let t = basis_table();
        let summaries = vec![Document::from_raw_sentences("s0", &["a b", "b c"], "")];
        let articles = vec![Document::from_raw_sentences("x0", &["a b c", "a"], "")];
        let config = AlignConfig {
            theta_d: 0.1,
            theta_s: 0.5,
            ..Default::default()
        };
        let mined = mine(&summaries, &articles, &t, &config);
        assert!(!mined.pairs.is_empty());
        for p in &mined.pairs {
            assert!(p.similarity >= config.theta_s);
            // recompute from stored sentences
            let recomputed = cosine(&embed_sentence(&p.target, &t), &embed_sentence(&p.source, &t)).unwrap();
            assert!((recomputed - p.similarity).abs() < 1e-12);
        }
    }

    #[test]
    fn tsv_round_trip() {
        let t = basis_table();
        let summaries = vec![Document::from_raw_sentences("s0", &["a b", "b c"], "")];
        let articles = vec![Document::from_raw_sentences("x0", &["a b c", "a"], "")];
        let config = AlignConfig {
            theta_d: 0.1,
            theta_s: 0.5,
            ..Default::default()
        };
        let mined = mine(&summaries, &articles, &t, &config);
        let mut buf = Vec::new();
        let n = write_pairs_tsv(&mined.pairs, &mut buf).unwrap();
        assert_eq!(n, mined.pairs.len());
        let file = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(file.path(), &buf).unwrap();
        let back = read_pairs_tsv(file.path()).unwrap();
        assert_eq!(back, mined.pairs);
    }

    #[test]
    fn tsv_replaces_tabs() {
        let pair = SentencePair {
            source: tokenize("a\tb").unwrap(),
            target: tokenize("c").unwrap(),
            similarity: 0.5,
            provenance: Provenance::PseudoParallel,
            origin: "s:x".into(),
        };
        let mut buf = Vec::new();
        write_pairs_tsv(&[pair], &mut buf).unwrap();
        let line = String::from_utf8(buf).unwrap();
        assert_eq!(line.trim_end().split('\t').count(), 5);
        assert!(line.starts_with("a b\t"));
    }
}
