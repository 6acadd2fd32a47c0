//! Synthetic-pair expansion: grow the mined pseudo-parallel seed with
//! backtranslated article sentences and assemble the final abstractor
//! training dataset.

use std::collections::HashSet;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::corpus::{tokenize, TokenizedSentence};
use crate::generator::{Generator, GeneratorRequest};
use crate::mine::{
    normalize_pairs, write_pairs_tsv, MinedDataset, Provenance, SentencePair, SIMILARITY_UNSET,
};
use crate::Result;

/// Ask the generator for up to `j` synthetic article sentences per
/// summary sentence and pair each hypothesis with its summary sentence.
/// Pairs come back in input order; sentences the generator declines
/// (zero hypotheses) are skipped with a warning on stderr.
pub fn expand_with_backtranslation(
    summary_sentences: &[TokenizedSentence],
    generator: &mut dyn Generator,
    j: usize,
) -> Result<Vec<SentencePair>> {
    assert!(j >= 1, "at least one hypothesis must be requested");
    let requests: Vec<GeneratorRequest> = summary_sentences
        .iter()
        .enumerate()
        .map(|(i, s)| GeneratorRequest {
            id: i.to_string(),
            text: s.raw.clone(),
            j,
        })
        .collect();
    let responses = generator.generate(&requests)?;
    let origin = generator.tag().to_string();
    // index responses by request position; generate() validates ids
    let mut by_index: Vec<Option<Vec<String>>> = vec![None; summary_sentences.len()];
    for response in responses {
        let idx: usize = response
            .id
            .parse()
            .map_err(|_| crate::Error::Protocol(format!("unknown response id {:?}", response.id)))?;
        if idx >= by_index.len() {
            return Err(crate::Error::Protocol(format!(
                "unknown response id {:?}",
                response.id
            )));
        }
        by_index[idx] = Some(response.hypotheses);
    }
    let mut pairs = Vec::new();
    for (i, target) in summary_sentences.iter().enumerate() {
        let hypotheses = by_index[i].take().unwrap_or_default();
        if hypotheses.is_empty() {
            eprintln!(
                "warning: generator returned no hypotheses for sentence {i} ({:?}); skipped",
                target.raw
            );
            continue;
        }
        for hypothesis in hypotheses {
            let Ok(source) = tokenize(&hypothesis) else {
                eprintln!(
                    "warning: generator hypothesis for sentence {i} tokenizes to nothing; skipped"
                );
                continue;
            };
            pairs.push(SentencePair {
                source,
                target: target.clone(),
                similarity: SIMILARITY_UNSET,
                provenance: Provenance::Backtranslated,
                origin: origin.clone(),
            });
        }
    }
    Ok(pairs)
}

/// Combine mined and backtranslated pairs into one training dataset.
/// Duplicates on (source raw, target raw) collapse with the
/// pseudo-parallel copy winning; mixture stats are recomputed.
pub fn merge_datasets(pp: &MinedDataset, bt: &[SentencePair]) -> MinedDataset {
    let mined: HashSet<(&str, &str)> = pp
        .pairs
        .iter()
        .map(|p| (p.source.raw.as_str(), p.target.raw.as_str()))
        .collect();
    let mut combined = pp.pairs.clone();
    combined.extend(
        bt.iter()
            .filter(|p| !mined.contains(&(p.source.raw.as_str(), p.target.raw.as_str())))
            .cloned(),
    );
    MinedDataset::from_pairs(normalize_pairs(combined))
}

/// Write the dataset as pair TSV; returns the number of lines written.
pub fn export_training_pairs(dataset: &MinedDataset, path: impl AsRef<Path>) -> Result<usize> {
    let writer = BufWriter::new(File::create(path)?);
    write_pairs_tsv(&dataset.pairs, writer)
}
