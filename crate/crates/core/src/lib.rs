//! Batch toolkit for abstractive summarization without parallel corpora.
//!
//! The pipeline has two halves. At summarization time, an unsupervised
//! extractor ([`extract`]) picks the `K` most salient sentences of an
//! article and an external abstractor process paraphrases each one.
//! At dataset-construction time, [`mine`] aligns example summaries against
//! a large non-matching article collection to harvest pseudo-parallel
//! sentence pairs, and [`synth`] expands them with synthetic article
//! sentences produced by a backtranslation-style generator. [`metrics`]
//! scores system output with ROUGE-1/2/L and a METEOR-style metric.
//!
//! Neural models never live in this crate: abstractors and generators are
//! external processes speaking a line-delimited JSON protocol
//! ([`generator`]), and sentence embeddings come from a pretrained
//! word-vector file ([`embed`]).

pub mod config;
pub mod corpus;
pub mod embed;
pub mod extract;
pub mod generator;
pub mod metrics;
pub mod mine;
pub mod synth;

use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A sentence was empty (or whitespace-only) after trimming.
    #[error("degenerate sentence: {0:?}")]
    DegenerateSentence(String),

    /// A single malformed record in a line-oriented file; the stream
    /// may continue past it.
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },

    /// A document id appeared twice in one corpus.
    #[error("duplicate document id {0:?}")]
    DuplicateId(String),

    /// A file did not follow its declared format.
    #[error("{path}:{line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },

    /// Vector operands of different dimension.
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    /// An operation that needs at least one element got none.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// Inputs that do not satisfy a command's preconditions.
    #[error("{0}")]
    Input(String),

    /// Parallel lists of different length.
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    /// The generator/abstractor wire protocol was violated.
    #[error("generator protocol: {0}")]
    Protocol(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
