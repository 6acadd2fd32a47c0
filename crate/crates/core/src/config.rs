//! Pipeline configuration: one JSON document covering extraction,
//! alignment, synthesis, and process attachment points. Command-line
//! flags override file values.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::extract::ExtractConfig;
use crate::mine::AlignConfig;
use crate::{Error, Result};

/// Command value selecting the in-process identity abstractor.
pub const ABSTRACTOR_IDENTITY: &str = "identity";
/// Command value selecting the in-process noising generator.
pub const GENERATOR_BUILTIN: &str = "builtin";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub extract: ExtractConfig,
    pub align: AlignConfig,
    /// hypotheses requested per summary sentence during synthesis
    pub j_hypotheses: usize,
    /// shell command for the paraphrasing abstractor, or "identity"
    pub abstractor_command: String,
    /// shell command for the backtranslation generator, or "builtin"
    pub generator_command: String,
    /// word-vector text file; required by mine/lexrank-free embedding ops
    pub word_vectors_path: Option<PathBuf>,
    pub workers: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            extract: ExtractConfig::default(),
            align: AlignConfig::default(),
            j_hypotheses: 5,
            abstractor_command: ABSTRACTOR_IDENTITY.to_string(),
            generator_command: GENERATOR_BUILTIN.to_string(),
            word_vectors_path: None,
            workers: 1,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<PipelineConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let config: PipelineConfig = serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::EmptyInput("workers must be at least 1"));
        }
        if self.j_hypotheses == 0 {
            return Err(Error::EmptyInput("j_hypotheses must be at least 1"));
        }
        if self.extract.k == 0 {
            return Err(Error::EmptyInput("extract.k must be at least 1"));
        }
        for (name, value) in [
            ("align.theta_d", self.align.theta_d),
            ("align.theta_s", self.align.theta_s),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::EmptyInput(match name {
                    "align.theta_d" => "align.theta_d must lie in [0, 1]",
                    _ => "align.theta_s must lie in [0, 1]",
                }));
            }
        }
        Ok(())
    }
}
