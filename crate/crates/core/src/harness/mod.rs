//! Run configuration, batch evaluation, best-worst scaling, rank
//! correlation and the challenge suite.

mod bws;
mod challenge;
mod config;
mod eval;
mod stats;

pub use bws::{
    bws_pack, bws_score, parse_annotations, parse_answer_key, write_annotator_file, write_answer_key, Annotation,
    BwsItem, BwsResult, BwsTuple, ConfigScore, Dimension, PackEntry,
};
pub use challenge::{format_table, run_challenge_suite, ChallengeRow, ChallengeType, CHALLENGE_SENTENCES};
pub use config::{
    load_labeled, parse_labeled, parse_retrieval, parse_selection, LmSource, Preset, PresetChoice, ResourcePaths,
    RunConfig, ScorerSource,
};
pub use eval::{evaluate_batch, read_records, EvalRecord, EvalReport, EvalRow};
pub use stats::{average_ranks, spearman};

use std::path::PathBuf;

use thiserror::Error;

use crate::scoring::ScoringError;
use crate::transfer::TransferError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),
    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },
    #[error("cannot load {what}: {source}")]
    Resource {
        what: &'static str,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Transfer(#[from] TransferError),
}

impl From<ScoringError> for HarnessError {
    fn from(e: ScoringError) -> Self {
        HarnessError::Usage(e.to_string())
    }
}

impl HarnessError {
    /// Process exit code: 1 usage, 2 resource, 3 data.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) | HarnessError::Config { .. } => 1,
            HarnessError::Resource { .. } | HarnessError::Io { .. } => 2,
            HarnessError::Data(_) => 3,
            HarnessError::Transfer(TransferError::InvalidConfig(_)) => 1,
            HarnessError::Transfer(TransferError::MissingResource(_)) => 2,
            HarnessError::Transfer(_) => 3,
        }
    }
}
