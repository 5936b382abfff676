//! Corpus generation, the experiment matrix and post-hoc reports.

mod corpus;
mod experiment;
mod report;

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::search::SearchError;
use crate::selection::SelectionError;

pub use corpus::{
    gen_corpus, generate_corpus, CorpusSpec, FeatureWeights, GeneratedClass, BIG_CLASS_BRANCHES, SMALL_CLASS_MIN_BRANCHES,
};
pub use experiment::{
    cell_seed, load_corpus, read_runs, run_experiment, CellKey, CorpusClass, ExperimentPlan, ExperimentSummary, RunRow,
    TimingRow, EVENTS_DIR, FAILURES_FILE, PLAN_FILE, RUNS_FILE, TIMINGS_FILE, TRACES_DIR,
};
pub use report::{report, write_report, ComparisonRow, CoverageRow, OutcomeRow, Report};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("infeasible corpus spec: {0}")]
    InfeasibleSpec(String),
    #[error("corpus generator produced an invalid class: {0}")]
    Generator(String),
    #[error("corpus error in {path}: {msg}")]
    Corpus { path: PathBuf, msg: String },
    #[error("invalid plan: {0}")]
    Plan(String),
    #[error("run database {path}: {msg}")]
    Database { path: PathBuf, msg: String },
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Search(#[from] SearchError),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: io::Error) -> HarnessError {
        HarnessError::Io { path: path.to_path_buf(), source }
    }

    pub(crate) fn db(path: &Path, msg: impl ToString) -> HarnessError {
        HarnessError::Database { path: path.to_path_buf(), msg: msg.to_string() }
    }

    /// Problems with the corpus itself, as opposed to the plan.
    pub fn is_corpus_error(&self) -> bool {
        matches!(self, HarnessError::Corpus { .. } | HarnessError::InfeasibleSpec(_) | HarnessError::Generator(_))
    }

    pub fn is_plan_error(&self) -> bool {
        matches!(self, HarnessError::Plan(_) | HarnessError::Selection(_) | HarnessError::Search(_))
    }
}
