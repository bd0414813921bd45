//! Planner integration modes, the experiment pipeline, file formats and
//! reports.

mod integrate;
pub mod io;
mod pipeline;
mod report;

use std::path::Path;

pub use integrate::{closed_box_plan, integrated_plan, open_box_plan, random_plans, IntegrationMode, ModeResult};
pub use pipeline::{
    augment_class, evaluate, experience_class, generate_test_problems, run_ablation, run_benchmark,
    run_experience_sweep, split_holdout, sweep_levels, train_store, BenchmarkConfig, CostMeasure, ExperienceSet,
    Holdout, PipelineOutcome, Record, RetrievalStats, StoreOutcome, DEFAULT_ITERATION_BUDGET, SWEEP_LEVELS,
};
pub use report::{Report, ReportRow, CSV_HEADER};

use crate::envgen::GenError;
use crate::hallucinate::AugmentError;
use crate::memory::MemoryError;
use crate::planners::PlanError;
use crate::robot::RobotError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{what}, line {line}: {msg}")]
    Parse { what: String, line: usize, msg: String },
    #[error("weights file: {0}")]
    Weights(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid benchmark configuration: {0}")]
    Config(String),
    #[error("test problem {0} also appears in the training data")]
    Leak(usize),
    #[error("stage `{stage}` failed: {msg}")]
    Stage { stage: String, msg: String },
    #[error(transparent)]
    Robot(#[from] RobotError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn stage(stage: impl Into<String>, err: impl std::fmt::Display) -> Self {
        HarnessError::Stage {
            stage: stage.into(),
            msg: err.to_string(),
        }
    }
}

impl From<GenError> for HarnessError {
    fn from(e: GenError) -> Self {
        HarnessError::stage("generate", e)
    }
}

impl From<AugmentError> for HarnessError {
    fn from(e: AugmentError) -> Self {
        HarnessError::stage("augment", e)
    }
}
