//! Cross-validation, metrics, significance tests and reporting.

pub mod cv;
pub mod experiment;
pub mod metrics;
pub mod report;
pub mod wilcoxon;

pub use cv::{stratified_kfold, training_indices};
pub use experiment::{
    fit_fold, run_experiment, ExperimentConfig, ExperimentResult, FoldResult, MeanStd, Method,
    RepetitionSummary,
};
pub use metrics::{confusion_table, confusion_table_from_signs, metrics, ConfusionTable, Metrics};
pub use report::{compare, Comparison, Table};
pub use wilcoxon::{
    wilcoxon_signed_rank, wilcoxon_signed_rank_normal, PValueMethod, WilcoxonResult,
};
