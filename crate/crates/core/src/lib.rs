//! Imbalanced binary classification by regression on one-sided shifted targets.
//!
//! The minority class is labelled `-1` and the majority class `+1`. Instead of
//! fitting the two labels directly, [`shift`] gives every training sample its
//! own integer target and moves the minority targets away from zero so that the
//! target range is symmetric. A linear support vector regressor ([`svm`]) is
//! fitted to those targets and its sign is the prediction.
//!
//! The crate also contains the pieces needed to evaluate that idea:
//! a linear SVM classifier, a SMOTE baseline ([`smote`]), dataset loading
//! ([`data`], [`registry`]) and repeated stratified cross validation with
//! Wilcoxon tests ([`eval`]).
//!
//! ```
//! use labelshift::{assign_random_targets, shift_targets, Label};
//!
//! let labels = [Label::Minority, Label::Majority, Label::Majority];
//! let a = shift_targets(&assign_random_targets(&labels, 7)?, 1.0)?;
//! assert_eq!(a.targets[0], -2.0);
//! # Ok::<(), labelshift::Error>(())
//! ```

pub mod data;
mod error;
pub mod eval;
pub mod matrix;
pub mod registry;
pub mod seed;
pub mod shift;
pub mod smote;
pub mod svm;

pub use data::{
    dataset_summary, load_dataset, parse_dataset, relabel_minority, Dataset, DatasetSpec, Label,
    Summary,
};
pub use error::{Error, Result};
pub use eval::{
    compare, run_experiment, stratified_kfold, wilcoxon_signed_rank, ConfusionTable,
    ExperimentConfig, ExperimentResult, FoldResult, Method, Metrics,
};
pub use matrix::FeatureMatrix;
pub use registry::{Registry, RegistryEntry, DATA_DIR_ENV};
pub use shift::{assign_random_targets, delta_m, shift_targets, TargetAssignment};
pub use smote::{smote_balance, Formula, SmoteParams};
pub use svm::{predict_class, predict_raw, train_svc, train_svr, BiasTerm, LinearModel, SvmParams};
