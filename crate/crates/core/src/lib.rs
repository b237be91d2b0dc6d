//! Cascade generalization of Naive Bayes into C4.5 and RIPPER, used alone
//! or inside Bagging and Random Subspace ensembles, with the repeated
//! cross-validation harness that compares them.
//!
//! ```no_run
//! use casgen_core::{load_cleveland, Classifier, Hyperparameters, MethodSpec};
//!
//! let data = load_cleveland(std::fs::File::open("processed.cleveland.data")?)?;
//! let spec = MethodSpec::parse("Bg-C-C4.5", &Hyperparameters::default())?;
//! let model = spec.train(&data.table, 42)?;
//! let p = model.predict_distribution(data.table.row(0))?.positive();
//! # Ok::<(), casgen_core::Error>(())
//! ```

pub mod cascade;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod feature_select;
pub mod harness;
pub mod learners;
pub mod metrics;
pub mod model;
pub mod rng;

pub use cascade::{phi_extend, predict_cascade, train_cascade, CascadeModel, CascadeSpec, MetaFeatures};
pub use data::{
    bootstrap_sample, cleveland_schema, load_cleveland, load_csv, project, random_subspace, stratified_folds,
    Attribute, AttributeKind, DataTable, FeatureMask, FoldPlan, Ingested, Label, Schema,
};
pub use ensemble::{
    fuse, fuse_distributions, train_bagging, train_random_subspace, Construction, EnsembleModel, Fusion, Member,
    MemberSpec,
};
pub use error::{Error, Result};
pub use feature_select::{cfs_merit, ga_search, CfsCache, GaConfig};
pub use harness::{emit_report, run_experiment, EvaluationReport, ExperimentConfig, ReportFormat};
pub use learners::{ClassDist, Classifier, LearnerSpec, TrainedModel};
pub use metrics::{accuracy, kw_variance, member_mean_accuracy, roc_auc, sensitivity, specificity, ConfusionCounts};
pub use model::{load_model, save_model, Hyperparameters, MethodSpec, Model};
