//! Drift-adaptive AutoML for tabular data streams.
//!
//! The crate covers the full pipeline for both static (batch) and dynamic
//! (streaming) tabular classification:
//!
//! - [`data`]: typed datasets, CSV ingestion with schema inference, and seeded
//!   synthetic drift-stream generation (sudden / gradual / recurring).
//! - [`preprocess`]: automated pre-processing — label encoding, missing-value
//!   imputation, Z-score / min-max normalization with automatic method choice,
//!   and SMOTE class balancing.
//! - [`features`]: information-gain relevance filtering and Pearson-correlation
//!   redundancy pruning.
//! - [`offline`]: batch classifiers (Naive Bayes, KNN, CART, random forest).
//! - [`online`]: incremental learners and drift-adaptive ensembles (Hoeffding
//!   tree, EFDT, online/leveraging bagging, adaptive random forest,
//!   random-subspace ensemble, inverse-error weighted combiner).
//! - [`drift`]: DDM, EDDM, ADWIN and windowed distribution-distance detectors.
//! - [`cash`]: search spaces and optimizers (grid, random, BO-TPE) plus the
//!   two-stage combined algorithm selection / hyperparameter optimization
//!   driver.
//! - [`eval`]: classification/regression metrics, hold-out / k-fold / rolling
//!   cross-validation, and prequential test-then-train evaluation.
//! - [`pipeline`]: config-driven assembly of the whole thing with structured
//!   run reports.

pub mod cash;
pub mod data;
pub mod drift;
pub mod eval;
pub mod features;
pub mod offline;
pub mod online;
pub mod pipeline;
pub mod preprocess;
pub mod seeding;
