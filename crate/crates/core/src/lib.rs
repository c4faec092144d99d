//! Dialect identification with classifier ensembles.
//!
//! Each ensemble member turns text into TF-IDF weighted character n-grams,
//! word n-grams or word skip-bigrams and classifies it with one-vs-rest
//! linear SVMs trained by dual coordinate descent. Members vote and the
//! majority label wins, ties going to the label that sorts first.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the command-line tool uses by default.
//!
//! ```
//! use dialect_id::corpus::{generate_synthetic_corpus, PartitionSizes};
//! use dialect_id::ensemble::{submitted_feature_specs, train_ensemble};
//! use dialect_id::{EnsembleConfig, TrainConfig};
//!
//! let corpus = generate_synthetic_corpus(7, &["BE", "ZH"], PartitionSizes::new(30, 0, 10), 0.8)?;
//! let config = EnsembleConfig::new(submitted_feature_specs(), TrainConfig::default());
//! let model = train_ensemble(&corpus.train, &config)?;
//! let predictions = model.predict(&corpus.test)?;
//! assert_eq!(predictions.len(), corpus.test.len());
//! # Ok::<(), dialect_id::Error>(())
//! ```

pub mod cli;
pub mod corpus;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod features;
pub mod model_file;
pub mod rng;
pub mod scalar;
pub mod sparse;
pub mod svm;

pub use corpus::{Dataset, Instance, LabelIndex};
pub use error::{Error, Result};
pub use features::{FeatureKind, FeatureSpec};
pub use scalar::{MetricScalar, Scalar};
pub use svm::Loss;

pub type SparseVector = sparse::SparseVector<f64>;
pub type SparseMatrix = sparse::SparseMatrix<f64>;
pub type TfidfModel = features::TfidfModel<f64>;
pub type TrainConfig = svm::TrainConfig<f64>;
pub type BinaryModel = svm::BinaryModel<f64>;
pub type LinearModel = svm::LinearModel<f64>;
pub type FeatureWeight = svm::FeatureWeight<f64>;
pub type EnsembleConfig = ensemble::EnsembleConfig<f64>;
pub type EnsembleModel = ensemble::EnsembleModel<f64>;
pub type GridSearchResult = ensemble::GridSearchResult<f64>;
pub type ModelFile = model_file::ModelFile<f64>;
pub type MetricsReport = eval::MetricsReport<f64>;

pub type SparseVectorF32 = sparse::SparseVector<f32>;
pub type TfidfModelF32 = features::TfidfModel<f32>;
pub type TrainConfigF32 = svm::TrainConfig<f32>;
pub type LinearModelF32 = svm::LinearModel<f32>;
pub type EnsembleModelF32 = ensemble::EnsembleModel<f32>;
pub type ModelFileF32 = model_file::ModelFile<f32>;

/// Exact metrics over rationals.
pub type ExactMetricsReport = eval::MetricsReport<num_rational::Ratio<i64>>;
