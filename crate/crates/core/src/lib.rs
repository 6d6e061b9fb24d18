//! Build diagnostic multiple-choice video QA benchmarks from dense,
//! time-synchronized multi-track timeline annotations, then curate,
//! evaluate and error-analyze them.

pub mod annotation;
pub mod canonical;
pub mod curation;
pub mod error;
pub mod eval;
pub mod generate;
pub mod parallel;
pub mod report;
pub mod rng;
pub mod taxonomy;

pub use error::AnnotationError;
