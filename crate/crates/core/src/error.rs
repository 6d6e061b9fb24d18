use crate::annotation::Violation;

#[derive(Debug, thiserror::Error)]
pub enum AnnotationError {
    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },
    #[error("{} invariant violation(s), first: {}", .0.len(), .0.first().map(|v| v.to_string()).unwrap_or_default())]
    Invalid(Vec<Violation>),
    #[error("total annotated duration is zero")]
    ZeroDuration,
    #[error(transparent)]
    UnknownVideo(#[from] crate::annotation::UnknownVideo),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TaxonomyError {
    #[error("unknown question code {0:?}")]
    UnknownCode(String),
    #[error("template for {code} needs slot {{{placeholder}}}")]
    MissingSlot { code: String, placeholder: String },
    #[error("template for {code} uses unknown placeholder {{{placeholder}}}")]
    UnknownPlaceholder { code: String, placeholder: String },
    #[error("no template registered for {0}")]
    NoTemplate(String),
}

#[derive(Debug, thiserror::Error)]
pub enum GenerateError {
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error("instance has {} invariant violation(s)", .0.len())]
    InvalidInstance(Vec<Violation>),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
}
