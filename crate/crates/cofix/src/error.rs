//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A dataset line failed to parse.
    #[error("line {line}: malformed record: {message}")]
    MalformedRecord { line: usize, message: String },

    /// An instance references a problem id that is not in the dataset.
    #[error("line {line}: instance references unknown problem '{problem_id}'")]
    DanglingProblem { line: usize, problem_id: String },

    /// A type invariant was violated during construction or load.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// An operation precondition was not met.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Prompt template could not be rendered for the requested role.
    #[error("template error: {0}")]
    Template(String),

    /// A model role is not bound to any backend.
    #[error("role '{0}' is not bound to a backend")]
    UnboundRole(String),

    /// The backend failed to serve a request.
    #[error("backend error: {0}")]
    Backend(String),

    /// The backend does not support the requested capability.
    #[error("capability not supported: {0}")]
    Capability(String),

    /// Sandbox infrastructure failure (spawn, temp dir), distinct from
    /// failures of the judged program itself.
    #[error("sandbox error: {0}")]
    Sandbox(String),

    /// Bad run configuration (missing runner, mode/role mismatch, paths).
    #[error("configuration error: {0}")]
    Config(String),

    /// A token is not part of the toy policy vocabulary.
    #[error("unknown token '{0}' not in vocabulary")]
    UnknownToken(String),

    /// Two toy policies do not share a vocabulary.
    #[error("vocabulary mismatch: {0}")]
    VocabularyMismatch(String),

    /// Chosen and rejected continuations are identical.
    #[error("degenerate pair: chosen and rejected are identical")]
    DegeneratePair,

    /// Training produced a non-finite loss.
    #[error("divergence at step {step}: loss is not finite")]
    Divergence { step: usize },

    /// Candidate generation failed after some candidates completed.
    #[error("candidate generation failed after {completed} of {requested}: {source}")]
    PartialCandidates {
        completed: usize,
        requested: usize,
        #[source]
        source: Box<Error>,
    },

    /// Any error tagged with the dataset instance it occurred on.
    #[error("instance {problem_id}/{user_id}#{submission_index}: {source}")]
    AtInstance {
        problem_id: String,
        user_id: String,
        submission_index: u32,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
