use std::path::PathBuf;

use thiserror::Error;

use crate::skeleton::{JointId, ValidationReport};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("joint {joint} missing{}", fmt_frame(*frame))]
    MissingJoint {
        joint: JointId,
        frame: Option<usize>,
    },

    #[error("degenerate geometry at {joint}{}: limb vector shorter than 1e-9 m", fmt_frame(*frame))]
    DegenerateGeometry {
        joint: JointId,
        frame: Option<usize>,
    },

    #[error("joint {0} has no adjacency entry for angle computation")]
    NoAdjacency(JointId),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("series is empty")]
    EmptySeries,

    #[error("height must be positive, got {0}")]
    NonPositiveHeight(f64),

    #[error("frame counts differ: reference {reference}, test {test}")]
    FrameCountMismatch { reference: usize, test: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid template: {0}")]
    InvalidTemplate(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error("stream failed validation with {} issue(s)", .0.issues.len())]
    ValidationFailed(ValidationReport),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn fmt_frame(frame: Option<usize>) -> String {
    match frame {
        Some(i) => format!(" at frame {i}"),
        None => String::new(),
    }
}

impl Error {
    /// Attaches a frame index to per-frame geometry errors that lack one.
    pub(crate) fn at_frame(self, index: usize) -> Self {
        match self {
            Error::MissingJoint { joint, frame: None } => Error::MissingJoint {
                joint,
                frame: Some(index),
            },
            Error::DegenerateGeometry { joint, frame: None } => Error::DegenerateGeometry {
                joint,
                frame: Some(index),
            },
            other => other,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
