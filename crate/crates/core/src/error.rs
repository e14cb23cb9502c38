use std::fmt;

/// One violated parameter constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub name: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.name, self.detail)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("invalid parameters: {}", list(.0))]
    InvalidParams(Vec<Violation>),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("vacuum floor breached at t={t}: min rho {min_rho} <= floor {floor}")]
    Vacuum { t: f64, min_rho: f64, floor: f64 },

    #[error("numerical blow-up at t={t}: {reason}")]
    BlowUp { t: f64, reason: String },

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("sweep failed: {0}")]
    Sweep(String),

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn list(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    /// Attach the index of the step that failed.
    pub(crate) fn at_step(self, step: usize) -> Self {
        match self {
            e @ Error::AtStep { .. } => e,
            e => Error::AtStep {
                step,
                source: Box::new(e),
            },
        }
    }

    /// Innermost error, skipping step annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            e => e,
        }
    }

    /// Simulation time carried by a vacuum or blow-up error.
    pub fn time(&self) -> Option<f64> {
        match self.root() {
            Error::Vacuum { t, .. } | Error::BlowUp { t, .. } => Some(*t),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
