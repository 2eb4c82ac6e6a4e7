use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: shape mismatch {lhs:?} vs {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("{0}: division by zero")]
    DivisionByZero(&'static str),
    #[error("{op}: argument {value} outside the domain")]
    Domain { op: &'static str, value: f64 },
    #[error("{0}: produced a non-finite value")]
    NonFinite(&'static str),
    #[error("backward requires a scalar output, got shape {0:?}")]
    NotScalar((usize, usize)),
    #[error("{0}: reduction over an empty axis")]
    EmptyReduction(&'static str),
    #[error("power allocation infeasible at AP {ap}{}: {detail}", ue.map(|u| format!(", UE {u}")).unwrap_or_default())]
    Constraint {
        ap: usize,
        ue: Option<usize>,
        detail: String,
    },
    #[error("shared information mismatch: {0}")]
    SharedInfo(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("training diverged at round {round}: {detail}")]
    Diverged { round: usize, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
