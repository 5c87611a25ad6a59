use crate::instance::Violation;
use crate::model::VarLabel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid instance: {}", join(.0))]
    InvalidInstance(Vec<Violation>),

    #[error("enumeration needs {count} start combinations, budget is {budget}")]
    TooLarge { count: u64, budget: u64 },

    #[error("no feasible schedule exists")]
    Infeasible,

    #[error("model has no variable {0}")]
    UnknownVariable(VarLabel),

    #[error("{0}")]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

fn join(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
