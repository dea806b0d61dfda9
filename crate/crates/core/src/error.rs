use thiserror::Error;

use crate::trajectory::HandoverPoints;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum PlanError {
    /// The SNR target cannot be met even directly above a GBS.
    #[error("SNR target {target_db:.3} dB is unachievable (limit {limit_db:.3} dB at zero horizontal distance)")]
    UnachievableSnr { target_db: f64, limit_db: f64 },
    #[error("mission is infeasible: start and goal are not connected at the requested SNR target")]
    Infeasible,
    #[error("consecutive GBSs {0} and {1} coincide; handover direction is undefined")]
    DegenerateSequence(usize, usize),
    #[error("no boundary crossing in [0, 1] for handover {index}")]
    NoBoundaryCrossing { index: usize },
    #[error("refinement did not converge after {iterations} iterations (gap {gap:.3e} m)")]
    NonConvergence {
        iterations: usize,
        gap: f64,
        best: HandoverPoints,
    },
    #[error("quantization needs at least two levels, got {0}")]
    InvalidQuantLevels(usize),
    #[error("coverage disks of GBS {0} and {1} do not overlap")]
    NoOverlap(usize, usize),
    #[error("path budget of {budget} exhausted during exhaustive search")]
    BudgetExhausted {
        budget: usize,
        best: Option<Box<crate::method1::Plan>>,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Error, Debug)]
pub enum IoError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}
