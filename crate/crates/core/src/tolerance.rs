//! Numerical tolerances used across the planners and validators.
//!
//! Every feasibility check in the crate reads its slack from here so the
//! planners, the validator and the tests agree on what "feasible" means.

/// Absolute slack on distance constraints, in meters.
pub const DISTANCE_ABS_M: f64 = 1e-6;

/// Relative slack on sampled SNR when validating a trajectory.
pub const SNR_REL: f64 = 1e-6;

/// Relative slack on the speed limit.
pub const SPEED_REL: f64 = 1e-9;

/// Endpoint match tolerance, in meters.
pub const ENDPOINT_M: f64 = 1e-6;

/// Relative tolerance for points that must lie exactly on a coverage circle.
pub const ON_CIRCLE_REL: f64 = 1e-9;

/// Default refinement tolerance (objective gap) for Method I, in meters.
pub const REFINE_DEFAULT_M: f64 = 1e-3;

/// Refinement tolerance used by the exhaustive oracle, in meters.
pub const ORACLE_REFINE_M: f64 = 1e-6;

/// Iteration budget for the handover refinement.
pub const REFINE_MAX_ITERATIONS: usize = 10_000;

/// Stopping rule for the alternating projection onto a two-disk lens, in meters.
pub const LENS_PROJECTION_M: f64 = 1e-9;

/// Default simple-path budget of the exhaustive planner.
pub const DEFAULT_PATH_BUDGET: usize = 1_000_000;

pub(crate) fn within_radius(dist: f64, radius: f64) -> bool {
    dist <= radius + DISTANCE_ABS_M
}
