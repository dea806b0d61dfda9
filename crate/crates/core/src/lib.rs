//! Trajectory planning for a cellular-connected UAV that must keep a minimum
//! SNR to some ground base station (GBS) for the whole flight.
//!
//! The pipeline is: derive the coverage radius from the SNR target, build the
//! feasibility graph over start, GBSs and goal, then plan with the
//! graph-shortest-path method ([`plan_method1`]) or the quantized-boundary
//! method ([`plan_method2`]). Baselines and experiment drivers live in
//! [`baselines`] and [`experiments`].

pub mod baselines;
pub mod conn_graph;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod method1;
pub mod method2;
pub mod refine;
pub mod scenario;
pub mod tolerance;
pub mod trajectory;

pub use baselines::{exhaustive_plan, straight_flight_max_snr, straight_flight_plan};
pub use conn_graph::{
    bottleneck_max_snr, bottleneck_radius, build_feasibility_graph, check_feasibility, shortest_association,
    FeasibilityGraph, VertexId,
};
pub use error::{IoError, PlanError};
pub use method1::{plan_method1, Plan, PlanReport};
pub use method2::{build_quantized_graph, method2_gap_bound, plan_method2, quantize_boundary, QuantizedGraph};
pub use refine::{refine_handovers, refine_handovers_detailed, RefineOutcome};
pub use scenario::{coverage_radius, from_db, snr_at, to_db, ConnectivityRequirement, Point, Scenario};
pub use trajectory::{
    assemble_trajectory, snap_to_boundary, validate_trajectory, AssociationSequence, HandoverPoints, Trajectory,
    ValidationReport,
};
