//! Graph-based planning: shortest association path in the feasibility graph,
//! then optimal handover locations along it.

use serde::{Deserialize, Serialize};

use crate::conn_graph::{build_feasibility_graph, check_feasibility, shortest_association};
use crate::error::PlanError;
use crate::refine::refine_handovers;
use crate::scenario::{coverage_radius, to_db, Point, Scenario};
use crate::tolerance;
use crate::trajectory::{
    assemble_trajectory, validate_trajectory, AssociationSequence, HandoverPoints, Trajectory,
};

/// A complete flight plan.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub sequence: AssociationSequence,
    pub handovers: HandoverPoints,
    pub trajectory: Trajectory,
    pub method_tag: String,
    /// Linear SNR target the plan was built for.
    pub snr_target: f64,
    /// Non-fatal findings, e.g. a non-simple extracted sequence.
    pub warnings: Vec<String>,
}

impl Plan {
    pub fn new(
        scenario: &Scenario,
        sequence: AssociationSequence,
        handovers: HandoverPoints,
        method_tag: impl Into<String>,
        snr_target: f64,
    ) -> Self {
        let trajectory = assemble_trajectory(&handovers, scenario.max_speed);
        Plan {
            sequence,
            handovers,
            trajectory,
            method_tag: method_tag.into(),
            snr_target,
            warnings: Vec::new(),
        }
    }

    pub fn length(&self) -> f64 {
        self.handovers.length()
    }

    pub fn completion_time(&self) -> f64 {
        self.trajectory.total_time
    }

    /// Serializable summary including the worst SNR sampled every
    /// `sample_spacing` meters.
    pub fn report(&self, scenario: &Scenario, sample_spacing: f64) -> PlanReport {
        let v = validate_trajectory(scenario, &self.trajectory, self.snr_target, sample_spacing);
        PlanReport {
            method: self.method_tag.clone(),
            sequence: self.sequence.indices().to_vec(),
            handovers: self.handovers.points.clone(),
            segment_times_s: self.trajectory.segment_durations.clone(),
            completion_time_s: self.completion_time(),
            length_m: self.length(),
            snr_target_db: to_db(self.snr_target),
            worst_snr_db: to_db(v.worst.snr),
            valid: v.passes(),
            warnings: self.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub method: String,
    pub sequence: Vec<usize>,
    pub handovers: Vec<Point>,
    pub segment_times_s: Vec<f64>,
    pub completion_time_s: f64,
    pub length_m: f64,
    pub snr_target_db: f64,
    pub worst_snr_db: f64,
    pub valid: bool,
    pub warnings: Vec<String>,
}

/// Plans with the shortest association path and refined handovers.
pub fn plan_method1(scenario: &Scenario, snr_target: f64) -> Result<Plan, PlanError> {
    plan_method1_with_tolerance(scenario, snr_target, tolerance::REFINE_DEFAULT_M)
}

pub fn plan_method1_with_tolerance(
    scenario: &Scenario,
    snr_target: f64,
    refine_tolerance: f64,
) -> Result<Plan, PlanError> {
    let req = coverage_radius(scenario, snr_target)?;
    let graph = build_feasibility_graph(scenario, &req);
    if !check_feasibility(&graph) {
        return Err(PlanError::Infeasible);
    }
    let path = shortest_association(&graph)?;
    let handovers = refine_handovers(scenario, &path.sequence, req.radius, refine_tolerance)?;
    Ok(Plan::new(scenario, path.sequence, handovers, "m1", snr_target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conn_graph::tests::ten_gbs_layout;
    use crate::scenario::{from_db, ConnectivityRequirement};

    #[test]
    fn ten_gbs_plan_follows_chain_and_validates() {
        let s = ten_gbs_layout();
        let target = ConnectivityRequirement::from_radius(&s, 1000.0).snr_target;
        let plan = plan_method1(&s, target).unwrap();
        let report = plan.report(&s, 1.0);
        assert!(report.valid, "{report:?}");
        assert_eq!(plan.sequence.indices().first(), Some(&1));
        assert!(plan.length() <= crate::trajectory::association_upper_bound(&s, &plan.sequence) + 1e-9);
        assert!((plan.completion_time() - plan.length() / s.max_speed).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unachievable_reported() {
        let s = ten_gbs_layout();
        let target = ConnectivityRequirement::from_radius(&s, 750.0).snr_target;
        assert_eq!(plan_method1(&s, target), Err(PlanError::Infeasible));
        assert!(matches!(
            plan_method1(&s, from_db(200.0)),
            Err(PlanError::UnachievableSnr { .. })
        ));
    }

    #[test]
    fn report_round_trips_json() {
        let s = ten_gbs_layout();
        let target = ConnectivityRequirement::from_radius(&s, 1000.0).snr_target;
        let r = plan_method1(&s, target).unwrap().report(&s, 5.0);
        let text = serde_json::to_string(&r).unwrap();
        let back: PlanReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }
}
