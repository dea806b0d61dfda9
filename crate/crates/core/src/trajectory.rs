//! Association sequences, handover points and the piecewise-linear,
//! max-speed trajectories they define.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::PlanError;
use crate::scenario::{closest_gbs, snr_at, to_db, Point, Scenario};
use crate::tolerance;

/// Ordered GBS indices the UAV is served by, one per trajectory segment.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AssociationSequence {
    indices: Vec<usize>,
}

impl AssociationSequence {
    /// Checked constructor: non-empty, indices below `num_gbs`, no repeats.
    pub fn new(indices: Vec<usize>, num_gbs: usize) -> Result<Self, PlanError> {
        if indices.is_empty() {
            return Err(PlanError::InvalidInput("empty association sequence".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= num_gbs) {
            return Err(PlanError::InvalidInput(format!("GBS index {bad} out of range")));
        }
        let seq = AssociationSequence { indices };
        if !seq.is_simple() {
            return Err(PlanError::InvalidInput(format!("sequence {:?} repeats a GBS", seq.indices)));
        }
        Ok(seq)
    }

    pub(crate) fn new_unchecked(indices: Vec<usize>) -> Self {
        AssociationSequence { indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn is_simple(&self) -> bool {
        let mut seen = self.indices.clone();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }
}

/// Handover locations `u^0 .. u^N`; the first is the start, the last the goal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HandoverPoints {
    pub points: Vec<Point>,
}

impl HandoverPoints {
    pub fn new(points: Vec<Point>) -> Self {
        HandoverPoints { points }
    }

    pub fn length(&self) -> f64 {
        path_length(&self.points)
    }
}

/// Sum of consecutive Euclidean distances.
pub fn path_length(points: &[Point]) -> f64 {
    points.windows(2).map(|w| w[0].dist(w[1])).sum()
}

/// Whether every handover lies in the lens of the two GBSs it joins.
pub fn handovers_feasible(scenario: &Scenario, seq: &[usize], points: &[Point], radius: f64) -> bool {
    if points.len() != seq.len() + 1 {
        return false;
    }
    let gbs = scenario.gbs();
    points[0].dist(scenario.start) <= tolerance::ENDPOINT_M
        && points[seq.len()].dist(scenario.goal) <= tolerance::ENDPOINT_M
        && seq.iter().enumerate().all(|(i, &m)| {
            tolerance::within_radius(points[i].dist(gbs[m]), radius)
                && tolerance::within_radius(points[i + 1].dist(gbs[m]), radius)
        })
}

/// Handovers at the centers of the intersected coverage boundaries: each
/// interior point sits `radius` from the outgoing GBS towards the next one.
pub fn candidate_handovers(
    scenario: &Scenario,
    seq: &AssociationSequence,
    radius: f64,
) -> Result<HandoverPoints, PlanError> {
    let gbs = scenario.gbs();
    let mut points = Vec::with_capacity(seq.len() + 1);
    points.push(scenario.start);
    for w in seq.indices().windows(2) {
        let (a, b) = (gbs[w[0]], gbs[w[1]]);
        let d = a.dist(b);
        if d == 0.0 {
            return Err(PlanError::DegenerateSequence(w[0], w[1]));
        }
        points.push(a + (b - a) * (radius / d));
    }
    points.push(scenario.goal);
    Ok(HandoverPoints { points })
}

/// Length of the path that visits every associated GBS in order; an upper
/// bound on the optimal flight distance for the sequence.
pub fn association_upper_bound(scenario: &Scenario, seq: &AssociationSequence) -> f64 {
    let gbs = scenario.gbs();
    let idx = seq.indices();
    let inner: f64 = idx.windows(2).map(|w| gbs[w[0]].dist(gbs[w[1]])).sum();
    scenario.start.dist(gbs[idx[0]]) + inner + scenario.goal.dist(gbs[idx[idx.len() - 1]])
}

/// Piecewise-linear flight at maximum speed through the handover points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub waypoints: Vec<Point>,
    pub segment_durations: Vec<f64>,
    pub total_time: f64,
    pub max_speed: f64,
}

impl Trajectory {
    /// Segment index and position at time `t` (clamped to `[0, T]`).
    pub fn locate(&self, t: f64) -> (usize, Point) {
        let mut elapsed = 0.0;
        let last = self.segment_durations.len().saturating_sub(1);
        for (i, &dur) in self.segment_durations.iter().enumerate() {
            if t <= elapsed + dur || i == last {
                let a = self.waypoints[i];
                let b = self.waypoints[i + 1];
                if dur <= 0.0 {
                    return (i, if t < elapsed { a } else { b });
                }
                let frac = ((t - elapsed) / dur).clamp(0.0, 1.0);
                return (i, a.lerp(b, frac));
            }
            elapsed += dur;
        }
        (0, self.waypoints[0])
    }

    pub fn position_at(&self, t: f64) -> Point {
        self.locate(t).1
    }

    pub fn length(&self) -> f64 {
        path_length(&self.waypoints)
    }
}

pub fn assemble_trajectory(handovers: &HandoverPoints, max_speed: f64) -> Trajectory {
    let durations: Vec<f64> = handovers
        .points
        .windows(2)
        .map(|w| w[0].dist(w[1]) / max_speed)
        .collect();
    let total_time = durations.iter().sum();
    Trajectory {
        waypoints: handovers.points.clone(),
        segment_durations: durations,
        total_time,
        max_speed,
    }
}

/// Pushes each interior handover forward along its outgoing segment until it
/// meets the coverage circle of the GBS it leaves.
///
/// For optimal solutions the crossing always exists; for arbitrary feasible
/// inputs it may not, which is reported as `NoBoundaryCrossing`.
pub fn snap_to_boundary(
    scenario: &Scenario,
    seq: &AssociationSequence,
    handovers: &HandoverPoints,
    radius: f64,
) -> Result<HandoverPoints, PlanError> {
    let gbs = scenario.gbs();
    let pts = &handovers.points;
    if pts.len() != seq.len() + 1 {
        return Err(PlanError::InvalidInput("handover count does not match sequence".into()));
    }
    let r2 = radius * radius;
    let mut out = pts.clone();
    for i in 1..seq.len() {
        let g = gbs[seq.indices()[i - 1]];
        let u = pts[i];
        let step = pts[i + 1] - u;
        let off = u - g;
        let a = step.norm_sq();
        let b = off.dot(step);
        let c = off.norm_sq() - r2;
        let eps = 1e-12 * r2.max(1.0);
        if c.abs() <= eps {
            continue;
        }
        if a == 0.0 {
            return Err(PlanError::NoBoundaryCrossing { index: i });
        }
        let disc = b * b - a * c;
        if disc < 0.0 {
            return Err(PlanError::NoBoundaryCrossing { index: i });
        }
        let q = -(b + b.signum() * disc.sqrt());
        let mut roots = [q / a, if q != 0.0 { c / q } else { q / a }];
        roots.sort_by(f64::total_cmp);
        let slack = 1e-12;
        let Some(alpha) = roots.into_iter().find(|&r| (-slack..=1.0 + slack).contains(&r)) else {
            return Err(PlanError::NoBoundaryCrossing { index: i });
        };
        out[i] = u + step * alpha.clamp(0.0, 1.0);
    }
    Ok(HandoverPoints { points: out })
}

/// Removes the loop between two visits of the same GBS at sequence positions
/// `first < second`, keeping the outer handovers.
pub fn remove_loop(seq: &[usize], points: &[Point], first: usize, second: usize) -> (Vec<usize>, Vec<Point>) {
    assert!(first < second && seq[first] == seq[second]);
    let mut s = seq[..=first].to_vec();
    s.extend_from_slice(&seq[second + 1..]);
    let mut p = points[..=first].to_vec();
    p.extend_from_slice(&points[second + 1..]);
    (s, p)
}

/// First repeated GBS as `(first, second)` sequence positions.
pub fn find_repeat(seq: &[usize]) -> Option<(usize, usize)> {
    for j in 0..seq.len() {
        for i in 0..j {
            if seq[i] == seq[j] {
                return Some((i, j));
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub time: f64,
    pub position: Point,
    pub snr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub worst: Sample,
    pub first_violation: Option<Sample>,
    pub max_observed_speed: f64,
    pub start_error: f64,
    pub end_error: f64,
    pub samples: usize,
    pub snr_ok: bool,
    pub speed_ok: bool,
    pub endpoints_ok: bool,
}

impl ValidationReport {
    pub fn passes(&self) -> bool {
        self.snr_ok && self.speed_ok && self.endpoints_ok
    }
}

/// Samples the trajectory every `sample_spacing` meters and checks the SNR
/// target, the speed limit and the endpoints.
pub fn validate_trajectory(
    scenario: &Scenario,
    trajectory: &Trajectory,
    snr_target: f64,
    sample_spacing: f64,
) -> ValidationReport {
    assert!(sample_spacing > 0.0, "sample spacing must be positive");
    let floor = snr_target * (1.0 - tolerance::SNR_REL);
    let mut worst = Sample {
        time: 0.0,
        position: trajectory.waypoints[0],
        snr: f64::INFINITY,
    };
    let mut first_violation = None;
    let mut samples = 0;
    let mut elapsed = 0.0;
    let mut max_speed = 0.0f64;
    for (i, w) in trajectory.waypoints.windows(2).enumerate() {
        let len = w[0].dist(w[1]);
        let dur = trajectory.segment_durations[i];
        if len > 0.0 {
            let speed = if dur > 0.0 { len / dur } else { f64::INFINITY };
            max_speed = max_speed.max(speed);
        }
        let steps = (len / sample_spacing).ceil().max(1.0) as usize;
        for k in 0..=steps {
            let frac = k as f64 / steps as f64;
            let position = w[0].lerp(w[1], frac);
            let snr = snr_at(scenario, position);
            samples += 1;
            let sample = Sample {
                time: elapsed + frac * dur,
                position,
                snr,
            };
            if snr < worst.snr {
                worst = sample.clone();
            }
            if snr < floor && first_violation.is_none() {
                first_violation = Some(sample);
            }
        }
        elapsed += dur;
    }
    let start_error = trajectory.waypoints[0].dist(scenario.start);
    let end_error = trajectory.waypoints[trajectory.waypoints.len() - 1].dist(scenario.goal);
    ValidationReport {
        snr_ok: first_violation.is_none(),
        speed_ok: max_speed <= scenario.max_speed * (1.0 + tolerance::SPEED_REL),
        endpoints_ok: start_error <= tolerance::ENDPOINT_M && end_error <= tolerance::ENDPOINT_M,
        worst,
        first_violation,
        max_observed_speed: max_speed,
        start_error,
        end_error,
        samples,
    }
}

pub const TRAJECTORY_CSV_HEADER: &str = "t_s,x_m,y_m,snr_db,associated_gbs";

/// Time-sampled CSV export. The associated GBS is the planned serving GBS of
/// the current segment, or the closest GBS when no sequence is given.
pub fn trajectory_csv(
    scenario: &Scenario,
    trajectory: &Trajectory,
    sequence: Option<&AssociationSequence>,
    time_step: f64,
) -> String {
    assert!(time_step > 0.0, "time step must be positive");
    let mut out = String::from(TRAJECTORY_CSV_HEADER);
    out.push('\n');
    let total = trajectory.total_time;
    let steps = (total / time_step).floor() as usize;
    let mut times: Vec<f64> = (0..=steps).map(|k| k as f64 * time_step).collect();
    if times.last().map_or(true, |&t| t < total) {
        times.push(total);
    }
    for t in times {
        let (seg, p) = trajectory.locate(t);
        let gbs = match sequence {
            Some(seq) if seq.len() == trajectory.segment_durations.len() => seq.indices()[seg],
            _ => closest_gbs(scenario, p),
        };
        writeln!(out, "{:.3},{:.3},{:.3},{:.4},{}", t, p.x, p.y, to_db(snr_at(scenario, p)), gbs).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::tests::paper_scenario;
    use crate::scenario::ConnectivityRequirement;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn seq(v: &[usize]) -> AssociationSequence {
        AssociationSequence::new_unchecked(v.to_vec())
    }

    #[test]
    fn sequence_validation() {
        assert!(AssociationSequence::new(vec![0, 2, 1], 3).is_ok());
        assert!(AssociationSequence::new(vec![0, 1, 0], 3).is_err());
        assert!(AssociationSequence::new(vec![3], 3).is_err());
        assert!(AssociationSequence::new(vec![], 3).is_err());
    }

    #[test]
    fn candidate_on_axis_and_diagonal() {
        let d = 1000.0;
        let s = paper_scenario(
            vec![Point::new(0.0, 0.0), Point::new(2.0 * d, 0.0)],
            Point::new(-100.0, 0.0),
            Point::new(2100.0, 0.0),
        );
        let h = candidate_handovers(&s, &seq(&[0, 1]), d).unwrap();
        assert_eq!(h.points[1], Point::new(d, 0.0));

        let s = s.with_gbs(vec![Point::new(0.0, 0.0), Point::new(1000.0, 1000.0)]).unwrap();
        let h = candidate_handovers(&s, &seq(&[0, 1]), d).unwrap();
        // 1000 / sqrt(2)
        assert_relative_eq!(h.points[1].x, 707.1068, epsilon = 1e-4);
        assert_relative_eq!(h.points[1].y, 707.1068, epsilon = 1e-4);

        let h = candidate_handovers(&s, &seq(&[1]), d).unwrap();
        assert_eq!(h.points, vec![s.start, s.goal]);

        let s = s.with_gbs(vec![Point::new(5.0, 5.0), Point::new(5.0, 5.0)]).unwrap();
        assert_eq!(candidate_handovers(&s, &seq(&[0, 1]), d), Err(PlanError::DegenerateSequence(0, 1)));
    }

    #[test]
    fn upper_bound_examples() {
        let s = paper_scenario(vec![Point::new(2000.0, 0.0)], Point::new(0.0, 0.0), Point::new(4000.0, 0.0));
        assert_relative_eq!(association_upper_bound(&s, &seq(&[0])), 4000.0);
        let s = s.with_gbs(vec![Point::new(0.0, 300.0), Point::new(3000.0, -400.0)]).unwrap();
        assert_relative_eq!(
            association_upper_bound(&s, &seq(&[1])),
            s.start.dist(s.gbs()[1]) + s.goal.dist(s.gbs()[1])
        );
    }

    #[test]
    fn trajectory_timing() {
        let h = HandoverPoints::new(vec![Point::new(0.0, 0.0), Point::new(3000.0, 4000.0)]);
        let t = assemble_trajectory(&h, 50.0);
        assert_relative_eq!(t.segment_durations[0], 100.0);
        assert_relative_eq!(t.total_time, 100.0);
        let mid = t.position_at(50.0);
        assert_relative_eq!(mid.x, 1500.0);
        assert_relative_eq!(mid.y, 2000.0);
    }

    #[test]
    fn zero_length_segments_allowed() {
        let p = Point::new(1.0, 1.0);
        let h = HandoverPoints::new(vec![Point::new(0.0, 0.0), p, p, Point::new(2.0, 1.0)]);
        let t = assemble_trajectory(&h, 10.0);
        assert_eq!(t.segment_durations[1], 0.0);
        assert_eq!(t.position_at(t.total_time), Point::new(2.0, 1.0));
    }

    #[test]
    fn path_length_examples() {
        assert_eq!(path_length(&[Point::new(0.0, 0.0), Point::new(3.0, 4.0), Point::new(6.0, 8.0)]), 10.0);
        assert_eq!(path_length(&[Point::new(1.0, 1.0), Point::new(4.0, 5.0)]), 5.0);
    }

    #[test]
    fn total_time_matches_sampled_speed_integral() {
        let pts = vec![
            Point::new(0.0, 0.0),
            Point::new(1200.0, 300.0),
            Point::new(1500.0, 2400.0),
            Point::new(-200.0, 2500.0),
        ];
        let t = assemble_trajectory(&HandoverPoints::new(pts.clone()), 50.0);
        // integrate |du/dt| numerically with a fine time grid
        let n = 200_000;
        let dt = t.total_time / n as f64;
        let mut dist = 0.0;
        let mut prev = t.position_at(0.0);
        for k in 1..=n {
            let p = t.position_at(k as f64 * dt);
            dist += p.dist(prev);
            prev = p;
        }
        // the time grid cuts the corners slightly
        assert_relative_eq!(dist, path_length(&pts), max_relative = 1e-6);
        assert_relative_eq!(t.total_time * 50.0, path_length(&pts), max_relative = 1e-12);
    }

    #[test]
    fn snap_examples() {
        let r = 1000.0;
        let s = paper_scenario(
            vec![Point::new(0.0, 0.0), Point::new(1500.0, 0.0)],
            Point::new(-800.0, 0.0),
            Point::new(2300.0, 0.0),
        );
        // already on the boundary
        let on = HandoverPoints::new(vec![s.start, Point::new(0.0, 1000.0), s.goal]);
        let out = snap_to_boundary(&s, &seq(&[0, 1]), &on, r).unwrap();
        assert_eq!(out, on);
        // interior handover, next point outside the first disk
        let inner = HandoverPoints::new(vec![s.start, Point::new(700.0, 100.0), s.goal]);
        let out = snap_to_boundary(&s, &seq(&[0, 1]), &inner, r).unwrap();
        assert_relative_eq!(out.points[1].dist(s.gbs()[0]), r, max_relative = 1e-12);
        assert!(handovers_feasible(&s, &[0, 1], &out.points, r));
        assert!(out.length() <= inner.length() + 1e-6);
        // next point still inside the first disk: no crossing
        let s2 = s.with_endpoints(s.start, Point::new(900.0, 0.0)).unwrap();
        let stuck = HandoverPoints::new(vec![s2.start, Point::new(600.0, 0.0), s2.goal]);
        assert_eq!(
            snap_to_boundary(&s2, &seq(&[0, 1]), &stuck, r),
            Err(PlanError::NoBoundaryCrossing { index: 1 })
        );
    }

    #[test]
    fn validation_pass_and_fail() {
        let g: Vec<Point> = (0..5).map(|i| Point::new(1000.0 * i as f64, 0.0)).collect();
        let s = paper_scenario(g, Point::new(0.0, 0.0), Point::new(4000.0, 0.0));
        let req = ConnectivityRequirement::from_radius(&s, 600.0);
        let t = assemble_trajectory(&HandoverPoints::new(vec![s.start, s.goal]), s.max_speed);
        let rep = validate_trajectory(&s, &t, req.snr_target, 1.0);
        assert!(rep.passes(), "{rep:?}");

        let gap = s.with_gbs(vec![Point::new(0.0, 0.0), Point::new(4000.0, 0.0)]).unwrap();
        let rep = validate_trajectory(&gap, &t, req.snr_target, 1.0);
        assert!(!rep.passes());
        let v = rep.first_violation.unwrap();
        assert!(v.position.x > 600.0 && v.position.x < 3400.0);
        assert_relative_eq!(rep.worst.position.x, 2000.0, epsilon = 1.0);
    }

    #[test]
    fn validation_flags_speed_and_endpoints() {
        let s = paper_scenario(vec![Point::new(0.0, 0.0)], Point::new(0.0, 0.0), Point::new(100.0, 0.0));
        let mut t = assemble_trajectory(&HandoverPoints::new(vec![s.start, s.goal]), s.max_speed);
        t.segment_durations[0] *= 0.5;
        let rep = validate_trajectory(&s, &t, 1.0, 1.0);
        assert!(!rep.speed_ok);
        let t = assemble_trajectory(&HandoverPoints::new(vec![s.start, Point::new(99.0, 0.0)]), s.max_speed);
        assert!(!validate_trajectory(&s, &t, 1.0, 1.0).endpoints_ok);
    }

    #[test]
    fn csv_export() {
        let s = paper_scenario(
            vec![Point::new(0.0, 0.0), Point::new(1000.0, 0.0)],
            Point::new(0.0, 0.0),
            Point::new(1000.0, 0.0),
        );
        let h = HandoverPoints::new(vec![s.start, Point::new(500.0, 0.0), s.goal]);
        let t = assemble_trajectory(&h, 50.0);
        let csv = trajectory_csv(&s, &t, Some(&seq(&[0, 1])), 4.0);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], TRAJECTORY_CSV_HEADER);
        assert_eq!(lines.len(), 1 + 6);
        assert!(lines[1].starts_with("0.000,0.000,0.000,"));
        assert!(lines[1].ends_with(",0"));
        assert!(lines.last().unwrap().starts_with("20.000,1000.000,0.000"));
        assert!(lines.last().unwrap().ends_with(",1"));
    }

    #[test]
    fn loop_removal_example() {
        let seq = [0, 1, 2, 1, 3];
        let pts: Vec<Point> = (0..6).map(|i| Point::new(i as f64, (i % 2) as f64)).collect();
        assert_eq!(find_repeat(&seq), Some((1, 3)));
        let (s, p) = remove_loop(&seq, &pts, 1, 3);
        assert_eq!(s, vec![0, 1, 3]);
        assert_eq!(p, vec![pts[0], pts[1], pts[4], pts[5]]);
        assert!(path_length(&p) <= path_length(&pts));
    }

    proptest! {
        #[test]
        fn path_length_at_least_straight_line(pts in prop::collection::vec((-1e4..1e4f64, -1e4..1e4f64), 2..10)) {
            let pts: Vec<Point> = pts.into_iter().map(|(x, y)| Point::new(x, y)).collect();
            let direct = pts[0].dist(pts[pts.len() - 1]);
            prop_assert!(path_length(&pts) >= direct - 1e-9);
        }

        #[test]
        fn position_query_is_continuous(pts in prop::collection::vec((-1e4..1e4f64, -1e4..1e4f64), 2..8), frac in 0.0..1.0f64) {
            let pts: Vec<Point> = pts.into_iter().map(|(x, y)| Point::new(x, y)).collect();
            let t = assemble_trajectory(&HandoverPoints::new(pts), 50.0);
            let tq = frac * t.total_time;
            let a = t.position_at(tq);
            let b = t.position_at(tq + 1e-3);
            prop_assert!(a.dist(b) <= 50.0 * 1e-3 + 1e-6);
        }
    }
}
