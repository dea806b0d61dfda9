//! Optimal handover locations for a fixed association sequence.
//!
//! Minimizes `sum |u^i - u^{i-1}|` with every interior handover constrained
//! to the lens of the two GBSs it joins. The problem is a second-order cone
//! program; it is solved here with a log-barrier path-following method in
//! which the epigraph variable of each segment norm is minimized out in
//! closed form, leaving a smooth barrier problem in the handover
//! coordinates only. At each centered point the cone objective `sum t_i`
//! upper-bounds the path length and exceeds the optimum by at most `nu / tau`.

use nalgebra::{DMatrix, DVector};

use crate::conn_graph::sequence_is_feasible;
use crate::error::PlanError;
use crate::geometry::Lens;
use crate::scenario::{Point, Scenario};
use crate::tolerance;
use crate::trajectory::{candidate_handovers, AssociationSequence, HandoverPoints};

/// Result of a refinement run.
#[derive(Debug, Clone, PartialEq)]
pub struct RefineOutcome {
    pub handovers: HandoverPoints,
    /// Cone objective (meters) at every centered iterate.
    pub objective_trace: Vec<f64>,
    /// Certified bound on the distance to the optimum, in meters.
    pub gap_bound: f64,
    pub newton_steps: usize,
}

const MAX_CENTERING_STEPS: usize = 200;
const CENTERING_TOLERANCE: f64 = 1e-10;

struct Problem {
    /// Scaled anchors `u^0 .. u^N`; `None` marks a free handover.
    anchors: Vec<Option<Point>>,
    /// Slot of each anchor in the variable vector.
    slot: Vec<Option<usize>>,
    /// Disk centers constraining each free slot.
    disks: Vec<[Point; 2]>,
    radius: f64,
}

impl Problem {
    fn num_free(&self) -> usize {
        self.disks.len()
    }

    fn point(&self, x: &DVector<f64>, i: usize) -> Point {
        match self.slot[i] {
            Some(j) => Point::new(x[2 * j], x[2 * j + 1]),
            None => self.anchors[i].expect("fixed anchor"),
        }
    }

    fn slack(&self, p: Point, g: Point) -> f64 {
        let d = p.dist(g);
        (self.radius - d) * (self.radius + d)
    }

    fn strictly_feasible(&self, x: &DVector<f64>) -> bool {
        self.disks.iter().enumerate().all(|(j, pair)| {
            let p = Point::new(x[2 * j], x[2 * j + 1]);
            pair.iter().all(|&g| self.slack(p, g) > 0.0)
        })
    }

    fn barrier_parameter(&self) -> f64 {
        2.0 * (self.anchors.len() - 1) as f64 + 2.0 * self.num_free() as f64
    }

    /// Cone objective `sum t_i` at the minimizing epigraph values.
    fn cone_objective(&self, x: &DVector<f64>, tau: f64) -> f64 {
        (1..self.anchors.len())
            .map(|i| {
                let n = self.point(x, i).dist(self.point(x, i - 1));
                (1.0 + (1.0 + tau * tau * n * n).sqrt()) / tau
            })
            .sum()
    }

    fn gradient_hessian(&self, x: &DVector<f64>, tau: f64) -> (DVector<f64>, DMatrix<f64>) {
        let dim = 2 * self.num_free();
        let mut grad = DVector::zeros(dim);
        let mut hess = DMatrix::zeros(dim, dim);
        let tau2 = tau * tau;
        for i in 1..self.anchors.len() {
            let d = self.point(x, i) - self.point(x, i - 1);
            let r = (1.0 + tau2 * d.norm_sq()).sqrt();
            let kappa = tau2 / (1.0 + r);
            let beta = kappa * kappa / r;
            let g = [kappa * d.x, kappa * d.y];
            let h = [
                [kappa - beta * d.x * d.x, -beta * d.x * d.y],
                [-beta * d.x * d.y, kappa - beta * d.y * d.y],
            ];
            let ends = [(self.slot[i], 1.0), (self.slot[i - 1], -1.0)];
            for &(sa, sign_a) in &ends {
                let Some(a) = sa else { continue };
                for k in 0..2 {
                    grad[2 * a + k] += sign_a * g[k];
                }
                for &(sb, sign_b) in &ends {
                    let Some(b) = sb else { continue };
                    for k in 0..2 {
                        for l in 0..2 {
                            hess[(2 * a + k, 2 * b + l)] += sign_a * sign_b * h[k][l];
                        }
                    }
                }
            }
        }
        for (j, pair) in self.disks.iter().enumerate() {
            let p = Point::new(x[2 * j], x[2 * j + 1]);
            for &g in pair {
                let e = p - g;
                let s = self.slack(p, g);
                let e = [e.x, e.y];
                for k in 0..2 {
                    grad[2 * j + k] += 2.0 * e[k] / s;
                    for l in 0..2 {
                        let diag = if k == l { 2.0 / s } else { 0.0 };
                        hess[(2 * j + k, 2 * j + l)] += diag + 4.0 * e[k] * e[l] / (s * s);
                    }
                }
            }
        }
        (grad, hess)
    }
}

fn newton_direction(grad: &DVector<f64>, hess: DMatrix<f64>) -> Option<DVector<f64>> {
    let rhs = -grad;
    if let Some(ch) = hess.clone().cholesky() {
        return Some(ch.solve(&rhs));
    }
    let scale = hess.diagonal().amax().max(1.0);
    let mut reg = hess.clone();
    for k in 0..reg.nrows() {
        reg[(k, k)] += 1e-12 * scale;
    }
    if let Some(ch) = reg.cholesky() {
        return Some(ch.solve(&rhs));
    }
    hess.lu().solve(&rhs)
}

/// Optimal handovers for `seq` at coverage radius `radius`, within
/// `tolerance` meters of the optimal path length.
pub fn refine_handovers(
    scenario: &Scenario,
    seq: &AssociationSequence,
    radius: f64,
    tolerance: f64,
) -> Result<HandoverPoints, PlanError> {
    refine_handovers_detailed(scenario, seq, radius, tolerance).map(|o| o.handovers)
}

pub fn refine_handovers_detailed(
    scenario: &Scenario,
    seq: &AssociationSequence,
    radius: f64,
    tolerance: f64,
) -> Result<RefineOutcome, PlanError> {
    if !(tolerance > 0.0) {
        return Err(PlanError::InvalidInput(format!("tolerance must be positive, got {tolerance}")));
    }
    let gbs = scenario.gbs();
    let idx = seq.indices();
    let slack_radius = radius + tolerance::DISTANCE_ABS_M;
    if !sequence_is_feasible(scenario, idx, slack_radius) {
        return Err(PlanError::Infeasible);
    }
    let n_seg = idx.len();
    if n_seg == 1 {
        let h = HandoverPoints::new(vec![scenario.start, scenario.goal]);
        let len = h.length();
        return Ok(RefineOutcome {
            handovers: h,
            objective_trace: vec![len],
            gap_bound: 0.0,
            newton_steps: 0,
        });
    }

    let origin = scenario.start;
    let scale = if radius > 0.0 { radius } else { 1.0 };
    let to_local = |p: Point| (p - origin) * (1.0 / scale);
    let to_world = |p: Point| origin + p * scale;
    let unit = radius / scale;

    let mut anchors = vec![Some(to_local(scenario.start))];
    let mut slot = vec![None];
    let mut disks = Vec::new();
    let mut start_x = Vec::new();
    for w in idx.windows(2) {
        let (a, b) = (to_local(gbs[w[0]]), to_local(gbs[w[1]]));
        let lens = Lens::new(a, b, unit);
        if lens.half_width() <= 1e-9 * unit.max(1e-12) {
            // tangent disks: the lens is a single point
            anchors.push(Some(lens.center()));
            slot.push(None);
        } else {
            anchors.push(None);
            slot.push(Some(disks.len()));
            disks.push([a, b]);
            start_x.extend([lens.center().x, lens.center().y]);
        }
    }
    anchors.push(Some(to_local(scenario.goal)));
    slot.push(None);

    let problem = Problem {
        anchors,
        slot,
        disks,
        radius: unit,
    };
    let mut x = DVector::from_vec(start_x);
    let nu = problem.barrier_parameter();
    let target_gap = tolerance / scale;

    let initial_len: f64 = (1..problem.anchors.len())
        .map(|i| problem.point(&x, i).dist(problem.point(&x, i - 1)))
        .sum();
    let mut tau = nu / initial_len.max(1e-3);
    let mu = 8.0;
    let mut steps = 0usize;
    let mut trace = Vec::new();
    let mut stalled = false;

    if problem.num_free() > 0 {
        loop {
            // Centering by damped Newton. The barrier is self-concordant, so
            // the step 1 / (1 + lambda) decreases it without evaluating it;
            // function values are useless for line searches once tau is large.
            let mut inner = 0usize;
            loop {
                if steps >= tolerance::REFINE_MAX_ITERATIONS || inner >= MAX_CENTERING_STEPS {
                    break;
                }
                steps += 1;
                inner += 1;
                let (grad, hess) = problem.gradient_hessian(&x, tau);
                let Some(dx) = newton_direction(&grad, hess) else {
                    stalled = true;
                    break;
                };
                let decrement = -grad.dot(&dx);
                if !decrement.is_finite() {
                    stalled = true;
                    break;
                }
                if decrement / 2.0 <= CENTERING_TOLERANCE {
                    break;
                }
                let lambda = decrement.sqrt();
                let mut s = if lambda > 0.25 { 1.0 / (1.0 + lambda) } else { 1.0 };
                while s > 1e-16 && !problem.strictly_feasible(&(&x + &dx * s)) {
                    s *= 0.5;
                }
                if s <= 1e-16 {
                    stalled = true;
                    break;
                }
                x += &dx * s;
            }
            trace.push(problem.cone_objective(&x, tau) * scale);
            if steps >= tolerance::REFINE_MAX_ITERATIONS || stalled || nu / tau <= target_gap {
                break;
            }
            tau *= mu;
        }
    }

    let gap_bound = nu / tau * scale;
    let mut points: Vec<Point> = (0..problem.anchors.len()).map(|i| to_world(problem.point(&x, i))).collect();
    points[0] = scenario.start;
    let last = points.len() - 1;
    points[last] = scenario.goal;
    for i in 1..last {
        let lens = Lens::new(gbs[idx[i - 1]], gbs[idx[i]], radius);
        if !lens.contains(points[i], 0.0) {
            points[i] = lens.project(points[i]);
        }
    }
    let mut handovers = HandoverPoints::new(points);
    if let Ok(candidate) = candidate_handovers(scenario, seq, radius) {
        if candidate.length() < handovers.length() {
            handovers = candidate;
        }
    }

    if steps >= tolerance::REFINE_MAX_ITERATIONS || (stalled && gap_bound > tolerance) {
        return Err(PlanError::NonConvergence {
            iterations: steps,
            gap: gap_bound,
            best: handovers,
        });
    }
    Ok(RefineOutcome {
        handovers,
        objective_trace: trace,
        gap_bound,
        newton_steps: steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::tests::paper_scenario;
    use crate::trajectory::handovers_feasible;
    use approx::assert_relative_eq;

    fn seq(v: &[usize]) -> AssociationSequence {
        AssociationSequence::new_unchecked(v.to_vec())
    }

    #[test]
    fn straight_corridor_gives_straight_line() {
        let g: Vec<Point> = (0..5).map(|i| Point::new(1500.0 * i as f64, 200.0)).collect();
        let s = paper_scenario(g, Point::new(-300.0, 0.0), Point::new(6300.0, 0.0));
        let out = refine_handovers_detailed(&s, &seq(&[0, 1, 2, 3, 4]), 1000.0, 1e-6).unwrap();
        assert_relative_eq!(out.handovers.length(), s.start.dist(s.goal), epsilon = 1e-6);
        assert!(handovers_feasible(&s, &[0, 1, 2, 3, 4], &out.handovers.points, 1000.0));
    }

    /// Shortest start -> u -> goal length with `u` on the lens boundary,
    /// by dense sampling of both arcs plus the two corners.
    fn lens_detour_oracle(s: &Scenario, lens: &Lens) -> f64 {
        let (c1, c2) = lens.corners().unwrap();
        let mut best = [c1, c2].iter().map(|&c| s.start.dist(c) + c.dist(s.goal)).fold(f64::INFINITY, f64::min);
        for (own, other) in [(lens.a, lens.b), (lens.b, lens.a)] {
            let n = 400_000;
            for k in 0..n {
                let ang = k as f64 / n as f64 * std::f64::consts::TAU;
                let u = own.center + Point::new(ang.cos(), ang.sin()) * own.radius;
                if other.contains(u, 1e-9) {
                    best = best.min(s.start.dist(u) + u.dist(s.goal));
                }
            }
        }
        best
    }

    #[test]
    fn bend_through_thin_lens() {
        // the straight line misses the lens, so the handover is on its boundary
        let r = 1000.0;
        let s = paper_scenario(
            vec![Point::new(0.0, -900.0), Point::new(0.0, 900.0)],
            Point::new(-800.0, -1200.0),
            Point::new(-300.0, 1800.0),
        );
        let out = refine_handovers_detailed(&s, &seq(&[0, 1]), r, 1e-7).unwrap();
        let expected = lens_detour_oracle(&s, &Lens::new(s.gbs()[0], s.gbs()[1], r));
        assert!(out.handovers.length() <= expected + 1e-6);
        assert!(out.handovers.length() >= expected - 1e-4);
        assert!(out.gap_bound <= 1e-7);
    }

    #[test]
    fn straight_line_through_lens_is_kept() {
        let s = paper_scenario(
            vec![Point::new(0.0, -900.0), Point::new(0.0, 900.0)],
            Point::new(-800.0, -1200.0),
            Point::new(800.0, 1300.0),
        );
        let h = refine_handovers(&s, &seq(&[0, 1]), 1000.0, 1e-7).unwrap();
        assert_relative_eq!(h.length(), s.start.dist(s.goal), epsilon = 1e-7);
    }

    #[test]
    fn objective_trace_non_increasing() {
        let g = vec![
            Point::new(0.0, 0.0),
            Point::new(1500.0, 800.0),
            Point::new(2500.0, -500.0),
            Point::new(4000.0, 300.0),
        ];
        let s = paper_scenario(g, Point::new(-500.0, 500.0), Point::new(4600.0, -200.0));
        let out = refine_handovers_detailed(&s, &seq(&[0, 1, 2, 3]), 1000.0, 1e-6).unwrap();
        assert!(out.objective_trace.len() > 3);
        for w in out.objective_trace.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", out.objective_trace);
        }
        let last = *out.objective_trace.last().unwrap();
        assert!(out.handovers.length() <= last + 1e-9);
    }

    #[test]
    fn refined_never_worse_than_candidate() {
        let g = vec![Point::new(0.0, 0.0), Point::new(1800.0, 300.0), Point::new(3000.0, 1500.0)];
        let s = paper_scenario(g, Point::new(-900.0, 100.0), Point::new(3500.0, 2200.0));
        let sq = seq(&[0, 1, 2]);
        let refined = refine_handovers(&s, &sq, 1000.0, 1e-3).unwrap();
        let cand = candidate_handovers(&s, &sq, 1000.0).unwrap();
        assert!(refined.length() <= cand.length());
    }

    #[test]
    fn tangent_lens_is_pinned() {
        let s = paper_scenario(
            vec![Point::new(0.0, 0.0), Point::new(2000.0, 0.0)],
            Point::new(0.0, 500.0),
            Point::new(2000.0, -500.0),
        );
        let h = refine_handovers(&s, &seq(&[0, 1]), 1000.0, 1e-6).unwrap();
        assert!(h.points[1].dist(Point::new(1000.0, 0.0)) < 1e-9);
    }

    #[test]
    fn single_gbs_is_direct() {
        let s = paper_scenario(vec![Point::new(0.0, 0.0)], Point::new(-500.0, 0.0), Point::new(0.0, 500.0));
        let h = refine_handovers(&s, &seq(&[0]), 1000.0, 1e-6).unwrap();
        assert_eq!(h.points, vec![s.start, s.goal]);
    }

    #[test]
    fn infeasible_sequence_rejected() {
        let s = paper_scenario(
            vec![Point::new(0.0, 0.0), Point::new(5000.0, 0.0)],
            Point::new(0.0, 0.0),
            Point::new(5000.0, 0.0),
        );
        assert_eq!(refine_handovers(&s, &seq(&[0, 1]), 1000.0, 1e-3), Err(PlanError::Infeasible));
    }
}
