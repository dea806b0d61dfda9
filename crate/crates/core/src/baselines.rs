//! Reference planners: the straight-flight baseline and an exhaustive search
//! over association sequences that serves as ground truth on small instances.

use serde::{Deserialize, Serialize};

use crate::conn_graph::{build_feasibility_graph, VertexId};
use crate::error::PlanError;
use crate::method1::Plan;
use crate::refine::refine_handovers;
use crate::scenario::{coverage_radius, Point, Scenario};
use crate::trajectory::{AssociationSequence, HandoverPoints};

/// One piece of the lower envelope of squared GBS distances along the
/// straight segment `u0 + alpha (uF - u0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeInterval {
    pub alpha_start: f64,
    pub alpha_end: f64,
    pub gbs: usize,
    /// Squared distance on the piece is `a alpha^2 + b alpha + c`.
    pub coeffs: [f64; 3],
}

/// Closest-GBS structure along the straight flight; the intervals partition
/// `[0, 1]` in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeBreakpoints {
    pub intervals: Vec<EnvelopeInterval>,
}

impl EnvelopeBreakpoints {
    /// Every squared-distance quadratic shares the leading coefficient
    /// `|uF - u0|^2`, so pairwise crossovers are linear in `alpha` and the
    /// envelope reduces to a lower envelope of lines.
    pub fn compute(scenario: &Scenario) -> Self {
        let gbs = scenario.gbs();
        let dir = scenario.goal - scenario.start;
        let a = dir.norm_sq();
        let mut lines: Vec<(f64, f64, usize)> = gbs
            .iter()
            .enumerate()
            .map(|(m, g)| {
                let off = scenario.start - *g;
                (2.0 * off.dot(dir), off.norm_sq(), m)
            })
            .collect();
        // decreasing slope; for equal slopes the lowest intercept, then index
        lines.sort_by(|l, r| r.0.total_cmp(&l.0).then(l.1.total_cmp(&r.1)).then(l.2.cmp(&r.2)));
        lines.dedup_by(|later, kept| later.0 == kept.0);
        let cross = |l: (f64, f64, usize), r: (f64, f64, usize)| (r.1 - l.1) / (l.0 - r.0);
        let mut hull: Vec<(f64, f64, usize)> = Vec::new();
        for line in lines {
            while hull.len() >= 2 {
                let top = hull[hull.len() - 1];
                let below = hull[hull.len() - 2];
                if cross(below, line) <= cross(below, top) {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(line);
        }
        let mut intervals = Vec::new();
        for (k, line) in hull.iter().enumerate() {
            let lo = if k == 0 { f64::NEG_INFINITY } else { cross(hull[k - 1], *line) };
            let hi = if k + 1 == hull.len() { f64::INFINITY } else { cross(*line, hull[k + 1]) };
            let (lo, hi) = (lo.max(0.0), hi.min(1.0));
            if lo < hi || (hull.len() == 1) {
                intervals.push(EnvelopeInterval {
                    alpha_start: lo,
                    alpha_end: hi,
                    gbs: line.2,
                    coeffs: [a, line.0, line.1],
                });
            }
        }
        if intervals.is_empty() {
            // zero-length flight: everything happens at alpha = 0
            let line = hull.iter().min_by(|l, r| l.1.total_cmp(&r.1)).expect("at least one GBS");
            intervals.push(EnvelopeInterval {
                alpha_start: 0.0,
                alpha_end: 1.0,
                gbs: line.2,
                coeffs: [a, line.0, line.1],
            });
        }
        EnvelopeBreakpoints { intervals }
    }

    /// Largest closest-GBS squared distance along the segment, attained at
    /// an interval boundary because each piece is convex in `alpha`.
    pub fn max_min_dist_sq(&self, scenario: &Scenario) -> f64 {
        self.candidate_alphas()
            .into_iter()
            .map(|alpha| min_dist_sq(scenario, alpha))
            .fold(0.0, f64::max)
    }

    fn candidate_alphas(&self) -> Vec<f64> {
        let mut out = vec![0.0, 1.0];
        out.extend(self.intervals.iter().flat_map(|i| [i.alpha_start, i.alpha_end]));
        out
    }
}

fn min_dist_sq(scenario: &Scenario, alpha: f64) -> f64 {
    let p = scenario.start.lerp(scenario.goal, alpha);
    scenario
        .gbs()
        .iter()
        .map(|g| p.dist_sq(*g))
        .fold(f64::INFINITY, f64::min)
}

/// Largest SNR target the straight flight at full speed can sustain.
pub fn straight_flight_max_snr(scenario: &Scenario) -> f64 {
    let env = EnvelopeBreakpoints::compute(scenario);
    scenario.ref_snr / (env.max_min_dist_sq(scenario) + scenario.height_gap_sq())
}

/// Straight flight from start to goal, associated with the closest GBS and
/// handing over where the closest GBS changes.
pub fn straight_flight_plan(scenario: &Scenario, snr_target: f64) -> Result<Plan, PlanError> {
    coverage_radius(scenario, snr_target)?;
    let limit = straight_flight_max_snr(scenario);
    if snr_target > limit * (1.0 + 1e-12) {
        return Err(PlanError::Infeasible);
    }
    let env = EnvelopeBreakpoints::compute(scenario);
    let mut seq: Vec<usize> = Vec::new();
    let mut points = vec![scenario.start];
    for iv in &env.intervals {
        if let Some(&prev) = seq.last() {
            if prev == iv.gbs {
                continue;
            }
            points.push(scenario.start.lerp(scenario.goal, iv.alpha_start));
        }
        seq.push(iv.gbs);
    }
    points.push(scenario.goal);
    Ok(Plan::new(
        scenario,
        AssociationSequence::new_unchecked(seq),
        HandoverPoints::new(points),
        "sf",
        snr_target,
    ))
}

/// Optimal plan by refining every simple start-to-goal path of the
/// feasibility graph and keeping the shortest (ties by lexicographic
/// sequence). More than `path_budget` complete paths ends the search with
/// `BudgetExhausted`, carrying the best plan seen so far.
pub fn exhaustive_plan(scenario: &Scenario, snr_target: f64, path_budget: usize) -> Result<Plan, PlanError> {
    exhaustive_plan_with_tolerance(scenario, snr_target, path_budget, crate::tolerance::ORACLE_REFINE_M)
}

pub fn exhaustive_plan_with_tolerance(
    scenario: &Scenario,
    snr_target: f64,
    path_budget: usize,
    refine_tolerance: f64,
) -> Result<Plan, PlanError> {
    if path_budget == 0 {
        return Err(PlanError::InvalidInput("path budget must be positive".into()));
    }
    let req = coverage_radius(scenario, snr_target)?;
    let graph = build_feasibility_graph(scenario, &req);
    let mut best: Option<(f64, Vec<usize>, HandoverPoints)> = None;
    let mut count = 0usize;
    let mut stack: Vec<usize> = Vec::new();
    let mut on_path = vec![false; scenario.num_gbs()];

    struct Search<'a> {
        scenario: &'a Scenario,
        graph: &'a crate::conn_graph::FeasibilityGraph,
        radius: f64,
        tolerance: f64,
        budget: usize,
    }

    fn visit(
        ctx: &Search,
        from: VertexId,
        stack: &mut Vec<usize>,
        on_path: &mut [bool],
        count: &mut usize,
        best: &mut Option<(f64, Vec<usize>, HandoverPoints)>,
    ) -> Result<bool, PlanError> {
        for (next, _) in ctx.graph.neighbors(from) {
            match next {
                VertexId::End => {
                    if stack.is_empty() {
                        continue;
                    }
                    *count += 1;
                    if *count > ctx.budget {
                        return Ok(false);
                    }
                    let seq = AssociationSequence::new_unchecked(stack.clone());
                    let h = refine_handovers(ctx.scenario, &seq, ctx.radius, ctx.tolerance)?;
                    let len = h.length();
                    let better = match best {
                        None => true,
                        Some((bl, bs, _)) => len < *bl || (len == *bl && stack.as_slice() < bs.as_slice()),
                    };
                    if better {
                        *best = Some((len, stack.clone(), h));
                    }
                }
                VertexId::Gbs(m) if !on_path[m] => {
                    on_path[m] = true;
                    stack.push(m);
                    let keep_going = visit(ctx, next, stack, on_path, count, best)?;
                    stack.pop();
                    on_path[m] = false;
                    if !keep_going {
                        return Ok(false);
                    }
                }
                _ => {}
            }
        }
        Ok(true)
    }

    let ctx = Search {
        scenario,
        graph: &graph,
        radius: req.radius,
        tolerance: refine_tolerance,
        budget: path_budget,
    };
    let completed = visit(&ctx, VertexId::Start, &mut stack, &mut on_path, &mut count, &mut best)?;
    let to_plan = |(_, seq, h): (f64, Vec<usize>, HandoverPoints)| {
        Plan::new(scenario, AssociationSequence::new_unchecked(seq), h, "exhaustive", snr_target)
    };
    if !completed {
        return Err(PlanError::BudgetExhausted {
            budget: path_budget,
            best: best.map(|b| Box::new(to_plan(b))),
        });
    }
    best.map(to_plan).ok_or(PlanError::Infeasible)
}

/// Straight-line point at parameter `alpha`; exposed for sampling oracles.
pub fn straight_point(scenario: &Scenario, alpha: f64) -> Point {
    scenario.start.lerp(scenario.goal, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::method1::plan_method1;
    use crate::scenario::tests::paper_scenario;
    use crate::scenario::{snr_at, to_db, ConnectivityRequirement};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_gbs_at_midpoint() {
        let s = paper_scenario(vec![Point::new(3000.0, 0.0)], Point::new(0.0, 0.0), Point::new(6000.0, 0.0));
        let expected = s.ref_snr / (3000.0f64.powi(2) + s.height_gap_sq());
        assert_relative_eq!(straight_flight_max_snr(&s), expected, max_relative = 1e-12);
    }

    #[test]
    fn gbs_at_both_ends_worst_in_middle() {
        let s = paper_scenario(
            vec![Point::new(0.0, 0.0), Point::new(8000.0, 0.0)],
            Point::new(0.0, 0.0),
            Point::new(8000.0, 0.0),
        );
        let expected = s.ref_snr / (4000.0f64.powi(2) + s.height_gap_sq());
        assert_relative_eq!(straight_flight_max_snr(&s), expected, max_relative = 1e-12);
        let env = EnvelopeBreakpoints::compute(&s);
        assert_eq!(env.intervals.len(), 2);
        assert_relative_eq!(env.intervals[0].alpha_end, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn envelope_matches_dense_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let m = rng.gen_range(1..12);
            let g = (0..m)
                .map(|_| Point::new(rng.gen_range(0.0..10_000.0), rng.gen_range(0.0..10_000.0)))
                .collect();
            let s = paper_scenario(g, Point::new(2000.0, 2000.0), Point::new(8000.0, 8000.0));
            let exact = straight_flight_max_snr(&s);
            let sampled = (0..=100_000)
                .map(|k| snr_at(&s, straight_point(&s, k as f64 * 1e-5)))
                .fold(f64::INFINITY, f64::min);
            assert!((to_db(exact) - to_db(sampled)).abs() < 1e-3);
            assert!(exact <= sampled * (1.0 + 1e-12));
            let env = EnvelopeBreakpoints::compute(&s);
            assert_eq!(env.intervals[0].alpha_start, 0.0);
            assert_eq!(env.intervals.last().unwrap().alpha_end, 1.0);
            for w in env.intervals.windows(2) {
                assert_eq!(w[0].alpha_end, w[1].alpha_start);
            }
            for iv in &env.intervals {
                let mid = 0.5 * (iv.alpha_start + iv.alpha_end);
                let p = straight_point(&s, mid);
                let own = p.dist_sq(s.gbs()[iv.gbs]);
                assert!(own <= min_dist_sq(&s, mid) * (1.0 + 1e-9) + 1e-6);
            }
        }
    }

    #[test]
    fn sf_plan_feasibility_edge() {
        let s = paper_scenario(
            vec![Point::new(0.0, 0.0), Point::new(8000.0, 0.0)],
            Point::new(0.0, 0.0),
            Point::new(8000.0, 0.0),
        );
        let limit = straight_flight_max_snr(&s);
        let plan = straight_flight_plan(&s, limit).unwrap();
        assert_eq!(plan.sequence.indices(), &[0, 1]);
        assert_relative_eq!(plan.handovers.points[1].x, 4000.0, epsilon = 1e-9);
        assert_eq!(straight_flight_plan(&s, limit * 1.001), Err(PlanError::Infeasible));
    }

    #[test]
    fn exhaustive_single_gbs_is_straight() {
        let s = paper_scenario(vec![Point::new(0.0, 0.0)], Point::new(-500.0, 0.0), Point::new(600.0, 0.0));
        let plan = exhaustive_plan(&s, s.snr_at_distance(1000.0), 10).unwrap();
        assert_eq!(plan.sequence.indices(), &[0]);
        assert_relative_eq!(plan.length(), 1100.0, epsilon = 1e-9);
    }

    #[test]
    fn exhaustive_dominates_method1_and_reports_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut checked = 0;
        while checked < 20 {
            let g: Vec<Point> = (0..6)
                .map(|_| Point::new(rng.gen_range(0.0..5000.0), rng.gen_range(0.0..5000.0)))
                .collect();
            let s = paper_scenario(g, Point::new(500.0, 500.0), Point::new(4500.0, 4500.0));
            let req = ConnectivityRequirement::from_radius(&s, 1600.0);
            let Ok(m1) = plan_method1(&s, req.snr_target) else { continue };
            let ex = exhaustive_plan(&s, req.snr_target, 1_000_000).unwrap();
            assert!(ex.length() <= m1.length() + 1e-6);
            if let Err(PlanError::BudgetExhausted { best, budget }) = exhaustive_plan(&s, req.snr_target, 1) {
                assert_eq!(budget, 1);
                assert!(best.is_some());
            }
            checked += 1;
        }
    }
}
