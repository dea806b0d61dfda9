//! Quantized-boundary planning: handovers restricted to evenly spaced points
//! on the arcs where coverage circles cross into neighboring disks, with the
//! association sequence and handover choice solved jointly as a shortest path.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::PlanError;
use crate::method1::Plan;
use crate::scenario::{coverage_radius, ConnectivityRequirement, Point, Scenario};
use crate::trajectory::{AssociationSequence, HandoverPoints};

/// `Q` points on the arc of circle `g_m` (radius `radius`) that lies inside
/// the disk of `g_n`, ordered by increasing angle (index 0 at `phi - theta/2`).
pub fn quantize_boundary(g_m: Point, g_n: Point, radius: f64, quant_levels: usize) -> Result<Vec<Point>, PlanError> {
    if quant_levels < 2 {
        return Err(PlanError::InvalidQuantLevels(quant_levels));
    }
    let d = g_m.dist(g_n);
    if d > 2.0 * radius {
        return Err(PlanError::NoOverlap(0, 1));
    }
    Ok(arc_points(g_m, g_n, radius, quant_levels))
}

fn arc_points(g_m: Point, g_n: Point, radius: f64, q_levels: usize) -> Vec<Point> {
    let off = g_n - g_m;
    let d = off.norm();
    if d == 0.0 {
        log::warn!("coincident GBSs at {g_m}: boundary arc spans half the circle");
    }
    let phi = off.y.atan2(off.x);
    let ratio = if radius > 0.0 { (d / (2.0 * radius)).min(1.0) } else { 1.0 };
    let theta = 2.0 * ratio.acos();
    let tangent = ratio == 1.0;
    let mid = g_m.lerp(g_n, 0.5);
    (0..q_levels)
        .map(|q| {
            if tangent {
                // both circles meet in a single point
                return mid;
            }
            let ang = phi + (q as f64 / (q_levels - 1) as f64 - 0.5) * theta;
            Point::new(g_m.x + radius * ang.cos(), g_m.y + radius * ang.sin())
        })
        .collect()
}

/// `4 (M - 1) d sin(pi / (4 (Q - 1)))`: worst-case excess length of the
/// quantized plan over the continuous optimum.
pub fn method2_gap_bound(num_gbs: usize, radius: f64, quant_levels: usize) -> f64 {
    if quant_levels < 2 {
        return f64::INFINITY;
    }
    let m = num_gbs.saturating_sub(1) as f64;
    4.0 * m * radius * (std::f64::consts::PI / (4.0 * (quant_levels - 1) as f64)).sin()
}

/// Vertex of the quantized graph. Boundary vertex `(m, n, q)` is the `q`-th
/// point of the arc of GBS `m`'s circle inside GBS `n`'s disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QVertex {
    Start,
    Boundary { m: usize, n: usize, q: usize },
    End,
}

#[derive(Debug, Clone, PartialEq)]
struct Arc {
    m: usize,
    n: usize,
    points: Vec<Point>,
    /// Bounding disk of the arc points.
    hull_center: Point,
    hull_radius: f64,
}

/// Directed graph over quantized boundary points.
///
/// Edges are implicit: they follow from the arc list and the coverage of the
/// endpoints, so memory stays proportional to the number of arcs times `Q`.
/// Besides the boundary edges there is a direct start-to-goal edge whenever a
/// single GBS covers both endpoints, since such missions need no handover.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedGraph {
    quant_levels: usize,
    radius: f64,
    start: Point,
    goal: Point,
    arcs: Vec<Arc>,
    /// Arc indices leaving each GBS (`arc.m == gbs`), ascending by partner.
    out_arcs: Vec<Vec<usize>>,
    start_covered: Vec<bool>,
    goal_covered: Vec<bool>,
    direct_gbs: Option<usize>,
}

impl QuantizedGraph {
    pub fn quant_levels(&self) -> usize {
        self.quant_levels
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn num_vertices(&self) -> usize {
        2 + self.arcs.len() * self.quant_levels
    }

    /// Ordered GBS pairs `(m, n)` whose disks overlap.
    pub fn overlap_pairs(&self) -> Vec<(usize, usize)> {
        self.arcs.iter().map(|a| (a.m, a.n)).collect()
    }

    pub fn direct_edge(&self) -> Option<usize> {
        self.direct_gbs
    }

    fn arc_index(&self, m: usize, n: usize) -> Option<usize> {
        self.out_arcs.get(m)?.iter().copied().find(|&a| self.arcs[a].n == n)
    }

    pub fn position(&self, v: QVertex) -> Option<Point> {
        match v {
            QVertex::Start => Some(self.start),
            QVertex::End => Some(self.goal),
            QVertex::Boundary { m, n, q } => self.arc_index(m, n).and_then(|a| self.arcs[a].points.get(q).copied()),
        }
    }

    pub fn vertices(&self) -> Vec<QVertex> {
        let mut out = vec![QVertex::Start];
        for a in &self.arcs {
            out.extend((0..self.quant_levels).map(|q| QVertex::Boundary { m: a.m, n: a.n, q }));
        }
        out.push(QVertex::End);
        out
    }

    /// Outgoing edges with their weights.
    pub fn successors(&self, v: QVertex) -> Vec<(QVertex, f64)> {
        let mut out = Vec::new();
        let Some(p) = self.position(v) else { return out };
        let mut push = |w: QVertex| {
            let pos = self.position(w).expect("vertex exists");
            out.push((w, p.dist(pos)));
        };
        match v {
            QVertex::Start => {
                for a in &self.arcs {
                    if self.start_covered[a.m] {
                        for q in 0..self.quant_levels {
                            push(QVertex::Boundary { m: a.m, n: a.n, q });
                        }
                    }
                }
                if self.direct_gbs.is_some() {
                    push(QVertex::End);
                }
            }
            QVertex::Boundary { m, n, .. } => {
                for &ai in &self.out_arcs[n] {
                    let a = &self.arcs[ai];
                    if a.n != m {
                        for q in 0..self.quant_levels {
                            push(QVertex::Boundary { m: a.m, n: a.n, q });
                        }
                    }
                }
                if self.goal_covered[n] {
                    push(QVertex::End);
                }
            }
            QVertex::End => {}
        }
        out
    }
}

pub fn build_quantized_graph(
    scenario: &Scenario,
    req: &ConnectivityRequirement,
    quant_levels: usize,
) -> Result<QuantizedGraph, PlanError> {
    if quant_levels < 2 {
        return Err(PlanError::InvalidQuantLevels(quant_levels));
    }
    let gbs = scenario.gbs();
    let radius = req.radius;
    let mut arcs = Vec::new();
    let mut out_arcs = vec![Vec::new(); gbs.len()];
    for m in 0..gbs.len() {
        for n in 0..gbs.len() {
            if m == n || gbs[m].dist(gbs[n]) > 2.0 * radius {
                continue;
            }
            let points = arc_points(gbs[m], gbs[n], radius, quant_levels);
            let hull_center = points[quant_levels / 2];
            let hull_radius = points.iter().map(|p| p.dist(hull_center)).fold(0.0, f64::max);
            out_arcs[m].push(arcs.len());
            arcs.push(Arc {
                m,
                n,
                points,
                hull_center,
                hull_radius,
            });
        }
    }
    let start_covered: Vec<bool> = gbs.iter().map(|g| scenario.start.dist(*g) <= radius).collect();
    let goal_covered: Vec<bool> = gbs.iter().map(|g| scenario.goal.dist(*g) <= radius).collect();
    let direct_gbs = (0..gbs.len()).find(|&m| start_covered[m] && goal_covered[m]);
    Ok(QuantizedGraph {
        quant_levels,
        radius,
        start: scenario.start,
        goal: scenario.goal,
        arcs,
        out_arcs,
        start_covered,
        goal_covered,
        direct_gbs,
    })
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem {
    priority: f64,
    id: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on priority, then on id
        other
            .priority
            .total_cmp(&self.priority)
            .then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct SearchResult {
    vertices: Vec<QVertex>,
    length: f64,
}

/// A* search with the straight-line distance to the goal as potential.
/// Vertices whose optimistic total exceeds `bound` are never expanded.
fn shortest_path(graph: &QuantizedGraph, bound: f64) -> Option<SearchResult> {
    let q_levels = graph.quant_levels;
    let n_boundary = graph.arcs.len() * q_levels;
    let start_id = n_boundary;
    let end_id = n_boundary + 1;
    let goal = graph.goal;
    let pos = |id: usize| -> Point {
        if id == start_id {
            graph.start
        } else if id == end_id {
            goal
        } else {
            graph.arcs[id / q_levels].points[id % q_levels]
        }
    };
    let mut dist = vec![f64::INFINITY; n_boundary + 2];
    let mut pred = vec![usize::MAX; n_boundary + 2];
    let mut done = vec![false; n_boundary + 2];
    let mut heap = BinaryHeap::new();
    dist[start_id] = 0.0;
    heap.push(HeapItem {
        priority: graph.start.dist(goal),
        id: start_id,
    });
    let relax = |heap: &mut BinaryHeap<HeapItem>, dist: &mut [f64], pred: &mut [usize], u: usize, v: usize, w: f64| {
        let nd = dist[u] + w;
        if nd < dist[v] {
            let f = nd + pos(v).dist(goal);
            if f <= bound {
                dist[v] = nd;
                pred[v] = u;
                heap.push(HeapItem { priority: f, id: v });
            }
        }
    };
    while let Some(HeapItem { id: u, .. }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        if u == end_id {
            break;
        }
        let pu = pos(u);
        let du = dist[u];
        let (arc_list, from_gbs): (&[usize], Option<usize>) = if u == start_id {
            if graph.direct_gbs.is_some() {
                relax(&mut heap, &mut dist, &mut pred, u, end_id, pu.dist(goal));
            }
            (&[], None)
        } else {
            let arc = &graph.arcs[u / q_levels];
            if graph.goal_covered[arc.n] {
                relax(&mut heap, &mut dist, &mut pred, u, end_id, pu.dist(goal));
            }
            (&graph.out_arcs[arc.n], Some(arc.m))
        };
        let candidates: Vec<usize> = if u == start_id {
            (0..graph.arcs.len()).filter(|&a| graph.start_covered[graph.arcs[a].m]).collect()
        } else {
            arc_list.iter().copied().filter(|&a| Some(graph.arcs[a].n) != from_gbs).collect()
        };
        for ai in candidates {
            let arc = &graph.arcs[ai];
            let optimistic = du + pu.dist(arc.hull_center) + arc.hull_center.dist(goal) - 2.0 * arc.hull_radius;
            if optimistic > bound {
                continue;
            }
            for (q, p) in arc.points.iter().enumerate() {
                let v = ai * q_levels + q;
                if !done[v] {
                    relax(&mut heap, &mut dist, &mut pred, u, v, pu.dist(*p));
                }
            }
        }
    }
    if !dist[end_id].is_finite() {
        return None;
    }
    let mut ids = vec![end_id];
    let mut v = end_id;
    while v != start_id {
        v = pred[v];
        ids.push(v);
    }
    ids.reverse();
    let vertices = ids
        .into_iter()
        .map(|id| {
            if id == start_id {
                QVertex::Start
            } else if id == end_id {
                QVertex::End
            } else {
                let a = &graph.arcs[id / q_levels];
                QVertex::Boundary {
                    m: a.m,
                    n: a.n,
                    q: id % q_levels,
                }
            }
        })
        .collect();
    Some(SearchResult {
        vertices,
        length: dist[end_id],
    })
}

/// Plans over the quantized graph with `quant_levels` points per arc.
pub fn plan_method2(scenario: &Scenario, snr_target: f64, quant_levels: usize) -> Result<Plan, PlanError> {
    plan_method2_bounded(scenario, snr_target, quant_levels, f64::INFINITY)
}

/// Same as [`plan_method2`], with the search pruned to paths no longer than
/// `upper_bound` meters. If nothing fits under the bound the search is
/// repeated without it, so a too-small bound costs time but never changes
/// the result.
pub fn plan_method2_bounded(
    scenario: &Scenario,
    snr_target: f64,
    quant_levels: usize,
    upper_bound: f64,
) -> Result<Plan, PlanError> {
    let req = coverage_radius(scenario, snr_target)?;
    let graph = build_quantized_graph(scenario, &req, quant_levels)?;
    let found = match shortest_path(&graph, upper_bound) {
        Some(r) => Some(r),
        None if upper_bound.is_finite() => shortest_path(&graph, f64::INFINITY),
        None => None,
    };
    let Some(result) = found else {
        return Err(PlanError::Infeasible);
    };
    let mut seq = Vec::new();
    let mut points = vec![scenario.start];
    let mut last_n = None;
    for v in &result.vertices {
        if let QVertex::Boundary { m, n, .. } = *v {
            seq.push(m);
            last_n = Some(n);
            points.push(graph.position(*v).expect("path vertex"));
        }
    }
    match last_n {
        Some(n) => seq.push(n),
        None => seq.push(graph.direct_gbs.expect("direct edge used")),
    }
    points.push(scenario.goal);
    debug_assert!((crate::trajectory::path_length(&points) - result.length).abs() <= 1e-6 * result.length.max(1.0));
    let sequence = AssociationSequence::new_unchecked(seq);
    let mut plan = Plan::new(
        scenario,
        sequence.clone(),
        HandoverPoints::new(points),
        format!("m2-Q{quant_levels}"),
        snr_target,
    );
    if !sequence.is_simple() {
        let msg = format!("association sequence {:?} revisits a GBS", sequence.indices());
        log::warn!("{msg}");
        plan.warnings.push(msg);
    }
    Ok(plan)
}
