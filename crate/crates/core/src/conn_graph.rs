//! Coverage-overlap graph over {start, GBSs, goal}: feasibility, maximum
//! achievable SNR target and shortest association paths.

use std::collections::VecDeque;
use std::fmt::{self, Write as _};

use crate::error::PlanError;
use crate::scenario::{ConnectivityRequirement, Point, Scenario};
use crate::trajectory::AssociationSequence;

/// Vertex of the feasibility graph. Ordering is Start < Gbs(0) < ... < End.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VertexId {
    Start,
    Gbs(usize),
    End,
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexId::Start => write!(f, "U0"),
            VertexId::Gbs(m) => write!(f, "G{m}"),
            VertexId::End => write!(f, "UF"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FeasibilityGraph {
    num_gbs: usize,
    radius: f64,
    /// Sorted adjacency lists indexed by dense vertex index.
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl FeasibilityGraph {
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn num_gbs(&self) -> usize {
        self.num_gbs
    }

    pub fn num_vertices(&self) -> usize {
        self.num_gbs + 2
    }

    pub fn index_of(&self, v: VertexId) -> usize {
        match v {
            VertexId::Start => 0,
            VertexId::Gbs(m) => m + 1,
            VertexId::End => self.num_gbs + 1,
        }
    }

    pub fn vertex(&self, index: usize) -> VertexId {
        if index == 0 {
            VertexId::Start
        } else if index == self.num_gbs + 1 {
            VertexId::End
        } else {
            VertexId::Gbs(index - 1)
        }
    }

    pub fn neighbors(&self, v: VertexId) -> impl Iterator<Item = (VertexId, f64)> + '_ {
        self.adjacency[self.index_of(v)]
            .iter()
            .map(move |&(j, w)| (self.vertex(j), w))
    }

    pub fn weight(&self, a: VertexId, b: VertexId) -> Option<f64> {
        let j = self.index_of(b);
        self.adjacency[self.index_of(a)]
            .iter()
            .find(|&&(k, _)| k == j)
            .map(|&(_, w)| w)
    }

    /// Undirected edges with `a < b`, in vertex order.
    pub fn edges(&self) -> Vec<(VertexId, VertexId, f64)> {
        let mut out = Vec::new();
        for (i, adj) in self.adjacency.iter().enumerate() {
            for &(j, w) in adj {
                if i < j {
                    out.push((self.vertex(i), self.vertex(j), w));
                }
            }
        }
        out
    }

    /// Debug dump, one `u v weight_m` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        for (a, b, w) in self.edges() {
            writeln!(s, "{a} {b} {w:.6}").unwrap();
        }
        s
    }
}

/// Builds the undirected coverage graph for radius `req.radius`.
pub fn build_feasibility_graph(scenario: &Scenario, req: &ConnectivityRequirement) -> FeasibilityGraph {
    let gbs = scenario.gbs();
    let m_count = gbs.len();
    let radius = req.radius;
    let end = m_count + 1;
    let mut adjacency = vec![Vec::new(); m_count + 2];
    let mut link = |a: usize, b: usize, w: f64| {
        adjacency[a].push((b, w));
        adjacency[b].push((a, w));
    };
    for (m, &g) in gbs.iter().enumerate() {
        let d = scenario.start.dist(g);
        if d <= radius {
            link(0, m + 1, d);
        }
    }
    for m in 0..m_count {
        for n in (m + 1)..m_count {
            let d = gbs[m].dist(gbs[n]);
            if d <= 2.0 * radius {
                link(m + 1, n + 1, d);
            }
        }
    }
    for (m, &g) in gbs.iter().enumerate() {
        let d = scenario.goal.dist(g);
        if d <= radius {
            link(m + 1, end, d);
        }
    }
    for adj in &mut adjacency {
        adj.sort_by_key(|&(j, _)| j);
    }
    FeasibilityGraph {
        num_gbs: m_count,
        radius,
        adjacency,
    }
}

/// Breadth-first reachability of the goal from the start.
pub fn check_feasibility(graph: &FeasibilityGraph) -> bool {
    let n = graph.num_vertices();
    let target = n - 1;
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        if v == target {
            return true;
        }
        for &(w, _) in &graph.adjacency[v] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    false
}

/// Smallest coverage radius at which start and goal are connected.
///
/// Minimax variant of Dijkstra on the complete overlap graph: a start or goal
/// edge needs the radius to reach the endpoint, a GBS pair needs half their
/// separation.
pub fn bottleneck_radius(scenario: &Scenario) -> f64 {
    let gbs = scenario.gbs();
    let m_count = gbs.len();
    let mut need = vec![f64::INFINITY; m_count];
    let mut done = vec![false; m_count];
    for (m, &g) in gbs.iter().enumerate() {
        need[m] = scenario.start.dist(g);
    }
    let mut best_end = f64::INFINITY;
    for _ in 0..m_count {
        let mut u = usize::MAX;
        for m in 0..m_count {
            if !done[m] && (u == usize::MAX || need[m] < need[u]) {
                u = m;
            }
        }
        if need[u] >= best_end {
            break;
        }
        done[u] = true;
        best_end = best_end.min(need[u].max(scenario.goal.dist(gbs[u])));
        for v in 0..m_count {
            if !done[v] {
                let cand = need[u].max(0.5 * gbs[u].dist(gbs[v]));
                if cand < need[v] {
                    need[v] = cand;
                }
            }
        }
    }
    best_end
}

/// Largest SNR target for which the mission is feasible.
pub fn bottleneck_max_snr(scenario: &Scenario) -> f64 {
    scenario.snr_at_distance(bottleneck_radius(scenario))
}

/// Minimum-weight start-to-goal path and its total weight.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationPath {
    pub sequence: AssociationSequence,
    pub weight: f64,
}

/// Dijkstra over the feasibility graph.
///
/// Equal distances are resolved by fewer hops, then by the smaller
/// predecessor index, so repeated calls give identical paths.
pub fn shortest_association(graph: &FeasibilityGraph) -> Result<AssociationPath, PlanError> {
    let n = graph.num_vertices();
    let target = n - 1;
    let mut dist = vec![f64::INFINITY; n];
    let mut hops = vec![usize::MAX; n];
    let mut pred = vec![usize::MAX; n];
    let mut done = vec![false; n];
    dist[0] = 0.0;
    hops[0] = 0;
    loop {
        let mut u = usize::MAX;
        for v in 0..n {
            if !done[v] && dist[v].is_finite() && (u == usize::MAX || dist[v] < dist[u]) {
                u = v;
            }
        }
        if u == usize::MAX {
            return Err(PlanError::Infeasible);
        }
        if u == target {
            break;
        }
        done[u] = true;
        for &(v, w) in &graph.adjacency[u] {
            if done[v] {
                continue;
            }
            let nd = dist[u] + w;
            let better = nd < dist[v] || (nd == dist[v] && (hops[u] + 1, u) < (hops[v], pred[v]));
            if better {
                dist[v] = nd;
                hops[v] = hops[u] + 1;
                pred[v] = u;
            }
        }
    }
    let mut indices = Vec::new();
    let mut v = pred[target];
    while v != 0 {
        indices.push(v - 1);
        v = pred[v];
    }
    indices.reverse();
    Ok(AssociationPath {
        sequence: AssociationSequence::new_unchecked(indices),
        weight: dist[target],
    })
}

/// Whether `seq` satisfies the endpoint-coverage and chained-overlap
/// conditions at `radius`.
pub fn sequence_is_feasible(scenario: &Scenario, seq: &[usize], radius: f64) -> bool {
    let gbs = scenario.gbs();
    let (Some(&first), Some(&last)) = (seq.first(), seq.last()) else {
        return false;
    };
    let pts = |i: usize| -> Point { gbs[i] };
    scenario.start.dist(pts(first)) <= radius
        && scenario.goal.dist(pts(last)) <= radius
        && seq.windows(2).all(|w| pts(w[0]).dist(pts(w[1])) <= 2.0 * radius)
}
