//! Exact reference solvers for desk-scale inputs.
//!
//! Each heuristic stage has an exhaustive counterpart here. Budgets are hard
//! errors so an oversized input can never silently fall back to an
//! approximation.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fleet::{FleetPlan, FleetSpec, TypeCount};
use crate::geo::{centroid, GeoPoint, Metric};
use crate::roadgraph::{RoadGraph, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleBudget {
    pub max_vertices: usize,
    pub max_tour_stops: usize,
    pub max_partition_points: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_vertices: 12,
            max_tour_stops: 10,
            max_partition_points: 12,
        }
    }
}

fn check(what: &'static str, size: usize, limit: usize) -> Result<()> {
    if size > limit {
        Err(Error::BudgetExceeded { what, size, limit })
    } else {
        Ok(())
    }
}

/// Dense all-pairs distances keyed by vertex id.
#[derive(Debug, Clone, PartialEq)]
pub struct DistMatrix {
    ids: Vec<VertexId>,
    index: HashMap<VertexId, usize>,
    d: Vec<Vec<f64>>,
}

impl DistMatrix {
    pub fn ids(&self) -> &[VertexId] {
        &self.ids
    }

    pub fn get(&self, u: VertexId, v: VertexId) -> Result<f64> {
        let i = *self.index.get(&u).ok_or(Error::UnknownVertex(u))?;
        let j = *self.index.get(&v).ok_or(Error::UnknownVertex(v))?;
        Ok(self.d[i][j])
    }

    pub fn row(&self, u: VertexId) -> Result<&[f64]> {
        let i = *self.index.get(&u).ok_or(Error::UnknownVertex(u))?;
        Ok(&self.d[i])
    }
}

pub fn apsp_floyd_warshall(g: &RoadGraph, budget: &OracleBudget) -> Result<DistMatrix> {
    let n = g.len();
    check("vertices", n, budget.max_vertices)?;
    let ids: Vec<VertexId> = g.vertices().iter().map(|v| v.id).collect();
    let index: HashMap<VertexId, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();

    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for e in g.edges() {
        let (u, v) = (index[&e.u], index[&e.v]);
        d[u][v] = d[u][v].min(e.w);
        if !g.is_directed() {
            d[v][u] = d[v][u].min(e.w);
        }
    }
    for k in 0..n {
        for i in 0..n {
            if d[i][k].is_infinite() {
                continue;
            }
            for j in 0..n {
                let through = d[i][k] + d[k][j];
                if through < d[i][j] {
                    d[i][j] = through;
                }
            }
        }
    }
    Ok(DistMatrix { ids, index, d })
}

/// Optimal depot-anchored tour by Held-Karp dynamic programming.
pub fn exact_tour(
    depot: VertexId,
    stops: &[VertexId],
    dist: &DistMatrix,
    budget: &OracleBudget,
) -> Result<(Vec<VertexId>, f64)> {
    let n = stops.len();
    check("tour stops", n, budget.max_tour_stops)?;
    if n == 0 {
        return Ok((vec![], 0.0));
    }
    let from_depot: Vec<f64> = stops
        .iter()
        .map(|&s| dist.get(depot, s))
        .collect::<Result<_>>()?;
    let to_depot: Vec<f64> = stops
        .iter()
        .map(|&s| dist.get(s, depot))
        .collect::<Result<_>>()?;
    let mut between = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            between[i][j] = dist.get(stops[i], stops[j])?;
        }
    }

    let full = 1usize << n;
    // cost[mask][last]: cheapest path from the depot covering `mask`, ending at `last`.
    let mut cost = vec![vec![f64::INFINITY; n]; full];
    let mut parent = vec![vec![usize::MAX; n]; full];
    for i in 0..n {
        cost[1 << i][i] = from_depot[i];
    }
    for mask in 1..full {
        for last in 0..n {
            let c = cost[mask][last];
            if mask & (1 << last) == 0 || c.is_infinite() {
                continue;
            }
            for next in 0..n {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let m2 = mask | (1 << next);
                let c2 = c + between[last][next];
                if c2 < cost[m2][next] {
                    cost[m2][next] = c2;
                    parent[m2][next] = last;
                }
            }
        }
    }
    let (mut last, best) = (0..n)
        .map(|i| (i, cost[full - 1][i] + to_depot[i]))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("n > 0");
    if best.is_infinite() {
        return Err(Error::NoPath {
            from: depot,
            to: stops[last],
        });
    }
    let mut order = Vec::with_capacity(n);
    let mut mask = full - 1;
    loop {
        order.push(stops[last]);
        let p = parent[mask][last];
        mask &= !(1 << last);
        if p == usize::MAX {
            break;
        }
        last = p;
    }
    order.reverse();
    Ok((order, best))
}

/// Optimal tour by trying every permutation; limited to eight stops.
pub fn exact_tour_by_permutation(
    depot: VertexId,
    stops: &[VertexId],
    dist: &DistMatrix,
) -> Result<(Vec<VertexId>, f64)> {
    check("permutation stops", stops.len(), 8)?;
    let mut perm = stops.to_vec();
    let mut best = (perm.clone(), f64::INFINITY);
    let tour_cost = |p: &[VertexId]| -> Result<f64> {
        let mut c = 0.0;
        let mut at = depot;
        for &s in p {
            c += dist.get(at, s)?;
            at = s;
        }
        Ok(c + dist.get(at, depot)?)
    };
    // Heap's algorithm.
    let n = perm.len();
    let mut counters = vec![0usize; n];
    let c0 = tour_cost(&perm)?;
    if c0 < best.1 {
        best = (perm.clone(), c0);
    }
    let mut i = 0;
    while i < n {
        if counters[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counters[i], i);
            }
            let c = tour_cost(&perm)?;
            if c < best.1 {
                best = (perm.clone(), c);
            }
            counters[i] += 1;
            i = 0;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    Ok(best)
}

/// K-Means objective of a fixed partition with member-mean centroids.
pub fn partition_objective(points: &[(u32, GeoPoint)], side: &[bool], metric: &Metric) -> f64 {
    let mut total = 0.0;
    for flag in [false, true] {
        let members: Vec<GeoPoint> = points
            .iter()
            .zip(side)
            .filter(|(_, &s)| s == flag)
            .map(|(p, _)| p.1)
            .collect();
        if let Ok(c) = centroid(&members) {
            total += members
                .iter()
                .map(|&p| {
                    let d = metric.distance(p, c);
                    d * d
                })
                .sum::<f64>();
        }
    }
    total
}

/// Exhaustive minimum of the k=2 objective over all nontrivial bipartitions.
/// Returns the side flag per point (the last point is always on side `false`).
pub fn best_bipartition(
    points: &[(u32, GeoPoint)],
    metric: &Metric,
    budget: &OracleBudget,
) -> Result<(Vec<bool>, f64)> {
    let n = points.len();
    check("partition points", n, budget.max_partition_points)?;
    if n < 2 {
        return Err(Error::InvalidParameter(
            "bipartition needs at least 2 points".into(),
        ));
    }
    let mut best: Option<(Vec<bool>, f64)> = None;
    for mask in 1u32..(1 << (n - 1)) {
        let side: Vec<bool> = (0..n).map(|i| i < n - 1 && mask & (1 << i) != 0).collect();
        let j = partition_objective(points, &side, metric);
        if best.as_ref().is_none_or(|b| j < b.1) {
            best = Some((side, j));
        }
    }
    Ok(best.expect("n >= 2 gives at least one bipartition"))
}

/// Minimal-slack integer fleet by full enumeration, ties by fewest vehicles
/// then lexicographically smallest counts.
pub fn exact_fleet(n: u64, spec: &FleetSpec) -> Result<FleetPlan> {
    spec.validate()?;
    let caps: Vec<u64> = spec.types.iter().map(|t| t.capacity as u64).collect();
    let bounds: Vec<u64> = spec
        .types
        .iter()
        .zip(&caps)
        .map(|(t, &c)| {
            let natural = n.div_ceil(c);
            t.max_count.map_or(natural, |m| natural.min(m as u64))
        })
        .collect();

    // (slack, vehicles, counts)
    let mut best: Option<(u64, u64, Vec<u64>)> = None;
    let mut counts = vec![0u64; caps.len()];

    fn walk(
        i: usize,
        sum: u64,
        n: u64,
        caps: &[u64],
        bounds: &[u64],
        counts: &mut Vec<u64>,
        best: &mut Option<(u64, u64, Vec<u64>)>,
    ) {
        if sum >= n || i == caps.len() {
            if sum >= n {
                let key = (sum - n, counts.iter().sum::<u64>(), counts.clone());
                if best.as_ref().is_none_or(|b| key < *b) {
                    *best = Some(key);
                }
            }
            return;
        }
        for k in 0..=bounds[i] {
            counts[i] = k;
            walk(i + 1, sum + k * caps[i], n, caps, bounds, counts, best);
        }
        counts[i] = 0;
    }
    walk(0, 0, n, &caps, &bounds, &mut counts, &mut best);

    let (slack, _, counts) = best.ok_or(Error::InsufficientFleet {
        available: spec.bounded_capacity().unwrap_or(0),
        demand: n,
    })?;
    Ok(FleetPlan {
        counts: spec
            .types
            .iter()
            .zip(&counts)
            .map(|(t, &k)| TypeCount {
                type_id: t.id,
                capacity: t.capacity,
                count: k as u32,
            })
            .collect(),
        total_capacity: n + slack,
        slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roadgraph::{Edge, Vertex};

    fn graph(n: u32, edges: &[(u32, u32, f64)]) -> RoadGraph {
        let vertices = (0..n)
            .map(|id| Vertex {
                id,
                lat: None,
                lon: None,
            })
            .collect();
        let edges = edges.iter().map(|&(u, v, w)| Edge { u, v, w }).collect();
        RoadGraph::new(vertices, edges, false).unwrap()
    }

    #[test]
    fn edgeless_graph() {
        let m = apsp_floyd_warshall(&graph(3, &[]), &OracleBudget::default()).unwrap();
        for &u in m.ids() {
            for &v in m.ids() {
                let d = m.get(u, v).unwrap();
                if u == v {
                    assert_eq!(d, 0.0)
                } else {
                    assert!(d.is_infinite())
                }
            }
        }
    }

    #[test]
    fn triangle_relaxes_through_third_vertex() {
        let m = apsp_floyd_warshall(
            &graph(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 5.0)]),
            &OracleBudget::default(),
        )
        .unwrap();
        assert_eq!(m.get(0, 2).unwrap(), 2.0);
    }

    #[test]
    fn budgets_are_errors() {
        let b = OracleBudget::default();
        assert!(matches!(
            apsp_floyd_warshall(&graph(13, &[]), &b),
            Err(Error::BudgetExceeded { .. })
        ));
        let m = apsp_floyd_warshall(&graph(2, &[(0, 1, 1.0)]), &b).unwrap();
        let stops: Vec<u32> = (1..=11).collect();
        assert!(matches!(
            exact_tour(0, &stops, &m, &b),
            Err(Error::BudgetExceeded { .. })
        ));
        let pts: Vec<(u32, GeoPoint)> = (0..13)
            .map(|i| {
                (
                    i,
                    GeoPoint {
                        lat: 0.0,
                        lon: i as f64,
                    },
                )
            })
            .collect();
        assert!(best_bipartition(&pts, &Metric::default(), &b).is_err());
    }

    #[test]
    fn small_tours() {
        let m = apsp_floyd_warshall(
            &graph(3, &[(0, 1, 2.0), (1, 2, 1.0), (0, 2, 4.0)]),
            &OracleBudget::default(),
        )
        .unwrap();
        let (order, c) = exact_tour(0, &[2], &m, &OracleBudget::default()).unwrap();
        assert_eq!((order, c), (vec![2], 6.0));
        let (_, c) = exact_tour(0, &[1, 2], &m, &OracleBudget::default()).unwrap();
        // 0-1-2-0 = 2 + 1 + 3 (via 1) = 6, the reverse is the same.
        assert_eq!(c, 6.0);
        assert_eq!(exact_tour_by_permutation(0, &[1, 2], &m).unwrap().1, 6.0);
    }

    #[test]
    fn bipartition_of_two_points() {
        let pts = [
            (1, GeoPoint { lat: 0.0, lon: 0.0 }),
            (2, GeoPoint { lat: 1.0, lon: 1.0 }),
        ];
        let (side, j) =
            best_bipartition(&pts, &Metric::default(), &OracleBudget::default()).unwrap();
        assert_ne!(side[0], side[1]);
        assert_eq!(j, 0.0);
    }

    #[test]
    fn square_bipartition_is_minimal() {
        let pts: Vec<(u32, GeoPoint)> = [(0.0, 0.0), (0.0, 0.01), (0.01, 0.0), (0.01, 0.01)]
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| (i as u32, GeoPoint { lat: a, lon: b }))
            .collect();
        let m = Metric::default();
        let (_, best) = best_bipartition(&pts, &m, &OracleBudget::default()).unwrap();
        for mask in 1u32..8 {
            let side: Vec<bool> = (0..4).map(|i| i < 3 && mask & (1 << i) != 0).collect();
            assert!(best <= partition_objective(&pts, &side, &m));
        }
    }

    #[test]
    fn fleet_examples() {
        let p = exact_fleet(10, &FleetSpec::unbounded(&[4, 6])).unwrap();
        assert_eq!((p.count_vector(), p.slack), (vec![1, 1], 0));
        let p = exact_fleet(0, &FleetSpec::unbounded(&[4, 6])).unwrap();
        assert_eq!(p.count_vector(), vec![0, 0]);
        let p = exact_fleet(7, &FleetSpec::unbounded(&[5])).unwrap();
        assert_eq!((p.count_vector(), p.slack), (vec![2], 3));
        let bounded = FleetSpec {
            types: vec![crate::fleet::VehicleType {
                id: 0,
                capacity: 5,
                max_count: Some(1),
            }],
        };
        assert!(matches!(
            exact_fleet(7, &bounded),
            Err(Error::InsufficientFleet { .. })
        ));
    }
}
