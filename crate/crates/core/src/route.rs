//! Greedy per-cluster routing over shortest paths, solution evaluation and
//! feasibility checking.
//!
//! Each route leaves the depot for the member nearest to it, repeatedly
//! moves to the nearest unvisited member, and returns to the depot. All
//! distances are shortest-path distances from a fresh Dijkstra run at the
//! current stop; legs store the expanded vertex path.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::cluster::ClientId;
use crate::error::{Error, Result};
use crate::fleet::{Vehicle, VehicleRef};
use crate::geo::{EarthModel, GeoPoint, Metric};
use crate::instance::Instance;
use crate::merge::{ClusterInfo, ClusterSet};
use crate::par::{self, Execution};
use crate::roadgraph::{dijkstra, reconstruct_path, RoadGraph, VertexId};
use crate::DEPOT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub cluster_id: usize,
    pub vehicle: Vehicle,
    pub demand: u64,
    /// Depot, members in visiting order, depot.
    pub stops: Vec<VertexId>,
    /// Expanded shortest path for each consecutive stop pair.
    pub leg_paths: Vec<Vec<VertexId>>,
    pub leg_km: Vec<f64>,
    pub total_km: f64,
}

impl Route {
    pub fn interior(&self) -> &[VertexId] {
        match self.stops.len() {
            0..=2 => &[],
            n => &self.stops[1..n - 1],
        }
    }

    pub fn occupancy(&self) -> f64 {
        self.demand as f64 / self.vehicle.capacity as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kpi {
    pub mean_occupancy: f64,
    pub min_occupancy: f64,
    pub vehicle_count: usize,
    pub total_km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub routes: Vec<Route>,
    pub total_cost_km: f64,
    pub kpi: Kpi,
}

impl Solution {
    pub fn from_routes(routes: Vec<Route>) -> Solution {
        let total: f64 = routes.iter().map(|r| r.total_km).sum();
        let occ: Vec<f64> = routes.iter().map(Route::occupancy).collect();
        let kpi = Kpi {
            mean_occupancy: if occ.is_empty() {
                0.0
            } else {
                occ.iter().sum::<f64>() / occ.len() as f64
            },
            min_occupancy: occ.iter().copied().reduce(f64::min).unwrap_or(0.0),
            vehicle_count: routes.len(),
            total_km: total,
        };
        Solution {
            routes,
            total_cost_km: total,
            kpi,
        }
    }
}

pub fn route_cluster(cluster: &ClusterInfo, g: &RoadGraph) -> Result<Route> {
    if cluster.members.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    g.index_of(DEPOT)?;
    for &m in &cluster.members {
        g.index_of(m)?;
    }

    let mut unvisited: BTreeSet<ClientId> = cluster.members.iter().copied().collect();
    let mut stops = vec![DEPOT];
    let mut leg_paths = Vec::with_capacity(unvisited.len() + 1);
    let mut leg_km = Vec::with_capacity(unvisited.len() + 1);
    let mut current = DEPOT;
    let mut sp = dijkstra(g, current)?;

    while !unvisited.is_empty() {
        // BTreeSet iteration is ascending, so strict < keeps the lowest id on ties.
        let mut next: Option<(ClientId, f64)> = None;
        for &m in &unvisited {
            let d = sp.dist(m)?;
            if d.is_finite() && next.is_none_or(|(_, bd)| d < bd) {
                next = Some((m, d));
            }
        }
        let Some((m, d)) = next else {
            return Err(Error::DisconnectedCluster {
                member: *unvisited.first().expect("non-empty"),
                from: current,
            });
        };
        leg_paths.push(reconstruct_path(&sp, m)?);
        leg_km.push(d);
        stops.push(m);
        unvisited.remove(&m);
        current = m;
        sp = dijkstra(g, current)?;
    }

    let back = sp.dist(DEPOT)?;
    if !back.is_finite() {
        return Err(Error::DisconnectedCluster {
            member: DEPOT,
            from: current,
        });
    }
    leg_paths.push(reconstruct_path(&sp, DEPOT)?);
    leg_km.push(back);
    stops.push(DEPOT);

    Ok(Route {
        cluster_id: cluster.id,
        vehicle: cluster.vehicle,
        demand: cluster.demand,
        stops,
        leg_paths,
        total_km: leg_km.iter().sum(),
        leg_km,
    })
}

/// Routes every cluster on the shared graph `g`.
pub fn build_solution(clusters: &ClusterSet, g: &RoadGraph, exec: Execution) -> Result<Solution> {
    build_solution_with(clusters, exec, |_| Ok(Cow::Borrowed(g)))
}

/// Routes every cluster on the graph returned by `graph_for`; clusters are
/// independent and may be routed concurrently.
pub fn build_solution_with<'g, F>(
    clusters: &ClusterSet,
    exec: Execution,
    graph_for: F,
) -> Result<Solution>
where
    F: Fn(&ClusterInfo) -> Result<Cow<'g, RoadGraph>> + Sync + Send,
{
    let mut ordered: Vec<&ClusterInfo> = clusters.clusters.iter().collect();
    ordered.sort_by_key(|c| c.id);
    let routes = par::try_map(exec, &ordered, |c| {
        let g = graph_for(c)?;
        route_cluster(c, &g)
    })?;
    Ok(Solution::from_routes(routes))
}

/// Complete graph over the depot and one cluster's members.
pub fn cluster_graph(
    cluster: &ClusterInfo,
    depot: GeoPoint,
    locations: &HashMap<ClientId, GeoPoint>,
    metric: &Metric,
) -> Result<RoadGraph> {
    let mut pts = Vec::with_capacity(cluster.members.len() + 1);
    pts.push((DEPOT, depot));
    for &m in &cluster.members {
        let p = locations
            .get(&m)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown client {m}")))?;
        pts.push((m, *p));
    }
    crate::roadgraph::complete_graph_from_points(&pts, metric)
}

/// Cost of traversing the direct arc `u -> v`.
pub trait ArcCost {
    fn arc_cost(&self, u: VertexId, v: VertexId) -> Result<f64>;
}

impl ArcCost for RoadGraph {
    fn arc_cost(&self, u: VertexId, v: VertexId) -> Result<f64> {
        self.arc_weight(u, v)?
            .ok_or(Error::NoPath { from: u, to: v })
    }
}

/// Arc costs given directly by a metric over point locations.
pub struct PointCosts {
    pub metric: Metric,
    pub points: HashMap<VertexId, GeoPoint>,
}

impl PointCosts {
    pub fn for_instance(inst: &Instance, earth: EarthModel) -> PointCosts {
        let mut points: HashMap<VertexId, GeoPoint> =
            inst.clients.iter().map(|c| (c.id, c.location)).collect();
        points.insert(DEPOT, inst.depot);
        PointCosts {
            metric: inst.metric(earth),
            points,
        }
    }
}

impl ArcCost for PointCosts {
    fn arc_cost(&self, u: VertexId, v: VertexId) -> Result<f64> {
        let a = self.points.get(&u).ok_or(Error::UnknownVertex(u))?;
        let b = self.points.get(&v).ok_or(Error::UnknownVertex(v))?;
        Ok(self.metric.distance(*a, *b))
    }
}

/// Recomputes the total arc cost of every traversed leg.
pub fn evaluate_solution(s: &Solution, costs: &impl ArcCost) -> Result<f64> {
    let mut total = 0.0;
    for (ri, r) in s.routes.iter().enumerate() {
        if r.leg_paths.len() + 1 != r.stops.len() {
            return Err(Error::InvalidParameter(format!(
                "route {ri}: {} legs for {} stops",
                r.leg_paths.len(),
                r.stops.len()
            )));
        }
        for (li, path) in r.leg_paths.iter().enumerate() {
            if path.first() != Some(&r.stops[li]) || path.last() != Some(&r.stops[li + 1]) {
                return Err(Error::InvalidParameter(format!(
                    "route {ri}: leg {li} does not join its stops"
                )));
            }
            for arc in path.windows(2) {
                total += costs.arc_cost(arc[0], arc[1])?;
            }
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// A client without exactly one incoming and one outgoing traversal.
    Degree {
        client: ClientId,
        incoming: usize,
        outgoing: usize,
    },
    Capacity {
        route: usize,
        vehicle: VehicleRef,
        demand: u64,
        capacity: u64,
    },
    /// Route does not start and end at the depot, or visits it mid-route.
    Depot {
        route: usize,
    },
    UnknownVertex {
        route: usize,
        vertex: VertexId,
    },
    UnknownVehicleType {
        route: usize,
        vehicle: VehicleRef,
    },
    DuplicateVehicle {
        vehicle: VehicleRef,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_feasibility(s: &Solution, inst: &Instance) -> FeasibilityReport {
    let demand_of: HashMap<ClientId, u64> = inst
        .clients
        .iter()
        .map(|c| (c.id, c.demand as u64))
        .collect();
    let mut incoming: BTreeMap<ClientId, usize> = demand_of.keys().map(|&c| (c, 0)).collect();
    let mut outgoing = incoming.clone();
    let mut violations = Vec::new();
    let mut vehicles = BTreeSet::new();

    for (ri, r) in s.routes.iter().enumerate() {
        let n = r.stops.len();
        if n < 2 || r.stops[0] != DEPOT || r.stops[n - 1] != DEPOT || r.interior().contains(&DEPOT)
        {
            violations.push(Violation::Depot { route: ri });
        }
        for arc in r.stops.windows(2) {
            if let Some(o) = outgoing.get_mut(&arc[0]) {
                *o += 1;
            }
            if let Some(i) = incoming.get_mut(&arc[1]) {
                *i += 1;
            }
        }
        let mut demand = 0;
        for &v in &r.stops {
            if v == DEPOT {
                continue;
            }
            match demand_of.get(&v) {
                Some(d) => demand += d,
                None => violations.push(Violation::UnknownVertex {
                    route: ri,
                    vertex: v,
                }),
            }
        }
        match inst.fleet.get(r.vehicle.id.type_id) {
            Some(t) if demand > t.capacity as u64 => violations.push(Violation::Capacity {
                route: ri,
                vehicle: r.vehicle.id,
                demand,
                capacity: t.capacity as u64,
            }),
            Some(_) => {}
            None => violations.push(Violation::UnknownVehicleType {
                route: ri,
                vehicle: r.vehicle.id,
            }),
        }
        if !vehicles.insert(r.vehicle.id) {
            violations.push(Violation::DuplicateVehicle {
                vehicle: r.vehicle.id,
            });
        }
    }

    for (&client, &inc) in &incoming {
        let out = outgoing[&client];
        if inc != 1 || out != 1 {
            violations.push(Violation::Degree {
                client,
                incoming: inc,
                outgoing: out,
            });
        }
    }

    FeasibilityReport { violations }
}
