//! Independent re-evaluation of a stored solution, optionally against the
//! exact oracles.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fleet::FleetPlan;
use crate::geo::EarthModel;
use crate::instance::Instance;
use crate::oracle::{apsp_floyd_warshall, exact_fleet, exact_tour, OracleBudget};
use crate::roadgraph::{complete_graph_from_points, RoadGraph};
use crate::route::{check_feasibility, evaluate_solution, FeasibilityReport, PointCosts, Solution};
use crate::DEPOT;

/// Relative tolerance between stored and recomputed cost.
pub const COST_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteBound {
    pub route: usize,
    pub stops: usize,
    pub greedy_km: f64,
    pub optimal_km: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub routes: Vec<RouteBound>,
    /// Routes too large for the exact tour oracle.
    pub skipped_routes: Vec<usize>,
    /// Exact minimal-slack plan for the instance's total demand.
    pub exact_fleet: Option<FleetPlan>,
    /// True when some route costs less than its exact optimum.
    pub bound_violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub stored_cost_km: f64,
    pub recomputed_cost_km: f64,
    pub relative_error: f64,
    pub cost_consistent: bool,
    pub feasibility: FeasibilityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleReport>,
}

impl EvalReport {
    pub fn passed(&self) -> bool {
        self.cost_consistent
            && self.feasibility.is_feasible()
            && !self.oracle.as_ref().is_some_and(|o| o.bound_violated)
    }
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

pub fn evaluate(
    inst: &Instance,
    solution: &Solution,
    road_graph: Option<&RoadGraph>,
    earth: EarthModel,
    with_oracle: bool,
) -> Result<EvalReport> {
    let recomputed = match road_graph {
        Some(g) => evaluate_solution(solution, g)?,
        None => evaluate_solution(solution, &PointCosts::for_instance(inst, earth))?,
    };
    let rel = relative_error(recomputed, solution.total_cost_km);
    let oracle = if with_oracle {
        Some(oracle_report(inst, solution, road_graph, earth)?)
    } else {
        None
    };
    Ok(EvalReport {
        stored_cost_km: solution.total_cost_km,
        recomputed_cost_km: recomputed,
        relative_error: rel,
        cost_consistent: rel <= COST_TOLERANCE,
        feasibility: check_feasibility(solution, inst),
        oracle,
    })
}

fn oracle_report(
    inst: &Instance,
    solution: &Solution,
    road_graph: Option<&RoadGraph>,
    earth: EarthModel,
) -> Result<OracleReport> {
    let budget = OracleBudget::default();
    let metric = inst.metric(earth);
    let locations: HashMap<_, _> = inst.clients.iter().map(|c| (c.id, c.location)).collect();
    // A road graph larger than the Floyd-Warshall budget cannot be certified.
    let shared = match road_graph {
        Some(g) if g.len() <= budget.max_vertices => Some(apsp_floyd_warshall(g, &budget)?),
        _ => None,
    };

    let mut routes = Vec::new();
    let mut skipped = Vec::new();
    for (ri, r) in solution.routes.iter().enumerate() {
        let stops = r.interior();
        if stops.len() > budget.max_tour_stops || (road_graph.is_some() && shared.is_none()) {
            skipped.push(ri);
            continue;
        }
        let local;
        let dist = match &shared {
            Some(d) => d,
            None => {
                let mut pts = vec![(DEPOT, inst.depot)];
                for s in stops {
                    match locations.get(s) {
                        Some(p) => pts.push((*s, *p)),
                        None => {
                            skipped.push(ri);
                            break;
                        }
                    }
                }
                if pts.len() != stops.len() + 1 {
                    continue;
                }
                local = apsp_floyd_warshall(&complete_graph_from_points(&pts, &metric)?, &budget)?;
                &local
            }
        };
        let (_, optimal) = exact_tour(DEPOT, stops, dist, &budget)?;
        routes.push(RouteBound {
            route: ri,
            stops: stops.len(),
            greedy_km: r.total_km,
            optimal_km: optimal,
            ratio: if optimal > 0.0 {
                r.total_km / optimal
            } else {
                1.0
            },
        });
    }
    let bound_violated = routes
        .iter()
        .any(|b| b.greedy_km < b.optimal_km * (1.0 - COST_TOLERANCE));
    let exact_fleet = if inst.total_demand() <= 200 && inst.fleet.types.len() <= 4 {
        exact_fleet(inst.total_demand(), &inst.fleet).ok()
    } else {
        None
    };
    Ok(OracleReport {
        routes,
        skipped_routes: skipped,
        exact_fleet,
        bound_violated,
    })
}
