//! End-to-end driver: fleet plan, recursive clustering, merge, routing.

use std::borrow::Cow;
use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cluster::{recursive_kmeans, KMeansOptions, PhaseTree};
use crate::error::{Error, Result};
use crate::fleet::{integerize, newton_solve, FleetPlan, NewtonConfig, NewtonSolution, Vehicle};
use crate::geo::EarthModel;
use crate::instance::Instance;
use crate::merge::{merge_pass, ClusterSet, MergeLog, MergePolicy};
use crate::output::OutputFormat;
use crate::par::Execution;
use crate::rng::derive_seed;
use crate::roadgraph::RoadGraph;
use crate::route::{
    build_solution, build_solution_with, check_feasibility, cluster_graph, FeasibilityReport,
    Solution,
};
use crate::DEPOT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub rng_seed: u64,
    pub epsilon: f64,
    pub min_occupancy: f64,
    pub earth: EarthModel,
    pub kmeans_max_iter: usize,
    pub format: OutputFormat,
    pub exec: Execution,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            rng_seed: 0,
            epsilon: 1e-9,
            min_occupancy: 0.5,
            earth: EarthModel::default(),
            kmeans_max_iter: 100,
            format: OutputFormat::Json,
            exec: Execution::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        EarthModel::new(self.earth.radius_km)?;
        MergePolicy::new(self.min_occupancy)?;
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::InvalidParameter("epsilon must be positive".into()));
        }
        if self.kmeans_max_iter == 0 {
            return Err(Error::InvalidParameter(
                "kmeans max_iter must be >= 1".into(),
            ));
        }
        Ok(())
    }

    fn kmeans_options(&self, inst: &Instance) -> KMeansOptions {
        KMeansOptions {
            max_iter: self.kmeans_max_iter,
            metric: inst.metric(self.earth),
            exec: self.exec,
        }
    }
}

/// Output of the fleet and clustering stages.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterStage {
    pub newton: NewtonSolution,
    pub plan: FleetPlan,
    pub tree: PhaseTree,
    pub clusters: ClusterSet,
    pub merge_log: MergeLog,
}

/// Every stage artifact of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub stage: ClusterStage,
    pub solution: Solution,
    pub feasibility: FeasibilityReport,
}

pub fn load_road_graph(path: &Path) -> Result<RoadGraph> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Fleet sizing, recursive clustering and occupancy merging.
pub fn run_cluster_stage(inst: &Instance, cfg: &PipelineConfig) -> Result<ClusterStage> {
    cfg.validate()?;
    inst.validate()?;
    let demand = inst.total_demand();
    let newton_cfg = NewtonConfig {
        epsilon: cfg.epsilon,
        ..NewtonConfig::default()
    };
    let newton = newton_solve(demand, &inst.fleet, &newton_cfg).map_err(|e| e.in_stage("fleet"))?;
    let plan = integerize(&newton.x, demand, &inst.fleet).map_err(|e| e.in_stage("fleet"))?;
    log::info!(
        "fleet: {} vehicles, capacity {} for demand {demand}",
        plan.vehicle_count(),
        plan.total_capacity
    );

    let opts = cfg.kmeans_options(inst);
    let tree = recursive_kmeans(
        &inst.clients,
        &plan,
        &inst.fleet,
        derive_seed(cfg.rng_seed, 1),
        &opts,
    )
    .map_err(|e| e.in_stage("cluster"))?;
    let leaves = ClusterSet::from_tree(&tree, &inst.clients).map_err(|e| e.in_stage("cluster"))?;
    log::info!(
        "cluster: {} leaves, depth {}",
        leaves.clusters.len(),
        tree.root.depth()
    );

    let policy = MergePolicy::new(cfg.min_occupancy)?;
    let (clusters, merge_log) = merge_pass(&leaves, &inst.clients, &policy, &opts.metric)
        .map_err(|e| e.in_stage("merge"))?;
    log::info!(
        "merge: {} merges, {} flagged",
        merge_log.merges().count(),
        merge_log.flagged().count()
    );

    Ok(ClusterStage {
        newton,
        plan,
        tree,
        clusters,
        merge_log,
    })
}

/// Routes a cluster set. With a road graph every leg is a shortest path in
/// it; otherwise each cluster is routed on the complete graph over the depot
/// and its members.
pub fn route_clusters(
    inst: &Instance,
    clusters: &ClusterSet,
    road_graph: Option<&RoadGraph>,
    cfg: &PipelineConfig,
) -> Result<Solution> {
    match road_graph {
        Some(g) => {
            for v in std::iter::once(DEPOT).chain(inst.clients.iter().map(|c| c.id)) {
                if !g.contains(v) {
                    return Err(Error::UnknownVertex(v).in_stage("route"));
                }
            }
            build_solution(clusters, g, cfg.exec)
        }
        None => {
            let metric = inst.metric(cfg.earth);
            let locations: HashMap<_, _> =
                inst.clients.iter().map(|c| (c.id, c.location)).collect();
            build_solution_with(clusters, cfg.exec, |c| {
                cluster_graph(c, inst.depot, &locations, &metric).map(Cow::Owned)
            })
        }
    }
    .map_err(|e| match e {
        Error::Stage { .. } => e,
        e => e.in_stage("route"),
    })
}

pub fn run_pipeline(
    inst: &Instance,
    cfg: &PipelineConfig,
    road_graph: Option<&RoadGraph>,
) -> Result<PipelineOutput> {
    let stage = run_cluster_stage(inst, cfg)?;
    let solution = route_clusters(inst, &stage.clusters, road_graph, cfg)?;
    let feasibility = check_feasibility(&solution, inst);
    if !feasibility.is_feasible() {
        log::warn!("solution has {} violation(s)", feasibility.violations.len());
    }
    Ok(PipelineOutput {
        stage,
        solution,
        feasibility,
    })
}

/// Serializable summary of a `solve` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub instance: String,
    pub seed: u64,
    pub plan: FleetPlan,
    pub supplemental_vehicles: Vec<Vehicle>,
    pub merge_log: MergeLog,
    pub solution: Solution,
    pub feasibility: FeasibilityReport,
}

impl SolveReport {
    pub fn new(inst: &Instance, cfg: &PipelineConfig, out: &PipelineOutput) -> SolveReport {
        SolveReport {
            instance: inst.name.clone(),
            seed: cfg.rng_seed,
            plan: out.stage.plan.clone(),
            supplemental_vehicles: out.stage.tree.supplemental.clone(),
            merge_log: out.stage.merge_log.clone(),
            solution: out.solution.clone(),
            feasibility: out.feasibility.clone(),
        }
    }
}

/// Serializable summary of a `cluster` run; `clusters` is readable back as a
/// [`ClusterSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub instance: String,
    pub seed: u64,
    pub plan: FleetPlan,
    pub supplemental_vehicles: Vec<Vehicle>,
    pub merge_log: MergeLog,
    #[serde(flatten)]
    pub clusters: ClusterSet,
}

impl ClusterReport {
    pub fn new(inst: &Instance, cfg: &PipelineConfig, stage: &ClusterStage) -> ClusterReport {
        ClusterReport {
            instance: inst.name.clone(),
            seed: cfg.rng_seed,
            plan: stage.plan.clone(),
            supplemental_vehicles: stage.tree.supplemental.clone(),
            merge_log: stage.merge_log.clone(),
            clusters: stage.clusters.clone(),
        }
    }
}
