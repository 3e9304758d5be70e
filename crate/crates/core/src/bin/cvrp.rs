use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cvrp_core::eval::evaluate;
use cvrp_core::geo::EarthModel;
use cvrp_core::instance::{parse_instance, Instance};
use cvrp_core::merge::ClusterSet;
use cvrp_core::output::{solution_csv, solution_geojson, to_json, OutputFormat};
use cvrp_core::pipeline::{
    load_road_graph, route_clusters, run_cluster_stage, run_pipeline, ClusterReport,
    PipelineConfig, SolveReport,
};
use cvrp_core::roadgraph::RoadGraph;
use cvrp_core::route::{check_feasibility, Solution};
use cvrp_core::{Execution, DEPOT};

/// Any error surfaced by the binary; exit code 1.
struct Fail(String);

impl<E: std::fmt::Display> From<E> for Fail {
    fn from(e: E) -> Self {
        Fail(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "cvrp",
    version,
    about = "Cluster-first route-second CVRP solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline on an instance.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Write the phase tree as JSON to this path.
        #[arg(long)]
        dump_tree: Option<PathBuf>,
    },
    /// Fleet sizing, recursive clustering and merging only.
    Cluster {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dump_tree: Option<PathBuf>,
    },
    /// Route a cluster file produced by `cluster`.
    Route {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        clusters: PathBuf,
    },
    /// Re-evaluate a solution produced by `solve` or `route`.
    Eval {
        #[command(flatten)]
        common: Common,
        solution: PathBuf,
        /// Compare each route with the exact tour oracle.
        #[arg(long)]
        oracle: bool,
    },
}

#[derive(Args)]
struct Common {
    /// Instance file (JSON or TSPLIB/CVRPLIB text).
    instance: PathBuf,
    #[arg(long, env = "CVRP_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.5)]
    min_occupancy: f64,
    #[arg(long, default_value_t = cvrp_core::geo::MEAN_EARTH_RADIUS_KM)]
    radius_km: f64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    /// Road graph JSON; overrides the instance's `road_graph`.
    #[arg(long)]
    road_graph: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: OutputFormat,
    /// Write output here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Disable data-parallel execution.
    #[arg(long)]
    sequential: bool,
}

impl Common {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            rng_seed: self.seed,
            epsilon: self.epsilon,
            min_occupancy: self.min_occupancy,
            earth: EarthModel {
                radius_km: self.radius_km,
            },
            kmeans_max_iter: self.max_iter,
            format: self.format,
            exec: if self.sequential {
                Execution::Sequential
            } else {
                Execution::default()
            },
        }
    }

    fn load(&self) -> Result<(Instance, Option<RoadGraph>), Fail> {
        let inst = parse_instance(&self.instance)?;
        let path = self.road_graph.clone().or_else(|| inst.road_graph.clone());
        let graph = path.map(|p| load_road_graph(&p)).transpose()?;
        Ok((inst, graph))
    }

    fn emit(&self, text: &str) -> Result<(), Fail> {
        match &self.output {
            Some(p) => std::fs::write(p, text)?,
            None => std::io::stdout().write_all(text.as_bytes())?,
        }
        Ok(())
    }
}

fn render_solution<T: serde::Serialize>(
    common: &Common,
    report: &T,
    solution: &Solution,
    inst: &Instance,
    graph: Option<&RoadGraph>,
) -> Result<String, Fail> {
    Ok(match common.format {
        OutputFormat::Json => to_json(report)?,
        OutputFormat::Csv => solution_csv(solution),
        OutputFormat::Geojson => {
            let locate = |v| {
                graph.and_then(|g| g.location(v)).or_else(|| {
                    if v == DEPOT {
                        Some(inst.depot)
                    } else {
                        inst.clients.iter().find(|c| c.id == v).map(|c| c.location)
                    }
                })
            };
            to_json(&solution_geojson(solution, locate)?)?
        }
    })
}

fn write_tree(path: &Path, tree: &cvrp_core::cluster::PhaseTree) -> Result<(), Fail> {
    let text = to_json(&tree.root)?;
    if path.as_os_str() == "-" {
        std::io::stderr().write_all(text.as_bytes())?;
    } else {
        std::fs::write(path, text)?;
    }
    Ok(())
}

fn exit_for(feasible: bool) -> ExitCode {
    if feasible {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn run(cli: Cli) -> Result<ExitCode, Fail> {
    match cli.command {
        Command::Solve { common, dump_tree } => {
            let (inst, graph) = common.load()?;
            let cfg = common.config();
            let out = run_pipeline(&inst, &cfg, graph.as_ref())?;
            if let Some(p) = &dump_tree {
                write_tree(p, &out.stage.tree)?;
            }
            let report = SolveReport::new(&inst, &cfg, &out);
            common.emit(&render_solution(
                &common,
                &report,
                &out.solution,
                &inst,
                graph.as_ref(),
            )?)?;
            if !out.feasibility.is_feasible() {
                eprintln!("{}", to_json(&out.feasibility)?);
            }
            Ok(exit_for(out.feasibility.is_feasible()))
        }
        Command::Cluster { common, dump_tree } => {
            let (inst, _) = common.load()?;
            let cfg = common.config();
            let stage = run_cluster_stage(&inst, &cfg)?;
            if let Some(p) = &dump_tree {
                write_tree(p, &stage.tree)?;
            }
            common.emit(&to_json(&ClusterReport::new(&inst, &cfg, &stage))?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Route { common, clusters } => {
            let (inst, graph) = common.load()?;
            let cfg = common.config();
            let set: ClusterSet = serde_json::from_str(&std::fs::read_to_string(&clusters)?)?;
            set.validate()?;
            let solution = route_clusters(&inst, &set, graph.as_ref(), &cfg)?;
            let feasibility = check_feasibility(&solution, &inst);
            common.emit(&render_solution(
                &common,
                &solution,
                &solution,
                &inst,
                graph.as_ref(),
            )?)?;
            if !feasibility.is_feasible() {
                eprintln!("{}", to_json(&feasibility)?);
            }
            Ok(exit_for(feasibility.is_feasible()))
        }
        Command::Eval {
            common,
            solution,
            oracle,
        } => {
            let (inst, graph) = common.load()?;
            let value: serde_json::Value =
                serde_json::from_str(&std::fs::read_to_string(&solution)?)?;
            let value = value.get("solution").cloned().unwrap_or(value);
            let solution: Solution = serde_json::from_value(value)?;
            let earth = EarthModel::new(common.radius_km)?;
            let report = evaluate(&inst, &solution, graph.as_ref(), earth, oracle)?;
            common.emit(&to_json(&report)?)?;
            Ok(exit_for(report.passed()))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(Fail(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
