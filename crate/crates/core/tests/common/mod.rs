//! Seeded generators shared by the integration suites.
#![allow(dead_code)]

use cvrp_core::cluster::Client;
use cvrp_core::fleet::{FleetSpec, Vehicle, VehicleRef};
use cvrp_core::geo::{centroid, GeoPoint};
use cvrp_core::instance::{DistanceMode, Instance};
use cvrp_core::merge::{ClusterInfo, ClusterSet};
use cvrp_core::roadgraph::{Edge, RoadGraph, Vertex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random graph on `2..=max_n` vertices with integer weights 1-10.
/// Edge density varies with the seed, so some graphs are disconnected.
pub fn random_graph(seed: u64, max_n: u32, directed: bool) -> RoadGraph {
    let mut r = rng(seed);
    let n = r.gen_range(2..=max_n);
    let density = [0.1, 0.25, 0.5, 0.9][r.gen_range(0..4)];
    let vertices = (0..n)
        .map(|id| Vertex {
            id,
            lat: None,
            lon: None,
        })
        .collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u == v || (!directed && v < u) {
                continue;
            }
            if r.gen_bool(density) {
                edges.push(Edge {
                    u,
                    v,
                    w: r.gen_range(1..=10) as f64,
                });
            }
        }
    }
    RoadGraph::new(vertices, edges, directed).unwrap()
}

/// Connected undirected graph: a random spanning tree plus extra edges.
pub fn connected_graph(seed: u64, n: u32) -> RoadGraph {
    let mut r = rng(seed);
    let vertices = (0..n)
        .map(|id| Vertex {
            id,
            lat: None,
            lon: None,
        })
        .collect();
    let mut order: Vec<u32> = (0..n).collect();
    order.shuffle(&mut r);
    let mut edges = Vec::new();
    for i in 1..order.len() {
        let parent = order[r.gen_range(0..i)];
        edges.push(Edge {
            u: parent,
            v: order[i],
            w: r.gen_range(1..=10) as f64,
        });
    }
    for _ in 0..n {
        let (u, v) = (r.gen_range(0..n), r.gen_range(0..n));
        if u != v {
            edges.push(Edge {
                u,
                v,
                w: r.gen_range(1..=10) as f64,
            });
        }
    }
    RoadGraph::new(vertices, edges, false).unwrap()
}

pub fn random_points(seed: u64, n: usize) -> Vec<(u32, GeoPoint)> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| {
            (
                i as u32 + 1,
                GeoPoint {
                    lat: r.gen_range(33.0..35.0),
                    lon: r.gen_range(35.0..36.0),
                },
            )
        })
        .collect()
}

/// Clients scattered around a few hot spots in a city-sized box.
pub fn random_clients(seed: u64, n: usize, max_demand: u32) -> Vec<Client> {
    let mut r = rng(seed);
    let spots: Vec<GeoPoint> = (0..r.gen_range(1..=4))
        .map(|_| GeoPoint {
            lat: r.gen_range(33.7..34.1),
            lon: r.gen_range(35.4..35.8),
        })
        .collect();
    (0..n)
        .map(|i| {
            let s = spots[r.gen_range(0..spots.len())];
            Client {
                id: i as u32 + 1,
                location: GeoPoint {
                    lat: s.lat + r.gen_range(-0.05..0.05),
                    lon: s.lon + r.gen_range(-0.05..0.05),
                },
                demand: if r.gen_bool(0.7) {
                    1
                } else {
                    r.gen_range(1..=max_demand)
                },
            }
        })
        .collect()
}

pub fn random_fleet(seed: u64) -> FleetSpec {
    let mut r = rng(seed);
    let mut pool = [3u32, 4, 5, 6, 8, 10, 12];
    pool.shuffle(&mut r);
    let t = r.gen_range(1..=3);
    let mut caps = pool[..t].to_vec();
    caps.sort();
    FleetSpec::unbounded(&caps)
}

pub fn random_instance(seed: u64, n: usize) -> Instance {
    Instance {
        name: format!("random-{seed}"),
        depot: GeoPoint {
            lat: 33.8938,
            lon: 35.5018,
        },
        clients: random_clients(seed, n, 3),
        fleet: random_fleet(seed ^ 0xF1EE7),
        distance_mode: DistanceMode::Geo,
        road_graph: None,
    }
}

/// A valid cluster set with varied occupancy, plus its clients.
pub fn random_cluster_set(seed: u64) -> (ClusterSet, Vec<Client>) {
    let mut r = rng(seed);
    let k = r.gen_range(2..=10);
    let mut clients = Vec::new();
    let mut clusters = Vec::new();
    let mut next_id = 1u32;
    for id in 0..k {
        let capacity = r.gen_range(4..=12u32);
        let center = GeoPoint {
            lat: r.gen_range(33.7..34.1),
            lon: r.gen_range(35.4..35.8),
        };
        let target = r.gen_range(1..=capacity);
        let mut demand = 0u64;
        let mut members = Vec::new();
        let mut pts = Vec::new();
        while demand < target as u64 {
            let d = r.gen_range(1..=(target as u64 - demand).min(3)) as u32;
            let p = GeoPoint {
                lat: center.lat + r.gen_range(-0.02..0.02),
                lon: center.lon + r.gen_range(-0.02..0.02),
            };
            clients.push(Client {
                id: next_id,
                location: p,
                demand: d,
            });
            members.push(next_id);
            pts.push(p);
            next_id += 1;
            demand += d as u64;
        }
        clusters.push(ClusterInfo {
            id,
            members,
            centroid: centroid(&pts).unwrap(),
            vehicle: Vehicle {
                id: VehicleRef {
                    type_id: 0,
                    index: id as u32,
                },
                capacity,
            },
            demand,
        });
    }
    (ClusterSet { clusters }, clients)
}
