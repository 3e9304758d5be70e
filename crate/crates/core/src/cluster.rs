//! K-Means over geolocations and the recursive bisecting variant.
//!
//! [`recursive_kmeans`] builds a phase tree: the root holds every client,
//! each internal node is split in two by a k=2 Lloyd run, and a node stops
//! splitting as soon as its demand fits a remaining vehicle. Leaves are the
//! vehicle-assigned clusters handed to routing.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fleet::{FleetPlan, FleetSpec, Vehicle, VehicleRef};
use crate::geo::{centroid, GeoPoint, Metric};
use crate::par::{self, Execution};
use crate::rng::{derive_seed, seeded};

pub type ClientId = u32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Client {
    pub id: ClientId,
    #[serde(flatten)]
    pub location: GeoPoint,
    #[serde(default = "unit_demand")]
    pub demand: u32,
}

fn unit_demand() -> u32 {
    1
}

impl Client {
    pub fn new(id: ClientId, location: GeoPoint) -> Self {
        Client {
            id,
            location,
            demand: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansOptions {
    pub max_iter: usize,
    pub metric: Metric,
    pub exec: Execution,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        KMeansOptions {
            max_iter: 100,
            metric: Metric::default(),
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    /// `(id, cluster)` in input order.
    pub assignments: Vec<(ClientId, usize)>,
    pub centroids: Vec<GeoPoint>,
    /// Sum of squared distances to the assigned centroid.
    pub objective_j: f64,
    /// Number of centroid updates performed.
    pub iterations: usize,
    /// Objective after every assignment pass.
    pub history: Vec<f64>,
    /// Point-to-centroid distance evaluations, `passes * n * k`.
    pub distance_evaluations: u64,
    /// True when a cluster stayed empty after two consecutive re-seeds.
    pub degenerate: bool,
}

impl KMeansResult {
    pub fn labels(&self) -> impl Iterator<Item = usize> + '_ {
        self.assignments.iter().map(|&(_, c)| c)
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centroids.len()];
        for c in self.labels() {
            sizes[c] += 1;
        }
        sizes
    }
}

/// Nearest centroid, ties to the lowest index.
fn nearest(metric: &Metric, p: GeoPoint, centroids: &[GeoPoint]) -> (usize, f64) {
    let mut best = (0, metric.distance(p, centroids[0]));
    for (j, &c) in centroids.iter().enumerate().skip(1) {
        let d = metric.distance(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Lloyd's algorithm with seeded initialization.
pub fn kmeans(
    points: &[(ClientId, GeoPoint)],
    k: usize,
    rng_seed: u64,
    opts: &KMeansOptions,
) -> Result<KMeansResult> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if k == 0 || k > points.len() {
        return Err(Error::InvalidParameter(format!(
            "k = {k} must be in [1, {}]",
            points.len()
        )));
    }
    let metric = opts.metric;
    let n = points.len();
    let mut rng = seeded(rng_seed);
    let mut centroids: Vec<GeoPoint> = sample(&mut rng, n, k)
        .into_iter()
        .map(|i| points[i].1)
        .collect();

    let mut previous: Option<Vec<usize>> = None;
    let mut history = Vec::new();
    let mut updates = 0;
    let mut evaluations = 0u64;
    let mut empty_streak = 0;
    let mut degenerate = false;

    let labels = loop {
        let nearest_all = par::map(opts.exec, points, |&(_, p)| nearest(&metric, p, &centroids));
        evaluations += (n * k) as u64;
        let labels: Vec<usize> = nearest_all.iter().map(|&(j, _)| j).collect();
        history.push(nearest_all.iter().map(|&(_, d)| d * d).sum::<f64>());

        let mut members: Vec<Vec<GeoPoint>> = vec![Vec::new(); k];
        for (&(_, p), &j) in points.iter().zip(&labels) {
            members[j].push(p);
        }
        let empty: Vec<usize> = (0..k).filter(|&j| members[j].is_empty()).collect();

        if empty.is_empty() {
            empty_streak = 0;
            if previous.as_ref() == Some(&labels) || updates >= opts.max_iter {
                break labels;
            }
        } else {
            if empty_streak >= 2 || updates >= opts.max_iter {
                degenerate = empty_streak >= 2;
                break labels;
            }
            empty_streak += 1;
        }

        for j in 0..k {
            if !members[j].is_empty() {
                centroids[j] = centroid(&members[j])?;
            }
        }
        // Re-seed each empty cluster at the point farthest from its centroid.
        let mut taken = vec![false; n];
        for &j in &empty {
            let far = nearest_all
                .iter()
                .enumerate()
                .filter(|(i, _)| !taken[*i])
                .fold(None::<(usize, f64)>, |acc, (i, &(_, d))| match acc {
                    Some((_, bd)) if bd >= d => acc,
                    _ => Some((i, d)),
                });
            if let Some((i, _)) = far {
                taken[i] = true;
                centroids[j] = points[i].1;
            }
        }
        previous = Some(labels);
        updates += 1;
    };

    Ok(KMeansResult {
        assignments: points.iter().map(|&(id, _)| id).zip(labels).collect(),
        centroids,
        objective_j: *history.last().expect("at least one pass"),
        iterations: updates,
        history,
        distance_evaluations: evaluations,
        degenerate,
    })
}

/// One node of the recursive clustering tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseNode {
    pub members: Vec<ClientId>,
    pub centroid: GeoPoint,
    pub left: Option<Box<PhaseNode>>,
    pub right: Option<Box<PhaseNode>>,
    pub vehicle: Option<Vehicle>,
}

impl PhaseNode {
    pub fn is_leaf(&self) -> bool {
        self.left.is_none() && self.right.is_none()
    }

    /// Leaves in traversal order (right subtree first).
    pub fn leaves(&self) -> Vec<&PhaseNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            if node.is_leaf() {
                out.push(node);
            } else {
                stack.extend(node.left.as_deref());
                stack.extend(node.right.as_deref());
            }
        }
        out
    }

    pub fn depth(&self) -> usize {
        1 + self
            .left
            .iter()
            .chain(self.right.iter())
            .map(|c| c.depth())
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTree {
    pub root: PhaseNode,
    /// Vehicles drawn from the fleet beyond the plan when the planned pool
    /// could not cover a node.
    pub supplemental: Vec<Vehicle>,
    /// Total distance evaluations over every Lloyd run in the tree.
    pub distance_evaluations: u64,
    /// Bisections that fell back to a median-latitude split.
    pub median_splits: usize,
}

struct Builder<'a> {
    clients: &'a [Client],
    fleet: &'a FleetSpec,
    pool: Vec<Vehicle>,
    used_per_type: BTreeMap<usize, u32>,
    supplemental: Vec<Vehicle>,
    opts: &'a KMeansOptions,
    evaluations: u64,
    median_splits: usize,
}

impl Builder<'_> {
    fn demand(&self, members: &[usize]) -> u64 {
        members.iter().map(|&i| self.clients[i].demand as u64).sum()
    }

    /// Smallest pooled vehicle with room for `demand`; ties by id.
    fn take_best_fit(&mut self, demand: u64) -> Option<Vehicle> {
        let pos = self
            .pool
            .iter()
            .enumerate()
            .filter(|(_, v)| v.capacity as u64 >= demand)
            .min_by_key(|(_, v)| (v.capacity, v.id))
            .map(|(i, _)| i)?;
        Some(self.pool.remove(pos))
    }

    /// Draws an extra vehicle of the smallest type that fits, if the fleet allows it.
    fn draw_supplemental(&mut self, demand: u64) -> Option<Vehicle> {
        let ty = self
            .fleet
            .types
            .iter()
            .filter(|t| t.capacity as u64 >= demand)
            .filter(|t| match t.max_count {
                Some(m) => self.used_per_type.get(&t.id).copied().unwrap_or(0) < m,
                None => true,
            })
            .min_by_key(|t| (t.capacity, t.id))?;
        let used = self.used_per_type.entry(ty.id).or_insert(0);
        let v = Vehicle {
            id: VehicleRef {
                type_id: ty.id,
                index: *used,
            },
            capacity: ty.capacity,
        };
        *used += 1;
        self.supplemental.push(v);
        Some(v)
    }

    fn leaf(&self, members: &[usize], vehicle: Vehicle) -> Result<PhaseNode> {
        Ok(PhaseNode {
            members: members.iter().map(|&i| self.clients[i].id).collect(),
            centroid: self.centroid(members)?,
            left: None,
            right: None,
            vehicle: Some(vehicle),
        })
    }

    fn centroid(&self, members: &[usize]) -> Result<GeoPoint> {
        let pts: Vec<GeoPoint> = members.iter().map(|&i| self.clients[i].location).collect();
        centroid(&pts)
    }

    fn build(&mut self, members: Vec<usize>, seed: u64) -> Result<PhaseNode> {
        let demand = self.demand(&members);
        let largest = self.pool.iter().map(|v| v.capacity as u64).max();

        if largest.is_some_and(|c| demand <= c) {
            let v = self.take_best_fit(demand).expect("largest vehicle fits");
            return self.leaf(&members, v);
        }
        if self.pool.is_empty() || members.len() == 1 {
            if let Some(v) = self.draw_supplemental(demand) {
                log::debug!("drew supplemental vehicle {:?} for demand {demand}", v.id);
                return self.leaf(&members, v);
            }
            if members.len() == 1 {
                let c = &self.clients[members[0]];
                return Err(Error::UnassignableClient {
                    client: c.id,
                    demand: c.demand,
                });
            }
        }

        let (right, left) = self.bisect(&members, seed)?;
        let centroid = self.centroid(&members)?;
        let right = self.build(right, derive_seed(seed, 1))?;
        let left = self.build(left, derive_seed(seed, 2))?;
        Ok(PhaseNode {
            members: members.iter().map(|&i| self.clients[i].id).collect(),
            centroid,
            left: Some(Box::new(left)),
            right: Some(Box::new(right)),
            vehicle: None,
        })
    }

    fn bisect(&mut self, members: &[usize], seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
        let points: Vec<(ClientId, GeoPoint)> = members
            .iter()
            .map(|&i| (self.clients[i].id, self.clients[i].location))
            .collect();
        let result = kmeans(&points, 2, seed, self.opts)?;
        self.evaluations += result.distance_evaluations;

        let (mut a, mut b) = (Vec::new(), Vec::new());
        for (&m, label) in members.iter().zip(result.labels()) {
            if label == 0 {
                a.push(m)
            } else {
                b.push(m)
            }
        }
        if !a.is_empty() && !b.is_empty() {
            return Ok((a, b));
        }

        // Coincident points: fall back to a median-latitude split.
        self.median_splits += 1;
        let mut sorted = members.to_vec();
        sorted.sort_by(|&x, &y| {
            let (p, q) = (&self.clients[x], &self.clients[y]);
            p.location
                .lat
                .total_cmp(&q.location.lat)
                .then(p.location.lon.total_cmp(&q.location.lon))
                .then(p.id.cmp(&q.id))
        });
        let upper = sorted.split_off(sorted.len() / 2);
        if sorted.is_empty() || upper.is_empty() {
            return Err(Error::DegenerateGeometry {
                members: members.len(),
            });
        }
        Ok((sorted, upper))
    }
}

/// Recursive bisecting K-Means producing the phase tree.
pub fn recursive_kmeans(
    clients: &[Client],
    plan: &FleetPlan,
    fleet: &FleetSpec,
    rng_seed: u64,
    opts: &KMeansOptions,
) -> Result<PhaseTree> {
    if clients.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let demand: u64 = clients.iter().map(|c| c.demand as u64).sum();
    if plan.total_capacity < demand {
        return Err(Error::InsufficientFleet {
            available: plan.total_capacity,
            demand,
        });
    }
    let mut builder = Builder {
        clients,
        fleet,
        pool: plan.vehicles(),
        used_per_type: plan.counts.iter().map(|c| (c.type_id, c.count)).collect(),
        supplemental: Vec::new(),
        opts,
        evaluations: 0,
        median_splits: 0,
    };
    let root = builder.build((0..clients.len()).collect(), rng_seed)?;
    Ok(PhaseTree {
        root,
        supplemental: builder.supplemental,
        distance_evaluations: builder.evaluations,
        median_splits: builder.median_splits,
    })
}
