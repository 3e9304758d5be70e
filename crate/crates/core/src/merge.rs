//! Occupancy repair: under-occupied clusters are folded into the nearest
//! cluster whose vehicle still has room for them.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::cluster::{Client, ClientId, PhaseTree};
use crate::error::{Error, Result};
use crate::fleet::{Vehicle, VehicleRef};
use crate::geo::{centroid, GeoPoint, Metric};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterInfo {
    pub id: usize,
    pub members: Vec<ClientId>,
    pub centroid: GeoPoint,
    pub vehicle: Vehicle,
    pub demand: u64,
}

impl ClusterInfo {
    pub fn capacity(&self) -> u64 {
        self.vehicle.capacity as u64
    }

    pub fn occupancy(&self) -> f64 {
        self.demand as f64 / self.capacity() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSet {
    pub clusters: Vec<ClusterInfo>,
}

impl ClusterSet {
    /// Leaves of the phase tree, numbered in traversal order.
    pub fn from_tree(tree: &PhaseTree, clients: &[Client]) -> Result<ClusterSet> {
        let lookup = ClientLookup::new(clients)?;
        let clusters = tree
            .root
            .leaves()
            .into_iter()
            .enumerate()
            .map(|(id, leaf)| {
                let vehicle = leaf
                    .vehicle
                    .ok_or_else(|| Error::InvalidParameter(format!("leaf {id} has no vehicle")))?;
                Ok(ClusterInfo {
                    id,
                    members: leaf.members.clone(),
                    centroid: leaf.centroid,
                    vehicle,
                    demand: lookup.demand(&leaf.members)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ClusterSet { clusters })
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        let mut vehicles = BTreeSet::new();
        for c in &self.clusters {
            if c.members.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "cluster {} is empty",
                    c.id
                )));
            }
            if c.demand > c.capacity() {
                return Err(Error::InvalidParameter(format!(
                    "cluster {} demand {} exceeds capacity {}",
                    c.id,
                    c.demand,
                    c.capacity()
                )));
            }
            if !vehicles.insert(c.vehicle.id) {
                return Err(Error::InvalidParameter(format!(
                    "vehicle {:?} assigned twice",
                    c.vehicle.id
                )));
            }
            for &m in &c.members {
                if !seen.insert(m) {
                    return Err(Error::DuplicateId(m));
                }
            }
        }
        Ok(())
    }

    /// Σ demand / Σ capacity over all clusters.
    pub fn total_occupancy(&self) -> f64 {
        let demand: u64 = self.clusters.iter().map(|c| c.demand).sum();
        let cap: u64 = self.clusters.iter().map(|c| c.capacity()).sum();
        if cap == 0 {
            0.0
        } else {
            demand as f64 / cap as f64
        }
    }

    pub fn get(&self, id: usize) -> Option<&ClusterInfo> {
        self.clusters.iter().find(|c| c.id == id)
    }
}

pub(crate) struct ClientLookup<'a> {
    by_id: HashMap<ClientId, &'a Client>,
}

impl<'a> ClientLookup<'a> {
    pub(crate) fn new(clients: &'a [Client]) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(clients.len());
        for c in clients {
            if by_id.insert(c.id, c).is_some() {
                return Err(Error::DuplicateId(c.id));
            }
        }
        Ok(ClientLookup { by_id })
    }

    pub(crate) fn get(&self, id: ClientId) -> Result<&'a Client> {
        self.by_id
            .get(&id)
            .copied()
            .ok_or_else(|| Error::InvalidParameter(format!("unknown client {id}")))
    }

    pub(crate) fn demand(&self, members: &[ClientId]) -> Result<u64> {
        members
            .iter()
            .map(|&m| self.get(m).map(|c| c.demand as u64))
            .sum()
    }

    pub(crate) fn centroid(&self, members: &[ClientId]) -> Result<GeoPoint> {
        let pts = members
            .iter()
            .map(|&m| self.get(m).map(|c| c.location))
            .collect::<Result<Vec<_>>>()?;
        centroid(&pts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergePolicy {
    pub min_occupancy: f64,
}

impl MergePolicy {
    pub fn new(min_occupancy: f64) -> Result<Self> {
        if min_occupancy > 0.0 && min_occupancy <= 1.0 {
            Ok(MergePolicy { min_occupancy })
        } else {
            Err(Error::InvalidParameter(format!(
                "min occupancy must be in (0, 1], got {min_occupancy}"
            )))
        }
    }
}

impl Default for MergePolicy {
    fn default() -> Self {
        MergePolicy { min_occupancy: 0.5 }
    }
}

/// One merge, or a flagged cluster when `to_cluster` is `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeEvent {
    pub step: usize,
    pub from_cluster: usize,
    pub to_cluster: Option<usize>,
    pub distance_km: Option<f64>,
    pub freed_vehicle: Option<VehicleRef>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MergeLog {
    pub events: Vec<MergeEvent>,
}

impl MergeLog {
    pub fn merges(&self) -> impl Iterator<Item = &MergeEvent> {
        self.events.iter().filter(|e| e.to_cluster.is_some())
    }

    pub fn flagged(&self) -> impl Iterator<Item = usize> + '_ {
        self.events
            .iter()
            .filter(|e| e.to_cluster.is_none())
            .map(|e| e.from_cluster)
    }

    pub fn to_json_lines(&self) -> Result<String> {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e)?);
            out.push('\n');
        }
        Ok(out)
    }
}

/// Lower occupancy first, then lower id. Compared exactly by cross-multiplying.
fn less_occupied(a: &ClusterInfo, b: &ClusterInfo) -> std::cmp::Ordering {
    ((a.demand * b.capacity()).cmp(&(b.demand * a.capacity()))).then(a.id.cmp(&b.id))
}

pub fn merge_pass(
    set: &ClusterSet,
    clients: &[Client],
    policy: &MergePolicy,
    metric: &Metric,
) -> Result<(ClusterSet, MergeLog)> {
    set.validate()?;
    let lookup = ClientLookup::new(clients)?;
    let mut clusters = set.clusters.clone();
    let mut flagged = BTreeSet::new();
    let mut log = MergeLog::default();

    while let Some(i) = clusters
        .iter()
        .enumerate()
        .filter(|(_, c)| c.occupancy() < policy.min_occupancy && !flagged.contains(&c.id))
        .min_by(|(_, a), (_, b)| less_occupied(a, b))
        .map(|(i, _)| i)
    {
        let small = &clusters[i];

        let absorber = clusters
            .iter()
            .enumerate()
            .filter(|(j, c)| *j != i && c.demand + small.demand <= c.capacity())
            .map(|(j, c)| (j, metric.distance(small.centroid, c.centroid)))
            .min_by(|a, b| {
                a.1.total_cmp(&b.1)
                    .then(clusters[a.0].id.cmp(&clusters[b.0].id))
            });

        let step = log.events.len();
        match absorber {
            None => {
                flagged.insert(small.id);
                log.events.push(MergeEvent {
                    step,
                    from_cluster: small.id,
                    to_cluster: None,
                    distance_km: None,
                    freed_vehicle: None,
                });
            }
            Some((j, distance)) => {
                let small = clusters[i].clone();
                let target = &mut clusters[j];
                target.members.extend_from_slice(&small.members);
                target.demand += small.demand;
                target.centroid = lookup.centroid(&target.members)?;
                log.events.push(MergeEvent {
                    step,
                    from_cluster: small.id,
                    to_cluster: Some(target.id),
                    distance_km: Some(distance),
                    freed_vehicle: Some(small.vehicle.id),
                });
                clusters.remove(i);
            }
        }
    }

    Ok((ClusterSet { clusters }, log))
}
