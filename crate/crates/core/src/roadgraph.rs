//! Weighted location graph and Dijkstra single-source shortest paths.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{GeoPoint, Metric};

pub type VertexId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: VertexId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lon: Option<f64>,
}

impl Vertex {
    pub fn location(&self) -> Option<GeoPoint> {
        Some(GeoPoint {
            lat: self.lat?,
            lon: self.lon?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub w: f64,
}

/// On-disk graph document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadGraphFile {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    #[serde(default)]
    pub directed: bool,
}

/// A validated graph: unique vertex ids, no self edges, no negative weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RoadGraphFile", into = "RoadGraphFile")]
pub struct RoadGraph {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    directed: bool,
    index: HashMap<VertexId, usize>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl TryFrom<RoadGraphFile> for RoadGraph {
    type Error = Error;

    fn try_from(f: RoadGraphFile) -> Result<Self> {
        RoadGraph::new(f.vertices, f.edges, f.directed)
    }
}

impl From<RoadGraph> for RoadGraphFile {
    fn from(g: RoadGraph) -> Self {
        RoadGraphFile {
            vertices: g.vertices,
            edges: g.edges,
            directed: g.directed,
        }
    }
}

impl RoadGraph {
    pub fn new(vertices: Vec<Vertex>, edges: Vec<Edge>, directed: bool) -> Result<Self> {
        let mut index = HashMap::with_capacity(vertices.len());
        for (i, v) in vertices.iter().enumerate() {
            if index.insert(v.id, i).is_some() {
                return Err(Error::DuplicateId(v.id));
            }
        }
        let mut adjacency = vec![Vec::new(); vertices.len()];
        for e in &edges {
            if e.u == e.v {
                return Err(Error::SelfEdge(e.u));
            }
            if e.w.is_nan() || e.w < 0.0 {
                return Err(Error::NegativeEdge {
                    u: e.u,
                    v: e.v,
                    weight: e.w,
                });
            }
            let u = *index.get(&e.u).ok_or(Error::UnknownVertex(e.u))?;
            let v = *index.get(&e.v).ok_or(Error::UnknownVertex(e.v))?;
            adjacency[u].push((v, e.w));
            if !directed {
                adjacency[v].push((u, e.w));
            }
        }
        Ok(RoadGraph {
            vertices,
            edges,
            directed,
            index,
            adjacency,
        })
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, id: VertexId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn index_of(&self, id: VertexId) -> Result<usize> {
        self.index.get(&id).copied().ok_or(Error::UnknownVertex(id))
    }

    pub fn id_at(&self, idx: usize) -> VertexId {
        self.vertices[idx].id
    }

    pub fn location(&self, id: VertexId) -> Option<GeoPoint> {
        self.index
            .get(&id)
            .and_then(|&i| self.vertices[i].location())
    }

    /// Cheapest direct arc from `u` to `v`, if any.
    pub fn arc_weight(&self, u: VertexId, v: VertexId) -> Result<Option<f64>> {
        let ui = self.index_of(u)?;
        let vi = self.index_of(v)?;
        Ok(self.adjacency[ui]
            .iter()
            .filter(|(t, _)| *t == vi)
            .map(|&(_, w)| w)
            .min_by(f64::total_cmp))
    }

    pub(crate) fn neighbors(&self, idx: usize) -> &[(usize, f64)] {
        &self.adjacency[idx]
    }
}

/// Undirected complete graph weighted by `metric`.
pub fn complete_graph_from_points(
    points: &[(VertexId, GeoPoint)],
    metric: &Metric,
) -> Result<RoadGraph> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let vertices: Vec<Vertex> = points
        .iter()
        .map(|&(id, p)| Vertex {
            id,
            lat: Some(p.lat),
            lon: Some(p.lon),
        })
        .collect();
    let mut edges = Vec::with_capacity(points.len() * (points.len() - 1) / 2);
    for (i, &(u, a)) in points.iter().enumerate() {
        for &(v, b) in &points[i + 1..] {
            edges.push(Edge {
                u,
                v,
                w: metric.distance(a, b),
            });
        }
    }
    RoadGraph::new(vertices, edges, false)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Dist(f64);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Counters from one Dijkstra run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DijkstraStats {
    pub pushes: usize,
    pub pops: usize,
    pub stale_pops: usize,
    /// Distances in the order vertices were settled.
    pub settled: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ShortestPathResult<'g> {
    graph: &'g RoadGraph,
    source: usize,
    dist: Vec<f64>,
    prev: Vec<Option<usize>>,
}

impl<'g> ShortestPathResult<'g> {
    pub fn source(&self) -> VertexId {
        self.graph.id_at(self.source)
    }

    pub fn graph(&self) -> &'g RoadGraph {
        self.graph
    }

    /// `f64::INFINITY` for unreachable vertices.
    pub fn dist(&self, v: VertexId) -> Result<f64> {
        Ok(self.dist[self.graph.index_of(v)?])
    }

    pub fn prev(&self, v: VertexId) -> Result<Option<VertexId>> {
        Ok(self.prev[self.graph.index_of(v)?].map(|i| self.graph.id_at(i)))
    }

    pub fn is_reachable(&self, v: VertexId) -> Result<bool> {
        Ok(self.dist(v)?.is_finite())
    }

    /// Distances in graph vertex order.
    pub fn distances(&self) -> &[f64] {
        &self.dist
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut dist = BTreeMap::new();
        let mut prev = BTreeMap::new();
        for (i, v) in self.graph.vertices.iter().enumerate() {
            let d = self.dist[i];
            let value = if d.is_finite() {
                serde_json::json!(d)
            } else {
                serde_json::json!("unreachable")
            };
            dist.insert(v.id.to_string(), value);
            if let Some(p) = self.prev[i] {
                prev.insert(v.id.to_string(), self.graph.id_at(p));
            }
        }
        serde_json::json!({ "source": self.source(), "dist": dist, "prev": prev })
    }
}

pub fn dijkstra(g: &RoadGraph, source: VertexId) -> Result<ShortestPathResult<'_>> {
    dijkstra_with_stats(g, source).map(|(r, _)| r)
}

/// Binary-heap Dijkstra with lazy deletion: stale heap entries are skipped
/// on pop instead of being decreased in place.
pub fn dijkstra_with_stats(
    g: &RoadGraph,
    source: VertexId,
) -> Result<(ShortestPathResult<'_>, DijkstraStats)> {
    let s = g.index_of(source)?;
    let n = g.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    let mut stats = DijkstraStats::default();

    dist[s] = 0.0;
    heap.push(Reverse((Dist(0.0), s)));
    stats.pushes += 1;

    while let Some(Reverse((Dist(d), u))) = heap.pop() {
        stats.pops += 1;
        if done[u] || d > dist[u] {
            stats.stale_pops += 1;
            continue;
        }
        done[u] = true;
        stats.settled.push(d);
        for &(v, w) in g.neighbors(u) {
            let alt = d + w;
            if alt < dist[v] {
                dist[v] = alt;
                prev[v] = Some(u);
                heap.push(Reverse((Dist(alt), v)));
                stats.pushes += 1;
            }
        }
    }

    Ok((
        ShortestPathResult {
            graph: g,
            source: s,
            dist,
            prev,
        },
        stats,
    ))
}

/// Vertex sequence from the source to `target`.
pub fn reconstruct_path(r: &ShortestPathResult<'_>, target: VertexId) -> Result<Vec<VertexId>> {
    let t = r.graph.index_of(target)?;
    if !r.dist[t].is_finite() {
        return Err(Error::NoPath {
            from: r.source(),
            to: target,
        });
    }
    let mut path = vec![target];
    let mut cur = t;
    while let Some(p) = r.prev[cur] {
        path.push(r.graph.id_at(p));
        cur = p;
    }
    path.reverse();
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: u32, edges: &[(u32, u32, f64)], directed: bool) -> RoadGraph {
        let vertices = (0..n)
            .map(|id| Vertex {
                id,
                lat: None,
                lon: None,
            })
            .collect();
        let edges = edges.iter().map(|&(u, v, w)| Edge { u, v, w }).collect();
        RoadGraph::new(vertices, edges, directed).unwrap()
    }

    #[test]
    fn source_is_zero_without_predecessor() {
        let g = graph(3, &[(0, 1, 1.0)], false);
        let r = dijkstra(&g, 2).unwrap();
        assert_eq!(r.dist(2).unwrap(), 0.0);
        assert_eq!(r.prev(2).unwrap(), None);
        assert_eq!(r.dist(0).unwrap(), f64::INFINITY);
        assert_eq!(reconstruct_path(&r, 2).unwrap(), vec![2]);
    }

    #[test]
    fn path_graph() {
        let g = graph(3, &[(0, 1, 1.0), (1, 2, 2.0)], false);
        let r = dijkstra(&g, 0).unwrap();
        assert_eq!(r.dist(2).unwrap(), 3.0);
        assert_eq!(r.prev(2).unwrap(), Some(1));
        assert_eq!(reconstruct_path(&r, 2).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn directed_edges_are_one_way() {
        let g = graph(2, &[(0, 1, 1.0)], true);
        assert_eq!(dijkstra(&g, 0).unwrap().dist(1).unwrap(), 1.0);
        let back = dijkstra(&g, 1).unwrap();
        assert!(matches!(
            reconstruct_path(&back, 0),
            Err(Error::NoPath { from: 1, to: 0 })
        ));
    }

    #[test]
    fn construction_errors() {
        let v = |id| Vertex {
            id,
            lat: None,
            lon: None,
        };
        let e = |u, v, w| Edge { u, v, w };
        assert!(matches!(
            RoadGraph::new(vec![v(0), v(1)], vec![e(0, 1, -1.0)], false),
            Err(Error::NegativeEdge { .. })
        ));
        assert!(matches!(
            RoadGraph::new(vec![v(0), v(0)], vec![], false),
            Err(Error::DuplicateId(0))
        ));
        assert!(matches!(
            RoadGraph::new(vec![v(0)], vec![e(0, 0, 1.0)], false),
            Err(Error::SelfEdge(0))
        ));
        assert!(matches!(
            RoadGraph::new(vec![v(0)], vec![e(0, 7, 1.0)], false),
            Err(Error::UnknownVertex(7))
        ));
        let g = graph(1, &[], false);
        assert!(matches!(dijkstra(&g, 5), Err(Error::UnknownVertex(5))));
    }

    #[test]
    fn complete_graph_sizes_and_weights() {
        let m = Metric::default();
        let pts = [(
            0,
            GeoPoint {
                lat: 33.9,
                lon: 35.5,
            },
        )];
        assert!(complete_graph_from_points(&pts, &m)
            .unwrap()
            .edges()
            .is_empty());

        let pts: Vec<(u32, GeoPoint)> = (0..7)
            .map(|i| {
                (
                    i,
                    GeoPoint {
                        lat: 33.0 + i as f64 * 0.1,
                        lon: 35.0 + (i * i) as f64 * 0.01,
                    },
                )
            })
            .collect();
        let g = complete_graph_from_points(&pts, &m).unwrap();
        assert_eq!(g.edges().len(), 7 * 6 / 2);
        for e in g.edges() {
            let (a, b) = (pts[e.u as usize].1, pts[e.v as usize].1);
            assert_eq!(e.w, crate::geo::haversine(a, b, Default::default()));
            assert_eq!(g.arc_weight(e.v, e.u).unwrap(), Some(e.w));
        }
        let dup = [(1, pts[0].1), (1, pts[1].1)];
        assert!(matches!(
            complete_graph_from_points(&dup, &m),
            Err(Error::DuplicateId(1))
        ));
    }

    #[test]
    fn json_marks_unreachable() {
        let g = graph(3, &[(0, 1, 1.5)], false);
        let j = dijkstra(&g, 0).unwrap().to_json();
        assert_eq!(j["dist"]["2"], "unreachable");
        assert_eq!(j["dist"]["1"], 1.5);
        assert_eq!(j["prev"]["1"], 0);
    }

    #[test]
    fn graph_file_round_trip() {
        let text = r#"{"vertices":[{"id":0,"lat":1.0,"lon":2.0},{"id":5}],"edges":[{"u":0,"v":5,"w":2.5}],"directed":false}"#;
        let g: RoadGraph = serde_json::from_str(text).unwrap();
        assert_eq!(g.location(0), Some(GeoPoint { lat: 1.0, lon: 2.0 }));
        assert_eq!(g.location(5), None);
        let back: RoadGraph = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
        let bad = r#"{"vertices":[{"id":0},{"id":1}],"edges":[{"u":0,"v":1,"w":-2}]}"#;
        assert!(serde_json::from_str::<RoadGraph>(bad).is_err());
    }

    #[test]
    fn settled_distances_are_monotone() {
        let g = graph(
            6,
            &[
                (0, 1, 7.0),
                (0, 2, 9.0),
                (0, 5, 14.0),
                (1, 2, 10.0),
                (1, 3, 15.0),
                (2, 3, 11.0),
                (2, 5, 2.0),
                (3, 4, 6.0),
                (4, 5, 9.0),
            ],
            false,
        );
        let (r, stats) = dijkstra_with_stats(&g, 0).unwrap();
        assert!(stats.settled.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(stats.settled.len(), 6);
        assert_eq!(stats.pops, stats.pushes);
        assert_eq!(r.dist(4).unwrap(), 20.0);
    }
}
