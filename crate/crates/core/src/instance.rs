//! Problem instances: the JSON schema and TSPLIB/CVRPLIB-style text.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cluster::Client;
use crate::error::{Error, Result};
use crate::fleet::{FleetSpec, VehicleType};
use crate::geo::{EarthModel, GeoPoint, Metric};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMode {
    /// Latitude/longitude with haversine distances.
    #[default]
    Geo,
    /// Cartesian coordinates (`lon` = x, `lat` = y) with Euclidean distances.
    Planar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: String,
    /// Vertex 0.
    pub depot: GeoPoint,
    pub clients: Vec<Client>,
    pub fleet: FleetSpec,
    pub distance_mode: DistanceMode,
    pub road_graph: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FleetEntry {
    capacity: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    count: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct InstanceFile {
    name: String,
    depot: GeoPoint,
    clients: Vec<Client>,
    fleet: Vec<FleetEntry>,
    #[serde(default)]
    distance_mode: DistanceMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    road_graph: Option<PathBuf>,
}

impl Instance {
    pub fn metric(&self, earth: EarthModel) -> Metric {
        match self.distance_mode {
            DistanceMode::Geo => Metric::geo(earth),
            DistanceMode::Planar => Metric::Planar,
        }
    }

    pub fn total_demand(&self) -> u64 {
        self.clients.iter().map(|c| c.demand as u64).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInstance(m));
        if self.clients.is_empty() {
            return bad("instance has no clients".into());
        }
        self.fleet
            .validate()
            .map_err(|e| Error::InvalidInstance(e.to_string()))?;
        let mut ids = BTreeSet::new();
        for c in &self.clients {
            if c.id == crate::DEPOT {
                return bad("client id 0 is reserved for the depot".into());
            }
            if !ids.insert(c.id) {
                return Err(Error::DuplicateId(c.id));
            }
            if c.demand == 0 {
                return bad(format!("client {} has zero demand", c.id));
            }
        }
        let points = std::iter::once(self.depot).chain(self.clients.iter().map(|c| c.location));
        match self.distance_mode {
            DistanceMode::Geo => {
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for p in points {
                    p.validate()?;
                    lo = lo.min(p.lon);
                    hi = hi.max(p.lon);
                }
                if hi - lo > 180.0 {
                    return bad(format!("longitude span {} exceeds 180 degrees", hi - lo));
                }
            }
            DistanceMode::Planar => {
                for p in points {
                    if !p.lat.is_finite() || !p.lon.is_finite() {
                        return Err(Error::InvalidCoordinate {
                            lat: p.lat,
                            lon: p.lon,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let file = InstanceFile {
            name: self.name.clone(),
            depot: self.depot,
            clients: self.clients.clone(),
            fleet: self
                .fleet
                .types
                .iter()
                .map(|t| FleetEntry {
                    capacity: t.capacity,
                    count: t.max_count,
                })
                .collect(),
            distance_mode: self.distance_mode,
            road_graph: self.road_graph.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }
}

impl From<InstanceFile> for Instance {
    fn from(f: InstanceFile) -> Self {
        Instance {
            name: f.name,
            depot: f.depot,
            clients: f.clients,
            fleet: FleetSpec {
                types: f
                    .fleet
                    .into_iter()
                    .enumerate()
                    .map(|(id, e)| VehicleType {
                        id,
                        capacity: e.capacity,
                        max_count: e.count,
                    })
                    .collect(),
            },
            distance_mode: f.distance_mode,
            road_graph: f.road_graph,
        }
    }
}

/// Reads and validates an instance file. A relative `road_graph` path is
/// resolved against the instance's directory.
pub fn parse_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path)?;
    let mut inst = parse_instance_str(&text)?;
    if let (Some(rg), Some(dir)) = (&inst.road_graph, path.parent()) {
        if rg.is_relative() {
            inst.road_graph = Some(dir.join(rg));
        }
    }
    Ok(inst)
}

/// JSON when the first non-blank character is `{`, TSPLIB text otherwise.
pub fn parse_instance_str(text: &str) -> Result<Instance> {
    let inst = if text.trim_start().starts_with('{') {
        let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        Instance::from(file)
    } else {
        parse_tsplib(text)?
    };
    inst.validate()?;
    Ok(inst)
}

/// TSPLIB GEO coordinates are `DDD.MM`; returns decimal degrees.
fn tsplib_geo_degrees(v: f64) -> f64 {
    let deg = v.trunc();
    deg + 5.0 * (v - deg) / 3.0
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Header,
    Coords,
    Demands,
    Depots,
}

fn parse_tsplib(text: &str) -> Result<Instance> {
    let err = |line: usize, message: String| Error::Parse { line, message };

    let mut name = String::from("unnamed");
    let mut dimension: Option<usize> = None;
    let mut capacity: Option<u32> = None;
    let mut vehicles: Option<u32> = None;
    let mut weight_type: Option<String> = None;
    let mut coords: Vec<(u32, f64, f64)> = Vec::new();
    let mut demands: Vec<(u32, u32)> = Vec::new();
    let mut depots: Vec<u32> = Vec::new();
    let mut section = Section::Header;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let first = line.split_whitespace().next().unwrap_or("");
        let numeric = first.parse::<f64>().is_ok();

        if !numeric {
            let (key, value) = match line.split_once(':') {
                Some((k, v)) => (k.trim().to_ascii_uppercase(), v.trim()),
                None => (line.to_ascii_uppercase(), ""),
            };
            section = Section::Header;
            match key.as_str() {
                "NAME" => name = value.to_string(),
                "DIMENSION" => {
                    dimension = Some(
                        value
                            .parse()
                            .map_err(|_| err(line_no, format!("invalid DIMENSION '{value}'")))?,
                    )
                }
                "CAPACITY" => {
                    capacity = Some(
                        value
                            .parse()
                            .map_err(|_| err(line_no, format!("invalid CAPACITY '{value}'")))?,
                    )
                }
                "VEHICLES" => {
                    vehicles = Some(
                        value
                            .parse()
                            .map_err(|_| err(line_no, format!("invalid VEHICLES '{value}'")))?,
                    )
                }
                "EDGE_WEIGHT_TYPE" => weight_type = Some(value.to_ascii_uppercase()),
                "NODE_COORD_SECTION" => section = Section::Coords,
                "DEMAND_SECTION" => section = Section::Demands,
                "DEPOT_SECTION" => section = Section::Depots,
                "EOF" => break,
                _ => {}
            }
            continue;
        }

        let fields: Vec<&str> = line.split_whitespace().collect();
        let int = |s: &str, what: &str| -> Result<i64> {
            s.parse::<i64>()
                .map_err(|_| err(line_no, format!("invalid {what} '{s}'")))
        };
        match section {
            Section::Coords => {
                if fields.len() < 3 {
                    return Err(err(line_no, "coordinate row needs id x y".into()));
                }
                let id = int(fields[0], "node id")?;
                let x: f64 = fields[1]
                    .parse()
                    .map_err(|_| err(line_no, format!("invalid x '{}'", fields[1])))?;
                let y: f64 = fields[2]
                    .parse()
                    .map_err(|_| err(line_no, format!("invalid y '{}'", fields[2])))?;
                coords.push((node_id(id, line_no)?, x, y));
            }
            Section::Demands => {
                if fields.len() < 2 {
                    return Err(err(line_no, "demand row needs id demand".into()));
                }
                let id = node_id(int(fields[0], "node id")?, line_no)?;
                let d = int(fields[1], "demand")?;
                let d =
                    u32::try_from(d).map_err(|_| err(line_no, format!("invalid demand {d}")))?;
                demands.push((id, d));
            }
            Section::Depots => {
                for f in fields {
                    let id = int(f, "depot id")?;
                    if id >= 0 {
                        depots.push(node_id(id, line_no)?);
                    }
                }
            }
            Section::Header => {
                return Err(err(line_no, format!("unexpected data row '{line}'")));
            }
        }
    }

    let mode = match weight_type.as_deref() {
        Some("EUC_2D") | None => DistanceMode::Planar,
        Some("GEO") => DistanceMode::Geo,
        Some(other) => {
            return Err(Error::InvalidInstance(format!(
                "unsupported EDGE_WEIGHT_TYPE {other}"
            )))
        }
    };
    let capacity = capacity.ok_or_else(|| Error::InvalidInstance("missing CAPACITY".into()))?;
    if let Some(dim) = dimension {
        if coords.len() != dim {
            return Err(Error::InvalidInstance(format!(
                "DIMENSION {dim} but {} coordinate rows",
                coords.len()
            )));
        }
    }
    let depot_id = match depots.as_slice() {
        [] => coords
            .first()
            .map(|c| c.0)
            .ok_or_else(|| Error::InvalidInstance("no coordinates".into()))?,
        [d] => *d,
        _ => {
            return Err(Error::InvalidInstance(
                "multiple depots are not supported".into(),
            ))
        }
    };

    let to_point = |x: f64, y: f64| match mode {
        DistanceMode::Planar => GeoPoint { lat: y, lon: x },
        DistanceMode::Geo => GeoPoint {
            lat: tsplib_geo_degrees(x),
            lon: tsplib_geo_degrees(y),
        },
    };

    let mut depot = None;
    let mut clients = Vec::with_capacity(coords.len());
    for &(id, x, y) in &coords {
        if id == depot_id {
            depot = Some(to_point(x, y));
            continue;
        }
        let demand = demands
            .iter()
            .find(|d| d.0 == id)
            .map(|d| d.1)
            .ok_or_else(|| Error::InvalidInstance(format!("node {id} has no demand row")))?;
        clients.push(Client {
            id,
            location: to_point(x, y),
            demand,
        });
    }
    let depot = depot.ok_or_else(|| {
        Error::InvalidInstance(format!("depot node {depot_id} has no coordinates"))
    })?;

    Ok(Instance {
        name,
        depot,
        clients,
        fleet: FleetSpec {
            types: vec![VehicleType {
                id: 0,
                capacity,
                max_count: vehicles,
            }],
        },
        distance_mode: mode,
        road_graph: None,
    })
}

fn node_id(id: i64, line: usize) -> Result<u32> {
    u32::try_from(id)
        .ok()
        .filter(|&v| v > 0)
        .ok_or(Error::Parse {
            line,
            message: format!("node id {id} must be positive"),
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "one",
        "depot": {"lat": 33.9, "lon": 35.5},
        "clients": [{"id": 1, "lat": 33.95, "lon": 35.52, "demand": 2}],
        "fleet": [{"capacity": 4, "count": 1}]
    }"#;

    const CVRPLIB: &str = "NAME : toy-n6-k2
COMMENT : hand made
TYPE : CVRP
DIMENSION : 6
EDGE_WEIGHT_TYPE : EUC_2D
CAPACITY : 100
NODE_COORD_SECTION
1 50 50
2 10 10
3 20 80
4 90 15
5 70 70
6 30 40
DEMAND_SECTION
1 0
2 30
3 25
4 40
5 10
6 35
DEPOT_SECTION
1
-1
EOF
";

    #[test]
    fn minimal_json() {
        let inst = parse_instance_str(MINIMAL).unwrap();
        assert_eq!(inst.clients.len(), 1);
        assert_eq!(inst.clients[0].demand, 2);
        assert_eq!(inst.distance_mode, DistanceMode::Geo);
        assert_eq!(inst.fleet.types[0].max_count, Some(1));
    }

    #[test]
    fn cvrplib_fields_map_directly() {
        let inst = parse_instance_str(CVRPLIB).unwrap();
        assert_eq!(inst.name, "toy-n6-k2");
        assert_eq!(inst.fleet.types.len(), 1);
        assert_eq!(inst.fleet.types[0].capacity, 100);
        assert_eq!(inst.fleet.types[0].max_count, None);
        let demands: Vec<u32> = inst.clients.iter().map(|c| c.demand).collect();
        assert_eq!(demands, vec![30, 25, 40, 10, 35]);
        let ids: Vec<u32> = inst.clients.iter().map(|c| c.id).collect();
        assert_eq!(ids, vec![2, 3, 4, 5, 6]);
        assert_eq!(inst.distance_mode, DistanceMode::Planar);
        assert_eq!(
            inst.depot,
            GeoPoint {
                lat: 50.0,
                lon: 50.0
            }
        );
        assert_eq!(
            inst.clients[0].location,
            GeoPoint {
                lat: 10.0,
                lon: 10.0
            }
        );
    }

    #[test]
    fn geo_coordinates_are_converted() {
        let text = CVRPLIB
            .replace("EUC_2D", "GEO")
            .replace("2 10 10", "2 10.10 10");
        let inst = parse_instance_str(&text).unwrap();
        // 10.10 in DDD.MM is 10 degrees 10 minutes.
        let expected = 10.0 + 10.0 / 60.0;
        assert!((inst.clients[0].location.lat - expected).abs() < 1e-12);
        assert_eq!(inst.distance_mode, DistanceMode::Geo);
    }

    #[test]
    fn malformed_rows_report_line() {
        let text = CVRPLIB.replace("4 90 15", "4 ninety 15");
        match parse_instance_str(&text) {
            Err(Error::Parse { line: 11, .. }) => {}
            other => panic!("{other:?}"),
        }
        let text = CVRPLIB.replace("CAPACITY : 100\n", "");
        assert!(matches!(
            parse_instance_str(&text),
            Err(Error::InvalidInstance(_))
        ));
        let text = CVRPLIB.replace("EUC_2D", "ATT");
        assert!(parse_instance_str(&text).is_err());
    }

    #[test]
    fn validation_rules() {
        let dup = MINIMAL.replace(
            r#"[{"id": 1, "lat": 33.95, "lon": 35.52, "demand": 2}]"#,
            r#"[{"id": 1, "lat": 33.95, "lon": 35.52}, {"id": 1, "lat": 33.0, "lon": 35.0}]"#,
        );
        assert!(matches!(
            parse_instance_str(&dup),
            Err(Error::DuplicateId(1))
        ));

        let wide = MINIMAL.replace(r#""lon": 35.52"#, r#""lon": -150.0"#);
        assert!(matches!(
            parse_instance_str(&wide),
            Err(Error::InvalidInstance(_))
        ));

        let zero = MINIMAL.replace(r#""id": 1"#, r#""id": 0"#);
        assert!(parse_instance_str(&zero).is_err());

        let bad_json = MINIMAL.replace("\"fleet\"", "\"fleet\" oops");
        assert!(matches!(
            parse_instance_str(&bad_json),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let inst = parse_instance_str(CVRPLIB).unwrap();
        let back = parse_instance_str(&inst.to_json().unwrap()).unwrap();
        assert_eq!(back, inst);
    }
}
