//! Solution writers: JSON, CSV and GeoJSON.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::roadgraph::VertexId;
use crate::route::Solution;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Geojson,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "geojson" => Ok(OutputFormat::Geojson),
            other => Err(Error::InvalidParameter(format!("unknown format '{other}'"))),
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// One row per stop: `route_id,seq,vertex,leg_km`, where `leg_km` is the
/// length of the leg arriving at the stop.
pub fn solution_csv(s: &Solution) -> String {
    let mut out = String::from("route_id,seq,vertex,leg_km\n");
    for (ri, r) in s.routes.iter().enumerate() {
        for (seq, &v) in r.stops.iter().enumerate() {
            let leg = if seq == 0 { 0.0 } else { r.leg_km[seq - 1] };
            let _ = writeln!(out, "{ri},{seq},{v},{leg}");
        }
    }
    out
}

/// A FeatureCollection with one LineString per route along the expanded
/// leg paths.
pub fn solution_geojson<F>(s: &Solution, locate: F) -> Result<Value>
where
    F: Fn(VertexId) -> Option<GeoPoint>,
{
    let mut features = Vec::with_capacity(s.routes.len());
    for (ri, r) in s.routes.iter().enumerate() {
        let mut vertices: Vec<VertexId> = Vec::new();
        for path in &r.leg_paths {
            let skip = usize::from(!vertices.is_empty());
            vertices.extend(path.iter().skip(skip));
        }
        let coords = vertices
            .iter()
            .map(|&v| {
                locate(v).map(|p| json!([p.lon, p.lat])).ok_or_else(|| {
                    Error::InvalidParameter(format!("vertex {v} has no coordinates"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        features.push(json!({
            "type": "Feature",
            "geometry": { "type": "LineString", "coordinates": coords },
            "properties": {
                "route_id": ri,
                "cluster_id": r.cluster_id,
                "vehicle_type": r.vehicle.id.type_id,
                "vehicle_index": r.vehicle.id.index,
                "demand": r.demand,
                "total_km": r.total_km,
                "stops": r.stops,
            }
        }));
    }
    Ok(json!({ "type": "FeatureCollection", "features": features }))
}
