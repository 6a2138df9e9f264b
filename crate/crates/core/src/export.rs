//! GeoJSON zone documents and plain-text cluster reports.
//!
//! Positions are always written `[longitude, latitude]`, and numbers use the
//! shortest representation that parses back to the same `f64`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::clustering::{Centroid, ClusterId};
use crate::coverage::{CoverageCircle, CoverageSummary};
use crate::geo::GeoPoint;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExportError {
    #[error("inconsistent zone data: {0}")]
    Inconsistent(String),
}

/// GeoJSON position, `[longitude, latitude]`.
pub type Position = [f64; 2];

fn position(p: &GeoPoint) -> Position {
    [p.lon(), p.lat()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "coordinates")]
pub enum Geometry {
    Point(Position),
    Polygon(Vec<Vec<Position>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename = "Feature")]
pub struct Feature {
    pub geometry: Geometry,
    pub properties: Map<String, Value>,
}

/// A GeoJSON `FeatureCollection`: centroid points, then coverage polygons,
/// then (optionally) member points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename = "FeatureCollection")]
pub struct ZoneDocument {
    pub features: Vec<Feature>,
}

impl ZoneDocument {
    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("zone documents always serialize");
        s.push('\n');
        s
    }
}

/// Everything exported for one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct Zone {
    pub summary: CoverageSummary,
    pub circle: CoverageCircle,
    pub top_terms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZoneMember {
    pub cluster: ClusterId,
    pub position: GeoPoint,
    pub text: String,
}

fn properties(value: Value) -> Map<String, Value> {
    match value {
        Value::Object(map) => map,
        _ => unreachable!("properties are built from object literals"),
    }
}

pub fn export_geojson(
    zones: &[Zone],
    members: &[ZoneMember],
    include_members: bool,
) -> Result<ZoneDocument, ExportError> {
    for pair in zones.windows(2) {
        if pair[0].summary.cluster >= pair[1].summary.cluster {
            return Err(ExportError::Inconsistent(format!(
                "cluster {} listed after cluster {}",
                pair[1].summary.cluster, pair[0].summary.cluster
            )));
        }
    }
    for z in zones {
        if z.circle.center != z.summary.centroid.position || z.circle.radius != z.summary.radius {
            return Err(ExportError::Inconsistent(format!(
                "circle does not belong to cluster {}",
                z.summary.cluster
            )));
        }
        if z.circle.ring.len() < 4 || z.circle.ring.first() != z.circle.ring.last() {
            return Err(ExportError::Inconsistent(format!(
                "ring of cluster {} is not closed",
                z.summary.cluster
            )));
        }
    }

    let mut features = Vec::with_capacity(zones.len() * 2 + if include_members { members.len() } else { 0 });
    for z in zones {
        features.push(Feature {
            geometry: Geometry::Point(position(&z.summary.centroid.position)),
            properties: properties(json!({
                "role": "centroid",
                "cluster_id": z.summary.cluster.0,
                "radius_km": z.summary.radius.km(),
                "member_count": z.summary.member_count,
                "top_terms": z.top_terms,
            })),
        });
    }
    for z in zones {
        features.push(Feature {
            geometry: Geometry::Polygon(vec![z.circle.ring.iter().map(position).collect()]),
            properties: properties(json!({
                "role": "coverage",
                "cluster_id": z.summary.cluster.0,
                "radius_km": z.summary.radius.km(),
            })),
        });
    }
    if include_members {
        for m in members {
            if zones.binary_search_by_key(&m.cluster, |z| z.summary.cluster).is_err() {
                return Err(ExportError::Inconsistent(format!(
                    "member refers to unknown cluster {}",
                    m.cluster
                )));
            }
            features.push(Feature {
                geometry: Geometry::Point(position(&m.position)),
                properties: properties(json!({
                    "role": "member",
                    "cluster_id": m.cluster.0,
                    "text": m.text,
                })),
            });
        }
    }
    Ok(ZoneDocument { features })
}

/// The cluster-centre listing: a `Cluster centers : K centers` header, then
/// one `Cluster i` line per centroid with a tab before `lat lon`.
pub fn cluster_report(centroids: &[Centroid]) -> String {
    let mut out = format!("Cluster centers : {} centers\n", centroids.len());
    for (i, c) in centroids.iter().enumerate() {
        let _ = writeln!(out, "Cluster {i}\t{} {}", c.position.lat(), c.position.lon());
    }
    out
}

/// Tab-separated coverage table, one row per summary.
pub fn coverage_report(summaries: &[CoverageSummary]) -> String {
    let mut out = String::from(
        "cluster\tmembers\tcentroid_lat\tcentroid_lon\tmeans_lat\tmeans_lon\tdistant_lat\tdistant_lon\tradius_km\n",
    );
    for s in summaries {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            s.cluster,
            s.member_count,
            s.centroid.position.lat(),
            s.centroid.position.lon(),
            s.point_of_means.lat(),
            s.point_of_means.lon(),
            s.distant_point.lat(),
            s.distant_point.lon(),
            s.radius.km(),
        );
    }
    out
}
