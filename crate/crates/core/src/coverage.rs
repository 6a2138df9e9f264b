//! Coverage radius and coverage circle of each cluster.
//!
//! The radius of a cluster is the haversine distance from its point of
//! means (mean latitude, mean longitude) to the member farthest from that
//! point. The coverage circle is drawn around the cluster centroid with
//! that radius. Here centroid and point of means are the same coordinate
//! mean, so the two coincide.

use thiserror::Error;

use crate::clustering::{Centroid, ClusterId, Label, Labeling};
use crate::geo::{destination_point, haversine_distance, DistanceKm, EarthModel, GeoError, GeoPoint};

/// Ring vertices used when no count is given.
pub const DEFAULT_VERTEX_COUNT: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoverageError {
    #[error("coverage of an empty cluster")]
    EmptyCluster,
    #[error("a coverage ring needs at least 3 vertices, got {0}")]
    VertexCount(usize),
    #[error("labeling has {labels} labels for {points} points")]
    LengthMismatch { labels: usize, points: usize },
    #[error("label references cluster {0}, which has no centroid")]
    UnknownCluster(usize),
    #[error(transparent)]
    Geo(#[from] GeoError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageSummary {
    pub cluster: ClusterId,
    pub centroid: Centroid,
    pub point_of_means: GeoPoint,
    /// The member farthest from `point_of_means`.
    pub distant_point: GeoPoint,
    pub radius: DistanceKm,
    pub member_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageCircle {
    pub center: GeoPoint,
    pub radius: DistanceKm,
    /// Closed ring: `vertex_count + 1` points, the first repeated last.
    pub ring: Vec<GeoPoint>,
}

pub fn point_of_means(members: &[GeoPoint]) -> Result<GeoPoint, CoverageError> {
    GeoPoint::mean(members).map_err(|_| CoverageError::EmptyCluster)
}

/// The member farthest from the point of means and its distance. Ties keep
/// the earliest member.
pub fn coverage_radius(members: &[GeoPoint], earth: &EarthModel) -> Result<(GeoPoint, DistanceKm), CoverageError> {
    let mean = point_of_means(members)?;
    let mut best = (members[0], haversine_distance(&mean, &members[0], earth));
    for m in &members[1..] {
        let d = haversine_distance(&mean, m, earth);
        if d.km() > best.1.km() {
            best = (*m, d);
        }
    }
    Ok(best)
}

/// Polygon approximation of the circle of `radius` around `centroid`.
/// Vertex `i` lies at bearing `i·360/vertex_count`, starting due north.
pub fn coverage_circle(
    centroid: &Centroid,
    radius: DistanceKm,
    vertex_count: usize,
    earth: &EarthModel,
) -> Result<CoverageCircle, CoverageError> {
    if vertex_count < 3 {
        return Err(CoverageError::VertexCount(vertex_count));
    }
    let center = centroid.position;
    let mut ring = (0..vertex_count)
        .map(|i| destination_point(&center, i as f64 * 360.0 / vertex_count as f64, radius, earth))
        .collect::<Result<Vec<_>, _>>()?;
    ring.push(ring[0]);
    Ok(CoverageCircle { center, radius, ring })
}

/// One summary per non-empty cluster, ascending by id. Noise is ignored.
pub fn summarize(
    labeling: &Labeling,
    points: &[GeoPoint],
    earth: &EarthModel,
) -> Result<Vec<CoverageSummary>, CoverageError> {
    if labeling.assignment.len() != points.len() {
        return Err(CoverageError::LengthMismatch {
            labels: labeling.assignment.len(),
            points: points.len(),
        });
    }
    let k = labeling.centroids.len();
    let mut members: Vec<Vec<GeoPoint>> = vec![Vec::new(); k];
    for (p, l) in points.iter().zip(&labeling.assignment) {
        if let Label::Cluster(id) = l {
            members
                .get_mut(id.0)
                .ok_or(CoverageError::UnknownCluster(id.0))?
                .push(*p);
        }
    }
    let mut out = Vec::new();
    for (j, group) in members.iter().enumerate() {
        if group.is_empty() {
            continue;
        }
        let (distant_point, radius) = coverage_radius(group, earth)?;
        out.push(CoverageSummary {
            cluster: ClusterId(j),
            centroid: labeling.centroids[j],
            point_of_means: point_of_means(group)?,
            distant_point,
            radius,
            member_count: group.len(),
        });
    }
    Ok(out)
}
