//! K-means, X-Means model selection, and density-based clustering.
//!
//! K-means and X-Means work in degree space: plain Euclidean distance over
//! (latitude, longitude) pairs. DBSCAN measures neighborhoods with the
//! haversine distance so that its radius is in kilometres.
//!
//! Everything here is deterministic for a fixed seed. Parallel phases only
//! compute per-point values; every reduction runs in input order.

mod bic;
mod dbscan;
mod kmeans;
mod xmeans;

use std::fmt;

use thiserror::Error;

use crate::geo::{GeoError, GeoPoint, MeanAccumulator};

pub use bic::{bic_score, BIC_DIMENSIONS};
pub use dbscan::{dbscan, DbscanConfig};
pub use kmeans::{kmeans, kmeans_plus_plus, lloyd, KMeansConfig, LloydOutcome};
pub use xmeans::{xmeans, XMeansConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClusterError {
    #[error("invalid clustering configuration: {0}")]
    Config(String),
    #[error("cannot cluster an empty point set")]
    EmptyInput,
    #[error(transparent)]
    Geo(#[from] GeoError),
}

/// Zero-based cluster number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClusterId(pub usize);

impl fmt::Display for ClusterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Cluster(ClusterId),
    Noise,
}

impl Label {
    pub fn cluster(&self) -> Option<ClusterId> {
        match self {
            Label::Cluster(id) => Some(*id),
            Label::Noise => None,
        }
    }

    pub fn is_noise(&self) -> bool {
        matches!(self, Label::Noise)
    }
}

/// Coordinate mean of a cluster's members.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Centroid {
    pub position: GeoPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Labeling {
    /// One label per input point, in input order.
    pub assignment: Vec<Label>,
    pub centroids: Vec<Centroid>,
    /// Sum of squared degree-space distances from each clustered point to
    /// its centroid. Noise points do not contribute.
    pub wcss: f64,
}

impl Labeling {
    pub fn cluster_count(&self) -> usize {
        self.centroids.len()
    }

    pub fn noise_count(&self) -> usize {
        self.assignment.iter().filter(|l| l.is_noise()).count()
    }

    /// Input indices of the members of `id`, ascending.
    pub fn members(&self, id: ClusterId) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(i, l)| (*l == Label::Cluster(id)).then_some(i))
            .collect()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centroids.len()];
        for l in &self.assignment {
            if let Label::Cluster(id) = l {
                sizes[id.0] += 1;
            }
        }
        sizes
    }
}

/// Arithmetic mean of the members' latitudes and longitudes.
pub fn centroid_of(points: &[GeoPoint]) -> Result<Centroid, ClusterError> {
    Ok(Centroid {
        position: GeoPoint::mean(points)?,
    })
}

#[inline]
pub(crate) fn sq_dist(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let dlat = a.lat() - b.lat();
    let dlon = a.lon() - b.lon();
    dlat * dlat + dlon * dlon
}

/// Per-cluster means in input order; `None` for clusters with no members.
pub(crate) fn cluster_means(points: &[GeoPoint], labels: &[usize], k: usize) -> Vec<Option<GeoPoint>> {
    let mut acc = vec![MeanAccumulator::default(); k];
    for (p, &l) in points.iter().zip(labels) {
        acc[l].push(p);
    }
    acc.iter().map(|a| a.mean().ok()).collect()
}
