use std::collections::VecDeque;

use rayon::prelude::*;

use super::{sq_dist, Centroid, ClusterError, ClusterId, Label, Labeling};
use crate::geo::{haversine_distance, EarthModel, GeoPoint, MeanAccumulator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbscanConfig {
    pub eps_km: f64,
    /// Neighbours within `eps_km`, the point itself included, needed for a
    /// core point.
    pub min_pts: usize,
    pub earth: EarthModel,
}

impl Default for DbscanConfig {
    fn default() -> Self {
        Self {
            eps_km: 5.0,
            min_pts: 5,
            earth: EarthModel::MEAN,
        }
    }
}

impl DbscanConfig {
    pub fn new(eps_km: f64, min_pts: usize) -> Result<Self, ClusterError> {
        let cfg = Self {
            eps_km,
            min_pts,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ClusterError> {
        if self.eps_km.is_nan() || self.eps_km <= 0.0 || !self.eps_km.is_finite() {
            return Err(ClusterError::Config(format!("eps_km {} must be positive", self.eps_km)));
        }
        if self.min_pts == 0 {
            return Err(ClusterError::Config("min_pts must be positive".into()));
        }
        Ok(())
    }
}

/// ε-neighbourhood queries over points sorted by latitude. Two points more
/// than ε/R radians apart in latitude are more than ε apart on the sphere,
/// so only a latitude band needs an exact haversine check.
struct NeighborIndex<'a> {
    points: &'a [GeoPoint],
    by_lat: Vec<usize>,
    lats: Vec<f64>,
    band_deg: f64,
    cfg: &'a DbscanConfig,
}

impl<'a> NeighborIndex<'a> {
    fn new(points: &'a [GeoPoint], cfg: &'a DbscanConfig) -> Self {
        let mut by_lat: Vec<usize> = (0..points.len()).collect();
        by_lat.sort_by(|&a, &b| points[a].lat().total_cmp(&points[b].lat()).then(a.cmp(&b)));
        let lats = by_lat.iter().map(|&i| points[i].lat()).collect();
        // slack covers rounding in the haversine evaluation
        let band_deg = (cfg.eps_km / cfg.earth.radius_km()).to_degrees() * (1.0 + 1e-9) + 1e-12;
        Self {
            points,
            by_lat,
            lats,
            band_deg,
            cfg,
        }
    }

    fn for_each_neighbor(&self, i: usize, mut f: impl FnMut(usize)) {
        let p = &self.points[i];
        let lo = self.lats.partition_point(|&l| l < p.lat() - self.band_deg);
        let hi = self.lats.partition_point(|&l| l <= p.lat() + self.band_deg);
        for &j in &self.by_lat[lo..hi] {
            if haversine_distance(p, &self.points[j], &self.cfg.earth).km() <= self.cfg.eps_km {
                f(j);
            }
        }
    }

    fn count(&self, i: usize) -> usize {
        let mut n = 0;
        self.for_each_neighbor(i, |_| n += 1);
        n
    }
}

/// Density-based clustering with the haversine metric.
///
/// Clusters are the connected components of core points (ε-neighbours of
/// each other) plus the border points they reach; everything else is
/// [`Label::Noise`]. Clusters are numbered in the input order of their
/// first core point, and a border point reachable from several clusters
/// joins the lowest-numbered one.
pub fn dbscan(points: &[GeoPoint], cfg: &DbscanConfig) -> Result<Labeling, ClusterError> {
    cfg.validate()?;
    if points.is_empty() {
        return Err(ClusterError::EmptyInput);
    }
    let index = NeighborIndex::new(points, cfg);
    let core: Vec<bool> = (0..points.len())
        .into_par_iter()
        .map(|i| index.count(i) >= cfg.min_pts)
        .collect();

    let mut labels: Vec<Option<usize>> = vec![None; points.len()];
    let mut next_cluster = 0;
    let mut queue = VecDeque::new();
    for seed in 0..points.len() {
        if !core[seed] || labels[seed].is_some() {
            continue;
        }
        let cluster = next_cluster;
        next_cluster += 1;
        labels[seed] = Some(cluster);
        queue.push_back(seed);
        while let Some(q) = queue.pop_front() {
            index.for_each_neighbor(q, |j| {
                if labels[j].is_none() {
                    labels[j] = Some(cluster);
                    if core[j] {
                        queue.push_back(j);
                    }
                }
            });
        }
    }

    let mut acc = vec![MeanAccumulator::default(); next_cluster];
    for (p, l) in points.iter().zip(&labels) {
        if let Some(c) = l {
            acc[*c].push(p);
        }
    }
    let centroids: Vec<Centroid> = acc
        .iter()
        .map(|a| Centroid {
            position: a.mean().expect("every cluster has its seed point"),
        })
        .collect();
    let wcss = points
        .iter()
        .zip(&labels)
        .filter_map(|(p, l)| l.map(|c| sq_dist(p, &centroids[c].position)))
        .sum();
    Ok(Labeling {
        assignment: labels
            .into_iter()
            .map(|l| l.map_or(Label::Noise, |c| Label::Cluster(ClusterId(c))))
            .collect(),
        centroids,
        wcss,
    })
}
