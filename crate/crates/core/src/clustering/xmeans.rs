use rayon::prelude::*;

use super::kmeans::{kmeans, lloyd, KMeansConfig};
use super::{bic_score, ClusterError, ClusterId, Labeling};
use crate::geo::GeoPoint;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XMeansConfig {
    pub k_min: usize,
    pub k_max: usize,
    /// Iteration limit, tolerance, seed and restarts for every inner k-means;
    /// its `k` is ignored.
    pub inner: KMeansConfig,
}

impl XMeansConfig {
    pub fn new(k_min: usize, k_max: usize) -> Self {
        Self {
            k_min,
            k_max,
            inner: KMeansConfig::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.inner.seed = seed;
        self
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the trial split of `cluster` in improvement round `round`.
fn split_seed(seed: u64, round: usize, cluster: usize) -> u64 {
    splitmix(seed ^ splitmix(((round as u64) << 32) | cluster as u64))
}

struct Split {
    cluster: usize,
    gain: f64,
    children: [GeoPoint; 2],
}

fn try_split(
    members: &[GeoPoint],
    parent: GeoPoint,
    inner: &KMeansConfig,
    seed: u64,
    cluster: usize,
) -> Result<Option<Split>, ClusterError> {
    // Two children need n − K > 0 for a pooled variance.
    if members.len() < 3 {
        return Ok(None);
    }
    if members.iter().all(|m| *m == members[0]) {
        return Ok(None);
    }
    let parent_bic = bic_score(members, &vec![0; members.len()], &[parent]);
    let cfg = KMeansConfig { k: 2, seed, ..*inner };
    let child = kmeans(members, &cfg)?;
    let labels: Vec<usize> = child
        .assignment
        .iter()
        .map(|l| l.cluster().map_or(0, |c| c.0))
        .collect();
    let children = [child.centroids[0].position, child.centroids[1].position];
    let child_bic = bic_score(members, &labels, &children);
    Ok((child_bic > parent_bic).then_some(Split {
        cluster,
        gain: child_bic - parent_bic,
        children,
    }))
}

/// X-Means: k-means at `k_min`, then repeated BIC-guided two-way splits.
///
/// Each round trial-splits every cluster with a local 2-means and keeps the
/// splits whose two-cluster BIC beats the one-cluster BIC on that cluster's
/// members. If the accepted splits would overshoot `k_max`, only the
/// highest-gain ones are kept. The grown centroid set is then refined by a
/// global Lloyd run. Stops when a round accepts nothing or `k_max` is
/// reached.
pub fn xmeans(points: &[GeoPoint], cfg: &XMeansConfig) -> Result<Labeling, ClusterError> {
    if cfg.k_min == 0 {
        return Err(ClusterError::Config("k_min must be positive".into()));
    }
    if cfg.k_min > cfg.k_max {
        return Err(ClusterError::Config(format!(
            "k_min {} > k_max {}",
            cfg.k_min, cfg.k_max
        )));
    }
    let start = KMeansConfig {
        k: cfg.k_min,
        ..cfg.inner
    };
    start.validate(points.len())?;
    let mut labeling = kmeans(points, &start)?;

    for round in 0.. {
        let k = labeling.cluster_count();
        if k >= cfg.k_max {
            break;
        }
        let groups: Vec<Vec<GeoPoint>> = (0..k)
            .map(|j| labeling.members(ClusterId(j)).into_iter().map(|i| points[i]).collect())
            .collect();
        let trials = groups
            .par_iter()
            .enumerate()
            .map(|(j, members)| {
                let seed = split_seed(cfg.inner.seed, round, j);
                try_split(members, labeling.centroids[j].position, &cfg.inner, seed, j)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut accepted: Vec<Split> = trials.into_iter().flatten().collect();
        if accepted.is_empty() {
            break;
        }
        // Highest gain first, lowest cluster on ties; drop what overshoots k_max.
        accepted.sort_by(|a, b| b.gain.total_cmp(&a.gain).then(a.cluster.cmp(&b.cluster)));
        accepted.truncate(cfg.k_max - k);
        accepted.sort_by_key(|s| s.cluster);

        let mut centroids = Vec::with_capacity(k + accepted.len());
        let mut splits = accepted.iter().peekable();
        for (j, c) in labeling.centroids.iter().enumerate() {
            match splits.next_if(|s| s.cluster == j) {
                Some(s) => centroids.extend(s.children),
                None => centroids.push(c.position),
            }
        }
        labeling = lloyd(points, centroids, cfg.inner.max_iterations, cfg.inner.tolerance)?.labeling;
    }
    Ok(labeling)
}
