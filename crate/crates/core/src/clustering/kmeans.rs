use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{cluster_means, sq_dist, Centroid, ClusterError, ClusterId, Label, Labeling};
use crate::geo::GeoPoint;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iterations: usize,
    /// Largest centroid displacement, in degrees, still counted as settled.
    pub tolerance: f64,
    pub seed: u64,
    /// Independent k-means++ runs; the lowest-WCSS one wins.
    pub restarts: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 1,
            max_iterations: 100,
            tolerance: 1e-7,
            seed: 0,
            restarts: 8,
        }
    }
}

impl KMeansConfig {
    pub fn with_k(k: usize) -> Self {
        Self { k, ..Self::default() }
    }

    pub(crate) fn validate(&self, n: usize) -> Result<(), ClusterError> {
        if n == 0 {
            return Err(ClusterError::EmptyInput);
        }
        if self.k == 0 {
            return Err(ClusterError::Config("k must be positive".into()));
        }
        if self.k > n {
            return Err(ClusterError::Config(format!("k = {} exceeds the {n} points", self.k)));
        }
        if self.max_iterations == 0 {
            return Err(ClusterError::Config("max_iterations must be positive".into()));
        }
        if self.restarts == 0 {
            return Err(ClusterError::Config("restarts must be positive".into()));
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 || !self.tolerance.is_finite() {
            return Err(ClusterError::Config(format!(
                "tolerance {} must be a non-negative number",
                self.tolerance
            )));
        }
        Ok(())
    }
}

/// Result of one Lloyd run from fixed starting centroids.
#[derive(Debug, Clone)]
pub struct LloydOutcome {
    pub labeling: Labeling,
    /// WCSS after each assignment step, ending with the WCSS of the
    /// returned labeling. Non-increasing.
    pub wcss_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn nearest(p: &GeoPoint, centroids: &[GeoPoint]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        // strict: ties go to the lowest index
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn assign(points: &[GeoPoint], centroids: &[GeoPoint]) -> (Vec<usize>, Vec<f64>) {
    points.par_iter().map(|p| nearest(p, centroids)).unzip()
}

fn total(d2: &[f64]) -> f64 {
    d2.iter().sum()
}

/// Moves each centroid to its members' mean. A centroid left without
/// members is moved onto the point farthest from its nearest other
/// centroid.
fn update(points: &[GeoPoint], labels: &[usize], previous: &[GeoPoint]) -> Vec<GeoPoint> {
    let means = cluster_means(points, labels, previous.len());
    let mut next: Vec<GeoPoint> = means.iter().zip(previous).map(|(m, prev)| m.unwrap_or(*prev)).collect();
    for j in (0..next.len()).filter(|&j| means[j].is_none()) {
        let others: Vec<GeoPoint> = next
            .iter()
            .enumerate()
            .filter_map(|(i, c)| (i != j).then_some(*c))
            .collect();
        if others.is_empty() {
            continue;
        }
        let far = points
            .par_iter()
            .map(|p| nearest(p, &others).1)
            .collect::<Vec<_>>()
            .into_iter()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |best, (i, d)| if d > best.1 { (i, d) } else { best },
            );
        next[j] = points[far.0];
    }
    next
}

fn max_shift(a: &[GeoPoint], b: &[GeoPoint]) -> f64 {
    a.iter().zip(b).map(|(x, y)| sq_dist(x, y).sqrt()).fold(0.0, f64::max)
}

fn labeling(labels: &[usize], centroids: &[GeoPoint], wcss: f64) -> Labeling {
    Labeling {
        assignment: labels.iter().map(|&l| Label::Cluster(ClusterId(l))).collect(),
        centroids: centroids.iter().map(|&position| Centroid { position }).collect(),
        wcss,
    }
}

/// Lloyd iterations from the given starting centroids.
///
/// Stops once an update moves no centroid by more than `tolerance` and the
/// updated centroids leave every assignment unchanged. At that point each
/// centroid is the mean of its members and each point sits with its
/// nearest centroid (lowest index on ties).
pub fn lloyd(
    points: &[GeoPoint],
    initial: Vec<GeoPoint>,
    max_iterations: usize,
    tolerance: f64,
) -> Result<LloydOutcome, ClusterError> {
    if points.is_empty() {
        return Err(ClusterError::EmptyInput);
    }
    if initial.is_empty() {
        return Err(ClusterError::Config(
            "at least one starting centroid is required".into(),
        ));
    }
    let mut centroids = initial;
    let (mut labels, mut d2) = assign(points, &centroids);
    let mut history = Vec::new();

    for iteration in 1..=max_iterations {
        history.push(total(&d2));
        let next = update(points, &labels, &centroids);
        let shift = max_shift(&centroids, &next);
        centroids = next;
        let (next_labels, next_d2) = assign(points, &centroids);
        let stable = next_labels == labels;
        labels = next_labels;
        d2 = next_d2;
        if shift <= tolerance && stable {
            let wcss = total(&d2);
            history.push(wcss);
            return Ok(LloydOutcome {
                labeling: labeling(&labels, &centroids, wcss),
                wcss_history: history,
                iterations: iteration,
                converged: true,
            });
        }
    }

    // Out of iterations: keep the last assignment and move occupied
    // centroids onto their means so that each centroid is still a mean.
    history.push(total(&d2));
    let means = cluster_means(points, &labels, centroids.len());
    for (c, m) in centroids.iter_mut().zip(means) {
        if let Some(m) = m {
            *c = m;
        }
    }
    let wcss = points
        .iter()
        .zip(&labels)
        .map(|(p, &l)| sq_dist(p, &centroids[l]))
        .sum();
    history.push(wcss);
    Ok(LloydOutcome {
        labeling: labeling(&labels, &centroids, wcss),
        wcss_history: history,
        iterations: max_iterations,
        converged: false,
    })
}

/// k-means++ seeding: the first centre uniformly, each further centre with
/// probability proportional to its squared distance from the nearest
/// centre chosen so far.
pub fn kmeans_plus_plus<R: Rng + ?Sized>(points: &[GeoPoint], k: usize, rng: &mut R) -> Vec<GeoPoint> {
    let n = points.len();
    if n == 0 || k == 0 {
        return Vec::new();
    }
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centers = vec![points[first]];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[first])).collect();

    while centers.len() < k.min(n) {
        let sum: f64 = d2.iter().sum();
        let pick = if sum > 0.0 {
            let target = rng.random::<f64>() * sum;
            let mut acc = 0.0;
            let mut pick = None;
            let mut last_positive = 0;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                last_positive = i;
                acc += w;
                if acc > target {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or(last_positive)
        } else {
            // every point coincides with a centre
            chosen.iter().position(|c| !c).unwrap_or(0)
        };
        chosen[pick] = true;
        let c = points[pick];
        centers.push(c);
        for (w, p) in d2.iter_mut().zip(points) {
            *w = w.min(sq_dist(p, &c));
        }
    }
    centers
}

pub(crate) fn run_seeded(
    points: &[GeoPoint],
    cfg: &KMeansConfig,
    restart: usize,
) -> Result<LloydOutcome, ClusterError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(restart as u64);
    let init = kmeans_plus_plus(points, cfg.k, &mut rng);
    lloyd(points, init, cfg.max_iterations, cfg.tolerance)
}

/// Lloyd's algorithm with k-means++ seeding, best of `cfg.restarts` runs.
///
/// Restart `r` draws from the ChaCha8 stream `r` of `cfg.seed`, so the
/// result does not depend on how restarts are scheduled across threads.
pub fn kmeans(points: &[GeoPoint], cfg: &KMeansConfig) -> Result<Labeling, ClusterError> {
    cfg.validate(points.len())?;
    let runs = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| run_seeded(points, cfg, r))
        .collect::<Result<Vec<_>, _>>()?;
    let mut best: Option<LloydOutcome> = None;
    for run in runs {
        if best.as_ref().is_none_or(|b| run.labeling.wcss < b.labeling.wcss) {
            best = Some(run);
        }
    }
    Ok(best.expect("restarts > 0").labeling)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    #[test]
    fn identical_points_single_cluster() {
        let pts = vec![p(6.2, -75.5); 5];
        let l = kmeans(&pts, &KMeansConfig::with_k(1)).unwrap();
        assert_eq!(l.centroids[0].position, p(6.2, -75.5));
        assert_eq!(l.wcss, 0.0);
    }

    #[test]
    fn two_exact_groups() {
        let mut pts = vec![p(0.0, 0.0); 3];
        pts.extend(vec![p(10.0, 10.0); 3]);
        let l = kmeans(&pts, &KMeansConfig::with_k(2)).unwrap();
        let mut cs: Vec<(f64, f64)> = l
            .centroids
            .iter()
            .map(|c| (c.position.lat(), c.position.lon()))
            .collect();
        cs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(cs, [(0.0, 0.0), (10.0, 10.0)]);
        assert_eq!(l.wcss, 0.0);
    }

    #[test]
    fn k_equals_n() {
        let pts = vec![p(0.0, 0.0), p(1.0, 0.0), p(0.0, 1.0), p(5.0, 5.0)];
        let l = kmeans(&pts, &KMeansConfig::with_k(4)).unwrap();
        assert_eq!(l.wcss, 0.0);
        let mut ids: Vec<usize> = l.assignment.iter().map(|a| a.cluster().unwrap().0).collect();
        ids.sort();
        assert_eq!(ids, [0, 1, 2, 3]);
    }

    #[test]
    fn configuration_errors() {
        let pts = vec![p(0.0, 0.0), p(1.0, 1.0)];
        assert!(matches!(
            kmeans(&pts, &KMeansConfig::with_k(3)),
            Err(ClusterError::Config(_))
        ));
        assert!(matches!(
            kmeans(&pts, &KMeansConfig::with_k(0)),
            Err(ClusterError::Config(_))
        ));
        assert_eq!(kmeans(&[], &KMeansConfig::with_k(1)), Err(ClusterError::EmptyInput));
        let bad_tol = KMeansConfig {
            tolerance: f64::NAN,
            ..KMeansConfig::with_k(1)
        };
        assert!(kmeans(&pts, &bad_tol).is_err());
    }

    #[test]
    fn empty_cluster_is_reseeded() {
        // Both starting centroids sit on the far side; the second captures
        // nothing and must be moved onto the point farthest from centroid 0.
        let pts = vec![p(0.0, 0.0), p(0.0, 1.0), p(0.0, 10.0)];
        let out = lloyd(&pts, vec![p(0.0, -5.0), p(0.0, -6.0)], 100, 1e-7).unwrap();
        assert!(out.converged);
        assert_eq!(out.labeling.cluster_sizes().iter().filter(|&&s| s > 0).count(), 2);
        assert!(out.wcss_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn seeding_is_deterministic() {
        let pts: Vec<GeoPoint> = (0..50).map(|i| p((i % 7) as f64, (i % 11) as f64)).collect();
        let a = kmeans_plus_plus(&pts, 5, &mut ChaCha8Rng::seed_from_u64(9));
        let b = kmeans_plus_plus(&pts, 5, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
        let cfg = KMeansConfig {
            seed: 3,
            ..KMeansConfig::with_k(4)
        };
        assert_eq!(kmeans(&pts, &cfg).unwrap(), kmeans(&pts, &cfg).unwrap());
    }

    #[test]
    fn seeding_with_duplicates_picks_distinct_indices() {
        let pts = vec![p(1.0, 1.0); 4];
        let c = kmeans_plus_plus(&pts, 4, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(c.len(), 4);
    }
}
