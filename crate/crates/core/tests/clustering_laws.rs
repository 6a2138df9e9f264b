mod common;

use common::{blobs, brute_force_dbscan, gp};
use proptest::prelude::*;
use zoi::clustering::{dbscan, kmeans, lloyd, xmeans, DbscanConfig, KMeansConfig, Label, XMeansConfig};
use zoi::geo::GeoPoint;

fn points(max: usize) -> impl Strategy<Value = Vec<GeoPoint>> {
    prop::collection::vec((6.0..6.5f64, -75.8..-75.3f64).prop_map(|(a, b)| gp(a, b)), 1..max)
}

fn sq(a: &GeoPoint, b: &GeoPoint) -> f64 {
    (a.lat() - b.lat()).powi(2) + (a.lon() - b.lon()).powi(2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lloyd_wcss_never_increases(pts in points(80), k in 1..6usize) {
        let k = k.min(pts.len());
        let out = lloyd(&pts, pts[..k].to_vec(), 50, 0.0).unwrap();
        for w in out.wcss_history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12, "{:?}", out.wcss_history);
        }
    }

    #[test]
    fn converged_assignments_are_nearest(pts in points(80), k in 1..6usize, seed in any::<u64>()) {
        let cfg = KMeansConfig { seed, restarts: 2, ..KMeansConfig::with_k(k.min(pts.len())) };
        let l = kmeans(&pts, &cfg).unwrap();
        for (p, label) in pts.iter().zip(&l.assignment) {
            let own = sq(p, &l.centroids[label.cluster().unwrap().0].position);
            let best = l.centroids.iter().map(|c| sq(p, &c.position)).fold(f64::INFINITY, f64::min);
            prop_assert!(own <= best + 1e-12);
        }
    }

    #[test]
    fn kmeans_is_deterministic_for_a_seed(pts in points(60), seed in any::<u64>()) {
        let cfg = KMeansConfig { seed, ..KMeansConfig::with_k(3.min(pts.len())) };
        prop_assert_eq!(kmeans(&pts, &cfg).unwrap(), kmeans(&pts, &cfg).unwrap());
    }

    #[test]
    fn dbscan_matches_brute_force(pts in points(120), eps in 0.5..10.0f64, min_pts in 1..7usize) {
        let got: Vec<Option<usize>> = dbscan(&pts, &DbscanConfig::new(eps, min_pts).unwrap())
            .unwrap()
            .assignment
            .iter()
            .map(|l| l.cluster().map(|c| c.0))
            .collect();
        let pairs: Vec<(f64, f64)> = pts.iter().map(|p| (p.lat(), p.lon())).collect();
        prop_assert_eq!(got, brute_force_dbscan(&pairs, eps, min_pts));
    }

    #[test]
    fn dbscan_core_partition_ignores_order(pts in points(60), eps in 1.0..8.0f64) {
        // with min_pts = 1 there are no border points, so clusters are exactly the
        // eps-connected components and must not depend on input order
        let cfg = DbscanConfig::new(eps, 1).unwrap();
        let a = dbscan(&pts, &cfg).unwrap().assignment;
        let rev: Vec<GeoPoint> = pts.iter().rev().copied().collect();
        let mut b = dbscan(&rev, &cfg).unwrap().assignment;
        b.reverse();
        let n = pts.len();
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(a[i] == a[j], b[i] == b[j]);
            }
        }
    }
}

#[test]
fn well_separated_blobs_are_recovered_exactly() {
    let centers = [(6.0, -75.7), (6.3, -75.3), (6.55, -75.6)];
    let pts = blobs(&centers, 0.005, 40, 4);
    let l = kmeans(&pts, &KMeansConfig::with_k(3)).unwrap();
    for chunk in l.assignment.chunks(40) {
        assert!(chunk.iter().all(|c| *c == chunk[0]));
    }
    let found = xmeans(&pts, &XMeansConfig::new(1, 8).with_seed(2)).unwrap();
    assert_eq!(found.cluster_count(), 3);
}

#[test]
fn xmeans_respects_bounds() {
    let pts = blobs(&[(6.0, -75.7), (6.3, -75.3), (6.55, -75.6), (6.1, -75.2)], 0.005, 30, 6);
    assert_eq!(xmeans(&pts, &XMeansConfig::new(2, 2)).unwrap().cluster_count(), 2);
    assert_eq!(xmeans(&pts, &XMeansConfig::new(6, 6)).unwrap().cluster_count(), 6);
    let k = xmeans(&pts, &XMeansConfig::new(1, 3)).unwrap().cluster_count();
    assert!((1..=3).contains(&k));
}

#[test]
fn isolated_point_is_noise() {
    let mut pts = blobs(&[(6.2, -75.5)], 0.01, 30, 1);
    pts.push(gp(40.05701649, -75.14310264));
    let l = dbscan(&pts, &DbscanConfig::new(50.0, 5).unwrap()).unwrap();
    assert_eq!(l.assignment.last(), Some(&Label::Noise));
    assert_eq!(l.noise_count(), 1);
    assert_eq!(l.cluster_count(), 1);
}
