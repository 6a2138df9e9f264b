//! Independent oracles and fixture builders shared by the integration tests.
//! Nothing here calls into the library's geometry or clustering code.
#![allow(dead_code)]

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::Value;
use zoi::geo::GeoPoint;
use zoi::store::{DocumentBody, Store, TweetBody};

pub const R_KM: f64 = 6371.0;

/// Great-circle distance via the atan2 (Vincenty, sphere) form, which stays
/// well conditioned for both tiny and antipodal separations.
pub fn gc_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dl = (lon2 - lon1).to_radians();
    let y = ((p2.cos() * dl.sin()).powi(2) + (p1.cos() * p2.sin() - p1.sin() * p2.cos() * dl.cos()).powi(2)).sqrt();
    let x = p1.sin() * p2.sin() + p1.cos() * p2.cos() * dl.cos();
    R_KM * y.atan2(x)
}

/// Spherical law of cosines; poorly conditioned below a few metres.
pub fn slc_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dl = (lon2 - lon1).to_radians();
    let c = p1.sin() * p2.sin() + p1.cos() * p2.cos() * dl.cos();
    R_KM * c.clamp(-1.0, 1.0).acos()
}

pub fn gp(lat: f64, lon: f64) -> GeoPoint {
    GeoPoint::new(lat, lon).unwrap()
}

/// `n` Gaussian points around each center, blob after blob.
pub fn blobs(centers: &[(f64, f64)], sigma: f64, n: usize, seed: u64) -> Vec<GeoPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut out = Vec::with_capacity(centers.len() * n);
    for &(lat, lon) in centers {
        for _ in 0..n {
            out.push(gp(lat + noise.sample(&mut rng), lon + noise.sample(&mut rng)));
        }
    }
    out
}

/// `k` centers drawn uniformly from the box shrunk by `margin` degrees.
pub fn centers_in(
    min_lat: f64,
    max_lat: f64,
    min_lon: f64,
    max_lon: f64,
    margin: f64,
    k: usize,
    seed: u64,
) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..k)
        .map(|_| {
            (
                rng.random_range(min_lat + margin..max_lat - margin),
                rng.random_range(min_lon + margin..max_lon - margin),
            )
        })
        .collect()
}

/// Stores each point as a geotagged tweet whose text is `text(i)`.
pub fn tweet_store(dir: &Path, points: &[GeoPoint], text: impl Fn(usize) -> String) {
    let mut store = Store::open(dir).unwrap();
    for (i, p) in points.iter().enumerate() {
        store
            .put_body(&DocumentBody::Tweet(TweetBody {
                coordinates: Some(*p),
                source: "fixture".into(),
                text: text(i),
            }))
            .unwrap();
    }
}

fn sq(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)
}

fn partition_cost(points: &[(f64, f64)], labels: &[usize], k: usize) -> f64 {
    let mut sums = vec![(0.0, 0.0, 0usize); k];
    for (p, &l) in points.iter().zip(labels) {
        sums[l].0 += p.0;
        sums[l].1 += p.1;
        sums[l].2 += 1;
    }
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| {
            let (a, b, c) = sums[l];
            sq(*p, (a / c as f64, b / c as f64))
        })
        .sum()
}

/// Minimum within-cluster sum of squares over every partition of `points`
/// into at most `k` groups, by exhaustive enumeration of label vectors.
pub fn brute_force_wcss(points: &[(f64, f64)], k: usize) -> f64 {
    let n = points.len();
    let mut labels = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        best = best.min(partition_cost(points, &labels, k));
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Textbook DBSCAN from the full distance matrix: core points are those
/// with at least `min_pts` points (self included) within `eps_km`; clusters
/// are connected components of cores, numbered by their smallest core
/// index; a border point joins the lowest-numbered adjacent cluster.
pub fn brute_force_dbscan(points: &[(f64, f64)], eps_km: f64, min_pts: usize) -> Vec<Option<usize>> {
    let n = points.len();
    let near: Vec<Vec<bool>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| gc_km(points[i].0, points[i].1, points[j].0, points[j].1) <= eps_km)
                .collect()
        })
        .collect();
    let core: Vec<bool> = near
        .iter()
        .map(|row| row.iter().filter(|&&b| b).count() >= min_pts)
        .collect();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in 0..n {
            if core[i] && core[j] && near[i][j] {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut number = vec![None; n];
    let mut next = 0;
    let mut labels = vec![None; n];
    for i in 0..n {
        if core[i] {
            let root = find(&mut parent, i);
            if number[root].is_none() {
                number[root] = Some(next);
                next += 1;
            }
            labels[i] = number[root];
        }
    }
    for i in 0..n {
        if !core[i] {
            labels[i] = (0..n)
                .filter(|&j| core[j] && near[i][j])
                .filter_map(|j| labels[j])
                .min();
        }
    }
    labels
}

/// Log-likelihood minus parameter penalty for a hard spherical Gaussian
/// mixture in two dimensions, written out term by term.
pub fn bic_oracle(groups: &[Vec<(f64, f64)>]) -> f64 {
    let d = 2.0;
    let k = groups.len() as f64;
    let n: f64 = groups.iter().map(|g| g.len() as f64).sum();
    let mut sse = 0.0;
    for g in groups {
        let m = g.len() as f64;
        let c = (
            g.iter().map(|p| p.0).sum::<f64>() / m,
            g.iter().map(|p| p.1).sum::<f64>() / m,
        );
        sse += g.iter().map(|p| sq(*p, c)).sum::<f64>();
    }
    let var = sse / (d * (n - k));
    let mut ll = 0.0;
    for g in groups {
        let m = g.len() as f64;
        ll += m * (m / n).ln() - m * d / 2.0 * (2.0 * std::f64::consts::PI * var).ln() - (m - k) / 2.0;
    }
    ll - k * (d + 1.0) / 2.0 * n.ln()
}

/// Structural GeoJSON check on raw JSON text, independent of the library's
/// serde types.
pub fn validate_geojson(text: &str) -> Result<(), String> {
    let doc: Value = serde_json::from_str(text).map_err(|e| format!("not JSON: {e}"))?;
    if doc["type"] != "FeatureCollection" {
        return Err("top level is not a FeatureCollection".into());
    }
    let features = doc["features"].as_array().ok_or("features is not an array")?;
    for (i, f) in features.iter().enumerate() {
        if f["type"] != "Feature" {
            return Err(format!("feature {i}: type is not Feature"));
        }
        if !(f["properties"].is_object() || f["properties"].is_null()) {
            return Err(format!("feature {i}: properties must be an object or null"));
        }
        let g = &f["geometry"];
        let coords = &g["coordinates"];
        match g["type"].as_str() {
            Some("Point") => check_position(coords).map_err(|e| format!("feature {i}: {e}"))?,
            Some("Polygon") => {
                let rings = coords
                    .as_array()
                    .ok_or(format!("feature {i}: polygon coordinates not an array"))?;
                if rings.is_empty() {
                    return Err(format!("feature {i}: polygon without rings"));
                }
                for ring in rings {
                    let ring = ring.as_array().ok_or(format!("feature {i}: ring is not an array"))?;
                    if ring.len() < 4 {
                        return Err(format!("feature {i}: ring has {} positions", ring.len()));
                    }
                    for p in ring {
                        check_position(p).map_err(|e| format!("feature {i}: {e}"))?;
                    }
                    if ring.first() != ring.last() {
                        return Err(format!("feature {i}: ring is not closed"));
                    }
                }
            }
            other => return Err(format!("feature {i}: unsupported geometry {other:?}")),
        }
    }
    Ok(())
}

fn check_position(p: &Value) -> Result<(), String> {
    let a = p.as_array().ok_or("position is not an array")?;
    if a.len() < 2 || a.len() > 3 {
        return Err(format!("position has {} elements", a.len()));
    }
    let lon = a[0].as_f64().ok_or("longitude is not a number")?;
    let lat = a[1].as_f64().ok_or("latitude is not a number")?;
    if !(-180.0..=180.0).contains(&lon) || !(-90.0..=90.0).contains(&lat) {
        return Err(format!("position [{lon}, {lat}] out of range"));
    }
    Ok(())
}

/// For every coverage polygon, the largest relative deviation of a vertex's
/// distance to the matching centroid from the advertised radius.
pub fn worst_ring_deviation(text: &str) -> f64 {
    let doc: Value = serde_json::from_str(text).unwrap();
    let features = doc["features"].as_array().unwrap();
    let mut worst: f64 = 0.0;
    for f in features.iter().filter(|f| f["properties"]["role"] == "coverage") {
        let id = &f["properties"]["cluster_id"];
        let r = f["properties"]["radius_km"].as_f64().unwrap();
        let c = features
            .iter()
            .find(|g| g["properties"]["role"] == "centroid" && &g["properties"]["cluster_id"] == id)
            .unwrap();
        let (clon, clat) = (
            c["geometry"]["coordinates"][0].as_f64().unwrap(),
            c["geometry"]["coordinates"][1].as_f64().unwrap(),
        );
        for v in f["geometry"]["coordinates"][0].as_array().unwrap() {
            let d = gc_km(clat, clon, v[1].as_f64().unwrap(), v[0].as_f64().unwrap());
            let dev = if r > 0.0 { (d - r).abs() / r } else { d };
            worst = worst.max(dev);
        }
    }
    worst
}
