//! Bayesian information criterion of a hard clustering under identical
//! spherical Gaussians with one pooled variance.
//!
//! ```text
//! σ̂²  = Σᵢ ‖xᵢ − μ(i)‖² / (D·(n − K))
//! ℓ   = Σⱼ [ nⱼ ln nⱼ − nⱼ ln n − (nⱼ·D/2) ln(2π σ̂²) − (nⱼ − K)/2 ]
//! BIC = ℓ − (p/2) ln n,   p = K·(D + 1)
//! ```
//!
//! Higher is better.

use std::f64::consts::PI;

use super::sq_dist;
use crate::geo::GeoPoint;

/// Latitude and longitude.
pub const BIC_DIMENSIONS: usize = 2;

/// BIC of `points` assigned by `labels` (indices into `centroids`).
///
/// Returns `-inf` when there are no more points than clusters, where the
/// pooled variance is undefined. A zero variance is floored at the smallest
/// positive double so that the score stays finite.
pub fn bic_score(points: &[GeoPoint], labels: &[usize], centroids: &[GeoPoint]) -> f64 {
    let n = points.len();
    let k = centroids.len();
    if n <= k || k == 0 {
        return f64::NEG_INFINITY;
    }
    let d = BIC_DIMENSIONS as f64;
    let nf = n as f64;
    let kf = k as f64;

    let mut sizes = vec![0usize; k];
    let mut sse = 0.0;
    for (p, &l) in points.iter().zip(labels) {
        sizes[l] += 1;
        sse += sq_dist(p, &centroids[l]);
    }
    let variance = (sse / (d * (nf - kf))).max(f64::MIN_POSITIVE);
    let log_norm = (2.0 * PI * variance).ln();

    let log_likelihood: f64 = sizes
        .iter()
        .filter(|&&nj| nj > 0)
        .map(|&nj| {
            let nj = nj as f64;
            nj * nj.ln() - nj * nf.ln() - nj * d / 2.0 * log_norm - (nj - kf) / 2.0
        })
        .sum();
    let params = kf * (d + 1.0);
    log_likelihood - params / 2.0 * nf.ln()
}
