//! Coordinates, great-circle distance, and spherical destination points.
//!
//! Every public function speaks decimal degrees; radians only appear
//! internally. The Earth is a sphere whose radius is carried by
//! [`EarthModel`].

use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

/// Mean Earth radius in kilometres.
pub const MEAN_EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeoError {
    #[error("latitude {0} is outside [-90, 90]")]
    Latitude(f64),
    #[error("longitude {0} is outside [-180, 180]")]
    Longitude(f64),
    #[error("{0} is not a finite number")]
    NonFinite(&'static str),
    #[error("distance {0} km is negative or not finite")]
    Distance(f64),
    #[error("earth radius {0} km must be positive and finite")]
    EarthRadius(f64),
    #[error("cannot average an empty set of points")]
    EmptySet,
}

/// A latitude/longitude pair in decimal degrees.
///
/// Construction validates the ranges, so every `GeoPoint` in circulation is
/// finite with `lat ∈ [-90, 90]` and `lon ∈ [-180, 180]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

impl GeoPoint {
    pub fn new(lat_deg: f64, lon_deg: f64) -> Result<Self, GeoError> {
        if !lat_deg.is_finite() {
            return Err(GeoError::NonFinite("latitude"));
        }
        if !lon_deg.is_finite() {
            return Err(GeoError::NonFinite("longitude"));
        }
        if !(-90.0..=90.0).contains(&lat_deg) {
            return Err(GeoError::Latitude(lat_deg));
        }
        if !(-180.0..=180.0).contains(&lon_deg) {
            return Err(GeoError::Longitude(lon_deg));
        }
        Ok(Self {
            lat: lat_deg,
            lon: lon_deg,
        })
    }

    #[inline]
    pub fn lat(&self) -> f64 {
        self.lat
    }

    #[inline]
    pub fn lon(&self) -> f64 {
        self.lon
    }

    /// Arithmetic mean of latitudes and of longitudes.
    pub fn mean<'a, I>(points: I) -> Result<GeoPoint, GeoError>
    where
        I: IntoIterator<Item = &'a GeoPoint>,
    {
        let mut acc = MeanAccumulator::default();
        for p in points {
            acc.push(p);
        }
        acc.mean()
    }
}

impl fmt::Display for GeoPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lat, self.lon)
    }
}

/// Running coordinate sums. Points are added in call order, so two
/// accumulators fed the same sequence produce bit-identical means.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeanAccumulator {
    lat_sum: f64,
    lon_sum: f64,
    count: usize,
}

impl MeanAccumulator {
    #[inline]
    pub fn push(&mut self, p: &GeoPoint) {
        self.lat_sum += p.lat;
        self.lon_sum += p.lon;
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> Result<GeoPoint, GeoError> {
        if self.count == 0 {
            return Err(GeoError::EmptySet);
        }
        let n = self.count as f64;
        // A mean of in-range values is in range; the clamp only absorbs rounding.
        Ok(GeoPoint {
            lat: (self.lat_sum / n).clamp(-90.0, 90.0),
            lon: (self.lon_sum / n).clamp(-180.0, 180.0),
        })
    }
}

/// Spherical Earth. The radius is fixed for the lifetime of the value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarthModel {
    radius_km: f64,
}

impl EarthModel {
    pub const MEAN: EarthModel = EarthModel {
        radius_km: MEAN_EARTH_RADIUS_KM,
    };

    pub fn with_radius(radius_km: f64) -> Result<Self, GeoError> {
        if !radius_km.is_finite() || radius_km <= 0.0 {
            return Err(GeoError::EarthRadius(radius_km));
        }
        Ok(Self { radius_km })
    }

    pub fn radius_km(&self) -> f64 {
        self.radius_km
    }

    /// Half the great-circle circumference, the largest possible distance.
    pub fn max_distance_km(&self) -> f64 {
        PI * self.radius_km
    }
}

impl Default for EarthModel {
    fn default() -> Self {
        Self::MEAN
    }
}

/// Non-negative distance in kilometres.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct DistanceKm(f64);

impl DistanceKm {
    pub const ZERO: DistanceKm = DistanceKm(0.0);

    pub fn new(km: f64) -> Result<Self, GeoError> {
        if !km.is_finite() || km < 0.0 {
            return Err(GeoError::Distance(km));
        }
        Ok(Self(km))
    }

    #[inline]
    pub fn km(&self) -> f64 {
        self.0
    }
}

impl fmt::Display for DistanceKm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} km", self.0)
    }
}

pub fn degrees_to_radians(deg: f64) -> Result<f64, GeoError> {
    if !deg.is_finite() {
        return Err(GeoError::NonFinite("angle"));
    }
    Ok(deg * PI / 180.0)
}

#[inline]
fn rad(deg: f64) -> f64 {
    deg * PI / 180.0
}

#[inline]
fn deg(rad: f64) -> f64 {
    rad * 180.0 / PI
}

#[inline]
fn haversin(theta: f64) -> f64 {
    let s = (theta / 2.0).sin();
    s * s
}

/// Great-circle distance by the haversine formula,
/// `d = 2R·asin(√h)` with `h = hav(Δφ) + cos φ₁·cos φ₂·hav(Δλ)`.
///
/// Exactly symmetric in its two arguments.
pub fn haversine_distance(a: &GeoPoint, b: &GeoPoint, earth: &EarthModel) -> DistanceKm {
    let phi1 = rad(a.lat);
    let phi2 = rad(b.lat);
    let dphi = phi2 - phi1;
    let dlambda = rad(b.lon) - rad(a.lon);
    let h = haversin(dphi) + phi1.cos() * phi2.cos() * haversin(dlambda);
    // Rounding can push √h a hair past 1 for antipodal pairs.
    let c = h.sqrt().clamp(0.0, 1.0).asin();
    DistanceKm(2.0 * earth.radius_km * c)
}

/// Wraps a longitude into `[-180, 180)`; values already in range are kept.
fn wrap_longitude(lon: f64) -> f64 {
    if (-180.0..=180.0).contains(&lon) {
        lon
    } else {
        (lon + 180.0).rem_euclid(360.0) - 180.0
    }
}

/// Point reached by travelling `distance` along the great circle leaving
/// `center` at `bearing_deg` (clockwise from north, any finite value).
pub fn destination_point(
    center: &GeoPoint,
    bearing_deg: f64,
    distance: DistanceKm,
    earth: &EarthModel,
) -> Result<GeoPoint, GeoError> {
    if !bearing_deg.is_finite() {
        return Err(GeoError::NonFinite("bearing"));
    }
    if distance.km() == 0.0 {
        return Ok(*center);
    }
    let delta = distance.km() / earth.radius_km;
    let theta = rad(bearing_deg.rem_euclid(360.0));
    let phi1 = rad(center.lat);
    let lambda1 = rad(center.lon);

    let sin_phi2 = (phi1.sin() * delta.cos() + phi1.cos() * delta.sin() * theta.cos()).clamp(-1.0, 1.0);
    let phi2 = sin_phi2.asin();
    let y = theta.sin() * delta.sin() * phi1.cos();
    let x = delta.cos() - phi1.sin() * sin_phi2;
    let lambda2 = lambda1 + y.atan2(x);

    GeoPoint::new(deg(phi2).clamp(-90.0, 90.0), wrap_longitude(deg(lambda2)))
}
