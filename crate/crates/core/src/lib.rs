//! Zones of interest from geotagged social-media posts.
//!
//! Captured tweets and photo metadata are replayed into a small durable
//! document store, filtered down to a keyword- and area-restricted corpus,
//! clustered (DBSCAN for noise, X-Means for centres), and exported as
//! coverage circles in GeoJSON.

pub mod clustering;
pub mod corpus;
pub mod coverage;
pub mod export;
pub mod geo;
pub mod ingest;
pub mod pipeline;
pub mod store;
