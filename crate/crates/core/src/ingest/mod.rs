//! Parsers for tweet JSON payloads and Flickr search/geo XML entities, plus
//! a replay source that feeds them from a directory of captured files.

mod flickr;
mod replay;
mod tweet;

use std::path::PathBuf;

use thiserror::Error;

use crate::geo::GeoError;

pub use flickr::{
    parse_photo_entity, parse_photo_geo, parse_photo_search, PhotoEntity, PhotoSearchPage, RawPhotoGeo, RawPhotoStub,
};
pub use replay::{replay_source, RecordKind, ReplayEvent, ReplayRecord, ReplaySource, ReplaySummary};
pub use tweet::{parse_tweet, RawTweet};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed JSON at byte {offset}: {message}")]
    Json { offset: usize, message: String },
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("schema error at `{field}`: {reason}")]
    Schema { field: String, reason: String },
    #[error("`{field}` out of range: {value}")]
    Range { field: String, value: String },
    #[error("invalid coordinates: {0}")]
    Coordinates(#[from] GeoError),
    #[error("API error response {code}: {message}")]
    Api { code: String, message: String },
    #[error("{path}: file is not valid UTF-8")]
    Encoding { path: PathBuf },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl IngestError {
    pub(crate) fn schema(field: impl Into<String>, reason: impl Into<String>) -> Self {
        IngestError::Schema {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn range(field: impl Into<String>, value: impl ToString) -> Self {
        IngestError::Range {
            field: field.into(),
            value: value.to_string(),
        }
    }
}
