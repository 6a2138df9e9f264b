//! The two document shapes the store accepts, and their validation.
//!
//! ```text
//! photo: { geo: { latitude, longitude, accuracy } | null, name }
//! tweet: { coordinates: { coordinates: { latitude, longitude }, type: "Point" } | null,
//!          source, text }
//! ```

use serde::Serialize;
use serde_json::{Map, Value};

use super::{Collection, StoreError};
use crate::geo::GeoPoint;

#[derive(Debug, Clone, PartialEq)]
pub struct PhotoGeo {
    pub location: GeoPoint,
    pub accuracy: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhotoBody {
    pub geo: Option<PhotoGeo>,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TweetBody {
    pub coordinates: Option<GeoPoint>,
    pub source: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DocumentBody {
    Photo(PhotoBody),
    Tweet(TweetBody),
}

impl DocumentBody {
    pub fn collection(&self) -> Collection {
        match self {
            DocumentBody::Photo(_) => Collection::Photo,
            DocumentBody::Tweet(_) => Collection::Tweet,
        }
    }

    /// True when the document carries a complete position.
    pub fn is_geotagged(&self) -> bool {
        match self {
            DocumentBody::Photo(p) => p.geo.is_some(),
            DocumentBody::Tweet(t) => t.coordinates.is_some(),
        }
    }

    /// Canonical JSON: compact, keys in lexicographic order.
    pub fn to_canonical_json(&self) -> String {
        // Field order below is alphabetical; serde emits in declaration order.
        #[derive(Serialize)]
        struct LatLon {
            latitude: f64,
            longitude: f64,
        }
        #[derive(Serialize)]
        struct Geo {
            accuracy: u8,
            latitude: f64,
            longitude: f64,
        }
        #[derive(Serialize)]
        struct Photo<'a> {
            geo: Option<Geo>,
            name: &'a str,
        }
        #[derive(Serialize)]
        struct Coordinates {
            coordinates: LatLon,
            #[serde(rename = "type")]
            kind: &'static str,
        }
        #[derive(Serialize)]
        struct Tweet<'a> {
            coordinates: Option<Coordinates>,
            source: &'a str,
            text: &'a str,
        }

        let out = match self {
            DocumentBody::Photo(p) => serde_json::to_string(&Photo {
                geo: p.geo.as_ref().map(|g| Geo {
                    accuracy: g.accuracy,
                    latitude: g.location.lat(),
                    longitude: g.location.lon(),
                }),
                name: &p.name,
            }),
            DocumentBody::Tweet(t) => serde_json::to_string(&Tweet {
                coordinates: t.coordinates.map(|c| Coordinates {
                    coordinates: LatLon {
                        latitude: c.lat(),
                        longitude: c.lon(),
                    },
                    kind: "Point",
                }),
                source: &t.source,
                text: &t.text,
            }),
        };
        out.expect("document bodies always serialize")
    }

    pub fn to_value(&self) -> Value {
        serde_json::from_str(&self.to_canonical_json()).expect("canonical JSON parses")
    }
}

fn invalid(path: &str, reason: impl Into<String>) -> StoreError {
    StoreError::Validation {
        path: path.to_owned(),
        reason: reason.into(),
    }
}

fn object<'a>(value: &'a Value, path: &str) -> Result<&'a Map<String, Value>, StoreError> {
    value.as_object().ok_or_else(|| invalid(path, "expected an object"))
}

fn only_fields(obj: &Map<String, Value>, path: &str, allowed: &[&str]) -> Result<(), StoreError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(extra) => Err(invalid(&format!("{path}.{extra}"), "unknown field")),
        None => Ok(()),
    }
}

fn field<'a>(obj: &'a Map<String, Value>, path: &str, name: &str) -> Result<&'a Value, StoreError> {
    obj.get(name)
        .ok_or_else(|| invalid(&format!("{path}.{name}"), "missing"))
}

fn string(obj: &Map<String, Value>, path: &str, name: &str) -> Result<String, StoreError> {
    field(obj, path, name)?
        .as_str()
        .map(str::to_owned)
        .ok_or_else(|| invalid(&format!("{path}.{name}"), "expected a string"))
}

fn number(obj: &Map<String, Value>, path: &str, name: &str) -> Result<f64, StoreError> {
    field(obj, path, name)?
        .as_f64()
        .ok_or_else(|| invalid(&format!("{path}.{name}"), "expected a number"))
}

fn lat_lon(obj: &Map<String, Value>, path: &str) -> Result<GeoPoint, StoreError> {
    let lat = number(obj, path, "latitude")?;
    let lon = number(obj, path, "longitude")?;
    if !(-90.0..=90.0).contains(&lat) {
        return Err(invalid(&format!("{path}.latitude"), format!("{lat} outside [-90, 90]")));
    }
    if !(-180.0..=180.0).contains(&lon) {
        return Err(invalid(
            &format!("{path}.longitude"),
            format!("{lon} outside [-180, 180]"),
        ));
    }
    GeoPoint::new(lat, lon).map_err(|e| invalid(path, e.to_string()))
}

fn photo(value: &Value) -> Result<PhotoBody, StoreError> {
    let obj = object(value, "photo")?;
    only_fields(obj, "photo", &["geo", "name"])?;
    let geo = match obj.get("geo") {
        None | Some(Value::Null) => None,
        Some(g) => {
            let g = object(g, "photo.geo")?;
            only_fields(g, "photo.geo", &["latitude", "longitude", "accuracy"])?;
            let location = lat_lon(g, "photo.geo")?;
            let accuracy = field(g, "photo.geo", "accuracy")?
                .as_u64()
                .ok_or_else(|| invalid("photo.geo.accuracy", "expected an integer"))?;
            if !(1..=16).contains(&accuracy) {
                return Err(invalid("photo.geo.accuracy", format!("{accuracy} outside [1, 16]")));
            }
            Some(PhotoGeo {
                location,
                accuracy: accuracy as u8,
            })
        }
    };
    Ok(PhotoBody {
        geo,
        name: string(obj, "photo", "name")?,
    })
}

fn tweet(value: &Value) -> Result<TweetBody, StoreError> {
    let obj = object(value, "tweet")?;
    only_fields(obj, "tweet", &["coordinates", "source", "text"])?;
    let coordinates = match obj.get("coordinates") {
        None | Some(Value::Null) => None,
        Some(c) => {
            let c = object(c, "tweet.coordinates")?;
            only_fields(c, "tweet.coordinates", &["coordinates", "type"])?;
            let kind = string(c, "tweet.coordinates", "type")?;
            if kind != "Point" {
                return Err(invalid(
                    "tweet.coordinates.type",
                    format!("expected \"Point\", found {kind:?}"),
                ));
            }
            let inner = object(
                field(c, "tweet.coordinates", "coordinates")?,
                "tweet.coordinates.coordinates",
            )?;
            only_fields(inner, "tweet.coordinates.coordinates", &["latitude", "longitude"])?;
            Some(lat_lon(inner, "tweet.coordinates.coordinates")?)
        }
    };
    Ok(TweetBody {
        coordinates,
        source: string(obj, "tweet", "source")?,
        text: string(obj, "tweet", "text")?,
    })
}

/// Checks `value` against the collection's schema and returns the typed body.
/// Errors name the offending path, e.g. `photo.geo.longitude`.
pub fn validate(collection: Collection, value: &Value) -> Result<DocumentBody, StoreError> {
    match collection {
        Collection::Photo => photo(value).map(DocumentBody::Photo),
        Collection::Tweet => tweet(value).map(DocumentBody::Tweet),
    }
}
