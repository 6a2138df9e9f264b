use serde_json::{json, Map, Value};

use super::IngestError;
use crate::geo::GeoPoint;

/// The three tweet blocks kept from a status payload.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTweet {
    /// Decoded from the GeoJSON `coordinates` block, whose array order is
    /// `[longitude, latitude]`.
    pub coordinates: Option<GeoPoint>,
    /// Application of origin, usually an HTML anchor.
    pub source: String,
    pub text: String,
}

impl RawTweet {
    /// Re-encodes the tweet as a payload [`parse_tweet`] accepts.
    pub fn to_json(&self) -> Value {
        let coordinates = match self.coordinates {
            Some(p) => json!({ "coordinates": [p.lon(), p.lat()], "type": "Point" }),
            None => Value::Null,
        };
        json!({ "coordinates": coordinates, "source": self.source, "text": self.text })
    }
}

fn byte_offset(payload: &str, err: &serde_json::Error) -> usize {
    if err.is_eof() {
        return payload.len();
    }
    let line_start: usize = payload
        .split_inclusive('\n')
        .take(err.line().saturating_sub(1))
        .map(str::len)
        .sum();
    (line_start + err.column().saturating_sub(1)).min(payload.len())
}

/// Parses one tweet JSON document.
///
/// Only the GeoJSON `coordinates` block is read for position; the legacy
/// `geo` block (latitude first) is ignored.
pub fn parse_tweet(payload: &str) -> Result<RawTweet, IngestError> {
    let value: Value = serde_json::from_str(payload).map_err(|e| IngestError::Json {
        offset: byte_offset(payload, &e),
        message: e.to_string(),
    })?;
    let obj = value
        .as_object()
        .ok_or_else(|| IngestError::schema("$", "tweet payload must be a JSON object"))?;

    let coordinates = match obj.get("coordinates") {
        None | Some(Value::Null) => None,
        Some(Value::Object(block)) => Some(decode_point(block)?),
        Some(_) => return Err(IngestError::schema("coordinates", "expected an object or null")),
    };
    let source = match obj.get("source") {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(IngestError::schema("source", "expected a string")),
    };
    let text = match obj.get("text") {
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(IngestError::schema("text", "expected a string")),
        None => return Err(IngestError::schema("text", "missing")),
    };
    Ok(RawTweet {
        coordinates,
        source,
        text,
    })
}

fn decode_point(block: &Map<String, Value>) -> Result<GeoPoint, IngestError> {
    match block.get("type") {
        Some(Value::String(t)) if t == "Point" => {}
        Some(other) => {
            return Err(IngestError::schema(
                "coordinates.type",
                format!("expected \"Point\", found {other}"),
            ))
        }
        None => return Err(IngestError::schema("coordinates.type", "missing")),
    }
    let pair = match block.get("coordinates") {
        Some(Value::Array(items)) if items.len() == 2 => items,
        Some(Value::Array(items)) => {
            return Err(IngestError::schema(
                "coordinates.coordinates",
                format!("expected 2 positions, found {}", items.len()),
            ))
        }
        Some(_) => return Err(IngestError::schema("coordinates.coordinates", "expected an array")),
        None => return Err(IngestError::schema("coordinates.coordinates", "missing")),
    };
    let lon = pair[0]
        .as_f64()
        .ok_or_else(|| IngestError::schema("coordinates.coordinates[0]", "expected a number"))?;
    let lat = pair[1]
        .as_f64()
        .ok_or_else(|| IngestError::schema("coordinates.coordinates[1]", "expected a number"))?;
    Ok(GeoPoint::new(lat, lon)?)
}
