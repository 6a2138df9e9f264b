//! The normalized (latitude, longitude, text) corpus and the filters applied
//! to it before clustering.

use std::collections::HashSet;
use std::fmt;
use std::io;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::geo::GeoPoint;
use crate::store::{Collection, DocId, DocumentBody, StoreError, StoreReader, StoredDocument};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("keyword query needs at least one term")]
    EmptyQuery,
    #[error("keyword term {0} is blank")]
    BlankTerm(usize),
    #[error("invalid bounding box: {0}")]
    BoundingBox(String),
    #[error("corpus CSV record {record}: {reason}")]
    Csv { record: u64, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Tweet,
    Photo,
}

impl From<Collection> for Origin {
    fn from(c: Collection) -> Self {
        match c {
            Collection::Tweet => Origin::Tweet,
            Collection::Photo => Origin::Photo,
        }
    }
}

/// One corpus row: where, what was said (tweet text or photo name), and
/// which stored document it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusRecord {
    pub position: GeoPoint,
    pub text: String,
    pub origin: Origin,
    pub source_doc_id: DocId,
}

/// Closed latitude/longitude box. Boxes crossing the antimeridian are not
/// representable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    min_lat: f64,
    max_lat: f64,
    min_lon: f64,
    max_lon: f64,
}

impl BoundingBox {
    /// Valle de Aburrá plus Valle de San Nicolás.
    pub const STUDY_AREA: BoundingBox = BoundingBox {
        min_lat: 5.90,
        max_lat: 6.60,
        min_lon: -75.80,
        max_lon: -75.10,
    };

    pub fn new(min_lat: f64, max_lat: f64, min_lon: f64, max_lon: f64) -> Result<Self, CorpusError> {
        let corners = [min_lat, max_lat, min_lon, max_lon];
        if corners.iter().any(|v| !v.is_finite()) {
            return Err(CorpusError::BoundingBox("corners must be finite".into()));
        }
        if min_lat > max_lat {
            return Err(CorpusError::BoundingBox(format!(
                "min_lat {min_lat} > max_lat {max_lat}"
            )));
        }
        if min_lon > max_lon {
            return Err(CorpusError::BoundingBox(format!(
                "min_lon {min_lon} > max_lon {max_lon}"
            )));
        }
        Ok(Self {
            min_lat,
            max_lat,
            min_lon,
            max_lon,
        })
    }

    pub fn contains(&self, p: &GeoPoint) -> bool {
        (self.min_lat..=self.max_lat).contains(&p.lat()) && (self.min_lon..=self.max_lon).contains(&p.lon())
    }

    pub fn min_lat(&self) -> f64 {
        self.min_lat
    }
    pub fn max_lat(&self) -> f64 {
        self.max_lat
    }
    pub fn min_lon(&self) -> f64 {
        self.min_lon
    }
    pub fn max_lon(&self) -> f64 {
        self.max_lon
    }
}

impl FromStr for BoundingBox {
    type Err = CorpusError;

    /// `min_lat,max_lat,min_lon,max_lon`
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CorpusError::BoundingBox(format!("`{s}`: {e}")))?;
        match parts[..] {
            [a, b, c, d] => BoundingBox::new(a, b, c, d),
            _ => Err(CorpusError::BoundingBox(format!(
                "`{s}`: expected min_lat,max_lat,min_lon,max_lon"
            ))),
        }
    }
}

impl fmt::Display for BoundingBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.min_lat, self.max_lat, self.min_lon, self.max_lon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatchMode {
    #[default]
    Any,
    All,
}

impl FromStr for MatchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "any" => Ok(MatchMode::Any),
            "all" => Ok(MatchMode::All),
            other => Err(format!("unknown match mode `{other}` (expected any or all)")),
        }
    }
}

/// Lower-cases, decomposes (NFD) and drops combining marks, so that
/// "Medellín", "MEDELLIN" and "medellin" all fold to "medellin".
pub fn fold(text: &str) -> String {
    text.to_lowercase().nfd().filter(|c| !is_combining_mark(*c)).collect()
}

/// Raw substring search over folded text.
#[derive(Debug, Clone, PartialEq)]
pub struct KeywordQuery {
    terms: Vec<String>,
    folded: Vec<String>,
    mode: MatchMode,
}

impl KeywordQuery {
    pub fn new<I, S>(terms: I, mode: MatchMode) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let terms: Vec<String> = terms.into_iter().map(|t| t.into().trim().to_owned()).collect();
        if terms.is_empty() {
            return Err(CorpusError::EmptyQuery);
        }
        if let Some(i) = terms.iter().position(String::is_empty) {
            return Err(CorpusError::BlankTerm(i));
        }
        let folded = terms.iter().map(|t| fold(t)).collect();
        Ok(Self { terms, folded, mode })
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn mode(&self) -> MatchMode {
        self.mode
    }

    pub fn matches(&self, text: &str) -> bool {
        let text = fold(text);
        match self.mode {
            MatchMode::Any => self.folded.iter().any(|t| text.contains(t.as_str())),
            MatchMode::All => self.folded.iter().all(|t| text.contains(t.as_str())),
        }
    }

    /// Terms that occur in at least one of `texts`, in their original
    /// spelling, sorted.
    pub fn terms_present<'a, I>(&self, texts: I) -> Vec<String>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut seen = vec![false; self.terms.len()];
        for text in texts {
            let text = fold(text);
            for (i, t) in self.folded.iter().enumerate() {
                seen[i] |= text.contains(t.as_str());
            }
        }
        let mut out: Vec<String> = self
            .terms
            .iter()
            .zip(seen)
            .filter(|(_, s)| *s)
            .map(|(t, _)| t.clone())
            .collect();
        out.sort();
        out.dedup();
        out
    }
}

/// Maps a stored document onto a corpus row. Documents without a position
/// yield `None`.
pub fn normalize(doc: &StoredDocument) -> Option<CorpusRecord> {
    let (position, text) = match &doc.body {
        DocumentBody::Tweet(t) => (t.coordinates?, t.text.clone()),
        DocumentBody::Photo(p) => (p.geo.as_ref()?.location, p.name.clone()),
    };
    Some(CorpusRecord {
        position,
        text,
        origin: doc.collection().into(),
        source_doc_id: doc.doc_id,
    })
}

/// Every geotagged document in the store, tweets first, each collection in
/// insertion order.
pub fn load_corpus(store: &StoreReader) -> Result<Vec<CorpusRecord>, StoreError> {
    let mut out = Vec::new();
    for collection in Collection::ALL {
        for doc in store.scan(collection, true)? {
            out.extend(normalize(&doc?));
        }
    }
    Ok(out)
}

pub fn filter_keywords(records: Vec<CorpusRecord>, query: &KeywordQuery) -> Vec<CorpusRecord> {
    records.into_iter().filter(|r| query.matches(&r.text)).collect()
}

/// Splits records into those inside the box (boundary included) and those
/// purged, both in input order.
pub fn filter_bbox(records: Vec<CorpusRecord>, bbox: &BoundingBox) -> (Vec<CorpusRecord>, Vec<CorpusRecord>) {
    records.into_iter().partition(|r| bbox.contains(&r.position))
}

/// Drops exact repeats of (position, text, origin), keeping the first.
pub fn dedupe(records: Vec<CorpusRecord>) -> Vec<CorpusRecord> {
    let mut seen = HashSet::new();
    records
        .into_iter()
        .filter(|r| {
            // +0.0 folds -0.0 onto 0.0 so the two compare equal, as they do numerically
            let key = (
                (r.position.lat() + 0.0).to_bits(),
                (r.position.lon() + 0.0).to_bits(),
                r.text.clone(),
                r.origin,
            );
            seen.insert(key)
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    lat: f64,
    lon: f64,
    text: String,
    origin: Origin,
    source_doc_id: u64,
}

/// Writes the corpus interchange CSV (`lat,lon,text,origin,source_doc_id`).
pub fn write_csv<W: io::Write>(records: &[CorpusRecord], out: W) -> Result<(), CorpusError> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| CorpusError::Csv {
        record: 0,
        reason: e.to_string(),
    };
    if records.is_empty() {
        w.write_record(["lat", "lon", "text", "origin", "source_doc_id"])
            .map_err(csv_err)?;
    }
    for r in records {
        w.serialize(CsvRow {
            lat: r.position.lat(),
            lon: r.position.lon(),
            text: r.text.clone(),
            origin: r.origin,
            source_doc_id: r.source_doc_id.0,
        })
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: io::Read>(input: R) -> Result<Vec<CorpusRecord>, CorpusError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(|e| CorpusError::Csv {
        record: 0,
        reason: e.to_string(),
    })?;
    if header != vec!["lat", "lon", "text", "origin", "source_doc_id"] {
        return Err(CorpusError::Csv {
            record: 0,
            reason: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<CsvRow>().enumerate() {
        let record = i as u64 + 1;
        let row = row.map_err(|e| CorpusError::Csv {
            record,
            reason: e.to_string(),
        })?;
        let position = GeoPoint::new(row.lat, row.lon).map_err(|e| CorpusError::Csv {
            record,
            reason: e.to_string(),
        })?;
        out.push(CorpusRecord {
            position,
            text: row.text,
            origin: row.origin,
            source_doc_id: DocId(row.source_doc_id),
        });
    }
    Ok(out)
}
