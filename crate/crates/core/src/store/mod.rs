//! File-backed document store.
//!
//! Layout of a store directory:
//!
//! ```text
//! <dir>/tweet.jsonl   one document per line
//! <dir>/photo.jsonl
//! <dir>/LOCK          held (flock) by the single writer
//! ```
//!
//! Each line is a canonical JSON envelope
//! `{"body":{..},"crc32":N,"id":N,"len":N}` where `len` and `crc32` cover the
//! exact bytes of `body`. Document ids are per-collection insertion sequence
//! numbers starting at 0.

mod schema;

use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;
use serde_json::value::RawValue;
use serde_json::Value;
use thiserror::Error;

pub use schema::{validate, DocumentBody, PhotoBody, PhotoGeo, TweetBody};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("document fails schema at `{path}`: {reason}")]
    Validation { path: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: corrupt record: {reason}")]
    Corrupt { path: PathBuf, line: usize, reason: String },
    #[error("store {0} is locked by another writer")]
    Locked(PathBuf),
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_owned(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Collection {
    Tweet,
    Photo,
}

impl Collection {
    pub const ALL: [Collection; 2] = [Collection::Tweet, Collection::Photo];

    pub fn as_str(&self) -> &'static str {
        match self {
            Collection::Tweet => "tweet",
            Collection::Photo => "photo",
        }
    }

    fn file_name(&self) -> &'static str {
        match self {
            Collection::Tweet => "tweet.jsonl",
            Collection::Photo => "photo.jsonl",
        }
    }

    fn slot(&self) -> usize {
        match self {
            Collection::Tweet => 0,
            Collection::Photo => 1,
        }
    }
}

impl fmt::Display for Collection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Collection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tweet" => Ok(Collection::Tweet),
            "photo" => Ok(Collection::Photo),
            other => Err(format!("unknown collection `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DocId(pub u64);

impl fmt::Display for DocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoredDocument {
    pub doc_id: DocId,
    pub body: DocumentBody,
}

impl StoredDocument {
    pub fn collection(&self) -> Collection {
        self.body.collection()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StoreStats {
    pub tweet_count: u64,
    pub photo_count: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope<'a> {
    #[serde(borrow)]
    body: &'a RawValue,
    crc32: u32,
    id: u64,
    len: usize,
}

fn encode_line(id: DocId, body: &DocumentBody) -> String {
    let body = body.to_canonical_json();
    let crc = crc32fast::hash(body.as_bytes());
    format!(
        "{{\"body\":{body},\"crc32\":{crc},\"id\":{},\"len\":{}}}\n",
        id.0,
        body.len()
    )
}

fn decode_line(line: &str, collection: Collection, expected_id: u64) -> Result<StoredDocument, String> {
    let env: Envelope<'_> = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let raw = env.body.get();
    if raw.len() != env.len {
        return Err(format!("length {} does not match recorded {}", raw.len(), env.len));
    }
    if crc32fast::hash(raw.as_bytes()) != env.crc32 {
        return Err("checksum mismatch".into());
    }
    if env.id != expected_id {
        return Err(format!("id {} out of sequence (expected {expected_id})", env.id));
    }
    let value: Value = serde_json::from_str(raw).map_err(|e| e.to_string())?;
    let body = validate(collection, &value).map_err(|e| e.to_string())?;
    Ok(StoredDocument {
        doc_id: DocId(env.id),
        body,
    })
}

/// Documents of one collection, in insertion order, as of the moment the
/// scan was opened.
pub struct Scan {
    path: PathBuf,
    collection: Collection,
    geo_only: bool,
    reader: Option<BufReader<io::Take<File>>>,
    line_no: usize,
    buf: String,
}

impl Iterator for Scan {
    type Item = Result<StoredDocument, StoreError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let reader = self.reader.as_mut()?;
            self.buf.clear();
            match reader.read_line(&mut self.buf) {
                Err(e) => {
                    self.reader = None;
                    return Some(Err(io_error(&self.path)(e)));
                }
                // An unterminated tail is a write still in flight; not visible yet.
                Ok(0) => return None,
                Ok(_) if !self.buf.ends_with('\n') => return None,
                Ok(_) => {}
            }
            let line_no = self.line_no;
            self.line_no += 1;
            match decode_line(self.buf.trim_end_matches('\n'), self.collection, line_no as u64) {
                Ok(doc) if self.geo_only && !doc.body.is_geotagged() => continue,
                Ok(doc) => return Some(Ok(doc)),
                Err(reason) => {
                    self.reader = None;
                    return Some(Err(StoreError::Corrupt {
                        path: self.path.clone(),
                        line: line_no + 1,
                        reason,
                    }));
                }
            }
        }
    }
}

fn open_scan(dir: &Path, collection: Collection, geo_only: bool) -> Result<Scan, StoreError> {
    let path = dir.join(collection.file_name());
    let reader = match File::open(&path) {
        Ok(file) => {
            let snapshot = file.metadata().map_err(io_error(&path))?.len();
            Some(BufReader::new(file.take(snapshot)))
        }
        Err(e) if e.kind() == io::ErrorKind::NotFound => None,
        Err(e) => return Err(io_error(&path)(e)),
    };
    Ok(Scan {
        path,
        collection,
        geo_only,
        reader,
        line_no: 0,
        buf: String::new(),
    })
}

fn count_dir(dir: &Path) -> Result<StoreStats, StoreError> {
    let count = |c| -> Result<u64, StoreError> {
        let mut n = 0;
        for doc in open_scan(dir, c, false)? {
            doc?;
            n += 1;
        }
        Ok(n)
    };
    Ok(StoreStats {
        tweet_count: count(Collection::Tweet)?,
        photo_count: count(Collection::Photo)?,
    })
}

fn get_in_dir(dir: &Path, collection: Collection, id: DocId) -> Result<Option<StoredDocument>, StoreError> {
    for doc in open_scan(dir, collection, false)? {
        let doc = doc?;
        if doc.doc_id == id {
            return Ok(Some(doc));
        }
    }
    Ok(None)
}

/// Read-only handle. Any number may coexist with one [`Store`] writer.
#[derive(Debug, Clone)]
pub struct StoreReader {
    dir: PathBuf,
}

impl StoreReader {
    pub fn open(dir: &Path) -> Result<Self, StoreError> {
        let meta = fs::metadata(dir).map_err(io_error(dir))?;
        if !meta.is_dir() {
            return Err(io_error(dir)(io::Error::new(
                io::ErrorKind::NotADirectory,
                "not a directory",
            )));
        }
        Ok(Self { dir: dir.to_owned() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn scan(&self, collection: Collection, geo_only: bool) -> Result<Scan, StoreError> {
        open_scan(&self.dir, collection, geo_only)
    }

    pub fn get(&self, collection: Collection, id: DocId) -> Result<Option<StoredDocument>, StoreError> {
        get_in_dir(&self.dir, collection, id)
    }

    pub fn stats(&self) -> Result<StoreStats, StoreError> {
        count_dir(&self.dir)
    }
}

/// The single writer of a store directory.
///
/// Holds an exclusive lock on `<dir>/LOCK` for its lifetime; a second
/// writer fails with [`StoreError::Locked`]. Every `put` is fsynced before
/// it returns.
#[derive(Debug)]
pub struct Store {
    dir: PathBuf,
    _lock: File,
    files: [File; 2],
    next_id: [u64; 2],
}

impl Store {
    /// Opens (creating if needed) a store for writing.
    ///
    /// A trailing partial line left by an interrupted write is truncated;
    /// any other damage is reported as [`StoreError::Corrupt`].
    pub fn open(dir: &Path) -> Result<Self, StoreError> {
        fs::create_dir_all(dir).map_err(io_error(dir))?;
        let lock_path = dir.join("LOCK");
        let lock = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&lock_path)
            .map_err(io_error(&lock_path))?;
        match lock.try_lock() {
            Ok(()) => {}
            Err(fs::TryLockError::WouldBlock) => return Err(StoreError::Locked(dir.to_owned())),
            Err(fs::TryLockError::Error(e)) => return Err(io_error(&lock_path)(e)),
        }

        let mut created = false;
        let mut open = |c: Collection| -> Result<(File, u64), StoreError> {
            let path = dir.join(c.file_name());
            created |= !path.exists();
            let mut file = OpenOptions::new()
                .read(true)
                .append(true)
                .create(true)
                .open(&path)
                .map_err(io_error(&path))?;
            let count = recover(&mut file, &path, c)?;
            Ok((file, count))
        };
        let (tweets, tweet_count) = open(Collection::Tweet)?;
        let (photos, photo_count) = open(Collection::Photo)?;
        if created {
            File::open(dir).and_then(|d| d.sync_all()).map_err(io_error(dir))?;
        }
        Ok(Self {
            dir: dir.to_owned(),
            _lock: lock,
            files: [tweets, photos],
            next_id: [tweet_count, photo_count],
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Validates `body` against the collection schema and appends it.
    pub fn put(&mut self, collection: Collection, body: &Value) -> Result<DocId, StoreError> {
        let body = validate(collection, body)?;
        self.put_body(&body)
    }

    /// Appends an already-typed body.
    pub fn put_body(&mut self, body: &DocumentBody) -> Result<DocId, StoreError> {
        // `PhotoGeo::accuracy` is a bare u8, so typed bodies are validated too.
        let collection = body.collection();
        validate(collection, &body.to_value())?;
        let slot = collection.slot();
        let id = DocId(self.next_id[slot]);
        let line = encode_line(id, body);
        let path = self.dir.join(collection.file_name());
        let file = &mut self.files[slot];
        file.write_all(line.as_bytes()).map_err(io_error(&path))?;
        file.sync_data().map_err(io_error(&path))?;
        self.next_id[slot] += 1;
        Ok(id)
    }

    pub fn scan(&self, collection: Collection, geo_only: bool) -> Result<Scan, StoreError> {
        open_scan(&self.dir, collection, geo_only)
    }

    pub fn get(&self, collection: Collection, id: DocId) -> Result<Option<StoredDocument>, StoreError> {
        get_in_dir(&self.dir, collection, id)
    }

    pub fn stats(&self) -> Result<StoreStats, StoreError> {
        Ok(StoreStats {
            tweet_count: self.next_id[Collection::Tweet.slot()],
            photo_count: self.next_id[Collection::Photo.slot()],
        })
    }
}

/// Verifies every complete line, drops a torn tail, and returns the count.
fn recover(file: &mut File, path: &Path, collection: Collection) -> Result<u64, StoreError> {
    let mut content = Vec::new();
    file.seek(SeekFrom::Start(0)).map_err(io_error(path))?;
    file.read_to_end(&mut content).map_err(io_error(path))?;
    let complete = content.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let text = std::str::from_utf8(&content[..complete]).map_err(|e| StoreError::Corrupt {
        path: path.to_owned(),
        line: content[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1,
        reason: "invalid UTF-8".into(),
    })?;
    let mut count = 0u64;
    for (i, line) in text.lines().enumerate() {
        decode_line(line, collection, count).map_err(|reason| StoreError::Corrupt {
            path: path.to_owned(),
            line: i + 1,
            reason,
        })?;
        count += 1;
    }
    if complete < content.len() {
        file.set_len(complete as u64).map_err(io_error(path))?;
        file.sync_all().map_err(io_error(path))?;
    }
    Ok(count)
}
