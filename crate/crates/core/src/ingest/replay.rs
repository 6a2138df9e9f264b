use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::vec;

use super::{parse_photo_entity, parse_tweet, IngestError, PhotoEntity, RawTweet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    Tweet,
    Photo,
}

impl FromStr for RecordKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tweet" => Ok(RecordKind::Tweet),
            "photo" => Ok(RecordKind::Photo),
            other => Err(format!("unknown record kind `{other}` (expected tweet or photo)")),
        }
    }
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecordKind::Tweet => "tweet",
            RecordKind::Photo => "photo",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReplayRecord {
    Tweet(RawTweet),
    Photo(PhotoEntity),
}

#[derive(Debug)]
pub enum ReplayEvent {
    Parsed { file: PathBuf, record: ReplayRecord },
    Skipped { file: PathBuf, error: IngestError },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReplaySummary {
    pub parsed: usize,
    pub skipped: usize,
}

/// Sequential reader over a directory of captured payloads, one per file.
///
/// Files are visited in lexicographic file-name order. Hidden files and
/// subdirectories are ignored. A file that fails to parse is yielded as
/// [`ReplayEvent::Skipped`] and does not stop the replay.
#[derive(Debug)]
pub struct ReplaySource {
    kind: RecordKind,
    files: vec::IntoIter<PathBuf>,
    summary: ReplaySummary,
}

impl ReplaySource {
    pub fn kind(&self) -> RecordKind {
        self.kind
    }

    /// Counts so far; final once the iterator is exhausted.
    pub fn summary(&self) -> ReplaySummary {
        self.summary
    }

    /// Drains the remaining files, discarding their events.
    pub fn finish(mut self) -> ReplaySummary {
        for _ in self.by_ref() {}
        self.summary
    }

    fn parse_file(&self, path: &Path) -> Result<ReplayRecord, IngestError> {
        let bytes = fs::read(path).map_err(|source| IngestError::Io {
            path: path.to_owned(),
            source,
        })?;
        let text = String::from_utf8(bytes).map_err(|_| IngestError::Encoding { path: path.to_owned() })?;
        match self.kind {
            RecordKind::Tweet => parse_tweet(&text).map(ReplayRecord::Tweet),
            RecordKind::Photo => parse_photo_entity(&text).map(ReplayRecord::Photo),
        }
    }
}

impl Iterator for ReplaySource {
    type Item = ReplayEvent;

    fn next(&mut self) -> Option<ReplayEvent> {
        let file = self.files.next()?;
        Some(match self.parse_file(&file) {
            Ok(record) => {
                self.summary.parsed += 1;
                ReplayEvent::Parsed { file, record }
            }
            Err(error) => {
                self.summary.skipped += 1;
                ReplayEvent::Skipped { file, error }
            }
        })
    }
}

/// Opens a replay over `dir`. Only the directory listing happens here;
/// files are read lazily as the source is iterated.
pub fn replay_source(dir: &Path, kind: RecordKind) -> Result<ReplaySource, IngestError> {
    let io_err = |source| IngestError::Io {
        path: dir.to_owned(),
        source,
    };
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let entry = entry.map_err(io_err)?;
        if entry.file_name().to_string_lossy().starts_with('.') {
            continue;
        }
        if entry.file_type().map_err(io_err)?.is_dir() {
            continue;
        }
        files.push(entry.path());
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(ReplaySource {
        kind,
        files: files.into_iter(),
        summary: ReplaySummary::default(),
    })
}
