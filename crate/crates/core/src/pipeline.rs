//! End-to-end drivers: replaying captured payloads into a store, and
//! turning a store (or corpus CSV) into zones of interest.
//!
//! ```text
//! scan → normalize → keyword filter → bbox purge → dedupe
//!      → DBSCAN noise removal → X-Means → coverage → GeoJSON + report
//! ```

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::clustering::{dbscan, xmeans, ClusterError, DbscanConfig, Label, Labeling, XMeansConfig};
use crate::corpus::{self, BoundingBox, CorpusError, CorpusRecord, KeywordQuery};
use crate::coverage::{coverage_circle, summarize, CoverageError, CoverageSummary, DEFAULT_VERTEX_COUNT};
use crate::export::{cluster_report, export_geojson, ExportError, Zone, ZoneDocument, ZoneMember};
use crate::geo::{EarthModel, GeoPoint};
use crate::ingest::{replay_source, IngestError, PhotoEntity, RecordKind, ReplayEvent, ReplayRecord, ReplaySummary};
use crate::store::{DocumentBody, PhotoBody, PhotoGeo, Store, StoreError, StoreReader, StoreStats, TweetBody};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("empty corpus: no records left after {stage}")]
    EmptyCorpus { stage: &'static str },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Coverage(#[from] CoverageError),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    /// Process exit status: 2 for an empty corpus, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::EmptyCorpus { .. } => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub replay: ReplaySummary,
    pub skipped: Vec<(PathBuf, String)>,
    pub stored: usize,
    pub stats: StoreStats,
}

/// Replays `input_dir` into `store`.
///
/// Tweets are stored one per parsed file. Photo directories hold search
/// pages and geo entities side by side; they are joined on photo id, each
/// distinct id is stored once (title as name, location if a geo entity
/// was seen), in order of first appearance.
pub fn ingest_directory(input_dir: &Path, kind: RecordKind, store: &mut Store) -> Result<IngestReport, PipelineError> {
    let mut source = replay_source(input_dir, kind)?;
    let mut report = IngestReport::default();
    let mut photo_order: Vec<String> = Vec::new();
    let mut titles: HashMap<String, String> = HashMap::new();
    let mut locations: HashMap<String, PhotoGeo> = HashMap::new();

    for event in source.by_ref() {
        match event {
            ReplayEvent::Skipped { file, error } => report.skipped.push((file, error.to_string())),
            ReplayEvent::Parsed {
                record: ReplayRecord::Tweet(t),
                ..
            } => {
                store.put_body(&DocumentBody::Tweet(TweetBody {
                    coordinates: t.coordinates,
                    source: t.source,
                    text: t.text,
                }))?;
                report.stored += 1;
            }
            ReplayEvent::Parsed {
                record: ReplayRecord::Photo(entity),
                ..
            } => match entity {
                PhotoEntity::Search(page) => {
                    for stub in page.stubs {
                        if !titles.contains_key(&stub.id) && !locations.contains_key(&stub.id) {
                            photo_order.push(stub.id.clone());
                        }
                        titles.entry(stub.id).or_insert(stub.title);
                    }
                }
                PhotoEntity::Geo(geo) => {
                    if !titles.contains_key(&geo.photo_id) && !locations.contains_key(&geo.photo_id) {
                        photo_order.push(geo.photo_id.clone());
                    }
                    locations.entry(geo.photo_id).or_insert(PhotoGeo {
                        location: geo.location,
                        accuracy: geo.accuracy,
                    });
                }
            },
        }
    }
    for id in photo_order {
        store.put_body(&DocumentBody::Photo(PhotoBody {
            geo: locations.remove(&id),
            name: titles.remove(&id).unwrap_or_default(),
        }))?;
        report.stored += 1;
    }
    report.replay = source.summary();
    report.stats = store.stats()?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub enum CorpusSource {
    Store(PathBuf),
    Csv(PathBuf),
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub source: CorpusSource,
    /// `None` disables the study-area purge.
    pub bbox: Option<BoundingBox>,
    /// `None` keeps every record.
    pub keywords: Option<KeywordQuery>,
    pub xmeans: XMeansConfig,
    /// `None` skips density-based noise removal.
    pub dbscan: Option<DbscanConfig>,
    pub vertex_count: usize,
    pub include_members: bool,
    pub output_path: Option<PathBuf>,
    /// Worker threads; `None` uses the global pool. Results do not depend
    /// on this value.
    pub threads: Option<usize>,
    pub earth: EarthModel,
}

impl PipelineConfig {
    pub fn new(source: CorpusSource) -> Self {
        Self {
            source,
            bbox: Some(BoundingBox::STUDY_AREA),
            keywords: None,
            xmeans: XMeansConfig::new(10, 10),
            dbscan: Some(DbscanConfig::default()),
            vertex_count: DEFAULT_VERTEX_COUNT,
            include_members: false,
            output_path: None,
            threads: None,
            earth: EarthModel::MEAN,
        }
    }
}

/// Record counts after each corpus stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StageCounts {
    pub loaded: usize,
    pub after_keywords: usize,
    pub purged: usize,
    pub after_dedupe: usize,
    pub noise: usize,
    pub clustered: usize,
}

#[derive(Debug, Clone)]
pub struct PreparedCorpus {
    pub records: Vec<CorpusRecord>,
    pub purged: Vec<CorpusRecord>,
    pub counts: StageCounts,
}

#[derive(Debug, Clone)]
pub struct ClusteredCorpus {
    /// Records that survived noise removal, in corpus order.
    pub records: Vec<CorpusRecord>,
    pub noise: Vec<CorpusRecord>,
    pub labeling: Labeling,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub document: ZoneDocument,
    pub report: String,
    pub summaries: Vec<CoverageSummary>,
    pub clustered: ClusteredCorpus,
    pub counts: StageCounts,
}

pub fn load_records(source: &CorpusSource) -> Result<Vec<CorpusRecord>, PipelineError> {
    match source {
        CorpusSource::Store(dir) => Ok(corpus::load_corpus(&StoreReader::open(dir)?)?),
        CorpusSource::Csv(path) => {
            let file = File::open(path).map_err(|source| PipelineError::Io {
                path: path.clone(),
                source,
            })?;
            Ok(corpus::read_csv(BufReader::new(file))?)
        }
    }
}

/// Keyword filter, bounding-box purge, then dedupe.
pub fn prepare_corpus(records: Vec<CorpusRecord>, cfg: &PipelineConfig) -> PreparedCorpus {
    let mut counts = StageCounts {
        loaded: records.len(),
        ..StageCounts::default()
    };
    let records = match &cfg.keywords {
        Some(q) => corpus::filter_keywords(records, q),
        None => records,
    };
    counts.after_keywords = records.len();
    let (records, purged) = match &cfg.bbox {
        Some(b) => corpus::filter_bbox(records, b),
        None => (records, Vec::new()),
    };
    counts.purged = purged.len();
    let records = corpus::dedupe(records);
    counts.after_dedupe = records.len();
    PreparedCorpus {
        records,
        purged,
        counts,
    }
}

/// DBSCAN noise removal followed by X-Means on what remains.
pub fn cluster_corpus(records: Vec<CorpusRecord>, cfg: &PipelineConfig) -> Result<ClusteredCorpus, PipelineError> {
    if records.is_empty() {
        return Err(PipelineError::EmptyCorpus { stage: "filtering" });
    }
    let (records, noise) = match &cfg.dbscan {
        Some(db) => {
            let points: Vec<GeoPoint> = records.iter().map(|r| r.position).collect();
            let density = dbscan(&points, db)?;
            let (kept, noise): (Vec<_>, Vec<_>) = records
                .into_iter()
                .zip(&density.assignment)
                .partition(|(_, l)| !l.is_noise());
            (
                kept.into_iter().map(|(r, _)| r).collect::<Vec<_>>(),
                noise.into_iter().map(|(r, _)| r).collect(),
            )
        }
        None => (records, Vec::new()),
    };
    if records.is_empty() {
        return Err(PipelineError::EmptyCorpus { stage: "noise removal" });
    }
    let points: Vec<GeoPoint> = records.iter().map(|r| r.position).collect();
    let labeling = xmeans(&points, &cfg.xmeans)?;
    Ok(ClusteredCorpus {
        records,
        noise,
        labeling,
    })
}

/// Coverage summaries, circles and the GeoJSON document for a clustering.
pub fn build_zones(
    clustered: &ClusteredCorpus,
    cfg: &PipelineConfig,
) -> Result<(Vec<CoverageSummary>, ZoneDocument), PipelineError> {
    let points: Vec<GeoPoint> = clustered.records.iter().map(|r| r.position).collect();
    let summaries = summarize(&clustered.labeling, &points, &cfg.earth)?;
    let mut zones = Vec::with_capacity(summaries.len());
    for s in &summaries {
        let circle = coverage_circle(&s.centroid, s.radius, cfg.vertex_count, &cfg.earth)?;
        let top_terms = match &cfg.keywords {
            Some(q) => q.terms_present(
                clustered
                    .labeling
                    .members(s.cluster)
                    .into_iter()
                    .map(|i| clustered.records[i].text.as_str()),
            ),
            None => Vec::new(),
        };
        zones.push(Zone {
            summary: s.clone(),
            circle,
            top_terms,
        });
    }
    let members: Vec<ZoneMember> = clustered
        .records
        .iter()
        .zip(&clustered.labeling.assignment)
        .filter_map(|(r, l)| match l {
            Label::Cluster(id) => Some(ZoneMember {
                cluster: *id,
                position: r.position,
                text: r.text.clone(),
            }),
            Label::Noise => None,
        })
        .collect();
    let document = export_geojson(&zones, &members, cfg.include_members)?;
    Ok((summaries, document))
}

fn validate(cfg: &PipelineConfig) -> Result<(), PipelineError> {
    if cfg.vertex_count < 3 {
        return Err(PipelineError::Config(format!(
            "vertex count {} is below 3",
            cfg.vertex_count
        )));
    }
    if cfg.threads == Some(0) {
        return Err(PipelineError::Config("thread count must be positive".into()));
    }
    Ok(())
}

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, PipelineError> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| PipelineError::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Everything after loading: prepare, cluster, summarize, export.
pub fn run_on_records(records: Vec<CorpusRecord>, cfg: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    validate(cfg)?;
    with_threads(cfg.threads, || {
        let prepared = prepare_corpus(records, cfg);
        let mut counts = prepared.counts;
        let clustered = cluster_corpus(prepared.records, cfg)?;
        counts.noise = clustered.noise.len();
        counts.clustered = clustered.records.len();
        let (summaries, document) = build_zones(&clustered, cfg)?;
        let report = cluster_report(&clustered.labeling.centroids);
        Ok(PipelineOutput {
            document,
            report,
            summaries,
            clustered,
            counts,
        })
    })?
}

/// Loads the configured corpus, runs every stage, and writes the GeoJSON
/// document to `cfg.output_path` when one is set.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    validate(cfg)?;
    let records = load_records(&cfg.source)?;
    let output = run_on_records(records, cfg)?;
    if let Some(path) = &cfg.output_path {
        fs::write(path, output.document.to_json_string()).map_err(|source| PipelineError::Io {
            path: path.clone(),
            source,
        })?;
    }
    Ok(output)
}
