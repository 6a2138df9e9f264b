use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use zoi::clustering::{DbscanConfig, KMeansConfig, XMeansConfig};
use zoi::corpus::{write_csv, BoundingBox, KeywordQuery, MatchMode};
use zoi::coverage::DEFAULT_VERTEX_COUNT;
use zoi::export::{cluster_report, coverage_report};
use zoi::geo::EarthModel;
use zoi::ingest::RecordKind;
use zoi::pipeline::{
    build_zones, cluster_corpus, ingest_directory, load_records, prepare_corpus, run_on_records, with_threads,
    CorpusSource, PipelineConfig, PipelineError,
};
use zoi::store::Store;

const SEED_VAR: &str = "ZONE_SEED";

#[derive(Debug, Parser)]
#[command(name = "zoi", version, about = "Mine geotagged posts into zones of interest")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Replay captured tweet or photo payloads into a store.
    Ingest {
        /// Directory of captured payload files.
        #[arg(long)]
        input: PathBuf,
        /// `tweet` or `photo`.
        #[arg(long)]
        kind: RecordKind,
        #[arg(long)]
        store: PathBuf,
    },
    /// Cluster the corpus and print the cluster-centre report.
    Cluster(StageArgs),
    /// Cluster the corpus and print a coverage table.
    Coverage(StageArgs),
    /// Cluster the corpus and write the GeoJSON zone document.
    Export(StageArgs),
    /// Every stage: filter, cluster, cover, export, report.
    Pipeline(StageArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct SourceArgs {
    /// Store directory to read.
    #[arg(long)]
    store: Option<PathBuf>,
    /// Corpus CSV (lat,lon,text,origin,source_doc_id) to read instead of a store.
    #[arg(long)]
    corpus: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StageArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Also write the filtered, deduplicated corpus as CSV.
    #[arg(long)]
    corpus_out: Option<PathBuf>,

    /// Study area as min_lat,max_lat,min_lon,max_lon.
    #[arg(long, default_value_t = BoundingBox::STUDY_AREA, allow_hyphen_values = true)]
    bbox: BoundingBox,
    /// Keep records outside the study area.
    #[arg(long)]
    no_bbox: bool,
    /// Comma-separated query terms; without it every record is kept.
    #[arg(long, value_delimiter = ',')]
    keywords: Vec<String>,
    /// `any` or `all` of the terms must occur.
    #[arg(long, default_value = "any")]
    match_mode: MatchMode,

    #[arg(long, default_value_t = 10)]
    k_min: usize,
    #[arg(long, default_value_t = 10)]
    k_max: usize,
    /// Clustering seed; the ZONE_SEED environment variable takes precedence.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    #[arg(long, default_value_t = 100)]
    max_iterations: usize,
    /// Centroid displacement, in degrees, treated as converged.
    #[arg(long, default_value_t = 1e-7)]
    tolerance: f64,

    #[arg(long, default_value_t = 5.0)]
    eps_km: f64,
    #[arg(long, default_value_t = 5)]
    min_pts: usize,
    /// Skip density-based noise removal.
    #[arg(long)]
    no_dbscan: bool,

    /// Vertices of each coverage polygon.
    #[arg(long, default_value_t = DEFAULT_VERTEX_COUNT)]
    vertex_count: usize,
    /// GeoJSON destination. `export` writes to stdout without it;
    /// `pipeline` defaults to zones.geojson.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Add one Point feature per clustered record.
    #[arg(long)]
    include_members: bool,
    /// Worker threads; output does not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

fn config_error(msg: impl Into<String>) -> PipelineError {
    PipelineError::Config(msg.into())
}

fn seed_override() -> Result<Option<u64>, PipelineError> {
    match std::env::var(SEED_VAR) {
        Ok(raw) => raw
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| config_error(format!("{SEED_VAR}={raw:?} is not a decimal unsigned integer"))),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(std::env::VarError::NotUnicode(_)) => Err(config_error(format!("{SEED_VAR} is not valid UTF-8"))),
    }
}

impl StageArgs {
    fn config(&self) -> Result<PipelineConfig, PipelineError> {
        let source = match (&self.source.store, &self.source.corpus) {
            (Some(dir), None) => CorpusSource::Store(dir.clone()),
            (None, Some(csv)) => CorpusSource::Csv(csv.clone()),
            _ => return Err(config_error("exactly one of --store and --corpus is required")),
        };
        let keywords = if self.keywords.is_empty() {
            None
        } else {
            Some(KeywordQuery::new(&self.keywords, self.match_mode).map_err(|e| config_error(e.to_string()))?)
        };
        let dbscan = if self.no_dbscan {
            None
        } else {
            Some(DbscanConfig::new(self.eps_km, self.min_pts)?)
        };
        if self.k_min == 0 || self.k_min > self.k_max {
            return Err(config_error(format!(
                "need 1 <= k_min <= k_max, got {}..{}",
                self.k_min, self.k_max
            )));
        }
        let inner = KMeansConfig {
            k: self.k_min,
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            seed: seed_override()?.unwrap_or(self.seed),
            restarts: self.restarts,
        };
        Ok(PipelineConfig {
            source,
            bbox: (!self.no_bbox).then_some(self.bbox),
            keywords,
            xmeans: XMeansConfig {
                k_min: self.k_min,
                k_max: self.k_max,
                inner,
            },
            dbscan,
            vertex_count: self.vertex_count,
            include_members: self.include_members,
            output_path: self.output.clone(),
            threads: self.threads,
            earth: EarthModel::MEAN,
        })
    }
}

fn io_error(path: &std::path::Path) -> impl FnOnce(io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_corpus(path: &std::path::Path, cfg: &PipelineConfig) -> Result<(), PipelineError> {
    let prepared = prepare_corpus(load_records(&cfg.source)?, cfg);
    let file = File::create(path).map_err(io_error(path))?;
    write_csv(&prepared.records, BufWriter::new(file))?;
    Ok(())
}

fn print(text: &str) -> Result<(), PipelineError> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(io_error(std::path::Path::new("<stdout>")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    Cluster,
    Coverage,
    Export,
    Pipeline,
}

fn run_stage(stage: Stage, args: &StageArgs) -> Result<(), PipelineError> {
    let mut cfg = args.config()?;
    if let Some(path) = &args.corpus_out {
        write_corpus(path, &cfg)?;
    }
    match stage {
        Stage::Cluster | Stage::Coverage => {
            let records = load_records(&cfg.source)?;
            let text = with_threads(cfg.threads, || -> Result<String, PipelineError> {
                let prepared = prepare_corpus(records, &cfg);
                let clustered = cluster_corpus(prepared.records, &cfg)?;
                if stage == Stage::Cluster {
                    return Ok(cluster_report(&clustered.labeling.centroids));
                }
                let (summaries, _) = build_zones(&clustered, &cfg)?;
                Ok(coverage_report(&summaries))
            })??;
            print(&text)
        }
        Stage::Export => {
            let output = run_on_records(load_records(&cfg.source)?, &cfg)?;
            let json = output.document.to_json_string();
            match &cfg.output_path {
                Some(path) => fs::write(path, json).map_err(io_error(path)),
                None => print(&json),
            }
        }
        Stage::Pipeline => {
            let path = cfg
                .output_path
                .get_or_insert_with(|| PathBuf::from("zones.geojson"))
                .clone();
            let output = run_on_records(load_records(&cfg.source)?, &cfg)?;
            fs::write(&path, output.document.to_json_string()).map_err(io_error(&path))?;
            print(&output.report)?;
            let c = output.counts;
            eprintln!(
                "loaded {}, after keywords {}, outside bbox {}, after dedupe {}, noise {}, clustered {}; wrote {}",
                c.loaded,
                c.after_keywords,
                c.purged,
                c.after_dedupe,
                c.noise,
                c.clustered,
                path.display()
            );
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Ingest { input, kind, store } => {
            let mut store = Store::open(&store)?;
            let report = ingest_directory(&input, kind, &mut store)?;
            for (file, reason) in &report.skipped {
                eprintln!("skipped {}: {reason}", file.display());
            }
            print(&format!(
                "parsed {} skipped {} stored {}\ntweet_count {}\nphoto_count {}\n",
                report.replay.parsed,
                report.replay.skipped,
                report.stored,
                report.stats.tweet_count,
                report.stats.photo_count
            ))
        }
        Command::Cluster(args) => run_stage(Stage::Cluster, &args),
        Command::Coverage(args) => run_stage(Stage::Coverage, &args),
        Command::Export(args) => run_stage(Stage::Export, &args),
        Command::Pipeline(args) => run_stage(Stage::Pipeline, &args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
