use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn zoi(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_zoi"));
    cmd.args(args).env_remove("ZONE_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn fixtures(sub: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(sub)
}

/// Three tight rings of points inside the default study area, plus one
/// record far outside it.
fn write_corpus(path: &Path) {
    let mut out = String::from("lat,lon,text,origin,source_doc_id\n");
    let mut id = 0;
    for (lat, lon) in [(6.05, -75.7), (6.25, -75.57), (6.45, -75.3)] {
        for i in 0..24 {
            let a = i as f64 * 0.2618;
            let r = 0.004 + 0.0005 * (i % 5) as f64;
            out.push_str(&format!(
                "{},{},fiesta {id},tweet,{id}\n",
                lat + r * a.cos(),
                lon + r * a.sin()
            ));
            id += 1;
        }
    }
    out.push_str(&format!("40.05701649,-75.14310264,Tweet Button,tweet,{id}\n"));
    fs::write(path, out).unwrap();
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn ingest_reports_counts_and_skips() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    let o = zoi(
        &[
            "ingest",
            "--input",
            s(&fixtures("tweets")),
            "--kind",
            "tweet",
            "--store",
            s(&store),
        ],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("tweet_count 3"), "{}", stdout(&o));
    assert!(stderr(&o).contains("04_truncated.json"), "{}", stderr(&o));

    let o = zoi(
        &[
            "ingest",
            "--input",
            s(&fixtures("photos")),
            "--kind",
            "photo",
            "--store",
            s(&store),
        ],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("photo_count 5"), "{}", stdout(&o));
    assert!(stdout(&o).contains("tweet_count 3"), "{}", stdout(&o));
}

#[test]
fn pipeline_writes_document_and_prints_report() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.csv");
    write_corpus(&corpus);
    let out = dir.path().join("zones.geojson");
    let o = zoi(
        &[
            "pipeline",
            "--corpus",
            s(&corpus),
            "--k-min",
            "3",
            "--k-max",
            "3",
            "--output",
            s(&out),
            "--include-members",
        ],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let report = stdout(&o);
    assert_eq!(report.lines().count(), 4);
    assert_eq!(report.lines().next(), Some("Cluster centers : 3 centers"));
    assert!(report.lines().nth(1).unwrap().starts_with("Cluster 0\t6."));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["type"], "FeatureCollection");
    let features = doc["features"].as_array().unwrap();
    assert_eq!(
        features.iter().filter(|f| f["properties"]["role"] == "member").count(),
        72
    );
    assert!(!fs::read_to_string(&out).unwrap().contains("40.05701649"));
}

#[test]
fn subcommands_share_the_clustering() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.csv");
    write_corpus(&corpus);
    let common = ["--corpus", s(&corpus), "--k-min", "1", "--k-max", "5"];

    let cluster = zoi(&[&["cluster"], &common[..]].concat(), &[]);
    assert!(cluster.status.success(), "{}", stderr(&cluster));
    assert_eq!(stdout(&cluster).lines().next(), Some("Cluster centers : 3 centers"));

    let coverage = zoi(&[&["coverage"], &common[..]].concat(), &[]);
    let table = stdout(&coverage);
    assert!(table.starts_with("cluster\tmembers\t"), "{table}");
    assert_eq!(table.lines().count(), 4);

    let export = zoi(&[&["export"], &common[..]].concat(), &[]);
    let doc: serde_json::Value = serde_json::from_slice(&export.stdout).unwrap();
    assert_eq!(doc["features"].as_array().unwrap().len(), 6);
}

#[test]
fn seed_environment_variable() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.csv");
    write_corpus(&corpus);
    let args = |seed: &'static str| -> Vec<String> {
        [
            "export",
            "--corpus",
            s(&corpus),
            "--k-min",
            "4",
            "--k-max",
            "4",
            "--seed",
            seed,
        ]
        .iter()
        .map(|a| a.to_string())
        .collect()
    };
    let run = |seed, env: &[(&str, &str)]| {
        let a = args(seed);
        zoi(&a.iter().map(String::as_str).collect::<Vec<_>>(), env)
    };
    let by_flag = run("7", &[]);
    let by_env = run("1", &[("ZONE_SEED", "7")]);
    assert!(by_flag.status.success() && by_env.status.success());
    assert_eq!(by_flag.stdout, by_env.stdout);

    let bad = run("1", &[("ZONE_SEED", "-3")]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stderr(&bad).contains("ZONE_SEED"), "{}", stderr(&bad));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    fs::write(
        &empty,
        "lat,lon,text,origin,source_doc_id\n40.05701649,-75.14310264,x,tweet,0\n",
    )
    .unwrap();
    let o = zoi(
        &[
            "pipeline",
            "--corpus",
            s(&empty),
            "--output",
            s(&dir.path().join("z.geojson")),
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("empty corpus"), "{}", stderr(&o));

    let o = zoi(&["pipeline", "--corpus", s(&empty), "--bbox", "1,2,3"], &[]);
    assert_eq!(o.status.code(), Some(1));
    let o = zoi(&["pipeline", "--corpus", s(&empty), "--store", s(dir.path())], &[]);
    assert_eq!(o.status.code(), Some(1));
    let o = zoi(&["pipeline", "--corpus", s(&dir.path().join("missing.csv"))], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing.csv"));
    let o = zoi(&["--help"], &[]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.csv");
    write_corpus(&corpus);
    let mut files = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(format!("z{threads}.geojson"));
        let o = zoi(
            &[
                "pipeline",
                "--corpus",
                s(&corpus),
                "--k-min",
                "1",
                "--k-max",
                "8",
                "--threads",
                threads,
                "--output",
                s(&out),
            ],
            &[],
        );
        assert!(o.status.success(), "{}", stderr(&o));
        files.push(fs::read(out).unwrap());
    }
    assert_eq!(files[0], files[1]);
}
