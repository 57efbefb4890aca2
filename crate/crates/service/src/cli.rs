//! Implementations of the `ingest`, `query` and `eval` verbs. `main.rs`
//! only parses arguments and prints what these return.

use std::fmt::Write as _;
use std::fs::File;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Serialize;

use sciqa_core::corpus::{ingest_csv, ArticleFilter, ColumnMapping, RejectedRow, SplitConfig};
use sciqa_core::eval::{evaluate, EvalReport};
use sciqa_core::pipeline::{QueryRequest, ResultRow};
use sciqa_core::squad;

use crate::config::ServiceConfig;
use crate::snapshot::{Snapshot, SnapshotError};
use crate::ServiceError;

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub csv: PathBuf,
    pub index_dir: PathBuf,
    pub force: bool,
    pub published_from: Option<NaiveDate>,
    pub published_to: Option<NaiveDate>,
    pub split: SplitConfig,
    pub source: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct IngestSummary {
    pub documents: usize,
    pub passages: usize,
    pub vocabulary: usize,
    pub filtered_out: usize,
    pub rejected: Vec<RejectedRow>,
}

pub fn ingest(opts: &IngestOptions) -> Result<IngestSummary, ServiceError> {
    let file = File::open(&opts.csv)
        .map_err(|e| ServiceError::Io(format!("{}: {e}", opts.csv.display())))?;
    let outcome = ingest_csv(file, &ColumnMapping::default())?;
    let filter = ArticleFilter {
        published_from: opts.published_from,
        published_to: opts.published_to,
    };
    let total = outcome.articles.len();
    let kept: Vec<_> = outcome
        .articles
        .into_iter()
        .filter(|a| filter.accepts(a))
        .collect();
    if kept.is_empty() {
        return Err(ServiceError::NothingToIndex {
            rejected: outcome.rejected.len(),
            filtered: total,
        });
    }
    let filtered_out = total - kept.len();
    let mut snapshot = Snapshot::build(&kept, opts.split, &opts.source)?;
    snapshot.save(&opts.index_dir, opts.force)?;
    Ok(IngestSummary {
        documents: snapshot.manifest.documents,
        passages: snapshot.manifest.passages,
        vocabulary: snapshot.manifest.vocabulary,
        filtered_out,
        rejected: outcome.rejected,
    })
}

pub fn load_index(dir: &Path) -> Result<Snapshot, ServiceError> {
    Snapshot::load(dir).map_err(|e| match e {
        SnapshotError::Missing(dir) => ServiceError::NoIndex(dir),
        other => other.into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Json,
    Table,
}

pub fn query(
    config: &ServiceConfig,
    request: &QueryRequest,
) -> Result<Vec<ResultRow>, ServiceError> {
    let pipeline = config.pipeline(load_index(&config.index_dir)?)?;
    Ok(pipeline.run(request)?)
}

pub fn render_rows(rows: &[ResultRow], format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&serde_json::json!({ "answers": rows }))
                .expect("rows serialize");
            s.push('\n');
            s
        }
        OutputFormat::Table => {
            let mut out = format!(
                "{:>3}  {:>6}  {:<14}  {:<50}  {}\n",
                "#", "score", "doc_id", "answer", "title"
            );
            for row in rows {
                let answer = if row.is_no_answer() {
                    "(no answer)".to_string()
                } else {
                    clip(&row.answer, 50)
                };
                let title = row.meta.get("name").map(String::as_str).unwrap_or("");
                let doc = if row.doc_id.is_empty() {
                    "-"
                } else {
                    row.doc_id.as_str()
                };
                let _ = writeln!(
                    out,
                    "{:>3}  {:>6.3}  {:<14}  {:<50}  {}",
                    row.index,
                    row.score,
                    doc,
                    answer,
                    clip(title, 60)
                );
            }
            out
        }
    }
}

fn clip(s: &str, n: usize) -> String {
    if s.chars().count() <= n {
        s.to_string()
    } else {
        let mut t: String = s.chars().take(n - 3).collect();
        t.push_str("...");
        t
    }
}

#[derive(Debug)]
pub struct EvalOutcome {
    pub report: EvalReport,
    pub table: String,
}

/// Runs the benchmark. Invalid datasets are refused with every violation listed.
pub fn eval(
    config: &ServiceConfig,
    dataset: &Path,
    ks: &[usize],
    report_path: Option<&Path>,
) -> Result<EvalOutcome, ServiceError> {
    let bytes = std::fs::read(dataset)
        .map_err(|e| ServiceError::Io(format!("{}: {e}", dataset.display())))?;
    let mut ds = squad::parse(&bytes)?;
    let violations = squad::validate(&ds);
    if !violations.is_empty() {
        return Err(ServiceError::InvalidDataset(
            violations.iter().map(ToString::to_string).collect(),
        ));
    }
    if !ds.provenance.contains_key("source") {
        let name = dataset
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("dataset");
        ds.provenance.insert("source".into(), name.to_string());
    }
    let pipeline = config.pipeline(load_index(&config.index_dir)?)?;
    let scorer = config.scorer();
    let report = evaluate(&pipeline, &ds, ks, scorer.as_ref())?;
    if let Some(path) = report_path {
        let mut json = serde_json::to_vec_pretty(&report).expect("report serializes");
        json.push(b'\n');
        std::fs::write(path, json)
            .map_err(|e| ServiceError::Io(format!("{}: {e}", path.display())))?;
    }
    let table = report.render_table();
    Ok(EvalOutcome { report, table })
}
