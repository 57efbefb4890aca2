use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use sciqa::cli::{self, IngestOptions, OutputFormat};
use sciqa::{ReaderMode, ScorerMode, ServiceConfig, ServiceError};
use sciqa_core::corpus::SplitConfig;
use sciqa_core::eval::DEFAULT_KS;
use sciqa_core::pipeline::QueryRequest;

#[derive(Parser)]
#[command(
    name = "sciqa",
    version,
    about = "Extractive question answering over scientific articles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an index from a CSV of articles.
    Ingest {
        /// CSV with PMID, title, paragraphs, URL, publication date, authors.
        csv: PathBuf,
        #[arg(long, env = "SCIQA_INDEX_DIR", default_value = "index")]
        index_dir: PathBuf,
        /// Overwrite a non-empty index directory.
        #[arg(long)]
        force: bool,
        #[arg(long, value_name = "YYYY-MM-DD")]
        from: Option<NaiveDate>,
        #[arg(long, value_name = "YYYY-MM-DD")]
        to: Option<NaiveDate>,
        #[arg(long, default_value_t = 512)]
        max_tokens: usize,
        #[arg(long, default_value_t = 512)]
        stride: usize,
        #[arg(long, default_value = "csv")]
        source: String,
    },
    /// Answer a single question.
    Query {
        question: String,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        retriever_top_k: usize,
        #[arg(long, default_value_t = 5)]
        reader_top_k: usize,
        #[arg(long, value_enum, default_value = "table")]
        format: OutputFormat,
    },
    /// Score the pipeline against a SQuAD 2.0 file.
    Eval {
        dataset: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_KS)]
        ks: Vec<usize>,
        /// Write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "token-f1")]
        scorer: ScorerMode,
        #[arg(long, env = "SCIQA_SCORER_URL")]
        scorer_url: Option<String>,
    },
    /// Serve the REST API.
    Serve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        #[arg(long, default_value_t = 10)]
        retriever_top_k: usize,
        #[arg(long, default_value_t = 5)]
        reader_top_k: usize,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, env = "SCIQA_INDEX_DIR", default_value = "index")]
    index_dir: PathBuf,
    #[arg(long, value_enum, default_value = "baseline")]
    reader: ReaderMode,
    #[arg(long, env = "SCIQA_READER_URL")]
    reader_url: Option<String>,
    /// Timeout for remote calls, in seconds.
    #[arg(long, default_value_t = 10)]
    timeout: u64,
}

impl Common {
    fn config(self) -> ServiceConfig {
        ServiceConfig {
            index_dir: self.index_dir,
            reader_mode: self.reader,
            remote_reader_url: self.reader_url,
            remote_timeout: Duration::from_secs(self.timeout),
            ..Default::default()
        }
    }
}

fn run(cli: Cli) -> Result<(), ServiceError> {
    match cli.command {
        Command::Ingest {
            csv,
            index_dir,
            force,
            from,
            to,
            max_tokens,
            stride,
            source,
        } => {
            let split = SplitConfig::new(max_tokens, stride)?;
            let summary = cli::ingest(&IngestOptions {
                csv,
                index_dir: index_dir.clone(),
                force,
                published_from: from,
                published_to: to,
                split,
                source,
            })?;
            for r in &summary.rejected {
                eprintln!("rejected row {} ({}): {}", r.row, r.pmid, r.reason);
            }
            println!(
                "indexed {} documents, {} passages, {} terms into {} ({} filtered out, {} rejected)",
                summary.documents,
                summary.passages,
                summary.vocabulary,
                index_dir.display(),
                summary.filtered_out,
                summary.rejected.len()
            );
        }
        Command::Query {
            question,
            common,
            retriever_top_k,
            reader_top_k,
            format,
        } => {
            let config = common.config();
            let request = QueryRequest::new(question).with_k(retriever_top_k, reader_top_k);
            let rows = cli::query(&config, &request)?;
            print!("{}", cli::render_rows(&rows, format));
        }
        Command::Eval {
            dataset,
            common,
            ks,
            report,
            scorer,
            scorer_url,
        } => {
            let config = ServiceConfig {
                scorer_mode: scorer,
                remote_scorer_url: scorer_url,
                ..common.config()
            };
            let outcome = cli::eval(&config, &dataset, &ks, report.as_deref())?;
            print!("{}", outcome.table);
        }
        Command::Serve {
            common,
            listen,
            retriever_top_k,
            reader_top_k,
        } => {
            let config = ServiceConfig {
                listen_address: listen,
                retriever_top_k,
                reader_top_k,
                ..common.config()
            };
            let rt = tokio::runtime::Runtime::new().map_err(|e| ServiceError::Io(e.to_string()))?;
            rt.block_on(sciqa::http::serve(config))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
