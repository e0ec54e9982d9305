use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use clickrank::engine::{self, mine_sessions, Algorithm, Engine, SystemClock};
use clickrank::{corpus, eventlog, report, ServiceConfig};
use clickrank_core::text::analyze_text;

#[derive(Parser)]
#[command(name = "clickrank", version, about = "Personalized search ranked by click frequency and dwell time")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP API.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Index a directory of .txt files (or a JSON manifest) into the data directory.
    Ingest {
        path: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print document statistics and the word frequency list of a text file.
    Stats { file: PathBuf },
    /// Mine frequent click patterns from the event log.
    Mine {
        #[arg(long, value_parser = parse_algo)]
        algo: Algorithm,
        #[arg(long)]
        min_sup: f64,
        #[arg(long)]
        user: Option<String>,
        /// Event log to read (defaults to the data directory's log).
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Rebuild state from an event log and print a summary.
    Replay { log: PathBuf },
}

fn parse_algo(s: &str) -> Result<Algorithm, String> {
    s.parse()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Serve { config } => serve(config.as_deref()),
        Command::Ingest { path, config } => ingest(&path, config.as_deref()),
        Command::Stats { file } => {
            let text = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            print!("{}", report::render_stats(&analyze_text(&text)));
            Ok(())
        }
        Command::Mine { algo, min_sup, user, log, config } => {
            let config = ServiceConfig::load(config.as_deref())?;
            let path = log.unwrap_or_else(|| config.events_path());
            let usage = eventlog::replay_file(&path).with_context(|| format!("replaying {}", path.display()))?;
            let patterns = mine_sessions(&usage, user.as_deref(), config.session_timeout_secs(), algo, min_sup)?;
            for p in patterns {
                println!("{}", p.to_line());
            }
            Ok(())
        }
        Command::Replay { log } => {
            let file = std::fs::File::open(&log).with_context(|| format!("opening {}", log.display()))?;
            let usage = eventlog::replay(std::io::BufReader::new(file))?;
            let pending = usage.clicks().iter().filter(|c| !c.is_complete()).count();
            println!("events: {}", usage.journal().len());
            println!("users: {}", usage.users().len());
            println!("searches: {}", usage.searches().len());
            println!("clicks: {} ({} pending)", usage.clicks().len(), pending);
            Ok(())
        }
    }
}

fn serve(config: Option<&Path>) -> Result<()> {
    let config = ServiceConfig::load(config)?;
    let listen = config.listen.clone();
    let engine = Arc::new(Engine::open(config, Arc::new(SystemClock))?);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(clickrank::http::serve(engine, &listen))?;
    Ok(())
}

fn ingest(path: &Path, config: Option<&Path>) -> Result<()> {
    let config = ServiceConfig::load(config)?;
    let docs = corpus::load(path)?;
    let index = engine::install_corpus(&config, docs)?;
    for row in index.rows() {
        println!("{}\t{}\t{}", row.doc_id, row.term, row.frequency);
    }
    eprintln!("ingested {} documents into {}", index.len(), config.corpus_path().display());
    Ok(())
}
