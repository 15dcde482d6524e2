//! `accnote` command-line tool.

mod config;
mod correlate;
mod eval;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::EndpointArgs;

#[derive(Parser)]
#[command(name = "accnote", version, about = "Context-corrective note generation and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Endpoint {
    /// TOML config file; flags and environment variables override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// OpenAI-compatible base URL, e.g. https://api.openai.com/v1
    #[arg(long, env = "ACCNOTE_BASE_URL")]
    base_url: Option<String>,
    #[arg(long, env = "ACCNOTE_API_KEY", hide_env_values = true)]
    api_key: Option<String>,
    #[arg(long, env = "ACCNOTE_CHAT_MODEL")]
    chat_model: Option<String>,
    #[arg(long, env = "ACCNOTE_EMBED_MODEL")]
    embed_model: Option<String>,
}

impl Endpoint {
    fn resolve(&self) -> anyhow::Result<config::Resolved> {
        let file = config::FileConfig::load(self.config.as_deref())?;
        let args = EndpointArgs {
            base_url: self.base_url.clone(),
            api_key: self.api_key.clone(),
            chat_model: self.chat_model.clone(),
            embed_model: self.embed_model.clone(),
        };
        Ok(config::Resolved::new(args, file))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate notes for every entry of a dataset.
    Run {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Answer prompts from a scripted mock instead of an endpoint.
        #[arg(long)]
        mock_script: Option<PathBuf>,
        /// Skip entries already recorded in --out and append the rest.
        #[arg(long)]
        resume: bool,
        /// Response cache file (default: accnote_cache.jsonl).
        #[arg(long, conflicts_with = "no_cache")]
        cache: Option<PathBuf>,
        #[arg(long)]
        no_cache: bool,
        #[arg(long)]
        max_concurrent: Option<usize>,
        #[command(flatten)]
        endpoint: Endpoint,
    },
    /// Detection scores of predicted labels against gold labels.
    EvalDetect {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
    },
    /// ROUGE-L, BLEU and CHS of generated notes against community notes.
    EvalNotes {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Per-entry CSV output.
        #[arg(long, default_value = "note_scores.csv")]
        out: PathBuf,
        /// Value of the `method` column.
        #[arg(long, default_value = "accnote")]
        method: String,
        /// Score neutrality as 1 - polarity instead of 1 - |polarity|.
        #[arg(long)]
        literal_neutrality: bool,
        #[command(flatten)]
        endpoint: Endpoint,
    },
    /// Spearman correlation of metric scores with user ratings.
    Correlate {
        /// CSV with item_id, method and one column per metric.
        #[arg(long)]
        scores: PathBuf,
        /// CSV with item_id, method, ur_1..ur_5 (ratings 1-5).
        #[arg(long)]
        ratings: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// CHS of a single note against a reference note.
    ScoreNote {
        /// Note JSON, or @path to a JSON file.
        #[arg(long)]
        note: String,
        /// Reference note JSON, or @path.
        #[arg(long)]
        gold: String,
        #[arg(long, default_value = "")]
        post_text: String,
        #[arg(long)]
        literal_neutrality: bool,
        #[command(flatten)]
        endpoint: Endpoint,
    },
    /// Show the recorded pipeline trace of one or all entries.
    InspectTrace {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        id: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    Partial,
}

async fn dispatch(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Run {
            dataset,
            out,
            mock_script,
            resume,
            cache,
            no_cache,
            max_concurrent,
            endpoint,
        } => {
            let opts = run::RunOptions {
                dataset,
                out,
                mock_script,
                resume,
                cache: if no_cache { None } else { Some(cache.unwrap_or_else(|| config::DEFAULT_CACHE.into())) },
                max_concurrent,
            };
            run::run(&endpoint.resolve()?, opts).await
        }
        Command::EvalDetect { results, dataset } => eval::eval_detect(&results, &dataset),
        Command::EvalNotes {
            results,
            dataset,
            out,
            method,
            literal_neutrality,
            endpoint,
        } => {
            let opts = eval::NotesOptions {
                results,
                dataset,
                out,
                method,
                literal_neutrality,
            };
            eval::eval_notes(&endpoint.resolve()?, opts).await
        }
        Command::Correlate { scores, ratings, out } => correlate::correlate(&scores, &ratings, out.as_deref()),
        Command::ScoreNote {
            note,
            gold,
            post_text,
            literal_neutrality,
            endpoint,
        } => eval::score_note(&endpoint.resolve()?, &note, &gold, &post_text, literal_neutrality).await,
        Command::InspectTrace { results, id } => run::inspect_trace(&results, id.as_deref()),
    }
}

/// The error chain, leaving out causes already spelled out by the message
/// that wraps them.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if out.is_empty() {
            out = text;
        } else if !out.contains(&text) {
            out.push_str(": ");
            out.push_str(&text);
        }
    }
    out
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .with_ansi(std::io::IsTerminal::is_terminal(&std::io::stderr()))
        .init();
    let cli = Cli::parse();
    match dispatch(cli).await {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(2)
        }
    }
}
