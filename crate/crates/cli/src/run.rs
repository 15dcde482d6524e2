//! `run` and `inspect-trace`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use accnote::gateway::{ChatBackend, Gateway, HashingEmbedder, MockBackend, MockScript, OpenAiBackend, ResponseCache};
use accnote::model::{load_dataset, load_results, ResultRecord};
use accnote::run_batch;
use anyhow::{bail, Context};

use crate::config::Resolved;
use crate::Outcome;

pub struct RunOptions {
    pub dataset: PathBuf,
    pub out: PathBuf,
    pub mock_script: Option<PathBuf>,
    pub resume: bool,
    pub cache: Option<PathBuf>,
    pub max_concurrent: Option<usize>,
}

pub async fn run(resolved: &Resolved, opts: RunOptions) -> anyhow::Result<Outcome> {
    let dataset = load_dataset(&opts.dataset)?;
    for skipped in &dataset.skipped {
        eprintln!(
            "warning: {} line {} skipped: {}",
            opts.dataset.display(),
            skipped.line,
            skipped.reasons.join("; ")
        );
    }

    let (backend, fallback_model): (Arc<dyn ChatBackend>, &str) = match &opts.mock_script {
        Some(path) => (Arc::new(MockBackend::new(MockScript::load(path)?)), "mock"),
        None => {
            let endpoint = resolved.endpoint()?;
            if resolved.chat_model.is_none() {
                bail!("no chat model configured: set --chat-model, ACCNOTE_CHAT_MODEL or chat_model in the config file");
            }
            (Arc::new(OpenAiBackend::new(endpoint)?), "")
        }
    };
    let mut gateway = Gateway::new(backend, Arc::new(HashingEmbedder::default()));
    let cache_path = opts.cache.or_else(|| resolved.file.cache.clone());
    if let Some(path) = cache_path {
        let cache = ResponseCache::open(&path)
            .with_context(|| format!("cannot open cache {}", path.display()))?;
        gateway = gateway.with_cache(cache);
    }

    let mut config = resolved.pipeline(fallback_model);
    if let Some(n) = opts.max_concurrent {
        config.max_concurrent_entries = n;
    }
    let summary = run_batch(&gateway, &config, &dataset.entries, &opts.out, opts.resume).await?;
    println!("{}", serde_json::to_string(&summary)?);
    Ok(if summary.failures() > 0 {
        Outcome::Partial
    } else {
        Outcome::Done
    })
}

fn brief(record: &ResultRecord) -> String {
    match record {
        ResultRecord::Ok {
            entry_id,
            label,
            provenance,
            citations,
            trace,
            ..
        } => format!(
            "{entry_id}\tok\t{label}\t{}\t{} citation(s)\t{} call(s){}",
            serde_json::to_value(provenance).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            citations.len(),
            trace.model_call_count,
            if trace.judge_fallback { "\tjudge fallback" } else { "" }
        ),
        ResultRecord::Failed { entry_id, kind, error } => {
            format!("{entry_id}\tfailed ({kind:?})\t{error}")
        }
    }
}

pub fn inspect_trace(results: &Path, id: Option<&str>) -> anyhow::Result<Outcome> {
    let records = load_results(results)?;
    match id {
        Some(id) => {
            let Some(record) = records.iter().find(|r| r.entry_id() == id) else {
                bail!("entry {id} not found in {}", results.display());
            };
            println!("{}", serde_json::to_string_pretty(record)?);
        }
        None => {
            for record in &records {
                println!("{}", brief(record));
            }
        }
    }
    Ok(Outcome::Done)
}
