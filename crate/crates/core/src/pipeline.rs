//! End-to-end orchestration: organizer, parallel reasoners, judge.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

use crate::agent::ModelSettings;
use crate::error::PipelineError;
use crate::gateway::{ChatClient, Gateway, MeteredClient};
use crate::judge::judge;
use crate::model::{
    validate_entry, ClusterTag, ContextItem, DataEntry, FailureKind, Note, PipelineTrace,
    ResultRecord, StancePartition,
};
use crate::organizer::{cluster_contexts, filter_contexts};
use crate::reasoner::{reason, ReasonerInput};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub organizer: ModelSettings,
    pub reasoner: ModelSettings,
    pub judge: ModelSettings,
    /// Run the no-context reasoner even when evidence clusters exist.
    pub empty_context_always: bool,
    pub max_concurrent_entries: usize,
    /// Concurrent reasoners per entry (at most 4 are ever created).
    pub reasoner_fanout: usize,
}

impl PipelineConfig {
    pub fn for_model(model_id: &str) -> Self {
        Self {
            organizer: ModelSettings::new(model_id, 256),
            reasoner: ModelSettings::new(model_id, 512),
            judge: ModelSettings::new(model_id, 256),
            empty_context_always: true,
            max_concurrent_entries: 4,
            reasoner_fanout: 4,
        }
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self::for_model("gpt-4o-mini")
    }
}

fn cluster_items(kept: &[ContextItem], indices: &std::collections::BTreeSet<usize>) -> Vec<ContextItem> {
    indices.iter().map(|&i| kept[i - 1].clone()).collect()
}

fn reasoner_inputs<'a>(
    entry: &'a DataEntry,
    kept: &[ContextItem],
    partition: &StancePartition,
    empty_context_always: bool,
) -> Vec<ReasonerInput<'a>> {
    let mut inputs: Vec<ReasonerInput<'a>> = [
        (ClusterTag::Supporting, &partition.supporting),
        (ClusterTag::Refuting, &partition.refuting),
        (ClusterTag::Irrelevant, &partition.irrelevant),
    ]
    .into_iter()
    .filter(|(_, set)| !set.is_empty())
    .map(|(cluster, set)| ReasonerInput {
        post: &entry.post,
        cluster,
        items: cluster_items(kept, set),
    })
    .collect();
    if empty_context_always || inputs.is_empty() {
        inputs.push(ReasonerInput {
            post: &entry.post,
            cluster: ClusterTag::EmptyContext,
            items: Vec::new(),
        });
    }
    inputs
}

/// Generates the final note for one entry.
pub async fn run_entry<C: ChatClient + ?Sized>(
    client: &C,
    config: &PipelineConfig,
    entry: &DataEntry,
) -> Result<(Note, PipelineTrace), PipelineError> {
    let violations = validate_entry(entry);
    if !violations.is_empty() {
        return Err(PipelineError::InvalidEntry(violations));
    }
    let metered = MeteredClient::new(client);

    let mut organizer_raw = Vec::new();
    let (filter_decision, kept) = if entry.contexts.is_empty() {
        (None, Vec::new())
    } else {
        let outcome = filter_contexts(&metered, &config.organizer, &entry.contexts).await?;
        organizer_raw.extend(outcome.raw);
        let kept: Vec<ContextItem> = outcome
            .decision
            .kept
            .iter()
            .map(|&i| entry.contexts[i - 1].clone())
            .collect();
        (Some(outcome.decision), kept)
    };

    let clustered = cluster_contexts(&metered, &config.organizer, &entry.post, &kept).await?;
    organizer_raw.extend(clustered.raw);
    let partition = clustered.partition;

    let inputs = reasoner_inputs(entry, &kept, &partition, config.empty_context_always);
    let fanout = config.reasoner_fanout.clamp(1, 4);
    let candidates: Vec<_> = stream::iter(inputs.iter())
        .map(|input| reason(&metered, &config.reasoner, input))
        .buffered(fanout)
        .collect::<Vec<_>>()
        .await
        .into_iter()
        .collect::<Result<_, _>>()?;

    // presentation order = candidate order, valid ones only
    let valid: Vec<(usize, &Note)> = candidates
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.note.as_ref().map(|n| (i, n)))
        .collect();
    if valid.is_empty() {
        return Err(PipelineError::AllCandidatesInvalid);
    }
    let notes: Vec<&Note> = valid.iter().map(|(_, n)| *n).collect();
    let judgement = judge(&metered, &config.judge, &entry.post, &notes).await?;
    let (selected_index, selected) = valid[judgement.selected];
    let note = selected.clone();

    let trace = PipelineTrace {
        filter_decision,
        partition,
        organizer_raw,
        candidates,
        judge_raw: judgement.raw,
        judge_fallback: judgement.fallback,
        selected_index,
        model_call_count: metered.calls(),
    };
    Ok((note, trace))
}

/// Result line for one entry; failures become `failed` records.
pub async fn process_entry<C: ChatClient + ?Sized>(
    client: &C,
    config: &PipelineConfig,
    entry: &DataEntry,
) -> ResultRecord {
    match run_entry(client, config, entry).await {
        Ok((note, trace)) => ResultRecord::success(entry.id(), &note, &trace),
        Err(e) => {
            tracing::warn!(entry = %entry.id(), error = %e, "entry failed");
            let kind = match e {
                PipelineError::AllCandidatesInvalid | PipelineError::InvalidEntry(_) => {
                    FailureKind::Invalid
                }
                _ => FailureKind::Error,
            };
            ResultRecord::Failed {
                entry_id: entry.id().to_string(),
                kind,
                error: e.to_string(),
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub success: usize,
    pub invalid: usize,
    pub error: usize,
    /// Entries already present in the output file (resume mode).
    pub skipped: usize,
    pub chat_calls: usize,
    pub cache_hits: usize,
    pub backend_calls: usize,
}

impl BatchSummary {
    pub fn failures(&self) -> usize {
        self.invalid + self.error
    }
}

/// Entry ids already recorded in a results file. Unparseable lines (for
/// example a torn last line) are ignored.
pub fn recorded_ids(path: &Path) -> std::io::Result<HashSet<String>> {
    let mut ids = HashSet::new();
    if !path.exists() {
        return Ok(ids);
    }
    for line in BufReader::new(File::open(path)?).lines() {
        if let Ok(rec) = ResultRecord::from_line(&line?) {
            ids.insert(rec.entry_id().to_string());
        }
    }
    Ok(ids)
}

fn open_output(path: &Path, resume: bool) -> std::io::Result<File> {
    if resume && path.exists() {
        let mut f = OpenOptions::new().append(true).open(path)?;
        let text = std::fs::read(path)?;
        if text.last().is_some_and(|b| *b != b'\n') {
            writeln!(f)?;
        }
        Ok(f)
    } else {
        File::create(path)
    }
}

/// Runs every entry with bounded parallelism and writes one record per
/// entry, in input order. Per-entry failures are recorded, not fatal.
pub async fn run_batch(
    gateway: &Gateway,
    config: &PipelineConfig,
    entries: &[DataEntry],
    output: &Path,
    resume: bool,
) -> Result<BatchSummary, PipelineError> {
    let io_err = |source| PipelineError::Output {
        path: output.to_path_buf(),
        source,
    };
    let done = if resume {
        recorded_ids(output).map_err(io_err)?
    } else {
        HashSet::new()
    };
    let mut file = open_output(output, resume).map_err(io_err)?;
    let before = gateway.stats();

    let todo: Vec<&DataEntry> = entries.iter().filter(|e| !done.contains(e.id())).collect();
    let mut summary = BatchSummary {
        skipped: entries.len() - todo.len(),
        ..BatchSummary::default()
    };
    let mut records = stream::iter(todo)
        .map(|entry| process_entry(gateway, config, entry))
        .buffered(config.max_concurrent_entries.max(1));
    while let Some(record) = records.next().await {
        match &record {
            ResultRecord::Ok { .. } => summary.success += 1,
            ResultRecord::Failed {
                kind: FailureKind::Invalid,
                ..
            } => summary.invalid += 1,
            ResultRecord::Failed { .. } => summary.error += 1,
        }
        writeln!(file, "{}", record.to_line()).map_err(io_err)?;
        file.flush().map_err(io_err)?;
    }

    let after = gateway.stats();
    summary.chat_calls = after.requests - before.requests;
    summary.cache_hits = after.cache_hits - before.cache_hits;
    summary.backend_calls = after.backend_calls - before.backend_calls;
    Ok(summary)
}
