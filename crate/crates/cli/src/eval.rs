//! `eval-detect`, `eval-notes` and `score-note`.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use accnote::gateway::{EmbeddingBackend, EmbeddingTable, HashingEmbedder, OpenAiEmbedder};
use accnote::metrics::{
    bleu, chs_embedding_inputs, detection_report, rouge_l, ChsOptions, ChsReport, ChsScorer, SentimentAnalyzer,
    TextEmbedder,
};
use accnote::model::{load_dataset, load_results, DataEntry, Label, Note, Provenance};
use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use crate::config::Resolved;
use crate::Outcome;

fn index_by_id(entries: &[DataEntry]) -> HashMap<&str, &DataEntry> {
    entries.iter().map(|e| (e.id(), e)).collect()
}

fn unmatched_error(ids: &[String], dataset: &Path) -> anyhow::Error {
    anyhow::anyhow!(
        "{} result id(s) have no gold label in {}: {}",
        ids.len(),
        dataset.display(),
        ids.join(", ")
    )
}

pub fn eval_detect(results: &Path, dataset: &Path) -> anyhow::Result<Outcome> {
    let data = load_dataset(dataset)?;
    let by_id = index_by_id(&data.entries);
    let records = load_results(results)?;
    let (mut preds, mut golds, mut unmatched, mut failed) = (Vec::new(), Vec::new(), Vec::new(), 0usize);
    for record in &records {
        let Some(note) = record.note() else {
            failed += 1;
            continue;
        };
        match by_id.get(record.entry_id()).and_then(|e| e.gold_label) {
            Some(gold) => {
                preds.push(note.label);
                golds.push(gold);
            }
            None => unmatched.push(record.entry_id().to_string()),
        }
    }
    if !unmatched.is_empty() {
        return Err(unmatched_error(&unmatched, dataset));
    }
    if failed > 0 {
        eprintln!("note: {failed} failed record(s) excluded");
    }
    let report = detection_report(&preds, &golds)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(Outcome::Done)
}

/// One row of the `eval-notes` CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoteScoreRow {
    pub item_id: String,
    pub method: String,
    pub rouge_l: f64,
    pub bleu: f64,
    pub chs1: f64,
    pub chs2: f64,
    pub chs3: f64,
    pub chs4: f64,
    pub chs5: f64,
    pub chs: f64,
}

impl NoteScoreRow {
    fn values(&self) -> [f64; 8] {
        [
            self.rouge_l, self.bleu, self.chs1, self.chs2, self.chs3, self.chs4, self.chs5, self.chs,
        ]
    }
}

const SCORE_COLUMNS: [&str; 8] = ["rouge_l", "bleu", "chs1", "chs2", "chs3", "chs4", "chs5", "chs"];

pub struct NotesOptions {
    pub results: PathBuf,
    pub dataset: PathBuf,
    pub out: PathBuf,
    pub method: String,
    pub literal_neutrality: bool,
}

/// Fallback hashing embedder, or a table filled from the configured
/// embedding endpoint when both a base URL and an embedding model are set.
async fn embedder_for(resolved: &Resolved, texts: Vec<String>) -> anyhow::Result<Box<dyn TextEmbedder>> {
    let (Some(_), Some(model)) = (&resolved.base_url, &resolved.embed_model) else {
        return Ok(Box::new(HashingEmbedder::default()));
    };
    let remote = OpenAiEmbedder::new(resolved.endpoint()?, model.clone())?;
    let mut table = EmbeddingTable::default();
    let mut dimension = None;
    for text in texts {
        if table.contains(&text) {
            continue;
        }
        let v = remote.embed(&text).await?;
        if *dimension.get_or_insert(v.len()) != v.len() {
            bail!("embedding endpoint returned inconsistent dimensions");
        }
        table.insert(text, v);
    }
    Ok(Box::new(table))
}

fn note_scores(scorer: &ChsScorer<'_>, note: &Note, gold: &Note, post_text: &str) -> anyhow::Result<(f64, f64, ChsReport)> {
    let (cand, reference) = (note.render(), gold.render());
    Ok((rouge_l(&cand, &reference), bleu(&cand, &reference, 4), scorer.score(note, gold, post_text)?))
}

pub async fn eval_notes(resolved: &Resolved, opts: NotesOptions) -> anyhow::Result<Outcome> {
    let data = load_dataset(&opts.dataset)?;
    let by_id = index_by_id(&data.entries);
    let records = load_results(&opts.results)?;

    let mut unknown = Vec::new();
    let (mut no_gold, mut failed) = (0usize, 0usize);
    let mut pairs: Vec<(String, Note, Note, String)> = Vec::new();
    for record in &records {
        let Some(entry) = by_id.get(record.entry_id()) else {
            unknown.push(record.entry_id().to_string());
            continue;
        };
        let Some(note) = record.note() else {
            failed += 1;
            continue;
        };
        let Some(gold) = &entry.gold_note else {
            no_gold += 1;
            continue;
        };
        pairs.push((entry.id().to_string(), note, gold.clone(), entry.post.text.clone()));
    }
    if !unknown.is_empty() {
        bail!(
            "{} result id(s) not found in {}: {}",
            unknown.len(),
            opts.dataset.display(),
            unknown.join(", ")
        );
    }
    if pairs.is_empty() {
        bail!("no scorable entries: {no_gold} without a gold note, {failed} failed");
    }

    let texts = pairs
        .iter()
        .flat_map(|(_, n, g, t)| chs_embedding_inputs(n, g, t))
        .collect();
    let embedder = embedder_for(resolved, texts).await?;
    let scorer = ChsScorer::new(embedder.as_ref(), SentimentAnalyzer::bundled()).with_options(ChsOptions {
        literal_neutrality: opts.literal_neutrality,
    });

    let mut writer = csv::Writer::from_path(&opts.out)
        .with_context(|| format!("cannot write {}", opts.out.display()))?;
    let mut sums = [0.0f64; 8];
    for (id, note, gold, post_text) in &pairs {
        let (r, b, chs) = note_scores(&scorer, note, gold, post_text)?;
        let row = NoteScoreRow {
            item_id: id.clone(),
            method: opts.method.clone(),
            rouge_l: r,
            bleu: b,
            chs1: chs.chs1,
            chs2: chs.chs2,
            chs3: chs.chs3,
            chs4: chs.chs4,
            chs5: chs.chs5,
            chs: chs.composite,
        };
        for (s, v) in sums.iter_mut().zip(row.values()) {
            *s += v;
        }
        writer.serialize(&row)?;
    }
    writer.flush()?;

    let n = pairs.len() as f64;
    println!("scored {} entries ({no_gold} without gold note, {failed} failed)", pairs.len());
    println!("{:<8} {:>8}", "metric", "mean");
    for (name, s) in SCORE_COLUMNS.iter().zip(sums) {
        println!("{name:<8} {:>8.4}", s / n);
    }
    Ok(Outcome::Done)
}

#[derive(Debug, Deserialize)]
struct NoteInput {
    label: Label,
    rationale: String,
    #[serde(default)]
    citations: Vec<String>,
}

fn read_note(arg: &str, provenance: Provenance) -> anyhow::Result<Note> {
    let text = match arg.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).with_context(|| format!("cannot read {path}"))?,
        None => arg.to_string(),
    };
    let input: NoteInput = serde_json::from_str(&text).with_context(|| format!("malformed note JSON: {text}"))?;
    if input.rationale.trim().is_empty() {
        bail!("note rationale is empty");
    }
    Ok(Note {
        label: input.label,
        rationale: input.rationale,
        citations: input.citations,
        provenance,
    })
}

pub async fn score_note(
    resolved: &Resolved,
    note: &str,
    gold: &str,
    post_text: &str,
    literal_neutrality: bool,
) -> anyhow::Result<Outcome> {
    let note = read_note(note, Provenance::Judge)?;
    let gold = read_note(gold, Provenance::GroundTruth)?;
    let embedder = embedder_for(resolved, chs_embedding_inputs(&note, &gold, post_text)).await?;
    let scorer = ChsScorer::new(embedder.as_ref(), SentimentAnalyzer::bundled())
        .with_options(ChsOptions { literal_neutrality });
    let report = scorer.score(&note, &gold, post_text)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(Outcome::Done)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_round_trip_through_csv() {
        let row = NoteScoreRow {
            item_id: "1".into(),
            method: "accnote".into(),
            rouge_l: 0.5,
            bleu: 0.25,
            chs1: 1.0,
            chs2: 0.5,
            chs3: 0.75,
            chs4: 0.5,
            chs5: 1.0,
            chs: 0.75,
        };
        let mut w = csv::Writer::from_writer(vec![]);
        w.serialize(&row).unwrap();
        let bytes = w.into_inner().unwrap();
        let header = String::from_utf8(bytes.clone()).unwrap();
        assert!(header.starts_with("item_id,method,rouge_l,bleu,chs1,chs2,chs3,chs4,chs5,chs\n"));
        let mut r = csv::Reader::from_reader(bytes.as_slice());
        let back: NoteScoreRow = r.deserialize().next().unwrap().unwrap();
        assert_eq!(back, row);
    }
}
