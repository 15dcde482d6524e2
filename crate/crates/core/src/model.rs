//! Domain types and line-delimited record I/O.
//!
//! Dataset lines follow the shape of the released community-notes corpus:
//! post fields at the top level (`id`, `text`, `date`, `image_urls`, ...),
//! a `contexts` list of `{url, summary}` evidence items and an optional
//! `community_note` object whose `summary` holds the ground-truth note.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::LazyLock;

use chrono::NaiveDateTime;
use regex::Regex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use crate::error::DataError;

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S";
pub const MAX_CONTEXTS: usize = 10;

static URL_IN_TEXT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(?:https?://|www\.)[^\s<>\x22]+").unwrap());

/// Binary verdict. `Deceptive` is the positive class everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Deceptive,
    NonDeceptive,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Deceptive => "Deceptive",
            Label::NonDeceptive => "Non-deceptive",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect();
        match norm.as_str() {
            "deceptive" | "misleading" | "fake" => Ok(Label::Deceptive),
            "nondeceptive" | "notdeceptive" | "notmisleading" | "real" => Ok(Label::NonDeceptive),
            _ => Err(format!("unrecognized label {s:?}")),
        }
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Where a note came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Supporting,
    Refuting,
    Irrelevant,
    EmptyContext,
    Judge,
    GroundTruth,
}

/// Reference to the post image. The bytes are only read when a request is
/// built or a cache key is computed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRef {
    /// Local file path or http(s) URL.
    pub location: String,
    /// Hex content digest, when known ahead of time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
}

impl ImageRef {
    pub fn is_remote(&self) -> bool {
        let l = self.location.to_ascii_lowercase();
        l.starts_with("http://") || l.starts_with("https://") || l.starts_with("data:")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Post {
    pub id: String,
    pub text: String,
    pub timestamp: NaiveDateTime,
    pub image_path: Option<String>,
    pub image_urls: Option<Vec<String>>,
    pub image_digest: Option<String>,
    pub retweet_count: Option<u64>,
    pub tweet_url: Option<String>,
    pub topics: Option<Vec<String>>,
    pub factors: Option<Vec<String>>,
}

impl Post {
    /// The single image sent to the model. A local path wins over remote
    /// URLs; multi-image posts contribute their first URL.
    pub fn image(&self) -> Option<ImageRef> {
        let location = self
            .image_path
            .clone()
            .or_else(|| self.image_urls.as_ref().and_then(|u| u.first().cloned()))?;
        Some(ImageRef {
            location,
            digest: self.image_digest.clone(),
        })
    }

    pub fn date_string(&self) -> String {
        self.timestamp.format(TIMESTAMP_FORMAT).to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextItem {
    pub url: String,
    #[serde(default, deserialize_with = "null_as_empty")]
    pub summary: String,
}

impl ContextItem {
    pub fn new(url: impl Into<String>, summary: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            summary: summary.into(),
        }
    }
}

fn null_as_empty<'de, D: Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    Ok(Option::<String>::deserialize(d)?.unwrap_or_default())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Note {
    pub label: Label,
    pub rationale: String,
    pub citations: Vec<String>,
    pub provenance: Provenance,
}

impl Note {
    /// Text used by the overlap metrics: rationale followed by the cited
    /// URLs, label excluded.
    pub fn render(&self) -> String {
        let mut out = self.rationale.trim().to_string();
        for url in &self.citations {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(url);
        }
        out
    }

    /// Ground-truth note built from a community-note summary: URLs found in
    /// the text become citations, the remaining prose is the rationale.
    pub fn from_community_summary(label: Label, summary: &str) -> Self {
        let citations: Vec<String> = URL_IN_TEXT
            .find_iter(summary)
            .map(|m| trim_url_punct(m.as_str()).to_string())
            .collect();
        let prose = URL_IN_TEXT.replace_all(summary, " ");
        let rationale = prose.split_whitespace().collect::<Vec<_>>().join(" ");
        Note {
            label,
            rationale,
            citations,
            provenance: Provenance::GroundTruth,
        }
    }

    fn to_community_summary(&self) -> String {
        self.render()
    }
}

fn trim_url_punct(url: &str) -> &str {
    url.trim_end_matches(['.', ',', ';', ':', ')', ']', '!', '?', '\''])
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataEntry {
    pub post: Post,
    pub contexts: Vec<ContextItem>,
    pub gold_note: Option<Note>,
    pub gold_label: Option<Label>,
    /// Community-note metadata other than `summary`/`classification`,
    /// carried through untouched.
    pub note_metadata: Option<Map<String, Value>>,
    pub note_classification: Option<String>,
}

impl DataEntry {
    pub fn id(&self) -> &str {
        &self.post.id
    }
}

/// Checks every type invariant; an empty list means the entry is valid.
pub fn validate_entry(entry: &DataEntry) -> Vec<String> {
    let mut violations = Vec::new();
    if entry.post.id.trim().is_empty() {
        violations.push("post.id empty".to_string());
    }
    if entry.post.text.trim().is_empty() {
        violations.push("post.text empty".to_string());
    }
    if entry.contexts.len() > MAX_CONTEXTS {
        violations.push(format!(
            "contexts length {} exceeds {MAX_CONTEXTS}",
            entry.contexts.len()
        ));
    }
    for (k, ctx) in entry.contexts.iter().enumerate() {
        if !is_absolute_url(&ctx.url) {
            violations.push(format!("contexts[{k}].url invalid"));
        }
    }
    if let Some(note) = &entry.gold_note {
        if note.rationale.trim().is_empty() {
            violations.push("gold_note.rationale empty".to_string());
        }
        match entry.gold_label {
            None => violations.push("gold_label missing for gold_note".to_string()),
            Some(label) if label != note.label => {
                violations.push("gold_label inconsistent with gold_note".to_string())
            }
            Some(_) => {}
        }
    }
    violations
}

pub fn is_absolute_url(s: &str) -> bool {
    match url::Url::parse(s) {
        Ok(u) => !u.scheme().is_empty() && u.host_str().is_some_and(|h| !h.is_empty()),
        Err(_) => false,
    }
}

/// One dataset line as stored on disk.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DatasetRecord {
    #[serde(deserialize_with = "string_or_number")]
    pub id: String,
    pub text: String,
    pub date: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retweet_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_urls: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tweet_url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topics: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<String>>,
    #[serde(default)]
    pub contexts: Vec<ContextItem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub community_note: Option<Map<String, Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

fn string_or_number<'de, D: Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    match Value::deserialize(d)? {
        Value::String(s) => Ok(s),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(serde::de::Error::custom(format!(
            "id must be a string or integer, got {other}"
        ))),
    }
}

fn classification_label(classification: &str) -> Option<Label> {
    let c = classification.to_ascii_uppercase();
    if c.starts_with("NOT_MISLEADING") {
        Some(Label::NonDeceptive)
    } else if c.contains("MISLEADING") || c.contains("MISINFORMED") {
        Some(Label::Deceptive)
    } else {
        None
    }
}

impl DatasetRecord {
    /// Converts to a typed entry and validates it; any violation rejects
    /// the record.
    pub fn into_entry(self) -> Result<DataEntry, Vec<String>> {
        let mut problems = Vec::new();
        let timestamp = match NaiveDateTime::parse_from_str(&self.date, TIMESTAMP_FORMAT) {
            Ok(t) => Some(t),
            Err(_) => {
                problems.push(format!("post.date {:?} is not YYYY-MM-DD HH:MM:SS", self.date));
                None
            }
        };

        let mut note_metadata = None;
        let mut note_classification = None;
        let mut gold_note = None;
        if let Some(mut cn) = self.community_note {
            let summary = match cn.remove("summary") {
                Some(Value::String(s)) => Some(s),
                Some(Value::Null) | None => None,
                Some(other) => {
                    problems.push(format!("community_note.summary is not a string: {other}"));
                    None
                }
            };
            note_classification = match cn.remove("classification") {
                Some(Value::String(s)) => Some(s),
                _ => None,
            };
            let label = note_classification
                .as_deref()
                .and_then(classification_label)
                .or(self.label);
            match (summary, label) {
                (Some(summary), Some(label)) => {
                    gold_note = Some(Note::from_community_summary(label, &summary))
                }
                (Some(_), None) => problems
                    .push("community_note has no usable classification and no label".to_string()),
                (None, _) => problems.push("community_note.summary missing".to_string()),
            }
            note_metadata = Some(cn);
        }
        let gold_label = self.label.or(gold_note.as_ref().map(|n| n.label));

        let Some(timestamp) = timestamp else {
            return Err(problems);
        };
        let entry = DataEntry {
            post: Post {
                id: self.id,
                text: self.text,
                timestamp,
                image_path: self.image_path,
                image_urls: self.image_urls,
                image_digest: self.image_digest,
                retweet_count: self.retweet_count,
                tweet_url: self.tweet_url,
                topics: self.topics,
                factors: self.factors,
            },
            contexts: self.contexts,
            gold_note,
            gold_label,
            note_metadata,
            note_classification,
        };
        problems.extend(validate_entry(&entry));
        if problems.is_empty() {
            Ok(entry)
        } else {
            Err(problems)
        }
    }

    pub fn from_entry(entry: &DataEntry) -> Self {
        let community_note = entry.gold_note.as_ref().map(|note| {
            let mut map = entry.note_metadata.clone().unwrap_or_default();
            if let Some(c) = &entry.note_classification {
                map.insert("classification".into(), Value::String(c.clone()));
            }
            map.insert("summary".into(), Value::String(note.to_community_summary()));
            map
        });
        // The label is written whenever it cannot be recovered from the
        // note classification alone.
        let label_from_note = entry
            .note_classification
            .as_deref()
            .and_then(classification_label);
        let label = match (entry.gold_label, label_from_note) {
            (Some(l), Some(n)) if l == n => None,
            (l, _) => l,
        };
        let p = &entry.post;
        DatasetRecord {
            id: p.id.clone(),
            text: p.text.clone(),
            date: p.date_string(),
            retweet_count: p.retweet_count,
            image_urls: p.image_urls.clone(),
            image_path: p.image_path.clone(),
            image_digest: p.image_digest.clone(),
            tweet_url: p.tweet_url.clone(),
            topics: p.topics.clone(),
            factors: p.factors.clone(),
            contexts: entry.contexts.clone(),
            community_note,
            label,
        }
    }
}

/// A dataset line that was rejected at load time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedLine {
    /// 1-based line number.
    pub line: usize,
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub entries: Vec<DataEntry>,
    pub skipped: Vec<SkippedLine>,
}

pub fn parse_dataset(text: &str) -> Dataset {
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let result = serde_json::from_str::<DatasetRecord>(line)
            .map_err(|e| vec![format!("malformed record: {e}")])
            .and_then(DatasetRecord::into_entry);
        match result {
            Ok(entry) => entries.push(entry),
            Err(reasons) => {
                tracing::warn!(line = i + 1, ?reasons, "skipping dataset line");
                skipped.push(SkippedLine {
                    line: i + 1,
                    reasons,
                })
            }
        }
    }
    Dataset { entries, skipped }
}

pub fn load_dataset(path: &Path) -> Result<Dataset, DataError> {
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    let dataset = parse_dataset(&text);
    if dataset.entries.is_empty() {
        return Err(DataError::NoValidEntries {
            path: path.to_path_buf(),
            skipped: dataset.skipped,
        });
    }
    Ok(dataset)
}

pub fn entry_to_line(entry: &DataEntry) -> String {
    serde_json::to_string(&DatasetRecord::from_entry(entry)).expect("dataset record serializes")
}

/// Index sets produced by the two context filters. Indices are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterDecision {
    pub useful: BTreeSet<usize>,
    pub useless: BTreeSet<usize>,
    pub trustworthy: BTreeSet<usize>,
    pub untrustworthy: BTreeSet<usize>,
    /// useful ∩ trustworthy, ascending.
    pub kept: Vec<usize>,
}

/// Stance clusters over the kept list. Indices are 1-based positions in
/// `FilterDecision::kept` order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StancePartition {
    pub supporting: BTreeSet<usize>,
    pub refuting: BTreeSet<usize>,
    pub irrelevant: BTreeSet<usize>,
}

impl StancePartition {
    pub fn is_empty(&self) -> bool {
        self.supporting.is_empty() && self.refuting.is_empty() && self.irrelevant.is_empty()
    }
}

/// Evidence subset a reasoner works from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterTag {
    Supporting,
    Refuting,
    Irrelevant,
    EmptyContext,
}

impl ClusterTag {
    pub const PRESENTATION_ORDER: [ClusterTag; 4] = [
        ClusterTag::Supporting,
        ClusterTag::Refuting,
        ClusterTag::Irrelevant,
        ClusterTag::EmptyContext,
    ];

    pub fn provenance(self) -> Provenance {
        match self {
            ClusterTag::Supporting => Provenance::Supporting,
            ClusterTag::Refuting => Provenance::Refuting,
            ClusterTag::Irrelevant => Provenance::Irrelevant,
            ClusterTag::EmptyContext => Provenance::EmptyContext,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateTrace {
    pub cluster: ClusterTag,
    /// Raw completions, one per attempt.
    pub raw: Vec<String>,
    /// `None` when the label could not be parsed.
    pub note: Option<Note>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineTrace {
    pub filter_decision: Option<FilterDecision>,
    pub partition: StancePartition,
    /// Raw filter and clustering completions, in call order.
    #[serde(default)]
    pub organizer_raw: Vec<String>,
    pub candidates: Vec<CandidateTrace>,
    /// Raw judge completions, one per attempt; empty when the judge was
    /// short-circuited.
    pub judge_raw: Vec<String>,
    /// True when the judge output could not be parsed and the first valid
    /// candidate was used.
    pub judge_fallback: bool,
    /// Index into `candidates`.
    pub selected_index: usize,
    pub model_call_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Invalid,
    Error,
}

/// One line of the results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum ResultRecord {
    Ok {
        entry_id: String,
        label: Label,
        rationale: String,
        citations: Vec<String>,
        provenance: Provenance,
        trace: PipelineTrace,
    },
    Failed {
        entry_id: String,
        kind: FailureKind,
        error: String,
    },
}

impl ResultRecord {
    pub fn success(entry_id: impl Into<String>, note: &Note, trace: &PipelineTrace) -> Self {
        ResultRecord::Ok {
            entry_id: entry_id.into(),
            label: note.label,
            rationale: note.rationale.clone(),
            citations: note.citations.clone(),
            provenance: note.provenance,
            trace: trace.clone(),
        }
    }

    pub fn entry_id(&self) -> &str {
        match self {
            ResultRecord::Ok { entry_id, .. } | ResultRecord::Failed { entry_id, .. } => entry_id,
        }
    }

    pub fn note(&self) -> Option<Note> {
        match self {
            ResultRecord::Ok {
                label,
                rationale,
                citations,
                provenance,
                ..
            } => Some(Note {
                label: *label,
                rationale: rationale.clone(),
                citations: citations.clone(),
                provenance: *provenance,
            }),
            ResultRecord::Failed { .. } => None,
        }
    }

    pub fn trace(&self) -> Option<&PipelineTrace> {
        match self {
            ResultRecord::Ok { trace, .. } => Some(trace),
            ResultRecord::Failed { .. } => None,
        }
    }
}

pub fn serialize_result(entry_id: &str, note: &Note, trace: &PipelineTrace) -> String {
    ResultRecord::success(entry_id, note, trace).to_line()
}

impl ResultRecord {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("result record serializes")
    }

    pub fn from_line(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }
}

/// Reads a results file. Unparseable lines are returned as errors with
/// their 1-based line numbers.
pub fn load_results(path: &Path) -> Result<Vec<ResultRecord>, DataError> {
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec = ResultRecord::from_line(line).map_err(|e| DataError::MalformedResult {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}
