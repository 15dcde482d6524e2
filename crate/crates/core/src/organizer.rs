//! Data organizer: usefulness/credibility filtering, then stance clustering.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;

use crate::agent::{ask, Asked, ModelSettings};
use crate::error::{AgentError, ParseError};
use crate::gateway::ChatClient;
use crate::model::{ContextItem, FilterDecision, Post, StancePartition};
use crate::prompts;

static KEYED_LIST: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"["'“”]?([A-Za-z][A-Za-z _-]*?)["'“”]?\s*:\s*\[([^\]]*)\]"#).unwrap()
});
static INTEGER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"-?\d+").unwrap());

/// Disjoint cover of `1..=m`, one set per expected key, in key order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexPartition {
    sets: Vec<(String, BTreeSet<usize>)>,
}

impl IndexPartition {
    pub fn get(&self, key: &str) -> &BTreeSet<usize> {
        &self
            .sets
            .iter()
            .find(|(k, _)| k == key)
            .unwrap_or_else(|| panic!("unknown partition key {key}"))
            .1
    }

    pub fn sets(&self) -> &[(String, BTreeSet<usize>)] {
        &self.sets
    }
}

/// Text of the first `{...}` in `raw`, brace-balanced; runs to the end of
/// input when the object is never closed.
fn first_object(raw: &str) -> Option<&str> {
    let start = raw.find('{')?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in raw[start..].char_indices() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&raw[start..=start + i]);
                }
            }
            _ => {}
        }
    }
    Some(&raw[start..])
}

/// Parses a JSON-style `{Key: [numbers], ...}` answer over options `1..=m`.
///
/// Repairs: out-of-range indices are dropped; an index claimed by several
/// keys stays with the earliest key in `expected_keys`; unclaimed indices go
/// to the last key.
pub fn parse_index_partition(
    raw: &str,
    expected_keys: &[&str],
    m: usize,
) -> Result<IndexPartition, ParseError> {
    assert!(!expected_keys.is_empty(), "need at least one key");
    let object = first_object(raw).ok_or(ParseError::NoObject)?;
    let mut claimed: Vec<Option<Vec<i64>>> = vec![None; expected_keys.len()];
    for cap in KEYED_LIST.captures_iter(object) {
        let key = cap[1].trim();
        let Some(slot) = expected_keys
            .iter()
            .position(|k| k.eq_ignore_ascii_case(key))
        else {
            continue;
        };
        if claimed[slot].is_some() {
            continue;
        }
        let values = INTEGER
            .find_iter(&cap[2])
            .filter_map(|m| m.as_str().parse::<i64>().ok())
            .collect();
        claimed[slot] = Some(values);
    }
    if claimed.iter().all(Option::is_none) {
        return Err(ParseError::MissingKeys(
            expected_keys.iter().map(|k| k.to_string()).collect(),
        ));
    }

    let mut owner: Vec<Option<usize>> = vec![None; m + 1];
    for (slot, values) in claimed.iter().enumerate() {
        for &v in values.iter().flatten() {
            if v >= 1 && (v as u64) <= m as u64 && owner[v as usize].is_none() {
                owner[v as usize] = Some(slot);
            }
        }
    }
    let last = expected_keys.len() - 1;
    let mut sets: Vec<(String, BTreeSet<usize>)> = expected_keys
        .iter()
        .map(|k| (k.to_string(), BTreeSet::new()))
        .collect();
    for (idx, o) in owner.iter().enumerate().skip(1) {
        sets[o.unwrap_or(last)].1.insert(idx);
    }
    Ok(IndexPartition { sets })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub decision: FilterDecision,
    /// Usefulness answers followed by credibility answers.
    pub raw: Vec<String>,
}

/// Runs the usefulness and credibility prompts concurrently and keeps the
/// items judged both useful and trustworthy.
pub async fn filter_contexts<C: ChatClient + ?Sized>(
    client: &C,
    settings: &ModelSettings,
    contexts: &[ContextItem],
) -> Result<FilterOutcome, AgentError> {
    let m = contexts.len();
    if m == 0 {
        return Ok(FilterOutcome {
            decision: FilterDecision {
                useful: BTreeSet::new(),
                useless: BTreeSet::new(),
                trustworthy: BTreeSet::new(),
                untrustworthy: BTreeSet::new(),
                kept: Vec::new(),
            },
            raw: Vec::new(),
        });
    }
    let useful_req = settings.request(prompts::USEFULNESS_SYSTEM, prompts::usefulness_user(contexts));
    let trust_req = settings.request(prompts::CREDIBILITY_SYSTEM, prompts::credibility_user(contexts));
    let (useful, trust) = futures::join!(
        ask(client, useful_req, |r| parse_index_partition(r, &prompts::USEFULNESS_KEYS, m)),
        ask(client, trust_req, |r| parse_index_partition(r, &prompts::CREDIBILITY_KEYS, m)),
    );
    match (useful?, trust?) {
        (
            Asked::Parsed { value: u, raw: mut raw_u },
            Asked::Parsed { value: t, raw: raw_t },
        ) => {
            let useful = u.get("Useful").clone();
            let trustworthy = t.get("Trustworthy").clone();
            let kept = (1..=m)
                .filter(|i| useful.contains(i) && trustworthy.contains(i))
                .collect();
            raw_u.extend(raw_t);
            Ok(FilterOutcome {
                decision: FilterDecision {
                    useless: u.get("Useless").clone(),
                    untrustworthy: t.get("Untrustworthy").clone(),
                    useful,
                    trustworthy,
                    kept,
                },
                raw: raw_u,
            })
        }
        (u, t) => {
            let (mut raw, mut cause) = (Vec::new(), None);
            for asked in [u, t] {
                match asked {
                    Asked::Parsed { raw: r, .. } => raw.extend(r),
                    Asked::Failed { cause: c, raw: r } => {
                        raw.extend(r);
                        cause.get_or_insert(c);
                    }
                }
            }
            Err(AgentError::Unparseable {
                stage: "filter",
                cause: cause.expect("at least one side failed"),
                raw,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterOutcome {
    pub partition: StancePartition,
    pub raw: Vec<String>,
}

/// Partitions the kept items by stance toward the post. An empty input
/// yields an empty partition without a model call.
pub async fn cluster_contexts<C: ChatClient + ?Sized>(
    client: &C,
    settings: &ModelSettings,
    post: &Post,
    kept: &[ContextItem],
) -> Result<ClusterOutcome, AgentError> {
    if kept.is_empty() {
        return Ok(ClusterOutcome {
            partition: StancePartition::default(),
            raw: Vec::new(),
        });
    }
    let m = kept.len();
    let request = settings.request(prompts::CLUSTERING_SYSTEM, prompts::clustering_user(post, kept));
    match ask(client, request, |r| parse_index_partition(r, &prompts::CLUSTERING_KEYS, m)).await? {
        Asked::Parsed { value, raw } => Ok(ClusterOutcome {
            partition: StancePartition {
                supporting: value.get("Supporting").clone(),
                refuting: value.get("Refuting").clone(),
                irrelevant: value.get("Irrelevant").clone(),
            },
            raw,
        }),
        Asked::Failed { cause, raw } => Err(AgentError::Unparseable {
            stage: "cluster",
            cause,
            raw,
        }),
    }
}
