//! Reasoner agent: one candidate note per evidence cluster.

use crate::agent::{ask, Asked, ModelSettings};
use crate::error::{GatewayError, ParseError};
use crate::gateway::ChatClient;
use crate::model::{CandidateTrace, ClusterTag, ContextItem, Label, Note, Post};
use crate::prompts;

#[derive(Debug, Clone, PartialEq)]
pub struct ReasonerInput<'a> {
    pub post: &'a Post,
    pub cluster: ClusterTag,
    /// Empty for `ClusterTag::EmptyContext`.
    pub items: Vec<ContextItem>,
}

fn is_wrapper(c: char) -> bool {
    c.is_whitespace() || matches!(c, '*' | '_' | '#' | '>' | '`' | '"' | '\'' | '“' | '”' | '‘' | '’' | '[' | '(')
}

fn is_separator(c: char) -> bool {
    c.is_whitespace()
        || matches!(
            c,
            '*' | '_' | '`' | '"' | '\'' | '“' | '”' | '‘' | '’' | ']' | ')' | '.' | ':' | ',' | ';' | '-' | '—' | '–' | '!'
        )
}

/// Length in bytes of a case-insensitive `label` match at the start of
/// `s`, requiring a non-alphanumeric boundary after it.
fn match_prefix(s: &str, variants: &[&str]) -> Option<usize> {
    for v in variants {
        let Some(head) = s.get(..v.len()) else {
            continue;
        };
        if head.eq_ignore_ascii_case(v)
            && !s[v.len()..].chars().next().is_some_and(char::is_alphanumeric)
        {
            return Some(v.len());
        }
    }
    None
}

/// Splits an answer of the form `Deceptive. <rationale>`.
///
/// Leading markdown, quotes and whitespace are skipped; "non-deceptive" is
/// tested before "deceptive"; punctuation after the label is dropped.
pub fn parse_label_and_rationale(raw: &str) -> Result<(Label, String), ParseError> {
    let s = raw.trim_start_matches(is_wrapper);
    let (label, len) = if let Some(n) =
        match_prefix(s, &["non-deceptive", "non deceptive", "non–deceptive", "non—deceptive", "nondeceptive"])
    {
        (Label::NonDeceptive, n)
    } else if let Some(n) = match_prefix(s, &["deceptive"]) {
        (Label::Deceptive, n)
    } else {
        return Err(ParseError::NoLabel);
    };
    let rationale = s[len..].trim_start_matches(is_separator).trim();
    if rationale.is_empty() {
        return Err(ParseError::EmptyRationale);
    }
    Ok((label, rationale.to_string()))
}

/// Runs one reasoner. A completion whose label cannot be parsed after one
/// retry yields a candidate without a note rather than an error.
pub async fn reason<C: ChatClient + ?Sized>(
    client: &C,
    settings: &ModelSettings,
    input: &ReasonerInput<'_>,
) -> Result<CandidateTrace, GatewayError> {
    debug_assert!(input.cluster != ClusterTag::EmptyContext || input.items.is_empty());
    let request = settings.request(
        prompts::REASONER_SYSTEM,
        prompts::reasoner_user(input.post, &input.items),
    );
    let citations: Vec<String> = input.items.iter().map(|c| c.url.clone()).collect();
    Ok(match ask(client, request, parse_label_and_rationale).await? {
        Asked::Parsed {
            value: (label, rationale),
            raw,
        } => CandidateTrace {
            cluster: input.cluster,
            raw,
            note: Some(Note {
                label,
                rationale,
                citations,
                provenance: input.cluster.provenance(),
            }),
        },
        Asked::Failed { cause, raw } => {
            tracing::warn!(post = %input.post.id, cluster = ?input.cluster, %cause, "invalid candidate");
            CandidateTrace {
                cluster: input.cluster,
                raw,
                note: None,
            }
        }
    })
}
