//! Judge agent: picks the final note among valid candidates.

use std::sync::LazyLock;

use regex::Regex;

use crate::agent::{ask, Asked, ModelSettings};
use crate::error::{GatewayError, ParseError};
use crate::gateway::ChatClient;
use crate::model::{Note, Post};
use crate::prompts;

static OPTION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\boption\s*#?\s*(\d+)").unwrap());

/// First integer after the word "Option", checked against `1..=n`.
pub fn parse_option(raw: &str, n: usize) -> Result<usize, ParseError> {
    let cap = OPTION.captures(raw).ok_or(ParseError::NoOption)?;
    let got: usize = cap[1].parse().unwrap_or(usize::MAX);
    if got == 0 || got > n {
        return Err(ParseError::OptionOutOfRange { got, n });
    }
    Ok(got)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Judgement {
    /// 0-based position in the candidate list given to the judge.
    pub selected: usize,
    pub raw: Vec<String>,
    /// The answer never parsed; the first candidate was taken.
    pub fallback: bool,
}

/// Chooses among `candidates` (presentation order). A single candidate is
/// returned without a model call.
pub async fn judge<C: ChatClient + ?Sized>(
    client: &C,
    settings: &ModelSettings,
    post: &Post,
    candidates: &[&Note],
) -> Result<Judgement, GatewayError> {
    assert!(!candidates.is_empty(), "judge needs at least one candidate");
    if candidates.len() == 1 {
        return Ok(Judgement {
            selected: 0,
            raw: Vec::new(),
            fallback: false,
        });
    }
    let n = candidates.len();
    let request = settings.request(prompts::JUDGE_SYSTEM, prompts::judge_user(post, candidates));
    Ok(match ask(client, request, |r| parse_option(r, n)).await? {
        Asked::Parsed { value, raw } => Judgement {
            selected: value - 1,
            raw,
            fallback: false,
        },
        Asked::Failed { cause, raw } => {
            tracing::warn!(post = %post.id, %cause, "judge answer unparseable, using first candidate");
            Judgement {
                selected: 0,
                raw,
                fallback: true,
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn option_formats() {
        assert_eq!(parse_option("Option 1 — clearest and cites sources", 4), Ok(1));
        assert_eq!(parse_option("option 3: best veracity", 3), Ok(3));
        assert_eq!(parse_option("The best is Option 2 because...", 2), Ok(2));
        assert_eq!(parse_option("**Option #2**", 2), Ok(2));
    }

    #[test]
    fn option_failures() {
        assert_eq!(parse_option("Option 9", 3), Err(ParseError::OptionOutOfRange { got: 9, n: 3 }));
        assert_eq!(parse_option("Option 0", 3), Err(ParseError::OptionOutOfRange { got: 0, n: 3 }));
        assert_eq!(parse_option("the second one", 3), Err(ParseError::NoOption));
        assert!(parse_option("Option 99999999999999999999999", 3).is_err());
    }
}
