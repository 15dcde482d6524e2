//! Lexicon polarity scoring.

use std::collections::HashMap;
use std::path::Path;
use std::sync::LazyLock;

use crate::error::MetricError;

const BUNDLED: &str = include_str!("../../resources/sentiment_lexicon.tsv");
const NEGATORS: [&str; 3] = ["not", "no", "never"];
const NEGATION_WINDOW: usize = 3;

static BUNDLED_ANALYZER: LazyLock<SentimentAnalyzer> = LazyLock::new(|| {
    SentimentAnalyzer::new(Lexicon::from_tsv(BUNDLED).expect("bundled lexicon parses"))
});

/// `word -> polarity` table. Text format: one `word<TAB>polarity` per line,
/// `#` starts a comment line.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: HashMap<String, f64>,
}

impl Lexicon {
    pub fn from_tsv(text: &str) -> Result<Self, MetricError> {
        let mut entries = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, value) = line
                .split_once('\t')
                .ok_or_else(|| MetricError::Lexicon(format!("line {}: missing tab", i + 1)))?;
            let value: f64 = value.trim().parse().map_err(|_| {
                MetricError::Lexicon(format!("line {}: bad polarity {value:?}", i + 1))
            })?;
            if !(-1.0..=1.0).contains(&value) {
                return Err(MetricError::Lexicon(format!(
                    "line {}: polarity {value} outside [-1, 1]",
                    i + 1
                )));
            }
            entries.insert(word.trim().to_lowercase(), value);
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, MetricError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| MetricError::Lexicon(format!("{}: {e}", path.display())))?;
        Self::from_tsv(&text)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.entries.get(word).copied()
    }
}

#[derive(Debug, Clone)]
pub struct SentimentAnalyzer {
    lexicon: Lexicon,
}

fn polarity_tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .replace('\u{2019}', "'")
        .split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .map(|t| t.trim_matches('\''))
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn is_negator(token: &str) -> bool {
    NEGATORS.contains(&token) || token.ends_with("n't")
}

impl SentimentAnalyzer {
    pub fn new(lexicon: Lexicon) -> Self {
        Self { lexicon }
    }

    pub fn bundled() -> &'static SentimentAnalyzer {
        &BUNDLED_ANALYZER
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    /// Mean lexicon polarity over matched tokens, sign-flipped when a
    /// negator occurs among the three preceding tokens. 0 when nothing
    /// matches.
    pub fn polarity(&self, text: &str) -> f64 {
        let tokens = polarity_tokens(text);
        let mut sum = 0.0;
        let mut matched = 0usize;
        for (i, tok) in tokens.iter().enumerate() {
            let Some(mut value) = self.lexicon.get(tok) else {
                continue;
            };
            let window = &tokens[i.saturating_sub(NEGATION_WINDOW)..i];
            if window.iter().any(|t| is_negator(t)) {
                value = -value;
            }
            sum += value;
            matched += 1;
        }
        if matched == 0 {
            0.0
        } else {
            (sum / matched as f64).clamp(-1.0, 1.0)
        }
    }
}

/// Polarity under the bundled lexicon.
pub fn polarity(text: &str) -> f64 {
    BUNDLED_ANALYZER.polarity(text)
}
