//! Scoring: text overlap, sentiment, CHS, rank correlation and detection.
//!
//! Everything here is a pure function of its inputs.

mod chs;
mod detection;
mod sentiment;
mod stats;
mod text;

pub use chs::{
    chs_embedding_inputs, cosine, normalize_url, normalize_user_rating, ChsOptions, ChsReport,
    ChsScorer, TextEmbedder,
};
pub use detection::{detection_report, DetectionReport};
pub use sentiment::{polarity, Lexicon, SentimentAnalyzer};
pub use stats::{average_ranks, pearson, spearman, SpearmanResult};
pub use text::{bleu, bleu_tokens, lcs_length, rouge_l, rouge_l_tokens, tokenize};
