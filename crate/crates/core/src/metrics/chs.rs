//! Context Helpfulness Score: five proxy components and their mean.

use serde::{Deserialize, Serialize};

use super::sentiment::SentimentAnalyzer;
use super::text::rouge_l;
use crate::error::MetricError;
use crate::model::Note;

/// Synchronous text embedding used by the metrics.
pub trait TextEmbedder: Send + Sync {
    fn embed(&self, text: &str) -> Result<Vec<f64>, MetricError>;
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, MetricError> {
    if u.len() != v.len() {
        return Err(MetricError::DimensionMismatch(u.len(), v.len()));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChsReport {
    /// Credibility: cited-source similarity.
    pub chs1: f64,
    /// Clarity: ROUGE-L against the reference note.
    pub chs2: f64,
    /// Relevance: rationale vs. post text + reference rationale.
    pub chs3: f64,
    /// Veracity: ROUGE-L against the reference note.
    pub chs4: f64,
    /// Neutrality.
    pub chs5: f64,
    pub composite: f64,
}

impl ChsReport {
    pub fn from_components(c: [f64; 5]) -> Self {
        Self {
            chs1: c[0],
            chs2: c[1],
            chs3: c[2],
            chs4: c[3],
            chs5: c[4],
            composite: c.iter().sum::<f64>() / 5.0,
        }
    }

    pub fn components(&self) -> [f64; 5] {
        [self.chs1, self.chs2, self.chs3, self.chs4, self.chs5]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ChsOptions {
    /// Use `1 - polarity` (clamped to [0,1]) for neutrality instead of
    /// `1 - |polarity|`.
    pub literal_neutrality: bool,
}

/// Lowercase and drop the scheme.
pub fn normalize_url(url: &str) -> String {
    let lower = url.trim().to_lowercase();
    match lower.split_once("://") {
        Some((_, rest)) => rest.to_string(),
        None => lower,
    }
}

fn url_set(urls: &[String]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for u in urls {
        let n = normalize_url(u);
        if !out.contains(&n) {
            out.push(n);
        }
    }
    out
}

/// Every text the scorer will embed for this pair.
pub fn chs_embedding_inputs(note: &Note, gold: &Note, post_text: &str) -> Vec<String> {
    let mut texts = url_set(&note.citations);
    texts.extend(url_set(&gold.citations));
    texts.push(note.rationale.clone());
    texts.push(relevance_reference(post_text, gold));
    texts
}

fn relevance_reference(post_text: &str, gold: &Note) -> String {
    format!("{} {}", post_text, gold.rationale)
}

pub struct ChsScorer<'a> {
    embedder: &'a dyn TextEmbedder,
    sentiment: &'a SentimentAnalyzer,
    options: ChsOptions,
}

impl<'a> ChsScorer<'a> {
    pub fn new(embedder: &'a dyn TextEmbedder, sentiment: &'a SentimentAnalyzer) -> Self {
        Self {
            embedder,
            sentiment,
            options: ChsOptions::default(),
        }
    }

    pub fn with_options(mut self, options: ChsOptions) -> Self {
        self.options = options;
        self
    }

    fn set_embedding(&self, urls: &[String]) -> Result<Vec<f64>, MetricError> {
        let mut mean: Vec<f64> = Vec::new();
        for u in urls {
            let v = self.embedder.embed(u)?;
            if mean.is_empty() {
                mean = vec![0.0; v.len()];
            } else if v.len() != mean.len() {
                return Err(MetricError::DimensionMismatch(mean.len(), v.len()));
            }
            mean.iter_mut().zip(&v).for_each(|(m, x)| *m += x);
        }
        let n = urls.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        Ok(mean)
    }

    pub fn credibility(&self, note: &Note, gold: &Note) -> Result<f64, MetricError> {
        let ours = url_set(&note.citations);
        let theirs = url_set(&gold.citations);
        match (ours.is_empty(), theirs.is_empty()) {
            (true, true) => Ok(1.0),
            (true, false) | (false, true) => Ok(0.0),
            (false, false) => {
                let c = cosine(&self.set_embedding(&ours)?, &self.set_embedding(&theirs)?)?;
                Ok(c.clamp(0.0, 1.0))
            }
        }
    }

    pub fn relevance(&self, note: &Note, gold: &Note, post_text: &str) -> Result<f64, MetricError> {
        let a = self.embedder.embed(&note.rationale)?;
        let b = self.embedder.embed(&relevance_reference(post_text, gold))?;
        Ok(cosine(&a, &b)?.clamp(0.0, 1.0))
    }

    pub fn neutrality(&self, rationale: &str) -> f64 {
        let p = self.sentiment.polarity(rationale);
        let v = if self.options.literal_neutrality {
            1.0 - p
        } else {
            1.0 - p.abs()
        };
        v.clamp(0.0, 1.0)
    }

    pub fn score(&self, note: &Note, gold: &Note, post_text: &str) -> Result<ChsReport, MetricError> {
        let overlap = rouge_l(&note.render(), &gold.render());
        Ok(ChsReport::from_components([
            self.credibility(note, gold)?,
            overlap,
            self.relevance(note, gold, post_text)?,
            overlap,
            self.neutrality(&note.rationale),
        ]))
    }
}

/// Rescales a 1..=5 Likert rating to [0, 1].
pub fn normalize_user_rating(ur: i64) -> Result<f64, MetricError> {
    if !(1..=5).contains(&ur) {
        return Err(MetricError::RatingOutOfRange(ur));
    }
    Ok((ur - 1) as f64 / 4.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::HashingEmbedder;
    use crate::model::{Label, Provenance};

    fn note(rationale: &str, citations: &[&str]) -> Note {
        Note {
            label: Label::Deceptive,
            rationale: rationale.into(),
            citations: citations.iter().map(|s| s.to_string()).collect(),
            provenance: Provenance::Refuting,
        }
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine(&[3.0, 4.0], &[3.0, 4.0]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let c = cosine(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert!(cosine(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn identity_scores_one() {
        let e = HashingEmbedder::default();
        let s = SentimentAnalyzer::bundled();
        let gold = note("Nancy Pelosi is pictured in the photo.", &["https://www.nbcnews.com/id/wbna17920536"]);
        // post text equal to the rationale keeps the relevance reference
        // proportional to the rationale's bag of words
        let r = ChsScorer::new(&e, s).score(&gold, &gold, &gold.rationale).unwrap();
        for c in r.components() {
            assert!((c - 1.0).abs() < 1e-12, "{r:?}");
        }
        assert!((r.composite - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_sided_citations_score_zero() {
        let e = HashingEmbedder::default();
        let s = SentimentAnalyzer::bundled();
        let scorer = ChsScorer::new(&e, s);
        let gold = note("x", &["https://a.com/1"]);
        assert_eq!(scorer.credibility(&note("x", &[]), &gold).unwrap(), 0.0);
        assert_eq!(scorer.credibility(&gold, &note("x", &[])).unwrap(), 0.0);
        assert_eq!(scorer.credibility(&note("x", &[]), &note("y", &[])).unwrap(), 1.0);
    }

    #[test]
    fn url_scheme_and_case_ignored() {
        let e = HashingEmbedder::default();
        let s = SentimentAnalyzer::bundled();
        let scorer = ChsScorer::new(&e, s);
        let a = note("x", &["HTTPS://WWW.NBCNews.com/id/1"]);
        let b = note("x", &["http://www.nbcnews.com/id/1"]);
        assert!((scorer.credibility(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn composite_is_mean() {
        let r = ChsReport::from_components([0.2, 0.4, 0.6, 0.8, 1.0]);
        assert!((r.composite - 0.6).abs() < 1e-12);
    }

    #[test]
    fn neutrality_variants() {
        let e = HashingEmbedder::default();
        let lex = super::super::sentiment::Lexicon::from_tsv("awful\t-0.6\ngreat\t0.6\n").unwrap();
        let s = SentimentAnalyzer::new(lex);
        let abs = ChsScorer::new(&e, &s);
        assert!((abs.neutrality("awful") - 0.4).abs() < 1e-12);
        assert!((abs.neutrality("great") - 0.4).abs() < 1e-12);
        assert_eq!(abs.neutrality("plain"), 1.0);
        let literal = ChsScorer::new(&e, &s).with_options(ChsOptions {
            literal_neutrality: true,
        });
        assert_eq!(literal.neutrality("awful"), 1.0);
        assert!((literal.neutrality("great") - 0.4).abs() < 1e-12);
    }

    #[test]
    fn rating_normalization() {
        let got: Vec<f64> = (1..=5).map(|r| normalize_user_rating(r).unwrap()).collect();
        assert_eq!(got, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(normalize_user_rating(0).is_err());
        assert!(normalize_user_rating(6).is_err());
    }
}
