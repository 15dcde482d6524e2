use std::collections::HashMap;

/// Lowercased maximal runs of alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Longest common subsequence length, O(|a|·|b|) time, O(|b|) space.
pub fn lcs_length<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L F1 over token lists.
pub fn rouge_l_tokens<T: PartialEq>(candidate: &[T], reference: &[T]) -> f64 {
    let l = lcs_length(candidate, reference);
    if l == 0 {
        return 0.0;
    }
    let p = l as f64 / candidate.len() as f64;
    let r = l as f64 / reference.len() as f64;
    2.0 * p * r / (p + r)
}

pub fn rouge_l(candidate: &str, reference: &str) -> f64 {
    rouge_l_tokens(&tokenize(candidate), &tokenize(reference))
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for w in tokens.windows(n) {
        *counts.entry(w).or_insert(0) += 1;
    }
    counts
}

/// Sentence BLEU with clipped n-gram precisions up to `max_n`.
///
/// Orders with zero matches use (0+1)/(total+1). Orders longer than the
/// candidate are left out of the geometric mean. Brevity penalty is
/// `exp(1 - |ref|/|cand|)` capped at 1.
pub fn bleu(candidate: &str, reference: &str, max_n: usize) -> f64 {
    let cand = tokenize(candidate);
    let refr = tokenize(reference);
    bleu_tokens(&cand, &refr, max_n)
}

pub fn bleu_tokens(cand: &[String], refr: &[String], max_n: usize) -> f64 {
    assert!(max_n >= 1, "max_n must be at least 1");
    if cand.is_empty() || refr.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    let mut orders = 0usize;
    for n in 1..=max_n.min(cand.len()) {
        let cand_counts = ngram_counts(cand, n);
        let ref_counts = ngram_counts(refr, n);
        let total = cand.len() - n + 1;
        let matched: usize = cand_counts
            .iter()
            .map(|(g, c)| (*c).min(ref_counts.get(g).copied().unwrap_or(0)))
            .sum();
        let p = if matched == 0 {
            1.0 / (total as f64 + 1.0)
        } else {
            matched as f64 / total as f64
        };
        log_sum += p.ln();
        orders += 1;
    }
    let geo = (log_sum / orders as f64).exp();
    let bp = (1.0 - refr.len() as f64 / cand.len() as f64).exp().min(1.0);
    geo * bp
}
