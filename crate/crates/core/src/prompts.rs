//! Prompt templates for the organizer, reasoner and judge agents.
//!
//! The instruction block goes into the system message; the numbered
//! options and post details go into the user message, with the image as
//! its own content part between "Image: " and "; Text: ".

use crate::gateway::UserPart;
use crate::model::{ContextItem, Note, Post};

pub const USEFULNESS_SYSTEM: &str = "You are tasked with categorizing the following options into one of two categories:
- Useful: The option provides meaningful information about a real-world event, knowledge, or fact-checking.
- Useless: The option contains useless information, such as website descriptions, request errors, or advertisements.
Think privately, do not show your reasoning steps in the output.
OUTPUT FORMAT (JSON style):
{ Useful: [list of option numbers],
  Useless: [list of option numbers] }";

pub const CREDIBILITY_SYSTEM: &str = "You are tasked with evaluating the following URLs based on their domain names and categorizing them into two groups:
- Trustworthy: The URL originates from a credible source known for providing accurate and reliable information, such as established news outlets, official government websites, or recognized fact-checking organizations.
- Untrustworthy: The URL originates from a less credible source, such as personal blogs, or websites with questionable reliability.
Think privately, do not show your reasoning steps in the output.
OUTPUT FORMAT (JSON style):
{ Trustworthy: [list of option numbers],
Untrustworthy: [list of option numbers] }";

pub const CLUSTERING_SYSTEM: &str = "You are tasked with dividing the provided options into three categories based on its relevance and stance towards the claim in the post:
- Supporting: The option describes the same event, and support the claim in the post.
- Refuting: The option describes the same event, but with a different or opposing claim.
- Irrelevant: The context does not provide information that is relevant to the post.
Think privately, do not show your reasoning steps in the output.
OUTPUT FORMAT (JSON style):
{ Supporting: [list of option numbers],
Refuting: [list of option numbers],
Irrelevant: [list of option numbers] }";

pub const REASONER_SYSTEM: &str = "You are a fact-checking assistant. For each social post with an image and text, decide whether the post is \"Deceptive\" or \"Non-deceptive\".
TASK (think through these steps privately; do not list them in your output):
1. Identify the post's main claim from the image, text, and date.
2. If the claim is based on the image, check whether the image's visual details and factual context support or contradict it.
3. If the claim does not rely on the image, use knowledge and facts to support or contradict the claim.
4. If external context is provided, use the provided context to support or contradict the claim.
5. If any contradiction is found (e.g., claim vs. image, claim vs. knowledge, claim vs. external context), label \"Deceptive\"; if none, label \"Non-deceptive\".
OUTPUT FORMAT (clear, unbiased, factual, relevant):
- Begin with \"Deceptive\" or \"Non-deceptive\".
- Follow with 1-2 sentences citing specific visual details, knowledge, or relevant context.";

pub const JUDGE_SYSTEM: &str = "You are a fact-checking assistant. Given multiple evaluation options for a social media post (each labeled \"Deceptive\" or \"Non-deceptive\"), select the single best option.
SELECTION CRITERIA (apply privately):
1. Source Credibility: cites reliable, trustworthy sources.
2. Clarity: concise and easy to understand.
3. Relevance: directly addresses the post's image/text and context.
4. Veracity: factually correct and evidence-based.
5. Neutrality: neutral tone, no cultural/personal bias.
OUTPUT FORMAT:
- Begin with \"Option X\", where X is the option number.
- Follow with 1-2 sentences explaining why this option is best.";

pub const USEFULNESS_KEYS: [&str; 2] = ["Useful", "Useless"];
pub const CREDIBILITY_KEYS: [&str; 2] = ["Trustworthy", "Untrustworthy"];
pub const CLUSTERING_KEYS: [&str; 3] = ["Supporting", "Refuting", "Irrelevant"];

/// `[1. a,\n2. b]`
pub fn numbered_list<S: AsRef<str>>(items: &[S]) -> String {
    let body = items
        .iter()
        .enumerate()
        .map(|(i, s)| format!("{}. {}", i + 1, s.as_ref()))
        .collect::<Vec<_>>()
        .join(",\n");
    format!("[{body}]")
}

fn summary_or_none(summary: &str) -> &str {
    if summary.trim().is_empty() {
        "None"
    } else {
        summary.trim()
    }
}

/// `POST DETAILS: Image: <image>; Text: <text>; Date: <date>` as content
/// parts. Posts without an image say so in place of the image part.
pub fn post_details(post: &Post) -> Vec<UserPart> {
    let mut parts = vec![UserPart::Text("POST DETAILS: Image: ".to_string())];
    match post.image() {
        Some(img) => parts.push(UserPart::Image(img)),
        None => parts.push(UserPart::Text("(no image)".to_string())),
    }
    parts.push(UserPart::Text(format!(
        "; Text: {}; Date: {}",
        post.text.trim(),
        post.date_string()
    )));
    parts
}

pub fn usefulness_user(contexts: &[ContextItem]) -> Vec<UserPart> {
    let summaries: Vec<&str> = contexts.iter().map(|c| summary_or_none(&c.summary)).collect();
    vec![UserPart::Text(format!("OPTIONS: {}", numbered_list(&summaries)))]
}

pub fn credibility_user(contexts: &[ContextItem]) -> Vec<UserPart> {
    let urls: Vec<&str> = contexts.iter().map(|c| c.url.as_str()).collect();
    vec![UserPart::Text(format!("URLs: {}", numbered_list(&urls)))]
}

pub fn clustering_user(post: &Post, kept: &[ContextItem]) -> Vec<UserPart> {
    let mut parts = post_details(post);
    let summaries: Vec<&str> = kept.iter().map(|c| summary_or_none(&c.summary)).collect();
    parts.push(UserPart::Text(format!("\nOPTIONS: {}", numbered_list(&summaries))));
    parts
}

fn context_pair(c: &ContextItem) -> String {
    format!("URL: {}\nSummary: {}", c.url, summary_or_none(&c.summary))
}

/// Reasoner user message. The EXTERNAL CONTEXT line is omitted when the
/// cluster is empty.
pub fn reasoner_user(post: &Post, cluster: &[ContextItem]) -> Vec<UserPart> {
    let mut parts = Vec::new();
    if !cluster.is_empty() {
        let pairs: Vec<String> = cluster.iter().map(context_pair).collect();
        parts.push(UserPart::Text(format!(
            "EXTERNAL CONTEXT: {}\n",
            numbered_list(&pairs)
        )));
    }
    parts.extend(post_details(post));
    parts
}

/// How a candidate appears in the judge prompt.
pub fn note_option(note: &Note) -> String {
    let mut s = format!("{}. {}", note.label, note.rationale.trim());
    if !note.citations.is_empty() {
        s.push_str(" Sources: ");
        s.push_str(&note.citations.join(" "));
    }
    s
}

pub fn judge_user(post: &Post, candidates: &[&Note]) -> Vec<UserPart> {
    let mut parts = post_details(post);
    let options: Vec<String> = candidates.iter().map(|n| note_option(n)).collect();
    parts.push(UserPart::Text(format!(
        "\nEVALUATION OPTIONS: {}",
        numbered_list(&options)
    )));
    parts
}
