//! Topic extraction: a few-shot summarization prompt over a source
//! corpus, with a mechanical age/gender post-filter on the output.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{ChatBackend, ChatMessage, CompletionRequest, GenParams};
use crate::exec::Exec;

/// Few-shot topic extraction prompt. Placeholders: the two example
/// pairs and `{Given Text}`.
pub const TOPIC_PROMPT: &str = r#"You are an assistant who is skilled at summarizing and analyzing. Your task is to extract the corresponding topic from the given text. You need to follow the following rules, otherwise you will be punished:

1. The topic you extract should be summarized in one sentence.
2. The extracted topic should not include explicit gender and age restrictions.
3. The extracted topic should not be too specific and should reflect some general issues.
4. The extracted topic should only contains one main aspect, although the text involves multiple aspects.

To help you better understand this task, two examples of extracted topics are shown below:

Text: {Example1 of Text}
Extracted Topic: {Example1 of Topic}

Text: {Example2 of Text}
Extracted Topic: {Example2 of Topic}

Now you are officially given a paragraph of text, and please extract the topic from it.
Text: {Given Text}
Extracted Topic:"#;

/// Default few-shot examples baked into the prompt.
pub const DEFAULT_EXAMPLES: [(&str, &str); 2] = [
    (
        "I asked him three time what happened. And after the third time I cried and went home. Month later he still don't talk to me and he and my mother started fighting for the first time in the relationship. Me and my mother honestly don't know what to do, he just ignores me. I even told him that I don't date that guy(even though I date him) and he didn't even react to it.",
        "How to view being ignored in a relationship",
    ),
    (
        "I think he doesn't want to put in the effort for the relationship to work (and we're both so difficult that we have to work on our relationships, doesn't matter with whom) but he can't be without me either. What should I do? I'm afraid this is gonna happen over and over again, because I'm always forgiving him at some point. Am I being strung along? TL;DR: Boyfriend [28,M] broke up with me [23,F] after on-off for 1.5 years, I thought we just got it together and am devastated...don't know what to do, want to keep fighting but should I?",
        "How can the person who is being broken up with try to salvage the relationship in a romantic relationship?",
    ),
];

/// A one-sentence discussion topic with corpus provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub id: String,
    pub text: String,
    pub source_ref: String,
}

/// One source-corpus record.
#[derive(Debug, Clone)]
pub struct CorpusRecord {
    pub index: usize,
    pub text: String,
}

impl CorpusRecord {
    pub fn source_ref(&self) -> String {
        format!("row:{}", self.index)
    }
}

/// Instantiate the extraction prompt for one source text.
pub fn render_topic_prompt(source_text: &str, examples: &[(&str, &str); 2]) -> String {
    TOPIC_PROMPT
        .replace("{Example1 of Text}", examples[0].0)
        .replace("{Example1 of Topic}", examples[0].1)
        .replace("{Example2 of Text}", examples[1].0)
        .replace("{Example2 of Topic}", examples[1].1)
        .replace("{Given Text}", source_text)
}

/// Load a corpus from CSV (with a named text column) or JSON-lines
/// (with a named text key).
pub fn load_corpus(content: &str, text_key: &str) -> Result<Vec<CorpusRecord>, TopicsError> {
    if content.trim_start().starts_with('{') {
        let mut records = Vec::new();
        for (idx, line) in content.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let value: serde_json::Value = serde_json::from_str(line)
                .map_err(|e| TopicsError::Corpus(format!("line {}: {e}", idx + 1)))?;
            let text = value
                .get(text_key)
                .and_then(|v| v.as_str())
                .ok_or_else(|| {
                    TopicsError::Corpus(format!("line {}: missing key {text_key:?}", idx + 1))
                })?;
            records.push(CorpusRecord { index: records.len(), text: text.to_owned() });
        }
        Ok(records)
    } else {
        let mut reader = csv::ReaderBuilder::new()
            .flexible(true)
            .from_reader(content.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| TopicsError::Corpus(format!("header: {e}")))?
            .clone();
        let column = headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(text_key))
            .ok_or_else(|| TopicsError::Corpus(format!("missing column {text_key:?}")))?;
        let mut records = Vec::new();
        for (idx, record) in reader.records().enumerate() {
            let record =
                record.map_err(|e| TopicsError::Corpus(format!("row {}: {e}", idx + 1)))?;
            let text = record.get(column).unwrap_or("").trim();
            if !text.is_empty() {
                records.push(CorpusRecord { index: records.len(), text: text.to_owned() });
            }
        }
        Ok(records)
    }
}

fn demographic_patterns() -> &'static [Regex; 3] {
    static PATTERNS: OnceLock<[Regex; 3]> = OnceLock::new();
    PATTERNS.get_or_init(|| {
        [
            Regex::new(r"(?i)\b\d{1,3}\s*[- ]?\s*(years?[- ]?old|y/?o)\b").unwrap(),
            Regex::new(r"\[\s*\d{1,3}\s*,\s*[MFmf]\s*\]").unwrap(),
            Regex::new(r"(?i)\b\d{1,3}\s+(man|woman|men|women|male|female|boy|girl)\b")
                .unwrap(),
        ]
    })
}

/// Mechanical check for the prompt's "no explicit gender and age
/// restrictions" rule; prompts are not guarantees.
pub fn violates_demographic_filter(text: &str) -> bool {
    demographic_patterns().iter().any(|p| p.is_match(text))
}

/// Truncate at the first sentence-final punctuation followed by
/// whitespace or end of text.
pub fn first_sentence(text: &str) -> &str {
    let bytes = text.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if matches!(b, b'.' | b'!' | b'?') {
            let next = bytes.get(i + 1);
            if next.is_none() || next.is_some_and(|&n| n.is_ascii_whitespace()) {
                return &text[..=i];
            }
        }
    }
    text
}

/// Normalize a raw reply into a topic candidate: drop any echoed
/// prompt up to the last "Extracted Topic:" and keep the first
/// sentence.
pub fn process_reply(reply: &str) -> String {
    let tail = match reply.rfind("Extracted Topic:") {
        Some(pos) => &reply[pos + "Extracted Topic:".len()..],
        None => reply,
    };
    first_sentence(tail.trim()).trim().to_owned()
}

/// Extract one topic per corpus record. Records whose replies keep
/// failing the demographic filter (or stay empty) after `max_attempts`
/// are dropped with a log entry; only a fully empty result is an error.
pub fn extract_topics(
    corpus: &[CorpusRecord],
    backend: &dyn ChatBackend,
    params: &GenParams,
    max_attempts: u32,
    exec: Exec,
) -> Result<Vec<Topic>, TopicsError> {
    if corpus.is_empty() {
        return Err(TopicsError::EmptyCorpus);
    }
    let attempts = max_attempts.max(1);
    let survivors: Vec<Option<(String, String)>> = exec.map(
        corpus.iter().collect::<Vec<_>>(),
        |record| {
            let prompt = render_topic_prompt(&record.text, &DEFAULT_EXAMPLES);
            let request = CompletionRequest::new(params, vec![ChatMessage::user(prompt)]);
            for _ in 0..attempts {
                let reply = match backend.complete(&request) {
                    Ok(reply) => reply,
                    Err(e) => {
                        log::warn!("topic extraction call failed for {}: {e}", record.source_ref());
                        continue;
                    }
                };
                let candidate = process_reply(&reply);
                if candidate.is_empty() {
                    continue;
                }
                if violates_demographic_filter(&candidate) {
                    log::warn!(
                        "topic candidate for {} hit the demographic filter: {candidate:?}",
                        record.source_ref()
                    );
                    continue;
                }
                return Some((candidate, record.source_ref()));
            }
            log::warn!("dropping corpus record {} after {attempts} attempts", record.source_ref());
            None
        },
    );

    let topics: Vec<Topic> = survivors
        .into_iter()
        .flatten()
        .enumerate()
        .map(|(i, (text, source_ref))| Topic {
            id: format!("topic-{:04}", i + 1),
            text,
            source_ref,
        })
        .collect();
    if topics.is_empty() {
        return Err(TopicsError::EmptyResult);
    }
    Ok(topics)
}

/// Case-insensitive exact-text dedup, first occurrence kept.
pub fn dedupe_topics(topics: Vec<Topic>) -> Vec<Topic> {
    let mut seen = std::collections::HashSet::new();
    topics
        .into_iter()
        .filter(|t| seen.insert(t.text.to_lowercase()))
        .collect()
}

#[derive(Debug, Error)]
pub enum TopicsError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("every corpus record failed topic extraction")]
    EmptyResult,
    #[error("corpus file: {0}")]
    Corpus(String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::ScriptedBackend;

    fn record(text: &str) -> CorpusRecord {
        CorpusRecord { index: 0, text: text.to_owned() }
    }

    #[test]
    fn prompt_has_rules_examples_and_open_tail() {
        let prompt = render_topic_prompt("some text", &DEFAULT_EXAMPLES);
        assert!(prompt.contains("should not include explicit gender and age restrictions"));
        assert!(prompt.contains("How to view being ignored in a relationship"));
        assert!(prompt.ends_with("Extracted Topic:"));
        for rule in ["1. ", "2. ", "3. ", "4. "] {
            assert!(prompt.contains(rule));
        }
        assert_eq!(prompt.matches("some text").count(), 1);
    }

    #[test]
    fn reply_processing_truncates_to_first_sentence() {
        assert_eq!(process_reply("The topic is: X. Also Y."), "The topic is: X.");
        assert_eq!(
            process_reply("blah blah Extracted Topic: Coping with stress. Extra."),
            "Coping with stress."
        );
        assert_eq!(process_reply("No punctuation at all"), "No punctuation at all");
        assert_eq!(process_reply("Version 2.5 is out. More."), "Version 2.5 is out.");
    }

    #[test]
    fn demographic_filter_catches_age_patterns() {
        assert!(violates_demographic_filter(
            "Advice for a 23-year-old woman about breakups"
        ));
        assert!(violates_demographic_filter("a 23 year old dealing with stress"));
        assert!(violates_demographic_filter("my boyfriend [28,M] left"));
        assert!(violates_demographic_filter("a 30 woman at work"));
        assert!(violates_demographic_filter("he is 25 yo and lost"));
        assert!(!violates_demographic_filter(
            "Dealing with excessive work demands and stress in a job."
        ));
        assert!(!violates_demographic_filter("Coping after 3 hard months."));
    }

    #[test]
    fn extract_happy_path() {
        let corpus = vec![record("They are always calling me for everything...")];
        let backend = ScriptedBackend::from_literals(vec![
            "Dealing with excessive work demands and stress in a job.",
        ]);
        let topics = extract_topics(
            &corpus,
            &backend,
            &GenParams::generation("scripted"),
            3,
            Exec::Sequential,
        )
        .unwrap();
        assert_eq!(topics.len(), 1);
        assert_eq!(topics[0].text, "Dealing with excessive work demands and stress in a job.");
        assert_eq!(topics[0].id, "topic-0001");
        assert_eq!(topics[0].source_ref, "row:0");
    }

    #[test]
    fn filtered_reply_is_retried() {
        let corpus = vec![record("source text")];
        let backend = ScriptedBackend::from_literals(vec![
            "Advice for a 23-year-old woman about breakups",
            "Coping with breakups.",
        ]);
        let topics = extract_topics(
            &corpus,
            &backend,
            &GenParams::generation("scripted"),
            3,
            Exec::Sequential,
        )
        .unwrap();
        assert_eq!(topics[0].text, "Coping with breakups.");
        assert_eq!(backend.call_log().len(), 2);
    }

    #[test]
    fn all_failures_is_empty_result() {
        let corpus = vec![record("source text")];
        let backend = ScriptedBackend::from_rules(vec![(
            "Extracted Topic",
            "a 23-year-old woman problem",
        )]);
        let err = extract_topics(
            &corpus,
            &backend,
            &GenParams::generation("scripted"),
            2,
            Exec::Sequential,
        )
        .unwrap_err();
        assert!(matches!(err, TopicsError::EmptyResult));
    }

    #[test]
    fn dedup_is_case_insensitive_first_kept() {
        let make = |id: &str, text: &str| Topic {
            id: id.into(),
            text: text.into(),
            source_ref: "row:0".into(),
        };
        let deduped = dedupe_topics(vec![make("a", "A."), make("b", "a.")]);
        assert_eq!(deduped.len(), 1);
        assert_eq!(deduped[0].text, "A.");

        assert!(dedupe_topics(vec![]).is_empty());

        let five = vec![
            make("1", "Stress at work."),
            make("2", "Family issues."),
            make("3", "stress at work."),
            make("4", "Loneliness."),
            make("5", "FAMILY ISSUES."),
        ];
        assert_eq!(dedupe_topics(five).len(), 3);
    }

    #[test]
    fn corpus_loading_csv_and_jsonl() {
        let csv = "id,text\n1,first entry\n2,second entry\n";
        let records = load_corpus(csv, "text").unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[1].text, "second entry");

        let jsonl = "{\"text\": \"alpha\"}\n{\"text\": \"beta\"}\n";
        let records = load_corpus(jsonl, "text").unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].text, "alpha");

        assert!(load_corpus("other,cols\n1,2\n", "text").is_err());
    }
}
