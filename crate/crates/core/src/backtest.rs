//! Personality back-testing: judge the traits a role actually expressed
//! in a dialogue, per dimension, and score portrayal success against
//! its predefined profile.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::backend::{ChatBackend, ChatMessage, CompletionRequest, GenParams};
use crate::dialogue::Dialogue;
use crate::persona::{Dimension, Polarity, TraitSpec};
use crate::rolegen::RoleCard;

/// Judge prompt. Placeholders: `{Topic}`, `{Dialogue}`, `{Role Name}`,
/// `{personality trait}`.
pub const JUDGE_PROMPT: &str = r#"You are a psychologist skilled in personality analysis, and your task is to determine the Big Five personality traits of the speakers based on a conversation they had discussing a certain topic.
Note: you only need to evaluate the personality reflected by the designated speaker in the given conversation.

Discussion topic: {Topic}
Dialogue:
{Dialogue}

Based on the above dialogue, please predict the personality of {Role Name} in the dimension of {personality trait} is: A. High Level B. Low Level C. Not Sure.
Please provide the option directly without providing an explanation."#;

/// The judge's three options.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    HighLevel,
    LowLevel,
    NotSure,
}

/// Outcome for one judged dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimOutcome {
    pub spec: TraitSpec,
    pub verdict: Option<Verdict>,
    pub success: Option<bool>,
}

/// Per-dimension verdicts for one role in one dialogue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackTestRecord {
    pub dialogue_id: String,
    pub role_id: String,
    pub judge_model_id: String,
    pub dims: BTreeMap<Dimension, DimOutcome>,
}

impl BackTestRecord {
    /// True when every predefined dimension received a verdict.
    pub fn is_complete(&self) -> bool {
        self.dims.values().all(|d| d.verdict.is_some())
    }
}

/// Transcript line rendering, "Name: text" per utterance; names resolve
/// through the id map, falling back to the raw id.
fn render_transcript(dialogue: &Dialogue, names: &BTreeMap<String, String>) -> String {
    dialogue
        .utterances
        .iter()
        .map(|u| {
            let name = names.get(&u.speaker).map(String::as_str).unwrap_or(&u.speaker);
            format!("{name}: {}", u.text)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Instantiate the judge prompt for one (dialogue, role, dimension).
pub fn render_backtest_prompt(
    dialogue: &Dialogue,
    names: &BTreeMap<String, String>,
    role_name: &str,
    dimension: Dimension,
) -> String {
    JUDGE_PROMPT
        .replace("{Topic}", &dialogue.topic_text)
        .replace("{Dialogue}", &render_transcript(dialogue, names))
        .replace("{Role Name}", role_name)
        .replace("{personality trait}", dimension.title_name())
}

/// Parse a judge reply: the earliest signal wins, scanning for
/// standalone A/B/C tokens and the option phrases case-insensitively.
/// Anything unparseable conservatively becomes NotSure.
pub fn parse_verdict(reply: &str) -> Verdict {
    let mut best: Option<(usize, Verdict)> = None;
    let mut consider = |pos: Option<usize>, verdict: Verdict| {
        if let Some(pos) = pos {
            if best.is_none() || pos < best.unwrap().0 {
                best = Some((pos, verdict));
            }
        }
    };

    let lower = reply.to_lowercase();
    consider(lower.find("high level"), Verdict::HighLevel);
    consider(lower.find("low level"), Verdict::LowLevel);
    consider(lower.find("not sure"), Verdict::NotSure);

    let mut token_start = None;
    for (i, c) in reply.char_indices().chain(std::iter::once((reply.len(), ' '))) {
        if c.is_ascii_alphanumeric() {
            if token_start.is_none() {
                token_start = Some(i);
            }
        } else if let Some(start) = token_start.take() {
            let token = &reply[start..i];
            let verdict = match token {
                "A" => Some(Verdict::HighLevel),
                "B" => Some(Verdict::LowLevel),
                "C" => Some(Verdict::NotSure),
                _ => None,
            };
            if let Some(v) = verdict {
                consider(Some(start), v);
            }
        }
    }

    match best {
        Some((_, verdict)) => verdict,
        None => {
            log::warn!("unparseable judge reply, counting as NotSure: {reply:?}");
            Verdict::NotSure
        }
    }
}

/// Portrayal success: the verdict names the predefined polarity.
/// NotSure always fails. No reversal happens here; NEU reversal is a
/// reporting concern only.
pub fn verdict_matches(spec: &TraitSpec, verdict: Verdict) -> bool {
    matches!(
        (spec.polarity, verdict),
        (Polarity::High, Verdict::HighLevel) | (Polarity::Low, Verdict::LowLevel)
    )
}

/// Judge every predefined dimension of `role` in `dialogue`. Backend
/// errors leave that dimension's verdict and success unset.
pub fn backtest_dialogue(
    dialogue: &Dialogue,
    role: &RoleCard,
    names: &BTreeMap<String, String>,
    backend: &dyn ChatBackend,
    params: &GenParams,
) -> BackTestRecord {
    let mut dims = BTreeMap::new();
    for spec in &role.profile.specs {
        let prompt = render_backtest_prompt(dialogue, names, &role.name, spec.dimension);
        let request = CompletionRequest::new(params, vec![ChatMessage::user(prompt)]);
        let (verdict, success) = match backend.complete(&request) {
            Ok(reply) => {
                let verdict = parse_verdict(&reply);
                (Some(verdict), Some(verdict_matches(spec, verdict)))
            }
            Err(e) => {
                log::warn!(
                    "judge call failed for {} / {} / {}: {e}",
                    dialogue.id,
                    role.id,
                    spec.dimension
                );
                (None, None)
            }
        };
        dims.insert(spec.dimension, DimOutcome { spec: *spec, verdict, success });
    }
    BackTestRecord {
        dialogue_id: dialogue.id.clone(),
        role_id: role.id.clone(),
        judge_model_id: params.model_id.clone(),
        dims,
    }
}

/// Reporting-side label for a (dimension, polarity) pair. NEU is the
/// reversed trait: its socially positive pole is the low end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportPolarity {
    Positive,
    Negative,
}

pub fn classify_report_polarity(spec: &TraitSpec) -> ReportPolarity {
    let positive = match spec.dimension {
        Dimension::Neu => spec.polarity == Polarity::Low,
        _ => spec.polarity == Polarity::High,
    };
    if positive {
        ReportPolarity::Positive
    } else {
        ReportPolarity::Negative
    }
}

/// All five dimensions judged for one role, regardless of which were
/// predefined; feeds the diversity matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiversityRecord {
    pub dialogue_id: String,
    pub role_id: String,
    /// The role's single predefined dimension (its group).
    pub predefined: Dimension,
    pub verdicts: BTreeMap<Dimension, Option<Verdict>>,
}

/// Judge all five dimensions of a single-trait role in one dialogue.
pub fn judge_all_dimensions(
    dialogue: &Dialogue,
    role: &RoleCard,
    names: &BTreeMap<String, String>,
    backend: &dyn ChatBackend,
    params: &GenParams,
) -> Result<DiversityRecord, BacktestError> {
    if role.profile.specs.len() != 1 {
        return Err(BacktestError::NotSingleTrait {
            role_id: role.id.clone(),
            specs: role.profile.specs.len(),
        });
    }
    let predefined = role.profile.specs[0].dimension;
    let mut verdicts = BTreeMap::new();
    for dimension in Dimension::ALL {
        let prompt = render_backtest_prompt(dialogue, names, &role.name, dimension);
        let request = CompletionRequest::new(params, vec![ChatMessage::user(prompt)]);
        let verdict = match backend.complete(&request) {
            Ok(reply) => Some(parse_verdict(&reply)),
            Err(e) => {
                log::warn!("diversity judge call failed for {} / {dimension}: {e}", role.id);
                None
            }
        };
        verdicts.insert(dimension, verdict);
    }
    Ok(DiversityRecord {
        dialogue_id: dialogue.id.clone(),
        role_id: role.id.clone(),
        predefined,
        verdicts,
    })
}

/// A human annotator's judgment for one (dialogue, role, dimension).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HumanAnnotation {
    pub dialogue_id: String,
    pub role_id: String,
    pub dimension: Dimension,
    pub label: HumanLabel,
    pub annotator_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HumanLabel {
    Yes,
    No,
    Uncertain,
}

#[derive(Debug, thiserror::Error)]
pub enum BacktestError {
    #[error("role {role_id} has {specs} predefined traits; diversity judging needs exactly one")]
    NotSingleTrait { role_id: String, specs: usize },
}
