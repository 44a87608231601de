//! Role-card creation: renders the director prompt, parses the replied
//! character JSON, and builds whole role sets.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, ChatBackend, ChatMessage, CompletionRequest, GenParams};
use crate::exec::Exec;
use crate::persona::{PersonalityDescription, TraitProfile};

/// Prompt for creating a role card. `{Personality Description}` is the
/// only placeholder.
pub const ROLE_CARD_PROMPT: &str = r#"You are an excellent director and you need to design some virtual characters for your movie. The requirement is to design the character's name, gender, age, and experience that align with the provided Big Five personality description. Your design needs to adhere to the following rules, otherwise it will affect your reputation:

1. The logical relationship between the various attributes of the designed character is reasonable and conforms to real-world principles.
2. The character's experience needs to correspond to all of their personality traits, which can be described in one sentences.
3. Do not change the character's personality traits in their experience; the given personality is the character's current one.
4. Not all characters in their experience will be successful in life; there will also be characters who face difficulties.

Now, given the Big Five personality description as: {Personality Description}, please design a corresponding virtual character and fill in the JSON fields below.
{"name": <role-name>, "gender": <role-gender>, "age": <role-age>, "experience": <role-experience>}"#;

/// A generated persona bound to its trait profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleCard {
    pub id: String,
    pub name: String,
    pub gender: String,
    pub age: u32,
    pub experience: String,
    #[serde(flatten)]
    pub profile: TraitProfile,
}

impl RoleCard {
    pub fn validate(&self) -> Result<(), RoleGenError> {
        if self.name.trim().is_empty()
            || self.gender.trim().is_empty()
            || self.experience.trim().is_empty()
        {
            return Err(RoleGenError::Invalid("empty name/gender/experience".into()));
        }
        if !(1..=120).contains(&self.age) {
            return Err(RoleGenError::Invalid(format!("age {} out of range", self.age)));
        }
        if self.profile.specs.is_empty() {
            return Err(RoleGenError::Invalid("profile has no traits".into()));
        }
        Ok(())
    }
}

/// Instantiate the role-card prompt for one personality description.
pub fn render_role_prompt(description: &PersonalityDescription) -> String {
    ROLE_CARD_PROMPT.replace("{Personality Description}", &description.text)
}

/// Find the first substring of `text` that parses as a JSON object.
/// Tolerates surrounding prose and code fences; with several objects
/// present the first one wins.
pub fn extract_first_json_object(text: &str) -> Option<serde_json::Value> {
    let bytes = text.as_bytes();
    let mut start = 0;
    while let Some(offset) = text[start..].find('{') {
        let open = start + offset;
        let mut depth = 0usize;
        let mut in_string = false;
        let mut escaped = false;
        for (i, &b) in bytes.iter().enumerate().skip(open) {
            if in_string {
                if escaped {
                    escaped = false;
                } else if b == b'\\' {
                    escaped = true;
                } else if b == b'"' {
                    in_string = false;
                }
                continue;
            }
            match b {
                b'"' => in_string = true,
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        if let Ok(value) =
                            serde_json::from_str::<serde_json::Value>(&text[open..=i])
                        {
                            if value.is_object() {
                                return Some(value);
                            }
                        }
                        break;
                    }
                }
                _ => {}
            }
        }
        start = open + 1;
    }
    None
}

fn parse_role_reply(reply: &str) -> Result<(String, String, u32, String), String> {
    let object = extract_first_json_object(reply).ok_or("no JSON object in reply")?;
    let field = |key: &str| -> Result<String, String> {
        let value = object
            .get(key)
            .ok_or_else(|| format!("missing field {key}"))?
            .as_str()
            .ok_or_else(|| format!("field {key} is not a string"))?
            .trim()
            .to_owned();
        if value.is_empty() {
            return Err(format!("field {key} is empty"));
        }
        Ok(value)
    };
    let name = field("name")?;
    let gender = field("gender")?;
    let experience = field("experience")?;
    let age_value = object.get("age").ok_or("missing field age")?;
    // Numeric strings ("35") are coerced; word-form ages are rejected.
    let age = match age_value {
        serde_json::Value::Number(n) => n
            .as_u64()
            .ok_or_else(|| format!("age {n} is not a whole number"))?,
        serde_json::Value::String(s) => s
            .trim()
            .parse::<u64>()
            .map_err(|_| format!("age {s:?} is not an integer"))?,
        other => return Err(format!("age {other} is not an integer")),
    };
    if !(1..=120).contains(&age) {
        return Err(format!("age {age} out of range"));
    }
    Ok((name, gender, age as u32, experience))
}

/// Generate one role card, retrying with a fresh call on parse or
/// validation failure.
pub fn generate_role(
    id: impl Into<String>,
    profile: &TraitProfile,
    description: &PersonalityDescription,
    backend: &dyn ChatBackend,
    params: &GenParams,
    max_attempts: u32,
) -> Result<RoleCard, RoleGenError> {
    let prompt = render_role_prompt(description);
    let request = CompletionRequest::new(params, vec![ChatMessage::user(prompt)]);
    let mut last_error = String::from("no attempts made");
    let mut attempts = 0;
    while attempts < max_attempts.max(1) {
        attempts += 1;
        match backend.complete(&request) {
            Ok(reply) => match parse_role_reply(&reply) {
                Ok((name, gender, age, experience)) => {
                    let card = RoleCard {
                        id: id.into(),
                        name,
                        gender,
                        age,
                        experience,
                        profile: profile.clone(),
                    };
                    card.validate()?;
                    return Ok(card);
                }
                Err(reason) => last_error = reason,
            },
            Err(e) => last_error = e.to_string(),
        }
    }
    Err(RoleGenError::GenerationFailed { attempts, last_error })
}

/// Sampling plus generation for a whole role set.
///
/// Primary profile draws are without replacement when `target` fits,
/// with replacement otherwise; failed candidates are replaced by fresh
/// draws until the 2x`target` candidate budget runs out, which is the
/// >50% failure cutoff.
#[allow(clippy::too_many_arguments)]
pub fn build_role_set<R: Rng + ?Sized>(
    profiles: &[TraitProfile],
    target: usize,
    k_per_trait: usize,
    backend: &dyn ChatBackend,
    params: &GenParams,
    max_attempts: u32,
    rng: &mut R,
    exec: Exec,
) -> Result<Vec<RoleCard>, RoleGenError> {
    if target == 0 {
        return Ok(Vec::new());
    }
    if profiles.is_empty() {
        return Err(RoleGenError::NoProfiles);
    }

    let budget = target * 2;
    let mut drawn = 0usize;
    let draw_batch = |rng: &mut R, n: usize, drawn: &mut usize| -> Vec<usize> {
        let primary_left = target.saturating_sub(*drawn);
        let mut picks = Vec::with_capacity(n);
        if primary_left > 0 && target <= profiles.len() {
            let take = primary_left.min(n);
            picks.extend(
                rand::seq::index::sample(rng, profiles.len(), take),
            );
        }
        while picks.len() < n {
            picks.push(rng.gen_range(0..profiles.len()));
        }
        *drawn += n;
        picks
    };

    let mut cards = Vec::with_capacity(target);
    let mut failures = 0usize;
    let mut used = 0usize;
    while cards.len() < target {
        let deficit = target - cards.len();
        let wave = deficit.min(budget - used);
        if wave == 0 {
            return Err(RoleGenError::TooManyFailures { target, failures });
        }
        used += wave;
        let candidates: Vec<(TraitProfile, PersonalityDescription)> =
            draw_batch(rng, wave, &mut drawn)
                .into_iter()
                .map(|idx| {
                    let profile = profiles[idx].clone();
                    let description =
                        crate::persona::render_description(&profile, k_per_trait, rng)?;
                    Ok((profile, description))
                })
                .collect::<Result<_, crate::persona::PersonaError>>()
                .map_err(RoleGenError::Persona)?;

        let outcomes = exec.map(candidates, |(profile, description)| {
            generate_role("pending", &profile, &description, backend, params, max_attempts)
        });
        for outcome in outcomes {
            match outcome {
                Ok(card) => cards.push(card),
                Err(e) => {
                    failures += 1;
                    log::warn!("role generation failed: {e}");
                }
            }
        }
    }

    for (i, card) in cards.iter_mut().enumerate() {
        card.id = format!("role-{:04}", i + 1);
    }
    Ok(cards)
}

#[derive(Debug, Error)]
pub enum RoleGenError {
    #[error("role generation failed after {attempts} attempts: {last_error}")]
    GenerationFailed { attempts: u32, last_error: String },
    #[error("too many failures while building {target} roles ({failures} failed candidates)")]
    TooManyFailures { target: usize, failures: usize },
    #[error("no trait profiles available")]
    NoProfiles,
    #[error("invalid role card: {0}")]
    Invalid(String),
    #[error(transparent)]
    Persona(#[from] crate::persona::PersonaError),
    #[error(transparent)]
    Backend(#[from] BackendError),
}
