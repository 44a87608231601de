//! Two-agent dialogue orchestration: alternating completions with the
//! initiator and continuation prompts, `[END]`-marker termination, and
//! seeded batch generation.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{ChatBackend, ChatMessage, CompletionRequest, GenParams};
use crate::exec::Exec;
use crate::rolegen::RoleCard;
use crate::topics::Topic;

/// Opening-turn prompt. Placeholders: `{Role Card}`, `{Traits}`,
/// `{Partner Name}`, `{Topic}`.
pub const INITIATOR_PROMPT: &str = r#"You are an outstanding actor who excels in imitating various characters. Below are the details of the character you are supposed to imitate. Please embody the personality traits of this character and engage in a conversation with another character regarding a specific topic.
Your character: {Role Card}
Your personality traits: {Traits}
Your conversational partner: {Partner Name}
Discussion topic: {Topic}

You need to abide by the following rules or it will affect your reputation:

1. When initiating a conversation, you need to accurately demonstrate the speaking style corresponding to your personality traits (without directly mentioning the personality types)! You need to accurately capture the three degrees of personality traits: "a bit," "very," and "extremely".
2. You should fully mimic the assigned personality role, with your speech content aligning with the character's experiences, even if the role is not positive.
3. Please refrain from revealing that you are an artificial intelligence or language model. Keep in mind that you are merely impersonating a character and avoid disclosing your personality traits.
4. Your speech should be natural, concise, and not too formal or polite, with each response within 30 words.

Now, as the initiator of the conversation, please greet your partner and start a chat about the discussion topic, while staying in character."#;

/// Non-initial-turn prompt; rule 5 introduces the `[END]` marker.
pub const CONTINUATION_PROMPT: &str = r#"You are an outstanding actor who excels in imitating various characters. Below are the details of the character you are supposed to imitate. Please embody the personality traits of this character and engage in a conversation with another character regarding a specific topic.
Your character: {Role Card}
Your personality traits: {Traits}
Your conversational partner: {Partner Name}
Discussion topic: {Topic}

You need to abide by the following rules or it will affect your reputation:

1. During the conversation, you need to accurately demonstrate the speaking style corresponding to your personality traits (without directly mentioning the personality types)! You need to accurately capture the three degrees of personality traits: "a bit," "very," and "extremely".
2. You should fully mimic the assigned personality role, with your speech content aligning with the character's experiences, even if the character is negative.
3. Please refrain from revealing that you are an artificial intelligence or language model. Keep in mind that you are merely impersonating a character and avoid disclosing your personality traits.
4. You need to embody your personality role in agreeing, disagreeing, or avoiding your partner's viewpoints. Remember not to repeat existing dialogue content and perspectives, and try to provide new content as much as possible.
5. If you cannot offer new content or have thoroughly discussed the topic, please end the conversation in a timely manner and output the marker [END] on a new line.
6. Each turn of your dialogue should be natural, concise, and not too formal or polite, with each response within 30 words.

Now, you have received a message from the conversational partner. Please don't address the other person by name too much, and start the conversation"#;

/// The termination token continuation turns may emit.
pub const END_MARKER: &str = "[END]";

/// Soft per-reply word budget; replies over it are flagged, never cut.
pub const WORD_LIMIT: usize = 30;

/// Which persona ingredients the prompts carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationConfig {
    pub include_traits: bool,
    pub include_experience: bool,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig { include_traits: true, include_experience: true }
    }
}

impl AblationConfig {
    /// Parse a CLI word naming what stays IN the prompt.
    pub fn parse(word: &str) -> Option<AblationConfig> {
        match word {
            "both" => Some(AblationConfig { include_traits: true, include_experience: true }),
            "traits" => Some(AblationConfig { include_traits: true, include_experience: false }),
            "experience" => {
                Some(AblationConfig { include_traits: false, include_experience: true })
            }
            "none" => Some(AblationConfig { include_traits: false, include_experience: false }),
            _ => None,
        }
    }
}

/// One stored reply.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub speaker: String,
    pub text: String,
    pub over_limit: bool,
}

impl Utterance {
    pub fn new(speaker: String, text: String) -> Self {
        let over_limit = word_count(&text) > WORD_LIMIT;
        Utterance { speaker, text, over_limit }
    }

    pub fn word_count(&self) -> usize {
        word_count(&self.text)
    }
}

/// Whitespace-token count.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Why a dialogue stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    EndMarker,
    TurnCap,
    BackendError,
}

/// An ordered two-agent conversation about one topic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dialogue {
    pub id: String,
    pub initiator_id: String,
    pub partner_id: String,
    pub topic_id: String,
    pub topic_text: String,
    pub ablation: AblationConfig,
    pub termination: Termination,
    pub utterances: Vec<Utterance>,
}

impl Dialogue {
    /// Completed initiator+partner exchange pairs.
    pub fn pair_count(&self) -> usize {
        self.utterances.len() / 2
    }
}

/// Corpus-level turn statistics: exchange pairs per dialogue and
/// whitespace tokens per utterance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenStats {
    pub dialogues: usize,
    pub utterances: usize,
    pub avg_pairs: f64,
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub avg_tokens: f64,
}

/// Aggregate token statistics over a dialogue corpus; `None` when no
/// utterances exist.
pub fn token_stats(dialogues: &[Dialogue]) -> Option<TokenStats> {
    let counts: Vec<usize> = dialogues
        .iter()
        .flat_map(|d| d.utterances.iter().map(Utterance::word_count))
        .collect();
    if counts.is_empty() {
        return None;
    }
    let total_pairs: usize = dialogues.iter().map(Dialogue::pair_count).sum();
    Some(TokenStats {
        dialogues: dialogues.len(),
        utterances: counts.len(),
        avg_pairs: total_pairs as f64 / dialogues.len() as f64,
        min_tokens: *counts.iter().min().unwrap(),
        max_tokens: *counts.iter().max().unwrap(),
        avg_tokens: counts.iter().sum::<usize>() as f64 / counts.len() as f64,
    })
}

fn json_string(value: &str) -> String {
    serde_json::to_string(value).expect("string serializes")
}

/// The `{Role Card}` block: name/gender/age(/experience) as compact
/// JSON, experience dropped when ablated.
pub fn render_role_card_block(role: &RoleCard, ablation: AblationConfig) -> String {
    let mut fields = vec![
        format!("\"name\": {}", json_string(&role.name)),
        format!("\"gender\": {}", json_string(&role.gender)),
        format!("\"age\": {}", role.age),
    ];
    if ablation.include_experience {
        fields.push(format!("\"experience\": {}", json_string(&role.experience)));
    }
    format!("{{{}}}", fields.join(", "))
}

/// The `{Traits}` clause: every spec with its level word, joined by
/// "and".
pub fn render_traits_clause(role: &RoleCard) -> String {
    role.profile
        .specs
        .iter()
        .map(|spec| spec.clause())
        .collect::<Vec<_>>()
        .join(" and ")
}

fn fill_dialogue_template(
    template: &str,
    role: &RoleCard,
    partner_name: &str,
    topic: &Topic,
    ablation: AblationConfig,
) -> String {
    let mut text = template
        .replace("{Role Card}", &render_role_card_block(role, ablation))
        .replace("{Partner Name}", partner_name)
        .replace("{Topic}", &topic.text);
    if ablation.include_traits {
        text = text.replace("{Traits}", &render_traits_clause(role));
    } else {
        text = text.replace("Your personality traits: {Traits}\n", "");
    }
    text
}

/// Instantiate the opening-turn prompt.
pub fn render_initiator_prompt(
    role: &RoleCard,
    partner_name: &str,
    topic: &Topic,
    ablation: AblationConfig,
) -> String {
    fill_dialogue_template(INITIATOR_PROMPT, role, partner_name, topic, ablation)
}

/// Instantiate the continuation system prompt.
pub fn render_continuation_prompt(
    role: &RoleCard,
    partner_name: &str,
    topic: &Topic,
    ablation: AblationConfig,
) -> String {
    fill_dialogue_template(CONTINUATION_PROMPT, role, partner_name, topic, ablation)
}

/// Continuation request messages: the system prompt, then the whole
/// transcript from the speaker's perspective (own turns as assistant,
/// partner turns as user), ending with the partner's latest message.
pub fn build_continuation_messages(
    role: &RoleCard,
    partner_name: &str,
    topic: &Topic,
    ablation: AblationConfig,
    transcript: &[Utterance],
) -> Vec<ChatMessage> {
    let mut messages = Vec::with_capacity(transcript.len() + 1);
    messages.push(ChatMessage::system(render_continuation_prompt(
        role,
        partner_name,
        topic,
        ablation,
    )));
    for utterance in transcript {
        if utterance.speaker == role.id {
            messages.push(ChatMessage::assistant(utterance.text.clone()));
        } else {
            messages.push(ChatMessage::user(utterance.text.clone()));
        }
    }
    messages
}

/// Split a reply at its `[END]` marker: the text before it (trimmed)
/// and whether the marker was present.
pub fn strip_end_marker(reply: &str) -> (String, bool) {
    match reply.find(END_MARKER) {
        Some(pos) => (reply[..pos].trim().to_owned(), true),
        None => (reply.trim().to_owned(), false),
    }
}

/// Run one dialogue to termination. Backend failures end the dialogue,
/// which is kept for diagnosis with `Termination::BackendError`.
#[allow(clippy::too_many_arguments)]
pub fn run_dialogue(
    id: impl Into<String>,
    initiator: &RoleCard,
    partner: &RoleCard,
    topic: &Topic,
    max_pairs: usize,
    ablation: AblationConfig,
    backend: &dyn ChatBackend,
    params: &GenParams,
) -> Dialogue {
    assert!(initiator.id != partner.id, "a role cannot talk to itself");
    assert!(max_pairs >= 1, "max_pairs must be at least 1");

    let mut utterances: Vec<Utterance> = Vec::new();
    let termination = loop {
        if utterances.len() >= max_pairs * 2 {
            break Termination::TurnCap;
        }
        let (speaker, listener) = if utterances.len().is_multiple_of(2) {
            (initiator, partner)
        } else {
            (partner, initiator)
        };
        let messages = if utterances.is_empty() {
            vec![ChatMessage::system(render_initiator_prompt(
                speaker,
                &listener.name,
                topic,
                ablation,
            ))]
        } else {
            build_continuation_messages(speaker, &listener.name, topic, ablation, &utterances)
        };
        let request = CompletionRequest::new(params, messages);
        let reply = match backend.complete(&request) {
            Ok(reply) => reply,
            Err(e) => {
                log::warn!("dialogue turn failed: {e}");
                break Termination::BackendError;
            }
        };
        let (text, ended) = strip_end_marker(&reply);
        let empty = text.is_empty();
        if !empty {
            utterances.push(Utterance::new(speaker.id.clone(), text));
        }
        if ended || empty {
            break Termination::EndMarker;
        }
    };

    Dialogue {
        id: id.into(),
        initiator_id: initiator.id.clone(),
        partner_id: partner.id.clone(),
        topic_id: topic.id.clone(),
        topic_text: topic.text.clone(),
        ablation,
        termination,
        utterances,
    }
}

/// Result of a batch run: the usable dialogues in sampling order, plus
/// how many ended in a backend error (those are excluded).
#[derive(Debug)]
pub struct BatchOutcome {
    pub dialogues: Vec<Dialogue>,
    pub backend_failures: usize,
}

/// Generate `n_dialogues` conversations over seeded (initiator,
/// partner, topic) samples. Pairings are drawn up front so the batch is
/// reproducible regardless of execution strategy.
#[allow(clippy::too_many_arguments)]
pub fn batch_generate<R: Rng + ?Sized>(
    roles: &[RoleCard],
    topics: &[Topic],
    n_dialogues: usize,
    max_pairs: usize,
    ablation: AblationConfig,
    rng: &mut R,
    backend: &dyn ChatBackend,
    params: &GenParams,
    exec: Exec,
) -> Result<BatchOutcome, DialogueError> {
    if roles.len() < 2 {
        return Err(DialogueError::NotEnoughRoles(roles.len()));
    }
    if topics.is_empty() {
        return Err(DialogueError::NoTopics);
    }
    let triples: Vec<(usize, usize, usize, usize)> = (0..n_dialogues)
        .map(|k| {
            let initiator = rng.gen_range(0..roles.len());
            let mut partner = rng.gen_range(0..roles.len() - 1);
            if partner >= initiator {
                partner += 1;
            }
            let topic = rng.gen_range(0..topics.len());
            (k, initiator, partner, topic)
        })
        .collect();

    let results = exec.map(triples, |(k, i, j, t)| {
        run_dialogue(
            format!("dlg-{:06}", k + 1),
            &roles[i],
            &roles[j],
            &topics[t],
            max_pairs,
            ablation,
            backend,
            params,
        )
    });

    let backend_failures = results
        .iter()
        .filter(|d| d.termination == Termination::BackendError)
        .count();
    if backend_failures * 2 > n_dialogues {
        return Err(DialogueError::TooManyFailures {
            requested: n_dialogues,
            failed: backend_failures,
        });
    }
    let dialogues = results
        .into_iter()
        .filter(|d| d.termination != Termination::BackendError)
        .collect();
    Ok(BatchOutcome { dialogues, backend_failures })
}

#[derive(Debug, Error)]
pub enum DialogueError {
    #[error("need at least two roles, got {0}")]
    NotEnoughRoles(usize),
    #[error("no topics available")]
    NoTopics,
    #[error("{failed} of {requested} dialogues ended in backend errors")]
    TooManyFailures { requested: usize, failed: usize },
}
