//! Decision making: prompt construction, backends, and the validate /
//! re-prompt loop around them.

mod llm;
mod parse;
mod prompt;
mod stub;

pub use llm::{BackendError, ChatMessage, CompletionBackend, EndpointConfig, LlmClient};
pub use parse::{parse_triplet, validate_decision, Decision, RawTriplet, Violation};
pub use prompt::{build_prompt, permitted_actions, DecisionPrompt, FeedEntry};
pub use stub::{parse_surrogates, InteractMix, StubPolicy};

pub const FALLBACK_REASON: &str = "fallback: invalid responses";

/// Result of [`decide`], with the rejected attempts kept for logging.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionOutcome {
    pub decision: Decision,
    pub violations: Vec<Violation>,
    pub fell_back: bool,
}

impl DecisionOutcome {
    pub fn retries(&self) -> usize {
        self.violations.len()
    }
}

pub fn prompt_messages(prompt: &DecisionPrompt) -> Vec<ChatMessage> {
    vec![ChatMessage::system(prompt.system_text.clone()), ChatMessage::user(prompt.user_message())]
}

/// Ask `backend` for a decision, re-issuing the prompt while the answer is
/// invalid. After `max_attempts` invalid answers the agent stays inactive.
/// Transport errors are returned immediately.
pub fn decide(
    prompt: &DecisionPrompt,
    backend: &dyn CompletionBackend,
    max_attempts: usize,
) -> Result<DecisionOutcome, BackendError> {
    let messages = prompt_messages(prompt);
    let mut violations = Vec::new();
    for attempt in 1..=max_attempts.max(1) {
        let raw = backend.complete(&messages)?;
        match validate_decision(&raw, prompt) {
            Ok(decision) => return Ok(DecisionOutcome { decision, violations, fell_back: false }),
            Err(v) => {
                log::debug!("agent {} iteration {} attempt {attempt}: {v}", prompt.agent, prompt.iteration);
                violations.push(v);
            }
        }
    }
    log::warn!(
        "agent {} iteration {}: {} invalid responses, falling back to inactive",
        prompt.agent,
        prompt.iteration,
        violations.len()
    );
    Ok(DecisionOutcome { decision: Decision::inactive(FALLBACK_REASON), violations, fell_back: true })
}
