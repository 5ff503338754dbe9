//! Parsing and validation of Choice–Reason–Content triplets.
//!
//! Two layouts are accepted: labeled lines (`CHOICE:`, `REASON:`,
//! `CONTENT:`) and a JSON object with keys `choice`, `reason`, `content`.
//! Backends tend to wrap either in markdown, so bullets, bold markers and
//! code fences are tolerated.

use serde_json::Value;
use thiserror::Error;

use super::prompt::DecisionPrompt;
use crate::model::{Action, ActionKind, AgentId, ContentId};

/// A validated decision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub action: Action,
    pub reason: String,
}

impl Decision {
    pub fn choice(&self) -> ActionKind {
        self.action.kind()
    }

    pub fn inactive(reason: impl Into<String>) -> Self {
        Decision { action: Action::Inactive, reason: reason.into() }
    }
}

/// Why a raw response was rejected.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Violation {
    #[error("parse failure: {0}")]
    Parse(String),
    #[error("unknown action kind `{0}`")]
    UnknownAction(String),
    #[error("action {0} is not available this iteration")]
    NotPermitted(ActionKind),
    #[error("dangling content reference: {0}")]
    DanglingReference(String),
    #[error("missing payload for {0}")]
    MissingPayload(ActionKind),
}

/// Raw triplet fields before validation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawTriplet {
    pub choice: String,
    pub reason: String,
    pub content: String,
}

/// Extract the three fields from a response without validating them.
pub fn parse_triplet(raw: &str) -> Result<RawTriplet, Violation> {
    if let Some(t) = parse_json(raw) {
        return Ok(t);
    }
    parse_lines(raw)
}

fn parse_json(raw: &str) -> Option<RawTriplet> {
    let start = raw.find('{')?;
    let end = raw.rfind('}')?;
    if end <= start {
        return None;
    }
    let value: Value = serde_json::from_str(&raw[start..=end]).ok()?;
    let obj = value.as_object()?;
    let field = |name: &str| obj.iter().find(|(k, _)| k.eq_ignore_ascii_case(name)).map(|(_, v)| v);
    let choice = field("choice")?.as_str()?.to_string();
    let reason = field("reason").map(scalar_text).unwrap_or_default();
    let content = match field("content") {
        Some(Value::Object(inner)) => {
            let get = |k: &str| inner.get(k).map(scalar_text).unwrap_or_default();
            let (target, text) = (get("target"), get("text"));
            match (target.is_empty(), text.is_empty()) {
                (false, false) => format!("{target} | {text}"),
                (false, true) => target,
                _ => text,
            }
        }
        Some(v) => scalar_text(v),
        None => String::new(),
    };
    Some(RawTriplet { choice, reason, content })
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.trim().to_string(),
        other => other.to_string(),
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Field {
    Choice,
    Reason,
    Content,
}

fn parse_lines(raw: &str) -> Result<RawTriplet, Violation> {
    let mut choice: Option<String> = None;
    let mut reason: Vec<String> = Vec::new();
    let mut content: Vec<String> = Vec::new();
    let mut current: Option<Field> = None;

    for line in raw.lines() {
        let trimmed = line.trim().trim_start_matches(['-', '*', '#', '>']).trim();
        if trimmed.starts_with("```") {
            continue;
        }
        let cleaned = trimmed.replace("**", "");
        if let Some((label, rest)) = cleaned.split_once(':') {
            let field = match label.trim().to_ascii_lowercase().as_str() {
                "choice" | "action" => Some(Field::Choice),
                "reason" => Some(Field::Reason),
                "content" => Some(Field::Content),
                _ => None,
            };
            if let Some(f) = field {
                let rest = rest.trim().to_string();
                match f {
                    Field::Choice => {
                        if choice.is_some() {
                            return Err(Violation::Parse("CHOICE given more than once".into()));
                        }
                        choice = Some(rest);
                    }
                    Field::Reason => reason.push(rest),
                    Field::Content => content.push(rest),
                }
                current = Some(f);
                continue;
            }
        }
        match current {
            Some(Field::Reason) if !trimmed.is_empty() => reason.push(trimmed.to_string()),
            Some(Field::Content) if !trimmed.is_empty() => content.push(trimmed.to_string()),
            _ => {}
        }
    }

    let choice = choice.ok_or_else(|| Violation::Parse("no CHOICE field found".into()))?;
    Ok(RawTriplet {
        choice,
        reason: reason.join(" ").trim().to_string(),
        content: content.join("\n").trim().to_string(),
    })
}

/// Parse a leading content id such as `12`, `#12` or `[12]`, returning the
/// id and the remaining text.
fn split_content_id(s: &str) -> Option<(ContentId, &str)> {
    let s = s.trim_start();
    let s = s.strip_prefix('[').unwrap_or(s);
    let s = s.strip_prefix('#').unwrap_or(s);
    let digits = s.bytes().take_while(u8::is_ascii_digit).count();
    if digits == 0 {
        return None;
    }
    let id: u64 = s[..digits].parse().ok()?;
    let rest = s[digits..].trim_start_matches(']');
    Some((ContentId(id), rest))
}

fn content_reference(content: &str, prompt: &DecisionPrompt) -> Result<(ContentId, String), Violation> {
    let (id, rest) = split_content_id(content)
        .ok_or_else(|| Violation::DanglingReference(format!("`{}` is not a content id", content.trim())))?;
    if !prompt.feed_contains(id) {
        return Err(Violation::DanglingReference(format!("content {id} is not in the feed")));
    }
    let text = rest.trim_start_matches(|c: char| c.is_whitespace() || matches!(c, '|' | ':' | '-' | ',')).trim();
    Ok((id, text.to_string()))
}

/// Parse `raw` and check it against what the prompt offered.
pub fn validate_decision(raw: &str, prompt: &DecisionPrompt) -> Result<Decision, Violation> {
    let t = parse_triplet(raw)?;
    let choice = t.choice.trim().trim_matches(['`', '"', '\'', '.']);
    let kind: ActionKind = choice.parse().map_err(|_| Violation::UnknownAction(t.choice.clone()))?;
    if !prompt.permits(kind) {
        return Err(Violation::NotPermitted(kind));
    }
    let content = t.content.trim();
    let action = match kind {
        ActionKind::Post => {
            if content.is_empty() {
                return Err(Violation::MissingPayload(kind));
            }
            Action::Post { text: content.to_string() }
        }
        ActionKind::ReShare | ActionKind::Like | ActionKind::Dislike => {
            if content.is_empty() {
                return Err(Violation::MissingPayload(kind));
            }
            let (target, _) = content_reference(content, prompt)?;
            match kind {
                ActionKind::ReShare => Action::ReShare { target },
                ActionKind::Like => Action::Like { target },
                _ => Action::Dislike { target },
            }
        }
        ActionKind::Comment => {
            if content.is_empty() {
                return Err(Violation::MissingPayload(kind));
            }
            let (target, text) = content_reference(content, prompt)?;
            if text.is_empty() {
                return Err(Violation::MissingPayload(kind));
            }
            Action::Comment { target, text }
        }
        ActionKind::Follow => {
            let who = content.trim_start_matches('@').trim();
            if who.is_empty() {
                return Err(Violation::MissingPayload(kind));
            }
            let target = AgentId::from(who);
            if target == prompt.agent || !prompt.feed_has_author(&target) {
                return Err(Violation::DanglingReference(format!("agent `{who}` is not a feed author")));
            }
            Action::Follow { target }
        }
        ActionKind::Inactive => Action::Inactive,
    };
    Ok(Decision { action, reason: t.reason })
}
