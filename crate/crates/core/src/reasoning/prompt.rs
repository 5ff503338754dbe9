use serde::{Deserialize, Serialize};

use crate::memory::MemoryUnit;
use crate::model::{ActionKind, AgentId, AgentProfile, Characterization, ContentId, ContentItem, Topic};
use crate::store::ContentStore;

/// One recommended item as presented to the agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedEntry {
    pub content_id: ContentId,
    pub author: AgentId,
    pub text: String,
    pub topic: Topic,
    pub is_reshare: bool,
}

impl FeedEntry {
    pub fn from_item(item: &ContentItem) -> Self {
        FeedEntry {
            content_id: item.id,
            author: item.author.clone(),
            text: item.text.clone(),
            topic: item.topic.clone(),
            is_reshare: !item.is_original(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionPrompt {
    pub agent: AgentId,
    pub iteration: u32,
    pub system_text: String,
    pub feedback_section: String,
    pub activity_section: String,
    pub feed: Vec<FeedEntry>,
    pub actions: Vec<ActionKind>,
}

const PLATFORM_PREAMBLE: &str = "You are a user of a social media platform. At each step you choose exactly one action.";

const RESPONSE_FORMAT: &str = "Answer with exactly three lines:\n\
CHOICE: <one of the available actions>\n\
REASON: <why you chose it, one sentence>\n\
CONTENT: <depends on the choice>\n\
For POST, CONTENT is the text of your post. For RESHARE, LIKE and DISLIKE, CONTENT is the id of one feed item. \
For COMMENT, CONTENT is `<id> | <comment text>`. For FOLLOW, CONTENT is the author id to follow. \
For INACTIVE, leave CONTENT empty.";

/// Actions offered for a given feed: only posting or inactivity when the
/// feed is empty, the full action space otherwise.
pub fn permitted_actions(feed_is_empty: bool) -> Vec<ActionKind> {
    if feed_is_empty {
        vec![ActionKind::Post, ActionKind::Inactive]
    } else {
        ActionKind::ALL.to_vec()
    }
}

/// Render the decision prompt for `agent` at iteration `now`.
pub fn build_prompt(
    agent: &AgentProfile,
    memory: &MemoryUnit,
    feed: &[FeedEntry],
    store: &ContentStore,
    now: u32,
) -> DecisionPrompt {
    let mut system_text = format!("{PLATFORM_PREAMBLE}\n\nWho you are: {}", agent.identity_text.trim());
    match agent.characterization {
        Characterization::Behavioral(t) => {
            system_text.push_str("\n\nHow you act: ");
            system_text.push_str(t.prompt_text());
        }
        Characterization::Psychometric(v) => {
            system_text.push_str("\n\nYour personality: ");
            system_text.push_str(v.prompt_text());
        }
        Characterization::None => {}
    }

    DecisionPrompt {
        agent: agent.id.clone(),
        iteration: now,
        system_text,
        feedback_section: feedback_section(agent, memory, store),
        activity_section: memory.am_summary(now),
        feed: feed.to_vec(),
        actions: permitted_actions(feed.is_empty()),
    }
}

fn feedback_section(agent: &AgentProfile, memory: &MemoryUnit, store: &ContentStore) -> String {
    let mut ids: Vec<ContentId> = memory.stm.keys().chain(memory.ltm.keys()).copied().collect();
    ids.sort();
    ids.dedup();
    let mut lines = Vec::new();
    for id in ids {
        let Some(item) = store.get(id) else { continue };
        if item.author != agent.id {
            continue;
        }
        let c = item.counters;
        let what = if item.is_original() { "post" } else { "re-share" };
        lines.push(format!(
            "Your {what} [{id}] received {} re-shares, {} likes, {} dislikes and {} comments.",
            c.reshares, c.likes, c.dislikes, c.comments
        ));
        for (who, text) in item.comments.iter().rev().take(3).rev() {
            lines.push(format!("  {who} commented: {text}"));
        }
    }
    if lines.is_empty() {
        "No feedback on your content yet.".to_string()
    } else {
        lines.join("\n")
    }
}

impl DecisionPrompt {
    pub fn feed_contains(&self, id: ContentId) -> bool {
        self.feed.iter().any(|f| f.content_id == id)
    }

    pub fn feed_has_author(&self, author: &AgentId) -> bool {
        self.feed.iter().any(|f| &f.author == author)
    }

    pub fn permits(&self, kind: ActionKind) -> bool {
        self.actions.contains(&kind)
    }

    /// All sections after the system text, concatenated into the user turn.
    pub fn user_message(&self) -> String {
        let mut s = format!("Iteration {}.\n\n## Feedback on your content\n{}\n\n", self.iteration, self.feedback_section);
        s.push_str(&format!("## Your recent activity\n{}\n\n## Your feed\n", self.activity_section.trim_end()));
        if self.feed.is_empty() {
            s.push_str("Your feed is empty.\n");
        }
        for f in &self.feed {
            let tag = if f.is_reshare { " (re-share)" } else { "" };
            s.push_str(&format!("[{}] by {}{} on {}: {}\n", f.content_id, f.author, tag, f.topic, f.text));
        }
        let actions: Vec<String> = self.actions.iter().map(|a| a.as_str().to_uppercase()).collect();
        s.push_str(&format!("\n## Available actions\n{}\n\n## Response format\n{RESPONSE_FORMAT}\n", actions.join(", ")));
        s
    }
}
