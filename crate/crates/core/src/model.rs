//! Domain types shared by every subsystem: agent profiles, behavioral
//! traits, actions, content items and the archetype table.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used when checking that a probability vector sums to one.
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown behavioral trait code `{0}`")]
    UnknownTrait(String),
    #[error("unknown psychometric variant code `{0}`")]
    UnknownVariant(String),
    #[error("unknown action kind `{0}`")]
    UnknownActionKind(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("line {line}: {message}")]
    Asset { line: usize, message: String },
}

/// Opaque agent identifier. Ordering is lexicographic and is used for
/// every deterministic traversal in the crate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub String);

impl AgentId {
    pub fn new(id: impl Into<String>) -> Self {
        AgentId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AgentId {
    fn from(s: &str) -> Self {
        AgentId(s.to_string())
    }
}

/// Content identifiers are assigned monotonically within one simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ContentId(pub u64);

impl fmt::Display for ContentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The seven behavioral archetypes. Declaration order is the canonical
/// order used for tie-breaking (SO < OS < OE < BP < CA < PC < IE).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BehavioralTrait {
    #[serde(rename = "SO")]
    SilentObserver,
    #[serde(rename = "OS")]
    OccasionalSharer,
    #[serde(rename = "OE")]
    OccasionalEngager,
    #[serde(rename = "BP")]
    BalancedParticipant,
    #[serde(rename = "CA")]
    ContentAmplifier,
    #[serde(rename = "PC")]
    ProactiveContributor,
    #[serde(rename = "IE")]
    InteractiveEnthusiast,
}

impl BehavioralTrait {
    pub const ALL: [BehavioralTrait; 7] = [
        BehavioralTrait::SilentObserver,
        BehavioralTrait::OccasionalSharer,
        BehavioralTrait::OccasionalEngager,
        BehavioralTrait::BalancedParticipant,
        BehavioralTrait::ContentAmplifier,
        BehavioralTrait::ProactiveContributor,
        BehavioralTrait::InteractiveEnthusiast,
    ];

    pub fn code(self) -> &'static str {
        match self {
            BehavioralTrait::SilentObserver => "SO",
            BehavioralTrait::OccasionalSharer => "OS",
            BehavioralTrait::OccasionalEngager => "OE",
            BehavioralTrait::BalancedParticipant => "BP",
            BehavioralTrait::ContentAmplifier => "CA",
            BehavioralTrait::ProactiveContributor => "PC",
            BehavioralTrait::InteractiveEnthusiast => "IE",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            BehavioralTrait::SilentObserver => "Silent Observer",
            BehavioralTrait::OccasionalSharer => "Occasional Sharer",
            BehavioralTrait::OccasionalEngager => "Occasional Engager",
            BehavioralTrait::BalancedParticipant => "Balanced Participant",
            BehavioralTrait::ContentAmplifier => "Content Amplifier",
            BehavioralTrait::ProactiveContributor => "Proactive Contributor",
            BehavioralTrait::InteractiveEnthusiast => "Interactive Enthusiast",
        }
    }

    /// System-prompt instruction embedded for agents carrying this trait.
    pub fn prompt_text(self) -> &'static str {
        match self {
            BehavioralTrait::BalancedParticipant => "You are a Balanced Participant. In each cycle, mix original tweets, retweets, and occasional likes or dislikes, or comments. Maintain a steady, balanced level of engagement. Contribute regularly with your own posts, amplify others via retweets, and use reactions or comments when appropriate.",
            BehavioralTrait::ContentAmplifier => "You are a Content Amplifier. Spend most of your time sharing others\u{2019} posts and reacting to them with likes, dislikes or comments. Posting new content is secondary. Your main task is to retweet frequently and support others with likes, dislikes or comments.",
            BehavioralTrait::InteractiveEnthusiast => "You are an Interactive Enthusiast. Your primary mode of participation is reactive: comment extensively, like or dislike content regularly. Posting or sharing happens only occasionally. Engage deeply through comments, likes, and dislikes.",
            BehavioralTrait::OccasionalEngager => "You are an Occasional Engager. Your engagement is limited to minimal reactions. Occasionally like, dislike, or comment on posts that catch your eye. Do not retweet or write original tweets.",
            BehavioralTrait::OccasionalSharer => "You are an Occasional Sharer. Stay mostly silent and inactive. Only retweet content that clearly aligns with your interests; refrain from liking, disliking, commenting, or posting original content.",
            BehavioralTrait::ProactiveContributor => "You are a Proactive Contributor. Lead the conversation with your own original tweets. You occasionally engage with others through comments, likes, or dislikes, but you tend to avoid retweets. Prioritize expressing your own ideas and perspectives.",
            BehavioralTrait::SilentObserver => "You are a Silent Observer. Do not post, share, like, dislike, or comment under any normal circumstance. Your only job is to watch and absorb without leaving any trace. Remain invisible in the conversation. Avoid all posting, sharing, or reacting unless there is a strong external trigger.",
        }
    }
}

impl fmt::Display for BehavioralTrait {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for BehavioralTrait {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BehavioralTrait::ALL
            .into_iter()
            .find(|t| t.code().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ModelError::UnknownTrait(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OceanFactor {
    #[serde(rename = "O")]
    Openness,
    #[serde(rename = "C")]
    Conscientiousness,
    #[serde(rename = "E")]
    Extraversion,
    #[serde(rename = "A")]
    Agreeableness,
    #[serde(rename = "N")]
    Neuroticism,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OceanLevel {
    High,
    Low,
}

/// One high or low pole of an OCEAN factor, e.g. `EL` for low extraversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PsychometricVariant {
    pub factor: OceanFactor,
    pub level: OceanLevel,
}

const OCEAN_PROMPTS: &str = include_str!("../assets/ocean_prompts.tsv");

impl PsychometricVariant {
    pub const ALL: [PsychometricVariant; 10] = {
        use OceanFactor::*;
        use OceanLevel::*;
        [
            PsychometricVariant { factor: Openness, level: High },
            PsychometricVariant { factor: Openness, level: Low },
            PsychometricVariant { factor: Conscientiousness, level: High },
            PsychometricVariant { factor: Conscientiousness, level: Low },
            PsychometricVariant { factor: Extraversion, level: High },
            PsychometricVariant { factor: Extraversion, level: Low },
            PsychometricVariant { factor: Agreeableness, level: High },
            PsychometricVariant { factor: Agreeableness, level: Low },
            PsychometricVariant { factor: Neuroticism, level: High },
            PsychometricVariant { factor: Neuroticism, level: Low },
        ]
    };

    pub fn code(self) -> String {
        let f = match self.factor {
            OceanFactor::Openness => 'O',
            OceanFactor::Conscientiousness => 'C',
            OceanFactor::Extraversion => 'E',
            OceanFactor::Agreeableness => 'A',
            OceanFactor::Neuroticism => 'N',
        };
        let l = match self.level {
            OceanLevel::High => 'H',
            OceanLevel::Low => 'L',
        };
        format!("{f}{l}")
    }

    pub fn prompt_text(self) -> &'static str {
        let code = self.code();
        OCEAN_PROMPTS
            .lines()
            .filter(|l| !l.starts_with('#'))
            .filter_map(|l| l.split_once('\t'))
            .find(|(c, _)| *c == code)
            .map(|(_, p)| p.trim())
            .expect("bundled OCEAN prompt asset covers every variant")
    }
}

impl fmt::Display for PsychometricVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

impl FromStr for PsychometricVariant {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PsychometricVariant::ALL
            .into_iter()
            .find(|v| v.code().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ModelError::UnknownVariant(s.to_string()))
    }
}

impl Serialize for PsychometricVariant {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.code())
    }
}

impl<'de> Deserialize<'de> for PsychometricVariant {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The behavioral layer attached to an agent; which variant is used depends
/// on the simulation configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "layer", content = "code", rename_all = "snake_case")]
pub enum Characterization {
    Behavioral(BehavioralTrait),
    Psychometric(PsychometricVariant),
    None,
}

impl Characterization {
    pub fn behavioral(&self) -> Option<BehavioralTrait> {
        match self {
            Characterization::Behavioral(t) => Some(*t),
            _ => None,
        }
    }

    /// Short label used in CSV outputs (`SO`, `EL`, `NONE`).
    pub fn label(&self) -> String {
        match self {
            Characterization::Behavioral(t) => t.code().to_string(),
            Characterization::Psychometric(v) => v.code(),
            Characterization::None => "NONE".to_string(),
        }
    }

    pub fn from_label(label: &str) -> Result<Self, ModelError> {
        let label = label.trim();
        if label.eq_ignore_ascii_case("none") || label.is_empty() {
            return Ok(Characterization::None);
        }
        if let Ok(t) = label.parse::<BehavioralTrait>() {
            return Ok(Characterization::Behavioral(t));
        }
        label.parse::<PsychometricVariant>().map(Characterization::Psychometric)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Topic {
    Healthcare,
    Technology,
    Religion,
    Music,
    /// Free-text topic, e.g. inferred from an empirical user's posts.
    Other(String),
}

impl Topic {
    pub const SYNTHETIC: [Topic; 4] = [Topic::Healthcare, Topic::Technology, Topic::Religion, Topic::Music];

    pub fn as_str(&self) -> &str {
        match self {
            Topic::Healthcare => "Healthcare",
            Topic::Technology => "Technology",
            Topic::Religion => "Religion",
            Topic::Music => "Music",
            Topic::Other(s) => s,
        }
    }
}

impl fmt::Display for Topic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<&str> for Topic {
    fn from(s: &str) -> Self {
        let s = s.trim();
        Topic::SYNTHETIC
            .iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .cloned()
            .unwrap_or_else(|| Topic::Other(s.to_string()))
    }
}

impl Serialize for Topic {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Topic {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(Topic::from(s.as_str()))
    }
}

/// Identity, behavioral layer, topic and outgoing follow links of one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub id: AgentId,
    pub identity_text: String,
    pub characterization: Characterization,
    pub topic: Topic,
    #[serde(default)]
    pub following: BTreeSet<AgentId>,
}

impl AgentProfile {
    pub fn behavioral_trait(&self) -> Option<BehavioralTrait> {
        self.characterization.behavioral()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Post,
    #[serde(rename = "reshare")]
    ReShare,
    Like,
    Dislike,
    Comment,
    Follow,
    Inactive,
}

impl ActionKind {
    pub const ALL: [ActionKind; 7] = [
        ActionKind::Post,
        ActionKind::ReShare,
        ActionKind::Like,
        ActionKind::Dislike,
        ActionKind::Comment,
        ActionKind::Follow,
        ActionKind::Inactive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActionKind::Post => "post",
            ActionKind::ReShare => "reshare",
            ActionKind::Like => "like",
            ActionKind::Dislike => "dislike",
            ActionKind::Comment => "comment",
            ActionKind::Follow => "follow",
            ActionKind::Inactive => "inactive",
        }
    }

    /// Engagements are the kinds that target an existing content item.
    pub fn is_engagement(self) -> bool {
        matches!(self, ActionKind::ReShare | ActionKind::Like | ActionKind::Dislike | ActionKind::Comment)
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ActionKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match norm.as_str() {
            "post" | "tweet" => ActionKind::Post,
            "reshare" | "retweet" | "share" | "repost" => ActionKind::ReShare,
            "like" => ActionKind::Like,
            "dislike" => ActionKind::Dislike,
            "comment" | "reply" => ActionKind::Comment,
            "follow" => ActionKind::Follow,
            "inactive" | "none" | "idle" => ActionKind::Inactive,
            _ => return Err(ModelError::UnknownActionKind(s.to_string())),
        })
    }
}

/// A platform action. The shape constraints (payload for posts and
/// comments, content target for engagements, agent target for follows)
/// are encoded in the variants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    Post { text: String },
    #[serde(rename = "reshare")]
    ReShare { target: ContentId },
    Like { target: ContentId },
    Dislike { target: ContentId },
    Comment { target: ContentId, text: String },
    Follow { target: AgentId },
    Inactive,
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        match self {
            Action::Post { .. } => ActionKind::Post,
            Action::ReShare { .. } => ActionKind::ReShare,
            Action::Like { .. } => ActionKind::Like,
            Action::Dislike { .. } => ActionKind::Dislike,
            Action::Comment { .. } => ActionKind::Comment,
            Action::Follow { .. } => ActionKind::Follow,
            Action::Inactive => ActionKind::Inactive,
        }
    }

    pub fn content_target(&self) -> Option<ContentId> {
        match self {
            Action::ReShare { target }
            | Action::Like { target }
            | Action::Dislike { target }
            | Action::Comment { target, .. } => Some(*target),
            _ => None,
        }
    }

    pub fn agent_target(&self) -> Option<&AgentId> {
        match self {
            Action::Follow { target } => Some(target),
            _ => None,
        }
    }

    pub fn payload(&self) -> Option<&str> {
        match self {
            Action::Post { text } | Action::Comment { text, .. } => Some(text),
            _ => None,
        }
    }
}

/// The four behavioral categories of the action-probability space, plus
/// `Excluded` for follows, which never enter behavioral vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionCategory {
    Post,
    Reshare,
    Interact,
    Inactive,
    Excluded,
}

impl ActionCategory {
    pub const BEHAVIORAL: [ActionCategory; 4] =
        [ActionCategory::Post, ActionCategory::Reshare, ActionCategory::Interact, ActionCategory::Inactive];

    /// Position within a 4-D distribution vector, `None` for `Excluded`.
    pub fn slot(self) -> Option<usize> {
        match self {
            ActionCategory::Post => Some(0),
            ActionCategory::Reshare => Some(1),
            ActionCategory::Interact => Some(2),
            ActionCategory::Inactive => Some(3),
            ActionCategory::Excluded => None,
        }
    }
}

pub fn action_category(kind: ActionKind) -> ActionCategory {
    match kind {
        ActionKind::Post => ActionCategory::Post,
        ActionKind::ReShare => ActionCategory::Reshare,
        ActionKind::Like | ActionKind::Dislike | ActionKind::Comment => ActionCategory::Interact,
        ActionKind::Inactive => ActionCategory::Inactive,
        ActionKind::Follow => ActionCategory::Excluded,
    }
}

/// Probability vector over (post, re-share, interact, inactive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionDistribution {
    pub post: f64,
    pub reshare: f64,
    pub interact: f64,
    pub inactive: f64,
}

impl ActionDistribution {
    pub fn new(post: f64, reshare: f64, interact: f64, inactive: f64) -> Result<Self, ModelError> {
        let d = ActionDistribution { post, reshare, interact, inactive };
        d.validate()?;
        Ok(d)
    }

    pub fn from_array(a: [f64; 4]) -> Result<Self, ModelError> {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, p) in ["post", "reshare", "interact", "inactive"].iter().zip(self.as_array()) {
            if !(0.0..=1.0).contains(&p) {
                return Err(ModelError::InvalidDistribution(format!("{name} = {p} outside [0, 1]")));
            }
        }
        let sum = self.sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(ModelError::InvalidDistribution(format!("components sum to {sum}")));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.post, self.reshare, self.interact, self.inactive]
    }

    pub fn sum(&self) -> f64 {
        self.as_array().iter().sum()
    }

    pub fn get(&self, category: ActionCategory) -> f64 {
        category.slot().map_or(0.0, |i| self.as_array()[i])
    }

    pub fn distance(&self, other: &ActionDistribution) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Restrict to the feasible categories and renormalize. Returns `None`
    /// when no feasible category has positive mass.
    pub fn masked(&self, feasible: [bool; 4]) -> Option<[f64; 4]> {
        let mut a = self.as_array();
        for (p, ok) in a.iter_mut().zip(feasible) {
            if !ok {
                *p = 0.0;
            }
        }
        let total: f64 = a.iter().sum();
        if total <= 0.0 {
            return None;
        }
        a.iter_mut().for_each(|p| *p /= total);
        Some(a)
    }
}

/// Non-negative engagement counters attached to every content item.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub reshares: u64,
    pub likes: u64,
    pub dislikes: u64,
    pub comments: u64,
}

/// An original post (`parent == None`) or a re-share node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentItem {
    #[serde(rename = "content_id", alias = "id")]
    pub id: ContentId,
    pub author: AgentId,
    pub iteration: u32,
    pub text: String,
    pub topic: Topic,
    pub parent: Option<ContentId>,
    pub root: ContentId,
    #[serde(default)]
    pub counters: Counters,
    #[serde(default)]
    pub comments: Vec<(AgentId, String)>,
    /// Iteration of creation or of the most recent engagement received.
    #[serde(default)]
    pub last_activity: u32,
}

impl ContentItem {
    pub fn is_original(&self) -> bool {
        self.parent.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngagementOrder {
    FirstOrder,
    SecondOrder,
    NotApplicable,
}

/// One logged (agent, iteration, action) event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub iteration: u32,
    pub agent: AgentId,
    pub action: Action,
    pub order: EngagementOrder,
    pub reason: String,
}

/// Canonical action distribution per behavioral trait, indexed by
/// `BehavioralTrait::index()`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchetypeTable {
    rows: [ActionDistribution; 7],
}

const DEFAULT_ARCHETYPES: &str = include_str!("../assets/archetypes.tsv");

impl ArchetypeTable {
    pub fn get(&self, t: BehavioralTrait) -> &ActionDistribution {
        &self.rows[t.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (BehavioralTrait, &ActionDistribution)> {
        BehavioralTrait::ALL.into_iter().zip(self.rows.iter())
    }

    /// Parse the whitespace-separated asset format:
    /// `trait p_post p_reshare p_interact p_inactive`, `#` comments allowed.
    /// Every trait must appear exactly once.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let mut rows: [Option<ActionDistribution>; 7] = [None; 7];
        for (lineno, trait_code, dist) in parse_distribution_rows(text)? {
            let t: BehavioralTrait = trait_code
                .parse()
                .map_err(|e: ModelError| ModelError::Asset { line: lineno, message: e.to_string() })?;
            if rows[t.index()].replace(dist).is_some() {
                return Err(ModelError::Asset { line: lineno, message: format!("duplicate row for {t}") });
            }
        }
        let mut out = [ActionDistribution { post: 0.0, reshare: 0.0, interact: 0.0, inactive: 0.0 }; 7];
        for t in BehavioralTrait::ALL {
            out[t.index()] = rows[t.index()].ok_or(ModelError::Asset {
                line: 0,
                message: format!("missing row for {t}"),
            })?;
        }
        Ok(ArchetypeTable { rows: out })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# trait\tp_post\tp_reshare\tp_interact\tp_inactive\n");
        for (t, d) in self.iter() {
            s.push_str(&format!("{}\t{}\t{}\t{}\t{}\n", t, d.post, d.reshare, d.interact, d.inactive));
        }
        s
    }
}

impl Default for ArchetypeTable {
    fn default() -> Self {
        ArchetypeTable::parse(DEFAULT_ARCHETYPES).expect("bundled archetype asset is valid")
    }
}

/// The bundled archetype table.
pub fn archetype_table() -> ArchetypeTable {
    ArchetypeTable::default()
}

/// Shared row parser for the distribution asset files.
pub(crate) fn parse_distribution_rows(text: &str) -> Result<Vec<(usize, String, ActionDistribution)>, ModelError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(ModelError::Asset {
                line: lineno,
                message: format!("expected 5 fields, found {}", fields.len()),
            });
        }
        let mut p = [0.0; 4];
        for (slot, f) in p.iter_mut().zip(&fields[1..]) {
            *slot = f.parse::<f64>().map_err(|e| ModelError::Asset {
                line: lineno,
                message: format!("bad probability `{f}`: {e}"),
            })?;
        }
        let dist = ActionDistribution::from_array(p)
            .map_err(|e| ModelError::Asset { line: lineno, message: e.to_string() })?;
        out.push((lineno, fields[0].to_string(), dist));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn archetype_rows_sum_to_one() {
        for (t, d) in archetype_table().iter() {
            assert!((d.sum() - 1.0).abs() <= SUM_TOLERANCE, "{t}");
        }
    }

    #[test]
    fn reported_archetype_cells() {
        let table = archetype_table();
        let bp = table.get(BehavioralTrait::BalancedParticipant);
        assert!(close(bp.post, 0.5176) && close(bp.reshare, 0.4658));
        assert!((bp.interact - 0.017).abs() < 1e-3 && bp.inactive == 0.0);
        let ca = table.get(BehavioralTrait::ContentAmplifier);
        assert!(close(ca.reshare, 0.7696) && close(ca.interact, 0.2143));
        assert!((ca.post - 0.016).abs() < 1e-3);
        assert_eq!(table.get(BehavioralTrait::ProactiveContributor).as_array(), [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(table.get(BehavioralTrait::SilentObserver).as_array(), [0.0, 0.0, 0.0, 1.0]);
        assert!(close(table.get(BehavioralTrait::OccasionalEngager).interact, 0.761));
        assert!(close(table.get(BehavioralTrait::InteractiveEnthusiast).interact, 0.8667));
    }

    #[test]
    fn categories() {
        assert_eq!(action_category(ActionKind::Like), ActionCategory::Interact);
        assert_eq!(action_category(ActionKind::Dislike), ActionCategory::Interact);
        assert_eq!(action_category(ActionKind::Comment), ActionCategory::Interact);
        assert_eq!(action_category(ActionKind::Inactive), ActionCategory::Inactive);
        assert_eq!(action_category(ActionKind::Post), ActionCategory::Post);
        assert_eq!(action_category(ActionKind::ReShare), ActionCategory::Reshare);
        assert_eq!(action_category(ActionKind::Follow), ActionCategory::Excluded);
        // The behavioral space has exactly four slots; nothing maps to a fifth.
        let slots: BTreeSet<usize> = ActionKind::ALL.iter().filter_map(|k| action_category(*k).slot()).collect();
        assert_eq!(slots, (0..4).collect());
    }

    #[test]
    fn asset_round_trip_and_errors() {
        let t = archetype_table();
        assert_eq!(ArchetypeTable::parse(&t.to_text()).unwrap(), t);
        let missing = "SO 0 0 0 1\n";
        assert!(matches!(ArchetypeTable::parse(missing), Err(ModelError::Asset { .. })));
        let bad = DEFAULT_ARCHETYPES.replace("PC\t1", "PC\t0.9");
        match ArchetypeTable::parse(&bad) {
            Err(ModelError::Asset { line, .. }) => assert!(line > 0),
            other => panic!("expected asset error, got {other:?}"),
        }
        let dup = format!("{DEFAULT_ARCHETYPES}SO 0 0 0 1\n");
        assert!(ArchetypeTable::parse(&dup).is_err());
    }

    #[test]
    fn trait_and_variant_codes_parse() {
        for t in BehavioralTrait::ALL {
            assert_eq!(t.code().parse::<BehavioralTrait>().unwrap(), t);
            assert!(!t.prompt_text().is_empty());
            assert!(t.prompt_text().starts_with("You are a"));
        }
        assert_eq!(PsychometricVariant::ALL.len(), 10);
        let codes: BTreeSet<String> = PsychometricVariant::ALL.iter().map(|v| v.code()).collect();
        assert_eq!(codes.len(), 10);
        for v in PsychometricVariant::ALL {
            assert_eq!(v.code().parse::<PsychometricVariant>().unwrap(), v);
            assert!(!v.prompt_text().is_empty());
        }
        assert_eq!(Characterization::from_label("EL").unwrap().label(), "EL");
        assert_eq!(Characterization::from_label("none").unwrap(), Characterization::None);
    }

    #[test]
    fn distribution_validation() {
        assert!(ActionDistribution::new(0.5, 0.5, 0.0, 0.0).is_ok());
        assert!(ActionDistribution::new(0.5, 0.6, 0.0, 0.0).is_err());
        assert!(ActionDistribution::new(-0.1, 1.1, 0.0, 0.0).is_err());
        let ca = *archetype_table().get(BehavioralTrait::ContentAmplifier);
        let m = ca.masked([true, false, false, true]).unwrap();
        assert_eq!(m, [1.0, 0.0, 0.0, 0.0]);
        let os = *archetype_table().get(BehavioralTrait::OccasionalSharer);
        assert_eq!(os.masked([false, true, false, false]).unwrap(), [0.0, 1.0, 0.0, 0.0]);
        assert!(os.masked([true, false, true, false]).is_none());
    }

    #[test]
    fn action_kind_aliases() {
        assert_eq!("Re-share".parse::<ActionKind>().unwrap(), ActionKind::ReShare);
        assert_eq!("RETWEET".parse::<ActionKind>().unwrap(), ActionKind::ReShare);
        assert!("teleport".parse::<ActionKind>().is_err());
    }
}
