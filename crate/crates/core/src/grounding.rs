//! Empirical pipeline: platform records to engagement graph, ego network,
//! empirical action vectors, nearest-archetype traits and a seeded world.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use chrono::DateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{EngineError, SimulationConfig, World};
use crate::model::{
    ActionDistribution, AgentId, AgentProfile, ArchetypeTable, BehavioralTrait, Characterization, Topic,
};
use crate::networks::WeightedDigraph;
use crate::reasoning::{BackendError, ChatMessage, CompletionBackend};

pub const DAY_SECONDS: i64 = 86_400;
pub const PLACEHOLDER_IDENTITY: &str = "A general-interest user of the platform.";
/// Character budget for the post history sent to the profiling prompt.
pub const IDENTITY_BUDGET: usize = 8_000;
/// Distances closer than this count as tied.
pub const TIE_EPSILON: f64 = 1e-12;

const PROFILING_PROMPT: &str = "Below are posts written by one social media user. Describe this user in a short \
paragraph written in the second person (\"You are ...\"): their personality, interests and the topics they care \
about. Do not quote the posts.";

#[derive(Debug, Error)]
pub enum GroundingError {
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
    #[error("line {line}: {message}")]
    Follow { line: usize, message: String },
    #[error("graph is empty")]
    EmptyGraph,
    #[error("cap must be at least 1")]
    Cap,
    #[error("zero observation slots")]
    NoSlots,
    #[error("record at {timestamp} is outside the observation window")]
    OutsideWindow { timestamp: i64 },
    #[error("user sets differ: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlatformKind {
    Post,
    #[serde(alias = "retweet", alias = "repost")]
    Reshare,
    Like,
    Dislike,
    #[serde(alias = "reply")]
    Comment,
}

impl PlatformKind {
    /// Slot in the (post, reshare, interact, inactive) vector.
    pub fn slot(self) -> usize {
        match self {
            PlatformKind::Post => 0,
            PlatformKind::Reshare => 1,
            PlatformKind::Like | PlatformKind::Dislike | PlatformKind::Comment => 2,
        }
    }

    pub fn is_engagement(self) -> bool {
        self != PlatformKind::Post
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawTime {
    Epoch(i64),
    Text(String),
}

fn parse_time(raw: RawTime) -> Result<i64, String> {
    match raw {
        RawTime::Epoch(s) => Ok(s),
        RawTime::Text(t) => {
            if let Ok(s) = t.trim().parse::<i64>() {
                return Ok(s);
            }
            DateTime::parse_from_rfc3339(t.trim()).map(|d| d.timestamp()).map_err(|e| format!("bad timestamp `{t}`: {e}"))
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    user: String,
    kind: PlatformKind,
    #[serde(default)]
    target_user: Option<String>,
    timestamp: RawTime,
    #[serde(default)]
    text: Option<String>,
}

/// One exported platform event. `timestamp` is in Unix seconds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlatformRecord {
    pub user: String,
    pub kind: PlatformKind,
    pub target_user: Option<String>,
    pub timestamp: i64,
    pub text: Option<String>,
}

impl PlatformRecord {
    pub fn validate(&self) -> Result<(), String> {
        if self.user.trim().is_empty() {
            return Err("empty user".into());
        }
        if self.kind.is_engagement() && self.target_user.as_deref().is_none_or(|t| t.trim().is_empty()) {
            return Err(format!("{:?} record without target_user", self.kind).to_lowercase());
        }
        if self.kind == PlatformKind::Post && self.text.is_none() {
            return Err("post record without text".into());
        }
        Ok(())
    }
}

/// serde_json appends "at line 1 column N"; on a single line only the column means anything.
fn json_message(e: &serde_json::Error) -> String {
    let s = e.to_string();
    match s.rfind(" at line ") {
        Some(i) => format!("{} (column {})", &s[..i], e.column()),
        None => s,
    }
}

/// Parse line-delimited JSON records. Blank lines are skipped; errors
/// cite the 1-based line number.
pub fn parse_records(text: &str) -> Result<Vec<PlatformRecord>, GroundingError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| GroundingError::Record { line: line_no, message };
        let raw: RawRecord = serde_json::from_str(line).map_err(|e| err(json_message(&e)))?;
        let rec = PlatformRecord {
            user: raw.user,
            kind: raw.kind,
            target_user: raw.target_user,
            timestamp: parse_time(raw.timestamp).map_err(err)?,
            text: raw.text,
        };
        rec.validate().map_err(err)?;
        out.push(rec);
    }
    Ok(out)
}

/// Parse `follower,followee` CSV. A header row naming those columns is
/// optional.
pub fn parse_follows(text: &str) -> Result<Vec<(String, String)>, GroundingError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| GroundingError::Follow { line: i + 1, message: e.to_string() })?;
        let line = row.position().map_or(i + 1, |p| p.line() as usize);
        if row.len() != 2 {
            return Err(GroundingError::Follow { line, message: format!("expected 2 fields, found {}", row.len()) });
        }
        let (a, b) = (&row[0], &row[1]);
        if out.is_empty() && a.eq_ignore_ascii_case("follower") && b.eq_ignore_ascii_case("followee") {
            continue;
        }
        if a.is_empty() || b.is_empty() {
            return Err(GroundingError::Follow { line, message: "empty user id".into() });
        }
        out.push((a.to_string(), b.to_string()));
    }
    Ok(out)
}

/// Users as nodes; edge u -> v counts u's engagements with v's content.
pub fn build_engagement_graph(records: &[PlatformRecord]) -> Result<WeightedDigraph, GroundingError> {
    let mut g = WeightedDigraph::new();
    for (i, r) in records.iter().enumerate() {
        r.validate().map_err(|message| GroundingError::Record { line: i + 1, message })?;
        g.add_node(AgentId(r.user.clone()));
        if r.kind.is_engagement() {
            let target = r.target_user.clone().expect("validated");
            g.add_edge(AgentId(r.user.clone()), AgentId(target), 1);
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EgoNetwork {
    pub ego: AgentId,
    pub graph: WeightedDigraph,
}

/// Two-hop ego network around the node of highest weighted degree, keeping
/// at most `cap` neighbours (highest degree first, ties by id).
pub fn extract_ego_network(graph: &WeightedDigraph, cap: usize) -> Result<EgoNetwork, GroundingError> {
    if cap < 1 {
        return Err(GroundingError::Cap);
    }
    if graph.nodes.is_empty() {
        return Err(GroundingError::EmptyGraph);
    }
    let degree = graph.total_degree();
    let ego = degree
        .iter()
        .max_by(|(a, da), (b, db)| da.cmp(db).then(b.cmp(a)))
        .map(|(id, _)| id.clone())
        .expect("non-empty");
    Ok(ego_network_around(graph, &ego, cap, &degree))
}

pub(crate) fn ego_network_around(
    graph: &WeightedDigraph,
    ego: &AgentId,
    cap: usize,
    degree: &BTreeMap<AgentId, u64>,
) -> EgoNetwork {
    let adj = graph.undirected_adjacency();
    let mut depth: BTreeMap<&AgentId, u8> = BTreeMap::new();
    depth.insert(ego, 0);
    let mut queue = VecDeque::from([ego]);
    while let Some(u) = queue.pop_front() {
        let d = depth[u];
        if d == 2 {
            continue;
        }
        for v in adj.get(u).into_iter().flatten() {
            if !depth.contains_key(v) {
                depth.insert(v, d + 1);
                queue.push_back(v);
            }
        }
    }
    let mut neighbours: Vec<&AgentId> = depth.keys().copied().filter(|n| *n != ego).collect();
    if neighbours.len() > cap {
        neighbours.sort_by(|a, b| degree[*b].cmp(&degree[*a]).then(a.cmp(b)));
        neighbours.truncate(cap);
    }
    let mut keep: BTreeSet<AgentId> = neighbours.into_iter().cloned().collect();
    keep.insert(ego.clone());
    EgoNetwork { ego: ego.clone(), graph: graph.induced(&keep) }
}

/// Fixed-width time slots covering an observation window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotGrid {
    pub start: i64,
    pub width: i64,
    pub count: usize,
}

impl SlotGrid {
    /// Smallest aligned grid of `width`-second slots spanning all records.
    pub fn spanning(records: &[PlatformRecord], width: i64) -> Option<SlotGrid> {
        let lo = records.iter().map(|r| r.timestamp).min()?;
        let hi = records.iter().map(|r| r.timestamp).max()?;
        let first = lo.div_euclid(width);
        let last = hi.div_euclid(width);
        Some(SlotGrid { start: first * width, width, count: (last - first + 1) as usize })
    }

    pub fn slot_of(&self, timestamp: i64) -> Option<usize> {
        let off = timestamp - self.start;
        if off < 0 {
            return None;
        }
        let s = (off / self.width) as usize;
        (s < self.count).then_some(s)
    }
}

/// Each slot contributes its dominant category (ties: post, then
/// re-share, then interact); slots without records count as inactive.
pub fn empirical_action_vector(records: &[&PlatformRecord], grid: &SlotGrid) -> Result<ActionDistribution, GroundingError> {
    if grid.count == 0 || grid.width <= 0 {
        return Err(GroundingError::NoSlots);
    }
    let mut per_slot: BTreeMap<usize, [usize; 3]> = BTreeMap::new();
    for r in records {
        let s = grid.slot_of(r.timestamp).ok_or(GroundingError::OutsideWindow { timestamp: r.timestamp })?;
        per_slot.entry(s).or_default()[r.kind.slot()] += 1;
    }
    let mut counts = [0usize; 4];
    for c in per_slot.values() {
        let best = (0..3).max_by(|a, b| c[*a].cmp(&c[*b]).then(b.cmp(a))).expect("three categories");
        counts[best] += 1;
    }
    counts[3] = grid.count - per_slot.len();
    let v = counts.map(|c| c as f64 / grid.count as f64);
    Ok(ActionDistribution { post: v[0], reshare: v[1], interact: v[2], inactive: v[3] })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraitMatch {
    pub assigned: BehavioralTrait,
    pub distance: f64,
}

/// Nearest archetype by Euclidean distance; near-ties go to the earlier
/// trait in canonical order.
pub fn assign_trait(vector: &ActionDistribution, archetypes: &ArchetypeTable) -> TraitMatch {
    let mut best: Option<TraitMatch> = None;
    for (t, row) in archetypes.iter() {
        let d = vector.distance(row);
        if best.is_none_or(|b| d < b.distance - TIE_EPSILON) {
            best = Some(TraitMatch { assigned: t, distance: d });
        }
    }
    best.expect("seven archetypes")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitAssignment {
    pub user: String,
    pub vector: ActionDistribution,
    pub assigned: BehavioralTrait,
    pub distance: f64,
}

/// Vectors and traits for every user in `users`, using a grid spanning all
/// of `records`.
pub fn assign_users(
    records: &[PlatformRecord],
    users: &BTreeSet<String>,
    slot_width: i64,
    archetypes: &ArchetypeTable,
) -> Result<Vec<TraitAssignment>, GroundingError> {
    let grid = SlotGrid::spanning(records, slot_width).ok_or(GroundingError::NoSlots)?;
    let mut by_user: BTreeMap<&str, Vec<&PlatformRecord>> = BTreeMap::new();
    for r in records {
        by_user.entry(r.user.as_str()).or_default().push(r);
    }
    users
        .iter()
        .map(|u| {
            let recs = by_user.get(u.as_str()).map(Vec::as_slice).unwrap_or(&[]);
            let vector = empirical_action_vector(recs, &grid)?;
            let m = assign_trait(&vector, archetypes);
            Ok(TraitAssignment { user: u.clone(), vector, assigned: m.assigned, distance: m.distance })
        })
        .collect()
}

/// Prompt text sent for profiling; the post history is cut at `budget`
/// characters.
pub fn identity_request(posts: &[&str], budget: usize) -> Vec<ChatMessage> {
    let mut history = String::new();
    for p in posts {
        let line = format!("- {}\n", p.trim());
        if history.chars().count() + line.chars().count() > budget {
            let room = budget.saturating_sub(history.chars().count());
            history.extend(line.chars().take(room));
            break;
        }
        history.push_str(&line);
    }
    vec![ChatMessage::system(PROFILING_PROMPT), ChatMessage::user(history)]
}

/// Describe a user from their original posts with one backend call.
/// Users without posts get [`PLACEHOLDER_IDENTITY`] and no call is made.
pub fn infer_identity(posts: &[&str], backend: &dyn CompletionBackend) -> Result<String, BackendError> {
    if posts.is_empty() {
        return Ok(PLACEHOLDER_IDENTITY.to_string());
    }
    let answer = backend.complete(&identity_request(posts, IDENTITY_BUDGET))?;
    let answer = answer.trim();
    Ok(if answer.is_empty() { PLACEHOLDER_IDENTITY.to_string() } else { answer.to_string() })
}

/// One agent per assigned user with empirical follow edges preloaded.
/// Edges touching users outside the set, and self-follows, are dropped.
pub fn init_from_empirical(
    assignments: &[TraitAssignment],
    identities: &BTreeMap<String, String>,
    follows: &[(String, String)],
    topic: &Topic,
    config: &SimulationConfig,
) -> Result<World, GroundingError> {
    let users: BTreeSet<&String> = assignments.iter().map(|a| &a.user).collect();
    let known: BTreeSet<&String> = identities.keys().collect();
    if users != known {
        let missing: Vec<_> = users.symmetric_difference(&known).take(5).map(|s| s.as_str()).collect();
        return Err(GroundingError::Mismatch(missing.join(", ")));
    }
    let mut following: BTreeMap<&str, BTreeSet<AgentId>> = BTreeMap::new();
    for (a, b) in follows {
        if a != b && users.contains(a) && users.contains(b) {
            following.entry(a.as_str()).or_default().insert(AgentId(b.clone()));
        }
    }
    let agents = assignments
        .iter()
        .map(|a| AgentProfile {
            id: AgentId(a.user.clone()),
            identity_text: identities[&a.user].clone(),
            characterization: Characterization::Behavioral(a.assigned),
            topic: topic.clone(),
            following: following.remove(a.user.as_str()).unwrap_or_default(),
        })
        .collect();
    Ok(World::new(agents, config)?)
}
