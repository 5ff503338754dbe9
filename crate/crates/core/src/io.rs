//! Line-delimited JSON and CSV readers/writers for run artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{Chain, ChainLengthTable, Clustering, MixPoint, OrderShare, TopicChainStats};
use crate::engine::{EngineError, Persona, World};
use crate::grounding::TraitAssignment;
use crate::memory::MemoryUnit;
use crate::model::{
    Action, ActionDistribution, ActionKind, ActionRecord, AgentId, AgentProfile, ContentId, ContentItem,
    EngagementOrder, Topic,
};
use crate::networks::{GroupSummary, WeightedDigraph};
use crate::store::{ContentStore, StoreError};

/// Bumped whenever an artifact file changes shape.
pub const SCHEMA_VERSION: u32 = 1;

pub const LOG_FILE: &str = "log.jsonl";
pub const CONTENT_FILE: &str = "content.jsonl";
pub const AGENTS_FILE: &str = "agents.jsonl";
pub const MEMORY_FILE: &str = "memory.jsonl";
pub const STATE_FILE: &str = "state.json";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{file}: line {line}: {message}")]
    Line { file: String, line: usize, message: String },
    #[error("{path}: {source}")]
    Fs {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema: {0}")]
    Schema(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub fn read_file(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Fs { path: path.display().to_string(), source })
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), IoError> {
    fs::write(path, contents).map_err(|source| IoError::Fs { path: path.display().to_string(), source })
}

/// Parse one JSON value per non-blank line; errors carry `file` and the
/// 1-based line number.
pub fn parse_jsonl<T: DeserializeOwned>(text: &str, file: &str) -> Result<Vec<T>, IoError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v = serde_json::from_str(line)
            .map_err(|e| IoError::Line { file: file.to_string(), line: i + 1, message: e.to_string() })?;
        out.push(v);
    }
    Ok(out)
}

pub fn to_jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> String {
    let mut s = String::new();
    for item in items {
        s.push_str(&serde_json::to_string(&item).expect("artifact types serialize"));
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LogTarget {
    Content(ContentId),
    Agent(AgentId),
}

/// External action-log record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogLine {
    pub iteration: u32,
    pub agent: AgentId,
    pub kind: ActionKind,
    #[serde(default)]
    pub target: Option<LogTarget>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    pub order: EngagementOrder,
    #[serde(default)]
    pub reason: String,
}

impl From<&ActionRecord> for LogLine {
    fn from(r: &ActionRecord) -> Self {
        let target = r
            .action
            .content_target()
            .map(LogTarget::Content)
            .or_else(|| r.action.agent_target().cloned().map(LogTarget::Agent));
        LogLine {
            iteration: r.iteration,
            agent: r.agent.clone(),
            kind: r.action.kind(),
            target,
            text: r.action.payload().map(str::to_string),
            order: r.order,
            reason: r.reason.clone(),
        }
    }
}

impl TryFrom<LogLine> for ActionRecord {
    type Error = String;

    fn try_from(l: LogLine) -> Result<Self, String> {
        let content = || match &l.target {
            Some(LogTarget::Content(c)) => Ok(*c),
            _ => Err(format!("{} needs a numeric content target", l.kind)),
        };
        let text = || l.text.clone().ok_or_else(|| format!("{} needs text", l.kind));
        let action = match l.kind {
            ActionKind::Post => Action::Post { text: text()? },
            ActionKind::ReShare => Action::ReShare { target: content()? },
            ActionKind::Like => Action::Like { target: content()? },
            ActionKind::Dislike => Action::Dislike { target: content()? },
            ActionKind::Comment => Action::Comment { target: content()?, text: text()? },
            ActionKind::Follow => match &l.target {
                Some(LogTarget::Agent(a)) => Action::Follow { target: a.clone() },
                _ => return Err("follow needs an agent target".into()),
            },
            ActionKind::Inactive => Action::Inactive,
        };
        let expect_order = l.kind.is_engagement();
        if expect_order == (l.order == EngagementOrder::NotApplicable) {
            return Err(format!("order {:?} does not fit {}", l.order, l.kind));
        }
        Ok(ActionRecord { iteration: l.iteration, agent: l.agent, action, order: l.order, reason: l.reason })
    }
}

pub fn log_to_jsonl(log: &[ActionRecord]) -> String {
    to_jsonl(log.iter().map(LogLine::from))
}

pub fn parse_log(text: &str) -> Result<Vec<ActionRecord>, IoError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| IoError::Line { file: LOG_FILE.into(), line: i + 1, message };
        let l: LogLine = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        out.push(ActionRecord::try_from(l).map_err(err)?);
    }
    Ok(out)
}

pub fn content_to_jsonl(store: &ContentStore) -> String {
    to_jsonl(store.iter())
}

pub fn parse_content(text: &str) -> Result<ContentStore, IoError> {
    let items: Vec<ContentItem> = parse_jsonl(text, CONTENT_FILE)?;
    Ok(ContentStore::from_items(items)?)
}

pub fn parse_personas(text: &str) -> Result<Vec<Persona>, IoError> {
    parse_jsonl(text, "personas")
}

pub fn parse_agents(text: &str) -> Result<Vec<AgentProfile>, IoError> {
    parse_jsonl(text, AGENTS_FILE)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MemoryLine {
    agent: AgentId,
    memory: MemoryUnit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointState {
    pub schema_version: u32,
    pub iteration: u32,
}

/// Write the full world into `dir`.
pub fn save_checkpoint(dir: &Path, world: &World) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(|source| IoError::Fs { path: dir.display().to_string(), source })?;
    write_file(&dir.join(AGENTS_FILE), &to_jsonl(&world.agents))?;
    write_file(&dir.join(CONTENT_FILE), &content_to_jsonl(&world.content))?;
    write_file(&dir.join(LOG_FILE), &log_to_jsonl(&world.log))?;
    let mem = world
        .agents
        .iter()
        .zip(&world.memories)
        .map(|(a, m)| MemoryLine { agent: a.id.clone(), memory: m.clone() });
    write_file(&dir.join(MEMORY_FILE), &to_jsonl(mem))?;
    let state = CheckpointState { schema_version: SCHEMA_VERSION, iteration: world.iteration };
    write_file(&dir.join(STATE_FILE), &serde_json::to_string_pretty(&state).expect("serializes"))
}

/// Rebuild a world from the texts of a checkpoint.
pub fn world_from_texts(state: &str, agents: &str, content: &str, log: &str, memory: &str) -> Result<World, IoError> {
    let state: CheckpointState = serde_json::from_str(state).map_err(|e| IoError::Schema(format!("{STATE_FILE}: {e}")))?;
    if state.schema_version != SCHEMA_VERSION {
        return Err(IoError::Schema(format!(
            "checkpoint schema {} but this build reads {SCHEMA_VERSION}",
            state.schema_version
        )));
    }
    let agents = parse_agents(agents)?;
    let mems: Vec<MemoryLine> = parse_jsonl(memory, MEMORY_FILE)?;
    let mut by_agent: BTreeMap<AgentId, MemoryUnit> = BTreeMap::new();
    for m in mems {
        if by_agent.insert(m.agent.clone(), m.memory).is_some() {
            return Err(IoError::Schema(format!("{MEMORY_FILE}: duplicate agent {}", m.agent)));
        }
    }
    let memories = agents
        .iter()
        .map(|a| by_agent.remove(&a.id).ok_or_else(|| IoError::Schema(format!("{MEMORY_FILE}: no memory for {}", a.id))))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(extra) = by_agent.keys().next() {
        return Err(IoError::Schema(format!("{MEMORY_FILE}: memory for unknown agent {extra}")));
    }
    let world = World { agents, memories, content: parse_content(content)?, log: parse_log(log)?, iteration: state.iteration };
    world.validate()?;
    Ok(world)
}

pub fn load_checkpoint(dir: &Path) -> Result<World, IoError> {
    world_from_texts(
        &read_file(&dir.join(STATE_FILE))?,
        &read_file(&dir.join(AGENTS_FILE))?,
        &read_file(&dir.join(CONTENT_FILE))?,
        &read_file(&dir.join(LOG_FILE))?,
        &read_file(&dir.join(MEMORY_FILE))?,
    )
}

fn render<F>(header: &[&str], fill: F) -> String
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<(), csv::Error>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    fill(&mut w).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

fn f(v: f64) -> String {
    format!("{v:.6}")
}

fn label_map(profiles: &[AgentProfile]) -> BTreeMap<&AgentId, String> {
    profiles.iter().map(|p| (&p.id, p.characterization.label())).collect()
}

pub fn chains_csv(chains: &[Chain], profiles: &[AgentProfile]) -> String {
    let labels = label_map(profiles);
    render(&["chain", "root", "topic", "length", "position", "agent", "trait", "content_id"], |w| {
        for (i, c) in chains.iter().enumerate() {
            for n in &c.nodes {
                w.write_record([
                    i.to_string(),
                    c.root.to_string(),
                    c.topic.to_string(),
                    c.length().to_string(),
                    n.position.to_string(),
                    n.agent.to_string(),
                    labels.get(&n.agent).cloned().unwrap_or_default(),
                    n.content_id.to_string(),
                ])?;
            }
        }
        Ok(())
    })
}

pub fn chain_table_csv(table: &ChainLengthTable) -> String {
    render(&["length", "count", "percent"], |w| {
        for r in &table.rows {
            w.write_record([r.length.to_string(), r.count.to_string(), format!("{:.2}", r.percent)])?;
        }
        Ok(())
    })
}

pub fn topic_stats_csv(stats: &BTreeMap<Topic, TopicChainStats>) -> String {
    render(&["topic", "chains", "mean_length", "share_percent"], |w| {
        for (t, s) in stats {
            w.write_record([t.to_string(), s.chains.to_string(), format!("{:.3}", s.mean_length), format!("{:.2}", s.share_percent)])?;
        }
        Ok(())
    })
}

pub fn order_dynamics_csv(rows: &[OrderShare]) -> String {
    render(&["iteration", "first_order", "second_order", "pct_first", "pct_second"], |w| {
        for r in rows {
            w.write_record([
                r.iteration.to_string(),
                r.first_order.to_string(),
                r.second_order.to_string(),
                opt(r.pct_first),
                opt(r.pct_second),
            ])?;
        }
        Ok(())
    })
}

pub fn content_mix_csv(rows: &[MixPoint]) -> String {
    render(&["iteration", "originals", "reshares", "pct_original", "pct_reshared"], |w| {
        for r in rows {
            w.write_record([
                r.iteration.to_string(),
                r.originals.to_string(),
                r.reshares.to_string(),
                opt(r.pct_original),
                opt(r.pct_reshared),
            ])?;
        }
        Ok(())
    })
}

pub fn vectors_csv(vectors: &BTreeMap<AgentId, ActionDistribution>, profiles: &[AgentProfile]) -> String {
    let labels = label_map(profiles);
    render(&["agent", "trait", "p_post", "p_reshare", "p_interact", "p_inactive"], |w| {
        for (a, v) in vectors {
            let [p, r, i, n] = v.as_array();
            w.write_record([a.to_string(), labels.get(a).cloned().unwrap_or_default(), f(p), f(r), f(i), f(n)])?;
        }
        Ok(())
    })
}

/// One row per agent with its cluster; `agents` is aligned with the
/// clustering input.
pub fn clusters_csv(agents: &[AgentId], clustering: &Clustering, profiles: &[AgentProfile]) -> String {
    let labels = label_map(profiles);
    render(&["agent", "trait", "cluster"], |w| {
        for (a, c) in agents.iter().zip(&clustering.assignments) {
            w.write_record([a.to_string(), labels.get(a).cloned().unwrap_or_default(), c.to_string()])?;
        }
        Ok(())
    })
}

pub fn centroids_csv(clustering: &Clustering) -> String {
    let sizes = clustering.sizes();
    render(&["cluster", "size", "p_post", "p_reshare", "p_interact", "p_inactive"], |w| {
        for (i, c) in clustering.centroids.iter().enumerate() {
            w.write_record([i.to_string(), sizes[i].to_string(), f(c[0]), f(c[1]), f(c[2]), f(c[3])])?;
        }
        Ok(())
    })
}

pub fn curve_csv(clustering: &Clustering) -> String {
    render(&["k", "inertia", "silhouette"], |w| {
        for p in &clustering.curve {
            w.write_record([p.k.to_string(), f(p.inertia), f(p.silhouette)])?;
        }
        Ok(())
    })
}

pub fn edges_csv(graph: &WeightedDigraph) -> String {
    render(&["src", "dst", "weight"], |w| {
        for ((s, d), wt) in &graph.edges {
            w.write_record([s.to_string(), d.to_string(), wt.to_string()])?;
        }
        Ok(())
    })
}

pub fn centrality_csv(
    inn: &BTreeMap<AgentId, f64>,
    out: &BTreeMap<AgentId, f64>,
    profiles: &[AgentProfile],
) -> String {
    render(&["agent", "trait", "in", "out"], |w| {
        for p in profiles {
            let i = inn.get(&p.id).copied().unwrap_or(0.0);
            let o = out.get(&p.id).copied().unwrap_or(0.0);
            w.write_record([p.id.to_string(), p.characterization.label(), f(i), f(o)])?;
        }
        Ok(())
    })
}

pub fn group_summary_csv(rows: &[(String, String, String, GroupSummary)]) -> String {
    render(&["network", "direction", "trait", "n", "min", "q1", "median", "q3", "max", "mean"], |w| {
        for (net, dir, t, s) in rows {
            w.write_record([
                net.clone(),
                dir.clone(),
                t.clone(),
                s.n.to_string(),
                f(s.min),
                f(s.q1),
                f(s.median),
                f(s.q3),
                f(s.max),
                f(s.mean),
            ])?;
        }
        Ok(())
    })
}

pub fn assignments_csv(rows: &[TraitAssignment]) -> String {
    render(&["user", "p_post", "p_reshare", "p_interact", "p_inactive", "trait", "distance"], |w| {
        for r in rows {
            let [p, s, i, n] = r.vector.as_array();
            w.write_record([r.user.clone(), f(p), f(s), f(i), f(n), r.assigned.code().to_string(), f(r.distance)])?;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{init_population, run_simulation, synthetic_personas, Configuration, Policy, SimulationConfig};
    use crate::reasoning::StubPolicy;

    fn small_world() -> World {
        let agents = init_population(&synthetic_personas(4), Configuration::FullModel).unwrap();
        let cfg = SimulationConfig { iterations: 6, master_seed: 3, ..SimulationConfig::default() };
        run_simulation(&cfg, agents, Policy::Stub(StubPolicy::default())).unwrap()
    }

    #[test]
    fn log_round_trip() {
        let w = small_world();
        let text = log_to_jsonl(&w.log);
        assert_eq!(parse_log(&text).unwrap(), w.log);
        let first = text.lines().next().unwrap();
        let v: serde_json::Value = serde_json::from_str(first).unwrap();
        for key in ["iteration", "agent", "kind", "target", "order", "reason"] {
            assert!(v.get(key).is_some(), "missing {key} in {first}");
        }
        let follow = ActionRecord {
            iteration: 1,
            agent: AgentId::from("a"),
            action: Action::Follow { target: AgentId::from("b") },
            order: EngagementOrder::NotApplicable,
            reason: "r".into(),
        };
        assert_eq!(parse_log(&log_to_jsonl(std::slice::from_ref(&follow))).unwrap(), vec![follow]);
    }

    #[test]
    fn log_errors_cite_lines() {
        let bad = "{\"iteration\":1,\"agent\":\"a\",\"kind\":\"inactive\",\"order\":\"not_applicable\"}\n\
{\"iteration\":1,\"agent\":\"a\",\"kind\":\"like\",\"order\":\"first_order\"}\n";
        match parse_log(bad).unwrap_err() {
            IoError::Line { line, .. } => assert_eq!(line, 2),
            e => panic!("{e}"),
        }
        let wrong_order = "{\"iteration\":1,\"agent\":\"a\",\"kind\":\"like\",\"target\":3,\"order\":\"not_applicable\"}";
        assert!(parse_log(wrong_order).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let w = small_world();
        let dir = std::env::temp_dir().join(format!("traitsim-ckpt-{}", std::process::id()));
        save_checkpoint(&dir, &w).unwrap();
        let back = load_checkpoint(&dir).unwrap();
        assert_eq!(back, w);
        let content = read_file(&dir.join(CONTENT_FILE)).unwrap();
        assert!(content.lines().next().unwrap().contains("\"content_id\""));
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn csv_headers_on_empty_input() {
        assert_eq!(order_dynamics_csv(&[]), "iteration,first_order,second_order,pct_first,pct_second\n");
        assert_eq!(chain_table_csv(&crate::analytics::chain_length_table(&[])), "length,count,percent\n");
        assert_eq!(edges_csv(&WeightedDigraph::new()), "src,dst,weight\n");
    }
}
