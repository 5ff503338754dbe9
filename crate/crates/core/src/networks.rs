//! Re-sharing and interaction networks and weighted degree centrality.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Action, ActionRecord, AgentId, AgentProfile};
use crate::store::ContentStore;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetworkError {
    #[error("population of {0} is too small for normalized centrality")]
    Population(usize),
    #[error("no profile for agent {0}")]
    MissingProfile(AgentId),
    #[error("log entry {index} targets unknown content {target}")]
    Dangling { index: usize, target: String },
}

/// Directed multigraph collapsed to positive integer edge weights.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedDigraph {
    pub nodes: BTreeSet<AgentId>,
    pub edges: BTreeMap<(AgentId, AgentId), u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    In,
    Out,
}

impl WeightedDigraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: AgentId) {
        self.nodes.insert(id);
    }

    /// Add `w` to the (src, dst) edge. Zero weights are ignored.
    pub fn add_edge(&mut self, src: AgentId, dst: AgentId, w: u64) {
        if w == 0 {
            return;
        }
        self.nodes.insert(src.clone());
        self.nodes.insert(dst.clone());
        *self.edges.entry((src, dst)).or_default() += w;
    }

    pub fn weight(&self, src: &AgentId, dst: &AgentId) -> u64 {
        self.edges.get(&(src.clone(), dst.clone())).copied().unwrap_or(0)
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.values().sum()
    }

    pub fn weighted_degree(&self, direction: Direction) -> BTreeMap<AgentId, u64> {
        let mut out: BTreeMap<AgentId, u64> = self.nodes.iter().map(|n| (n.clone(), 0)).collect();
        for ((s, d), w) in &self.edges {
            let node = match direction {
                Direction::Out => s,
                Direction::In => d,
            };
            *out.entry(node.clone()).or_default() += w;
        }
        out
    }

    /// In plus out weighted degree.
    pub fn total_degree(&self) -> BTreeMap<AgentId, u64> {
        let mut d = self.weighted_degree(Direction::Out);
        for (n, w) in self.weighted_degree(Direction::In) {
            *d.entry(n).or_default() += w;
        }
        d
    }

    /// Undirected neighbour sets (self-loops dropped).
    pub fn undirected_adjacency(&self) -> BTreeMap<AgentId, BTreeSet<AgentId>> {
        let mut adj: BTreeMap<AgentId, BTreeSet<AgentId>> = self.nodes.iter().map(|n| (n.clone(), BTreeSet::new())).collect();
        for (s, d) in self.edges.keys() {
            if s != d {
                adj.entry(s.clone()).or_default().insert(d.clone());
                adj.entry(d.clone()).or_default().insert(s.clone());
            }
        }
        adj
    }

    /// Subgraph induced by `keep`.
    pub fn induced(&self, keep: &BTreeSet<AgentId>) -> WeightedDigraph {
        WeightedDigraph {
            nodes: self.nodes.intersection(keep).cloned().collect(),
            edges: self
                .edges
                .iter()
                .filter(|((s, d), _)| keep.contains(s) && keep.contains(d))
                .map(|(k, w)| (k.clone(), *w))
                .collect(),
        }
    }
}

fn build(
    log: &[ActionRecord],
    store: &ContentStore,
    agents: impl IntoIterator<Item = AgentId>,
    select: impl Fn(&Action) -> bool,
) -> Result<WeightedDigraph, NetworkError> {
    let mut g = WeightedDigraph::new();
    for a in agents {
        g.add_node(a);
    }
    for (index, r) in log.iter().enumerate() {
        if !select(&r.action) {
            continue;
        }
        let target = r.action.content_target().expect("selected kinds carry a content target");
        let item = store.get(target).ok_or(NetworkError::Dangling { index, target: target.to_string() })?;
        g.add_edge(r.agent.clone(), item.author.clone(), 1);
    }
    Ok(g)
}

/// Edge actor -> author of the re-shared item (the immediate parent's
/// author, not the root's). Every agent in `agents` becomes a node.
pub fn build_resharing_network(
    log: &[ActionRecord],
    store: &ContentStore,
    agents: impl IntoIterator<Item = AgentId>,
) -> Result<WeightedDigraph, NetworkError> {
    build(log, store, agents, |a| matches!(a, Action::ReShare { .. }))
}

/// Edge actor -> author of the liked, disliked or commented item.
pub fn build_interaction_network(
    log: &[ActionRecord],
    store: &ContentStore,
    agents: impl IntoIterator<Item = AgentId>,
) -> Result<WeightedDigraph, NetworkError> {
    build(log, store, agents, |a| matches!(a, Action::Like { .. } | Action::Dislike { .. } | Action::Comment { .. }))
}

/// Weighted degree in `direction` divided by `n_population - 1`.
pub fn degree_centrality(
    graph: &WeightedDigraph,
    direction: Direction,
    n_population: usize,
) -> Result<BTreeMap<AgentId, f64>, NetworkError> {
    if n_population < 2 {
        return Err(NetworkError::Population(n_population));
    }
    let denom = (n_population - 1) as f64;
    Ok(graph.weighted_degree(direction).into_iter().map(|(n, w)| (n, w as f64 / denom)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn summarize(values: &[f64]) -> Option<GroupSummary> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(GroupSummary {
        n: v.len(),
        min: v[0],
        q1: quantile(&v, 0.25),
        median: quantile(&v, 0.5),
        q3: quantile(&v, 0.75),
        max: v[v.len() - 1],
        mean: v.iter().sum::<f64>() / v.len() as f64,
    })
}

/// Centrality distribution per characterization label.
pub fn centrality_by_trait(
    centrality: &BTreeMap<AgentId, f64>,
    profiles: &[AgentProfile],
) -> Result<BTreeMap<String, GroupSummary>, NetworkError> {
    let labels: BTreeMap<&AgentId, String> = profiles.iter().map(|p| (&p.id, p.characterization.label())).collect();
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (agent, c) in centrality {
        let label = labels.get(agent).ok_or_else(|| NetworkError::MissingProfile(agent.clone()))?;
        groups.entry(label.clone()).or_default().push(*c);
    }
    Ok(groups.into_iter().filter_map(|(k, v)| summarize(&v).map(|s| (k, s))).collect())
}
