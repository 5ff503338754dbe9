use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::model::{AgentId, ContentId, Topic};
use crate::store::{ContentStore, StoreError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainNode {
    pub position: usize,
    pub agent: AgentId,
    pub content_id: ContentId,
}

/// One root-to-leaf re-share path. Position 0 is the original author.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chain {
    pub root: ContentId,
    pub topic: Topic,
    pub nodes: Vec<ChainNode>,
}

impl Chain {
    pub fn length(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf(&self) -> ContentId {
        self.nodes.last().expect("chains are never empty").content_id
    }
}

fn store_err(e: StoreError) -> AnalyticsError {
    match e {
        StoreError::Cycle(id) => AnalyticsError::Cycle(id.to_string()),
        other => AnalyticsError::Dangling(other.to_string()),
    }
}

/// One chain per leaf re-share, ordered by leaf id.
pub fn trace_chains(store: &ContentStore) -> Result<Vec<Chain>, AnalyticsError> {
    let children = store.children();
    let mut out = Vec::new();
    for item in store.iter() {
        if item.is_original() || children.contains_key(&item.id) {
            continue;
        }
        let mut path = vec![item];
        let mut cur = item;
        while let Some(p) = cur.parent {
            cur = store.get(p).ok_or_else(|| AnalyticsError::Dangling(p.to_string()))?;
            path.push(cur);
            if path.len() > store.len() {
                return Err(store_err(StoreError::Cycle(item.id)));
            }
        }
        path.reverse();
        let root = path[0];
        out.push(Chain {
            root: root.id,
            topic: root.topic.clone(),
            nodes: path
                .iter()
                .enumerate()
                .map(|(position, c)| ChainNode { position, agent: c.author.clone(), content_id: c.id })
                .collect(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainLengthRow {
    pub length: usize,
    pub count: usize,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainLengthTable {
    pub rows: Vec<ChainLengthRow>,
    pub total: usize,
    pub mean: Option<f64>,
    pub max: Option<usize>,
}

impl ChainLengthTable {
    pub fn count(&self, length: usize) -> usize {
        self.rows.iter().find(|r| r.length == length).map_or(0, |r| r.count)
    }
}

pub fn chain_length_table(chains: &[Chain]) -> ChainLengthTable {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for c in chains {
        *counts.entry(c.length()).or_default() += 1;
    }
    let total = chains.len();
    let rows = counts
        .into_iter()
        .map(|(length, count)| ChainLengthRow { length, count, percent: 100.0 * count as f64 / total as f64 })
        .collect();
    let sum: usize = chains.iter().map(Chain::length).sum();
    ChainLengthTable {
        rows,
        total,
        mean: (total > 0).then(|| sum as f64 / total as f64),
        max: chains.iter().map(Chain::length).max(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopicChainStats {
    pub chains: usize,
    pub mean_length: f64,
    pub share_percent: f64,
}

pub fn per_topic_chain_stats(chains: &[Chain]) -> BTreeMap<Topic, TopicChainStats> {
    let mut acc: BTreeMap<Topic, (usize, usize)> = BTreeMap::new();
    for c in chains {
        let e = acc.entry(c.topic.clone()).or_default();
        e.0 += 1;
        e.1 += c.length();
    }
    let total = chains.len() as f64;
    acc.into_iter()
        .map(|(t, (n, len))| {
            (t, TopicChainStats { chains: n, mean_length: len as f64 / n as f64, share_percent: 100.0 * n as f64 / total })
        })
        .collect()
}

/// Count of chain nodes per (position, group label).
pub fn position_composition(
    chains: &[Chain],
    label_of: impl Fn(&AgentId) -> String,
) -> BTreeMap<usize, BTreeMap<String, usize>> {
    let mut out: BTreeMap<usize, BTreeMap<String, usize>> = BTreeMap::new();
    for c in chains {
        for n in &c.nodes {
            *out.entry(n.position).or_default().entry(label_of(&n.agent)).or_default() += 1;
        }
    }
    out
}
