//! Post-hoc analysis of action logs and content stores.

mod chains;
mod cluster;
mod stats;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use chains::{
    chain_length_table, per_topic_chain_stats, position_composition, trace_chains, Chain, ChainLengthRow,
    ChainLengthTable, ChainNode, TopicChainStats,
};
pub use cluster::{cluster_agents, kmeans, project_onto_centroids, silhouette, Clustering, KMeansRun, CurvePoint};
pub use stats::{mann_whitney_u, MannWhitney, EXACT_LIMIT};

use crate::model::{
    action_category, Action, ActionDistribution, ActionKind, ActionRecord, AgentId, EngagementOrder,
};
use crate::store::ContentStore;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("agent {0} does not appear in the log")]
    UnknownAgent(AgentId),
    #[error("{0} is not an engagement")]
    NotEngagement(ActionKind),
    #[error("engagement target {0} is not in the content store")]
    Dangling(String),
    #[error("cycle in the parent chain of {0}")]
    Cycle(String),
    #[error("need at least {need} vectors, got {got}")]
    TooFewVectors { need: usize, got: usize },
    #[error("invalid range: {0}")]
    Range(String),
    #[error("no centroids")]
    NoCentroids,
    #[error("empty sample")]
    EmptySample,
}

/// First-order if the target is an original, second-order if it is a
/// re-share.
pub fn classify_order(action: &Action, store: &ContentStore) -> Result<EngagementOrder, AnalyticsError> {
    let target = action.content_target().ok_or(AnalyticsError::NotEngagement(action.kind()))?;
    let item = store.get(target).ok_or_else(|| AnalyticsError::Dangling(target.to_string()))?;
    Ok(if item.is_original() { EngagementOrder::FirstOrder } else { EngagementOrder::SecondOrder })
}

/// Like [`classify_order`] but maps non-engagements to `NotApplicable`.
pub fn engagement_order(action: &Action, store: &ContentStore) -> Result<EngagementOrder, AnalyticsError> {
    if action.kind().is_engagement() {
        classify_order(action, store)
    } else {
        Ok(EngagementOrder::NotApplicable)
    }
}

fn tally(records: impl Iterator<Item = ActionKind>) -> Option<ActionDistribution> {
    let mut counts = [0usize; 4];
    for kind in records {
        if let Some(slot) = action_category(kind).slot() {
            counts[slot] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return None;
    }
    let v = counts.map(|c| c as f64 / total as f64);
    Some(ActionDistribution { post: v[0], reshare: v[1], interact: v[2], inactive: v[3] })
}

/// Share of the agent's non-follow choices falling in each category.
pub fn action_probability_vector(agent: &AgentId, log: &[ActionRecord]) -> Result<ActionDistribution, AnalyticsError> {
    tally(log.iter().filter(|r| &r.agent == agent).map(|r| r.action.kind()))
        .ok_or_else(|| AnalyticsError::UnknownAgent(agent.clone()))
}

/// Vectors for every agent with at least one non-follow choice.
pub fn probability_vectors(log: &[ActionRecord]) -> BTreeMap<AgentId, ActionDistribution> {
    let mut kinds: BTreeMap<&AgentId, Vec<ActionKind>> = BTreeMap::new();
    for r in log {
        kinds.entry(&r.agent).or_default().push(r.action.kind());
    }
    kinds
        .into_iter()
        .filter_map(|(a, ks)| tally(ks.into_iter()).map(|d| (a.clone(), d)))
        .collect()
}

/// Component-wise mean of per-agent vectors within each group.
pub fn group_means<K: Ord + Clone>(
    vectors: &BTreeMap<AgentId, ActionDistribution>,
    group_of: impl Fn(&AgentId) -> Option<K>,
) -> BTreeMap<K, ActionDistribution> {
    let mut acc: BTreeMap<K, ([f64; 4], usize)> = BTreeMap::new();
    for (agent, v) in vectors {
        if let Some(g) = group_of(agent) {
            let e = acc.entry(g).or_insert(([0.0; 4], 0));
            for (s, x) in e.0.iter_mut().zip(v.as_array()) {
                *s += x;
            }
            e.1 += 1;
        }
    }
    acc.into_iter()
        .map(|(g, (s, n))| {
            let m = s.map(|x| x / n as f64);
            (g, ActionDistribution { post: m[0], reshare: m[1], interact: m[2], inactive: m[3] })
        })
        .collect()
}

/// First/second-order engagement counts in one iteration. Percentages are
/// `None` when there were no engagements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderShare {
    pub iteration: u32,
    pub first_order: usize,
    pub second_order: usize,
    pub pct_first: Option<f64>,
    pub pct_second: Option<f64>,
}

fn last_iteration(log: &[ActionRecord]) -> u32 {
    log.iter().map(|r| r.iteration).max().unwrap_or(0)
}

fn pct(part: usize, whole: usize) -> Option<f64> {
    (whole > 0).then(|| 100.0 * part as f64 / whole as f64)
}

pub fn order_dynamics(log: &[ActionRecord]) -> Vec<OrderShare> {
    let last = last_iteration(log);
    let mut counts = vec![(0usize, 0usize); last as usize + 1];
    for r in log {
        match r.order {
            EngagementOrder::FirstOrder => counts[r.iteration as usize].0 += 1,
            EngagementOrder::SecondOrder => counts[r.iteration as usize].1 += 1,
            EngagementOrder::NotApplicable => {}
        }
    }
    (1..=last)
        .map(|it| {
            let (f, s) = counts[it as usize];
            OrderShare { iteration: it, first_order: f, second_order: s, pct_first: pct(f, f + s), pct_second: pct(s, f + s) }
        })
        .collect()
}

/// Cumulative originals vs re-shares created up to each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixPoint {
    pub iteration: u32,
    pub originals: usize,
    pub reshares: usize,
    pub pct_original: Option<f64>,
    pub pct_reshared: Option<f64>,
}

pub fn content_mix(log: &[ActionRecord]) -> Vec<MixPoint> {
    let last = last_iteration(log);
    let mut per = vec![(0usize, 0usize); last as usize + 1];
    for r in log {
        match r.action {
            Action::Post { .. } => per[r.iteration as usize].0 += 1,
            Action::ReShare { .. } => per[r.iteration as usize].1 += 1,
            _ => {}
        }
    }
    let (mut o, mut s) = (0, 0);
    (1..=last)
        .map(|it| {
            o += per[it as usize].0;
            s += per[it as usize].1;
            MixPoint { iteration: it, originals: o, reshares: s, pct_original: pct(o, o + s), pct_reshared: pct(s, o + s) }
        })
        .collect()
}
