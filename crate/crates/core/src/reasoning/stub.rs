//! Deterministic archetype-sampling policy that stands in for the language
//! model at desk scale.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::parse::Decision;
use super::prompt::FeedEntry;
use crate::model::{
    parse_distribution_rows, Action, ActionDistribution, AgentProfile, ArchetypeTable, Characterization, ModelError,
};

const DEFAULT_SURROGATES: &str = include_str!("../../assets/surrogates.tsv");

/// Relative weights of like, dislike and comment within the interact category.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractMix {
    pub like: f64,
    pub dislike: f64,
    pub comment: f64,
}

impl Default for InteractMix {
    fn default() -> Self {
        InteractMix { like: 0.6, dislike: 0.1, comment: 0.3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StubPolicy {
    pub archetypes: ArchetypeTable,
    /// Rows for agents without a behavioral trait, keyed by
    /// `Characterization::label()` (`NONE`, `OH`, ... `NL`).
    pub surrogates: BTreeMap<String, ActionDistribution>,
    pub interact_mix: InteractMix,
}

impl Default for StubPolicy {
    fn default() -> Self {
        StubPolicy {
            archetypes: ArchetypeTable::default(),
            surrogates: parse_surrogates(DEFAULT_SURROGATES).expect("bundled surrogate asset is valid"),
            interact_mix: InteractMix::default(),
        }
    }
}

pub fn parse_surrogates(text: &str) -> Result<BTreeMap<String, ActionDistribution>, ModelError> {
    let mut out = BTreeMap::new();
    for (line, label, dist) in parse_distribution_rows(text)? {
        let c = Characterization::from_label(&label).map_err(|e| ModelError::Asset { line, message: e.to_string() })?;
        if matches!(c, Characterization::Behavioral(_)) {
            return Err(ModelError::Asset { line, message: format!("{label} belongs in the archetype table") });
        }
        out.insert(c.label(), dist);
    }
    Ok(out)
}

fn pick_weighted<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc && *w > 0.0 {
            return i;
        }
    }
    // Rounding at the top end: fall back to the last positive weight.
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

impl StubPolicy {
    /// The distribution the stub samples from for this agent.
    pub fn row(&self, characterization: &Characterization) -> Option<ActionDistribution> {
        match characterization {
            Characterization::Behavioral(t) => Some(*self.archetypes.get(*t)),
            other => self.surrogates.get(&other.label()).copied(),
        }
    }

    /// Feasibility mask over (post, reshare, interact, inactive).
    pub fn feasible(feed_is_empty: bool) -> [bool; 4] {
        [true, !feed_is_empty, !feed_is_empty, true]
    }

    /// Sample a category from the masked row, then a target and payload.
    pub fn decide<R: Rng + ?Sized>(&self, agent: &AgentProfile, feed: &[FeedEntry], now: u32, rng: &mut R) -> Decision {
        let Some(row) = self.row(&agent.characterization) else {
            return Decision::inactive("stub: no distribution for this profile");
        };
        let Some(probs) = row.masked(Self::feasible(feed.is_empty())) else {
            return Decision::inactive("stub: no feasible action");
        };
        let category = pick_weighted(&probs, rng);
        let label = agent.characterization.label();
        let action = match category {
            0 => Action::Post { text: format!("{} shares a thought on {} (iteration {now})", agent.id, agent.topic) },
            3 => Action::Inactive,
            _ => {
                let matching: Vec<&FeedEntry> = feed.iter().filter(|f| f.topic == agent.topic).collect();
                let pool: Vec<&FeedEntry> = if matching.is_empty() { feed.iter().collect() } else { matching };
                let target = pool[rng.random_range(0..pool.len())].content_id;
                if category == 1 {
                    Action::ReShare { target }
                } else {
                    let m = self.interact_mix;
                    match pick_weighted(&[m.like, m.dislike, m.comment], rng) {
                        0 => Action::Like { target },
                        1 => Action::Dislike { target },
                        _ => Action::Comment {
                            target,
                            text: format!("{} comments on [{target}] (iteration {now})", agent.id),
                        },
                    }
                }
            }
        };
        let reason = format!("stub: sampled {} from the {label} distribution", action.kind());
        Decision { action, reason }
    }
}
