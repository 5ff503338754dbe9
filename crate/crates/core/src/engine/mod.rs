//! Simulation loop: snapshot, decide in parallel, apply serially.

mod config;
mod population;
mod recommend;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{BackendKind, Configuration, FeedStrategy, SentimentKind, SimulationConfig};
pub use population::{init_population, synthetic_personas, Persona};
pub use recommend::recommend_feed;

use crate::analytics::engagement_order;
use crate::memory::{MemoryUnit, NeutralAnalyzer, SentimentAnalyzer, WordListAnalyzer};
use crate::model::{Action, ActionRecord, AgentId, AgentProfile, ContentId};
use crate::reasoning::{self, build_prompt, BackendError, CompletionBackend, Decision, FeedEntry, StubPolicy};
use crate::rng::agent_stream;
use crate::store::{ContentStore, StoreError};

const PURPOSE_FEED: u64 = 1;
const PURPOSE_DECIDE: u64 = 2;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("population: {0}")]
    Population(String),
    #[error("config: {0}")]
    Config(String),
    #[error("iteration {iteration}, agent {agent}: backend failed: {source}")]
    Backend {
        iteration: u32,
        agent: AgentId,
        #[source]
        source: BackendError,
    },
    #[error("store: {0}")]
    Store(#[from] StoreError),
    #[error("inconsistent world: {0}")]
    Invariant(String),
}

/// Where decisions come from. Built once per run, so the size gap
/// between variants does not matter.
#[allow(clippy::large_enum_variant)]
pub enum Policy {
    Stub(StubPolicy),
    Backend(Box<dyn CompletionBackend>),
}

/// Complete simulation state. `iteration` counts completed iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub agents: Vec<AgentProfile>,
    pub memories: Vec<MemoryUnit>,
    pub content: ContentStore,
    pub log: Vec<ActionRecord>,
    pub iteration: u32,
}

impl World {
    pub fn new(agents: Vec<AgentProfile>, config: &SimulationConfig) -> Result<Self, EngineError> {
        let memories = agents.iter().map(|_| MemoryUnit::new(&config.memory)).collect();
        let w = World { agents, memories, content: ContentStore::new(), log: Vec::new(), iteration: 0 };
        w.validate()?;
        Ok(w)
    }

    pub fn index(&self) -> BTreeMap<&AgentId, usize> {
        self.agents.iter().enumerate().map(|(i, a)| (&a.id, i)).collect()
    }

    pub fn agent(&self, id: &AgentId) -> Option<&AgentProfile> {
        self.agents.iter().find(|a| &a.id == id)
    }

    /// Structural checks used after loading a checkpoint and in tests.
    pub fn validate(&self) -> Result<(), EngineError> {
        let index = self.index();
        if index.len() != self.agents.len() {
            return Err(EngineError::Invariant("duplicate agent ids".into()));
        }
        if self.memories.len() != self.agents.len() {
            return Err(EngineError::Invariant(format!(
                "{} agents but {} memory units",
                self.agents.len(),
                self.memories.len()
            )));
        }
        for a in &self.agents {
            for f in &a.following {
                if !index.contains_key(f) {
                    return Err(EngineError::Invariant(format!("{} follows unknown agent {f}", a.id)));
                }
                if f == &a.id {
                    return Err(EngineError::Invariant(format!("{} follows itself", a.id)));
                }
            }
        }
        self.content.validate()?;
        let mut last = (0u32, 0usize);
        for (n, r) in self.log.iter().enumerate() {
            let pos = *index
                .get(&r.agent)
                .ok_or_else(|| EngineError::Invariant(format!("log entry {n} names unknown agent {}", r.agent)))?;
            let key = (r.iteration, pos);
            if n > 0 && key <= last {
                return Err(EngineError::Invariant(format!("log entry {n} out of order")));
            }
            if r.iteration == 0 || r.iteration > self.iteration {
                return Err(EngineError::Invariant(format!("log entry {n} has iteration {}", r.iteration)));
            }
            last = key;
        }
        Ok(())
    }
}

/// Per-iteration counts of re-prompts and fallbacks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationReport {
    pub iteration: u32,
    pub retries: usize,
    pub fallbacks: usize,
}

struct Pending {
    memory: MemoryUnit,
    decision: Decision,
    retries: usize,
    fell_back: bool,
}

pub struct Engine {
    pub config: SimulationConfig,
    policy: Policy,
    analyzer: Box<dyn SentimentAnalyzer>,
    decision_order: Option<Vec<usize>>,
}

impl Engine {
    pub fn new(config: SimulationConfig, policy: Policy) -> Result<Self, EngineError> {
        config.validate().map_err(EngineError::Config)?;
        let analyzer: Box<dyn SentimentAnalyzer> = match config.sentiment {
            SentimentKind::Neutral => Box::new(NeutralAnalyzer),
            SentimentKind::WordList => Box::new(WordListAnalyzer::default()),
        };
        Ok(Engine { config, policy, analyzer, decision_order: None })
    }

    /// Visit agents in this order during the decision phase. Results are
    /// still applied in canonical order; used to check order independence.
    pub fn with_decision_order(mut self, order: Vec<usize>) -> Self {
        self.decision_order = Some(order);
        self
    }

    fn decide_one(
        &self,
        world: &World,
        reshared: &BTreeMap<AgentId, BTreeSet<ContentId>>,
        idx: usize,
        now: u32,
    ) -> Result<Pending, EngineError> {
        let agent = &world.agents[idx];
        let mcfg = &self.config.memory;
        let mut memory = world.memories[idx].clone();
        memory.stm_decay(now, mcfg.decay_horizon);

        let empty = BTreeSet::new();
        let mine = reshared.get(&agent.id).unwrap_or(&empty);
        let mut feed_rng = agent_stream(self.config.master_seed, &agent.id, now, PURPOSE_FEED);
        let feed_ids = recommend_feed(
            agent,
            &world.content,
            mine,
            self.config.configuration.strategy(),
            self.config.feed_size,
            now,
            &mut feed_rng,
        );
        let feed: Vec<FeedEntry> = feed_ids
            .iter()
            .map(|id| FeedEntry::from_item(world.content.get(*id).expect("feed ids come from the store")))
            .collect();

        for id in &feed_ids {
            let item = world.content.get(*id).expect("feed ids come from the store");
            memory.stm_observe(item, now, mcfg, self.analyzer.as_ref());
        }
        // Own content that drew engagement last iteration is brought back to mind.
        for item in world.content.iter().filter(|c| c.author == agent.id && c.last_activity + 1 == now && c.iteration + 1 < now) {
            memory.stm_observe(item, now, mcfg, self.analyzer.as_ref());
        }

        let (decision, retries, fell_back) = match &self.policy {
            Policy::Stub(stub) => {
                let mut rng = agent_stream(self.config.master_seed, &agent.id, now, PURPOSE_DECIDE);
                (stub.decide(agent, &feed, now, &mut rng), 0, false)
            }
            Policy::Backend(backend) => {
                let prompt = build_prompt(agent, &memory, &feed, &world.content, now);
                let out = reasoning::decide(&prompt, backend.as_ref(), self.config.max_retries).map_err(|source| {
                    EngineError::Backend { iteration: now, agent: agent.id.clone(), source }
                })?;
                let retries = out.retries();
                (out.decision, retries, out.fell_back)
            }
        };
        Ok(Pending { memory, decision, retries, fell_back })
    }

    /// Run one iteration. On error the world is left exactly as it was.
    pub fn run_iteration(&self, world: &mut World) -> Result<IterationReport, EngineError> {
        let now = world.iteration + 1;
        let n = world.agents.len();
        let order: Vec<usize> = match &self.decision_order {
            Some(o) => o.clone(),
            None => (0..n).collect(),
        };
        if order.len() != n || order.iter().collect::<BTreeSet<_>>().len() != n || order.iter().any(|i| *i >= n) {
            return Err(EngineError::Config("decision order is not a permutation of the agents".into()));
        }

        let reshared = world.content.reshared_by();
        let snapshot: &World = world;
        let results: Vec<(usize, Result<Pending, EngineError>)> = if self.config.parallel {
            order.par_iter().map(|&i| (i, self.decide_one(snapshot, &reshared, i, now))).collect()
        } else {
            order.iter().map(|&i| (i, self.decide_one(snapshot, &reshared, i, now))).collect()
        };
        let mut slots: Vec<Option<Pending>> = (0..n).map(|_| None).collect();
        for (i, r) in results {
            slots[i] = Some(r?);
        }

        let mut report = IterationReport { iteration: now, ..Default::default() };
        let mut staged = world.clone();
        for (i, slot) in slots.into_iter().enumerate() {
            let p = slot.expect("every agent decided");
            report.retries += p.retries;
            report.fallbacks += usize::from(p.fell_back);
            staged.memories[i] = p.memory;
            apply_action(&mut staged, i, p.decision, now)?;
        }
        for (i, memory) in staged.memories.iter_mut().enumerate() {
            let action = &staged.log[staged.log.len() - n + i].action;
            memory.am_record(action, now);
        }
        let mcfg = &self.config.memory;
        if now.is_multiple_of(mcfg.ltm_period) {
            for memory in &mut staged.memories {
                memory.ltm_evaluate(now, mcfg.promotion_quantile, &mcfg.weights);
            }
        }
        staged.iteration = now;
        *world = staged;
        Ok(report)
    }

    /// Run until `world.iteration == config.iterations`.
    pub fn run(&self, world: &mut World) -> Result<Vec<IterationReport>, EngineError> {
        let mut reports = Vec::new();
        while world.iteration < self.config.iterations {
            let r = self.run_iteration(world)?;
            log::info!("iteration {} done: {} items, {} retries, {} fallbacks", r.iteration, world.content.len(), r.retries, r.fallbacks);
            reports.push(r);
        }
        Ok(reports)
    }
}

/// Apply one validated decision and append its log record.
pub fn apply_action(world: &mut World, agent_idx: usize, decision: Decision, now: u32) -> Result<(), EngineError> {
    let agent_id = world.agents[agent_idx].id.clone();
    let order = engagement_order(&decision.action, &world.content)
        .map_err(|e| EngineError::Invariant(format!("{agent_id}: {e}")))?;
    match &decision.action {
        Action::Post { text } => {
            let topic = world.agents[agent_idx].topic.clone();
            world.content.add_original(agent_id.clone(), now, text.clone(), topic);
        }
        Action::ReShare { target } => {
            let item = world.content.get(*target).ok_or(StoreError::Dangling(*target))?;
            if item.author == agent_id {
                return Err(EngineError::Invariant(format!("{agent_id} re-shared its own item {target}")));
            }
            if world.content.iter().any(|c| c.parent == Some(*target) && c.author == agent_id) {
                return Err(EngineError::Invariant(format!("{agent_id} re-shared {target} twice")));
            }
            world.content.add_reshare(agent_id.clone(), now, *target)?;
        }
        Action::Like { target } | Action::Dislike { target } | Action::Comment { target, .. } => {
            let item = world.content.get_mut(*target)?;
            match &decision.action {
                Action::Like { .. } => item.counters.likes += 1,
                Action::Dislike { .. } => item.counters.dislikes += 1,
                Action::Comment { text, .. } => {
                    item.counters.comments += 1;
                    item.comments.push((agent_id.clone(), text.clone()));
                }
                _ => unreachable!(),
            }
            item.last_activity = item.last_activity.max(now);
        }
        Action::Follow { target } => {
            if target == &agent_id || world.agent(target).is_none() {
                return Err(EngineError::Invariant(format!("{agent_id} cannot follow {target}")));
            }
            world.agents[agent_idx].following.insert(target.clone());
        }
        Action::Inactive => {}
    }
    world.log.push(ActionRecord { iteration: now, agent: agent_id, action: decision.action, order, reason: decision.reason });
    Ok(())
}

/// Initialize a world from `agents` and run it to completion.
pub fn run_simulation(config: &SimulationConfig, agents: Vec<AgentProfile>, policy: Policy) -> Result<World, EngineError> {
    let engine = Engine::new(config.clone(), policy)?;
    let mut world = World::new(agents, config)?;
    engine.run(&mut world)?;
    Ok(world)
}
