//! Generative-agent social media simulation.
//!
//! Agents carry an identity text and a behavioral trait archetype, see a
//! recommended feed each iteration and choose one platform action. The
//! crate also holds the analyses run over the resulting logs: behavioral
//! clustering, re-share chain tracing, network centrality and an empirical
//! grounding pipeline.

pub mod analytics;
pub mod engine;
pub mod grounding;
pub mod io;
pub mod memory;
pub mod model;
pub mod networks;
pub mod reasoning;
pub mod rng;
pub mod store;

pub use engine::{Engine, Policy, SimulationConfig, World};
pub use model::{Action, ActionDistribution, ActionKind, ActionRecord, AgentId, AgentProfile, BehavioralTrait, ContentId};
pub use store::ContentStore;
