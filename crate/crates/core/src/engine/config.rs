use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::memory::MemoryConfig;
use crate::reasoning::{EndpointConfig, InteractMix};

/// The four experimental set-ups: which characterization layer agents
/// carry and which recommender they see.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Configuration {
    #[default]
    FullModel,
    IdentityOnly,
    RandomRecommendation,
    PsychometricTraits,
}

impl Configuration {
    pub fn strategy(self) -> FeedStrategy {
        match self {
            Configuration::RandomRecommendation => FeedStrategy::Random,
            _ => FeedStrategy::Preference,
        }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Configuration::FullModel => "FullModel",
            Configuration::IdentityOnly => "IdentityOnly",
            Configuration::RandomRecommendation => "RandomRecommendation",
            Configuration::PsychometricTraits => "PsychometricTraits",
        };
        f.write_str(s)
    }
}

impl FromStr for Configuration {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "fullmodel" => Ok(Configuration::FullModel),
            "identityonly" => Ok(Configuration::IdentityOnly),
            "randomrecommendation" => Ok(Configuration::RandomRecommendation),
            "psychometrictraits" => Ok(Configuration::PsychometricTraits),
            _ => Err(format!("unknown configuration `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedStrategy {
    Preference,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Stub,
    Llm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SentimentKind {
    #[default]
    Neutral,
    WordList,
}

/// Everything that determines a run. Loaded from TOML; unknown keys are
/// rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub configuration: Configuration,
    pub iterations: u32,
    pub feed_size: usize,
    pub master_seed: u64,
    pub backend: BackendKind,
    /// Attempts per decision before falling back to inactivity.
    pub max_retries: usize,
    pub sentiment: SentimentKind,
    /// Run the decision phase on a thread pool.
    pub parallel: bool,
    /// Persona file (JSON lines), resolved relative to the config file.
    pub personas: Option<String>,
    /// Optional replacement for the bundled archetype table.
    pub archetypes: Option<String>,
    pub memory: MemoryConfig,
    pub endpoint: EndpointConfig,
    pub interact_mix: InteractMix,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            configuration: Configuration::FullModel,
            iterations: 25,
            feed_size: 5,
            master_seed: 0,
            backend: BackendKind::Stub,
            max_retries: 3,
            sentiment: SentimentKind::Neutral,
            parallel: true,
            personas: None,
            archetypes: None,
            memory: MemoryConfig::default(),
            endpoint: EndpointConfig::default(),
            interact_mix: InteractMix::default(),
        }
    }
}

impl SimulationConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.iterations < 1 {
            return Err("iterations must be at least 1".into());
        }
        if self.feed_size < 1 {
            return Err("feed_size must be at least 1".into());
        }
        if self.max_retries < 1 {
            return Err("max_retries must be at least 1".into());
        }
        let m = &self.memory;
        if m.stm_capacity < 1 || m.am_window < 1 || m.ltm_period < 1 {
            return Err("memory capacities and ltm_period must be at least 1".into());
        }
        if !(m.promotion_quantile > 0.0 && m.promotion_quantile <= 1.0) {
            return Err("memory.promotion_quantile must be in (0, 1]".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_partial_files() {
        let c = SimulationConfig::from_toml("configuration = \"IdentityOnly\"\nmaster_seed = 7\n[memory]\nstm_capacity = 5\n").unwrap();
        assert_eq!(c.configuration, Configuration::IdentityOnly);
        assert_eq!(c.iterations, 25);
        assert_eq!(c.feed_size, 5);
        assert_eq!(c.memory.stm_capacity, 5);
        assert_eq!(c.memory.decay_horizon, 3);
        assert_eq!(c.endpoint.temperature, 0.7);
        c.validate().unwrap();
        let back = SimulationConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_keys_are_named_with_a_line() {
        let err = SimulationConfig::from_toml("iterations = 3\nfeed_sise = 4\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("feed_sise"), "{msg}");
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn validation() {
        let c = SimulationConfig { iterations: 0, ..SimulationConfig::default() };
        assert!(c.validate().is_err());
        let c = SimulationConfig { feed_size: 0, ..SimulationConfig::default() };
        assert!(c.validate().is_err());
        assert_eq!("random-recommendation".parse::<Configuration>().unwrap(), Configuration::RandomRecommendation);
        assert_eq!(Configuration::RandomRecommendation.strategy(), FeedStrategy::Random);
        assert_eq!(Configuration::PsychometricTraits.strategy(), FeedStrategy::Preference);
    }
}
