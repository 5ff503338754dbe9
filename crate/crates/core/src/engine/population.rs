use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::config::Configuration;
use super::EngineError;
use crate::model::{AgentId, AgentProfile, BehavioralTrait, Characterization, PsychometricVariant, Topic};

/// One persona record from the input file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Persona {
    pub id: String,
    pub identity_text: String,
    pub topic: Topic,
}

fn agent(p: &Persona, id: String, characterization: Characterization) -> AgentProfile {
    AgentProfile {
        id: AgentId(id),
        identity_text: p.identity_text.clone(),
        characterization,
        topic: p.topic.clone(),
        following: BTreeSet::new(),
    }
}

/// Cross personas with the characterization layer of `configuration`.
/// Agents come out persona-major, layer-minor; ids are `<persona>-<code>`
/// except under IdentityOnly, where the persona id is used as is.
pub fn init_population(personas: &[Persona], configuration: Configuration) -> Result<Vec<AgentProfile>, EngineError> {
    if personas.is_empty() {
        return Err(EngineError::Population("persona set is empty".into()));
    }
    let mut seen = BTreeSet::new();
    for p in personas {
        if p.id.trim().is_empty() {
            return Err(EngineError::Population("persona with empty id".into()));
        }
        if !seen.insert(p.id.as_str()) {
            return Err(EngineError::Population(format!("duplicate persona id `{}`", p.id)));
        }
    }
    let mut out = Vec::new();
    for p in personas {
        match configuration {
            Configuration::FullModel | Configuration::RandomRecommendation => {
                for t in BehavioralTrait::ALL {
                    out.push(agent(p, format!("{}-{}", p.id, t.code()), Characterization::Behavioral(t)));
                }
            }
            Configuration::IdentityOnly => out.push(agent(p, p.id.clone(), Characterization::None)),
            Configuration::PsychometricTraits => {
                for v in PsychometricVariant::ALL {
                    out.push(agent(p, format!("{}-{}", p.id, v.code()), Characterization::Psychometric(v)));
                }
            }
        }
    }
    Ok(out)
}

/// `count` generated identities, topics assigned round-robin.
pub fn synthetic_personas(count: usize) -> Vec<Persona> {
    (0..count)
        .map(|i| {
            let topic = Topic::SYNTHETIC[i % Topic::SYNTHETIC.len()].clone();
            let n = i / Topic::SYNTHETIC.len() + 1;
            Persona {
                id: format!("{}{n:02}", topic.as_str().to_ascii_lowercase()),
                identity_text: format!("A person who follows {topic} news and talks about it with friends (profile {n})."),
                topic,
            }
        })
        .collect()
}
