//! JSON documents read and written by the CLI, and their schemas.

use indexmap::IndexMap;
use reptrace::explain::Explanation;
use reptrace::fire::FireConfig;
use reptrace::simulate::{Scenario, World};
use reptrace::store::{ObservationRecord, ObservationStore, RatingPattern, RatingStore, RoleBook};
use reptrace::travos::TravosConfig;
use reptrace::{AgentId, Assessment, Preferences, Rating};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

pub const SCENARIO_SCHEMA: &str = "reptrace/scenario/v1";
pub const STORES_SCHEMA: &str = "reptrace/stores/v1";
pub const ASSESSMENT_SCHEMA: &str = "reptrace/assessment/v1";
pub const EXPLANATION_SCHEMA: &str = "reptrace/explanation/v1";

/// Schema documents shipped with the binary, keyed by `schema` id.
pub const SCHEMAS: [(&str, &str); 4] = [
    (SCENARIO_SCHEMA, include_str!("../schemas/scenario.v1.json")),
    (STORES_SCHEMA, include_str!("../schemas/stores.v1.json")),
    (ASSESSMENT_SCHEMA, include_str!("../schemas/assessment.v1.json")),
    (EXPLANATION_SCHEMA, include_str!("../schemas/explanation.v1.json")),
];

/// Validates `doc` against the shipped schema with id `schema`.
pub fn validate(schema: &str, doc: &Value) -> Result<(), CliError> {
    let (_, src) = SCHEMAS
        .iter()
        .find(|(id, _)| *id == schema)
        .ok_or_else(|| CliError::Schema(format!("unknown schema {schema}")))?;
    let schema_doc: Value = serde_json::from_str(src).expect("shipped schema is JSON");
    let validator = jsonschema::validator_for(&schema_doc).expect("shipped schema compiles");
    let problems: Vec<String> = validator
        .iter_errors(doc)
        .map(|e| format!("{}: {e}", e.instance_path()))
        .collect();
    if problems.is_empty() {
        Ok(())
    } else {
        Err(CliError::Schema(problems.join("; ")))
    }
}

/// Parses `text` as JSON, checks it against `schema`, then deserializes.
pub fn parse<T: for<'de> Deserialize<'de>>(schema: &str, text: &str) -> Result<T, CliError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| CliError::Schema(format!("not JSON: {e}")))?;
    validate(schema, &doc)?;
    serde_json::from_value(doc).map_err(|e| CliError::Schema(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    #[default]
    Fire,
    Travos,
}

fn default_fire() -> FireConfig {
    FireConfig::new(
        reptrace::fire::DEFAULT_LAMBDA,
        [
            (reptrace::ReputationType::Interaction, 0.5),
            (reptrace::ReputationType::Witness, 0.5),
        ]
        .into_iter()
        .collect(),
    )
    .expect("valid default")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub schema: String,
    #[serde(flatten)]
    pub scenario: Scenario,
    #[serde(default)]
    pub model: ModelChoice,
    pub preferences: Preferences,
    #[serde(default = "default_fire")]
    pub fire: FireConfig,
    #[serde(default)]
    pub travos: TravosConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentRecords {
    pub ratings: Vec<Rating>,
    #[serde(default)]
    pub observations: Vec<ObservationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoresDocument {
    pub schema: String,
    /// Current round, used as the FIRE evaluation time.
    pub now: u64,
    pub providers: Vec<AgentId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history_cap: Option<usize>,
    pub preferences: Preferences,
    pub fire: FireConfig,
    pub travos: TravosConfig,
    #[serde(default)]
    pub roles: RoleBook,
    pub agents: IndexMap<AgentId, AgentRecords>,
}

impl StoresDocument {
    pub fn from_world(file: &ScenarioFile, world: &World) -> Self {
        let agents = world
            .iter()
            .map(|(id, s)| {
                let records = AgentRecords {
                    ratings: s.ratings.query(&RatingPattern::any()).into_iter().cloned().collect(),
                    observations: s.observations.iter().cloned().collect(),
                };
                (id.clone(), records)
            })
            .collect();
        Self {
            schema: STORES_SCHEMA.to_string(),
            now: u64::from(file.scenario.rounds.saturating_sub(1)),
            providers: file.scenario.providers.iter().map(|p| p.id.clone()).collect(),
            history_cap: file.scenario.history_cap,
            preferences: file.preferences.clone(),
            fire: file.fire.clone(),
            travos: file.travos.clone(),
            roles: RoleBook::default(),
            agents,
        }
    }

    /// Rebuilds the rating and observation stores of `agent`.
    pub fn stores(&self, agent: &AgentId) -> Option<(RatingStore, ObservationStore)> {
        let records = self.agents.get(agent)?;
        let mut ratings = match self.history_cap {
            Some(cap) => RatingStore::with_cap(cap),
            None => RatingStore::new(),
        }
        .owned_by(agent.clone());
        for r in &records.ratings {
            ratings.insert(r.clone());
        }
        let mut observations = ObservationStore::new();
        for o in &records.observations {
            observations.insert(o.clone());
        }
        Some((ratings, observations))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unassessed {
    pub provider: AgentId,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentDocument {
    pub schema: String,
    pub model: String,
    pub assessor: AgentId,
    /// Overall score descending, ties by provider id.
    pub ranking: Vec<Assessment>,
    pub unassessed: Vec<Unassessed>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub preferred: f64,
    pub other: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationDocument {
    pub schema: String,
    pub scores: Scores,
    pub explanation: Explanation,
}
