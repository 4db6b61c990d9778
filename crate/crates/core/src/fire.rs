//! FIRE backend: recency-weighted component trusts, role-based trust and
//! importance-weighted term trust.
//!
//! Each assessment also produces a uniform-weight baseline (every rating of a
//! component weighted `1/|R|`) so the explainer can tell when recency alone
//! is responsible for an ordering.

use std::collections::HashMap;
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    combine_term_trust, normalize_rating, AgentId, Assessment, ComponentTrust, CoreError, Preferences, Rating,
    ReputationType, Term, TermAssessment,
};
use crate::store::{RatingPattern, RatingStore, RoleBook, RoleRule};

pub const DEFAULT_LAMBDA: f64 = 5.0;

#[derive(Debug, Error)]
pub enum FireError {
    #[error("invalid FIRE configuration: {0}")]
    Config(String),

    #[error("no reliability plugin named {0:?}")]
    UnknownPlugin(String),

    #[error("no evidence about {target} for term {term}")]
    NoEvidence { target: AgentId, term: Term },

    #[error(transparent)]
    Core(#[from] CoreError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind", content = "name")]
pub enum ReliabilityMode {
    #[default]
    ConstantOne,
    Plugin(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FireConfig {
    /// Recency scale in rounds.
    pub lambda: f64,
    /// Importance of each component.
    pub importance: IndexMap<ReputationType, f64>,
    #[serde(default)]
    pub reliability: ReliabilityMode,
}

impl FireConfig {
    pub fn new(lambda: f64, importance: IndexMap<ReputationType, f64>) -> Result<Self, FireError> {
        let cfg = Self {
            lambda,
            importance,
            reliability: ReliabilityMode::ConstantOne,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), FireError> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(FireError::Config(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if self.importance.values().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(FireError::Config("importance weights must be non-negative".into()));
        }
        if !self.importance.values().any(|w| *w > 0.0) {
            return Err(FireError::Config(
                "at least one importance weight must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn importance(&self, k: ReputationType) -> f64 {
        self.importance.get(&k).copied().unwrap_or(0.0)
    }
}

/// Reliability `rho_K` of a component value, in `[0, 1]`.
pub trait ReliabilityModel: Send + Sync {
    fn reliability(&self, rep_type: ReputationType, ratings: &[&Rating], now: u64) -> f64;
}

pub struct ConstantOne;

impl ReliabilityModel for ConstantOne {
    fn reliability(&self, _: ReputationType, _: &[&Rating], _: u64) -> f64 {
        1.0
    }
}

/// `e^(-dt / lambda)`.
pub fn recency_weight(delta_tau: f64, lambda: f64) -> f64 {
    (-delta_tau / lambda).exp()
}

fn weighted_mean(pairs: impl IntoIterator<Item = (f64, f64)>) -> Option<f64> {
    let (num, den) = pairs.into_iter().fold((0.0, 0.0), |(n, d), (w, v)| (n + w * v, d + w));
    (den > 0.0).then(|| num / den)
}

/// Unweighted mean of the rating values; the reference the recency
/// arguments compare against. Weight is left at zero for the caller to set.
pub fn component_trust_uniform(ratings: &[&Rating], rep_type: ReputationType) -> ComponentTrust {
    match weighted_mean(ratings.iter().map(|r| (1.0, r.value))) {
        Some(v) => ComponentTrust::present(rep_type, v, 0.0),
        None => ComponentTrust::absent(rep_type),
    }
}

/// Rules as `(weight, normalized value)` pairs, weighted by likelihood.
fn rule_pairs(rules: &[&RoleRule]) -> Result<Vec<(f64, f64)>, CoreError> {
    rules
        .iter()
        .map(|r| Ok((r.likelihood, normalize_rating(r.expected_value, r.range)?)))
        .collect()
}

/// FIRE evaluator: configuration plus registered reliability plugins.
#[derive(Clone)]
pub struct Fire {
    config: FireConfig,
    plugins: HashMap<String, Arc<dyn ReliabilityModel>>,
}

/// A FIRE assessment with its uniform-weight baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FireAssessment {
    pub assessment: Assessment,
    pub uniform: Assessment,
}

impl Fire {
    pub fn new(config: FireConfig) -> Result<Self, FireError> {
        config.validate()?;
        Ok(Self {
            config,
            plugins: HashMap::new(),
        })
    }

    pub fn with_plugin(mut self, name: impl Into<String>, model: Arc<dyn ReliabilityModel>) -> Self {
        self.plugins.insert(name.into(), model);
        self
    }

    pub fn config(&self) -> &FireConfig {
        &self.config
    }

    fn reliability(&self, k: ReputationType, ratings: &[&Rating], now: u64) -> Result<f64, FireError> {
        let rho = match &self.config.reliability {
            ReliabilityMode::ConstantOne => ConstantOne.reliability(k, ratings, now),
            ReliabilityMode::Plugin(name) => self
                .plugins
                .get(name)
                .ok_or_else(|| FireError::UnknownPlugin(name.clone()))?
                .reliability(k, ratings, now),
        };
        Ok(rho.clamp(0.0, 1.0))
    }

    /// Recency-weighted mean of ratings of one component (I, W or Cr).
    ///
    /// The returned weight is `importance * reliability`.
    pub fn component_trust(
        &self,
        ratings: &[&Rating],
        rep_type: ReputationType,
        now: u64,
    ) -> Result<ComponentTrust, FireError> {
        let pairs = ratings.iter().map(|r| {
            let dt = now.saturating_sub(r.timestamp) as f64;
            (recency_weight(dt, self.config.lambda), r.value)
        });
        let Some(value) = weighted_mean(pairs) else {
            return Ok(ComponentTrust::absent(rep_type));
        };
        let rho = self.reliability(rep_type, ratings, now)?;
        Ok(ComponentTrust::present(rep_type, value, self.config.importance(rep_type) * rho).with_reliability(rho))
    }

    /// Role-based trust: rule expectations weighted by their likelihoods.
    pub fn role_trust(&self, rules: &[&RoleRule], now: u64) -> Result<ComponentTrust, FireError> {
        let k = ReputationType::RoleBased;
        let Some(value) = weighted_mean(rule_pairs(rules)?) else {
            return Ok(ComponentTrust::absent(k));
        };
        let rho = self.reliability(k, &[], now)?;
        Ok(ComponentTrust::present(k, value, self.config.importance(k) * rho).with_reliability(rho))
    }

    /// Importance-weighted combination of the component trusts.
    pub fn term_trust(&self, components: &[ComponentTrust]) -> Result<f64, FireError> {
        Ok(combine_term_trust(components)?)
    }

    /// Assesses `target` from `assessor`'s store at round `now`.
    pub fn assess(
        &self,
        store: &RatingStore,
        roles: &RoleBook,
        assessor: &AgentId,
        target: &AgentId,
        prefs: &Preferences,
        now: u64,
    ) -> Result<FireAssessment, FireError> {
        let mut per_term = IndexMap::new();
        let mut uniform = IndexMap::new();
        for term in prefs.terms() {
            let mut comps = Vec::new();
            let mut base = Vec::new();
            for &k in self.config.importance.keys() {
                let (c, u) = if k == ReputationType::RoleBased {
                    let rules = roles.matching(assessor, target, term);
                    let c = self.role_trust(&rules, now)?;
                    let u = match weighted_mean(rule_pairs(&rules)?.into_iter().map(|(_, v)| (1.0, v))) {
                        Some(v) => ComponentTrust::present(k, v, c.weight).with_reliability(c.reliability),
                        None => ComponentTrust::absent(k),
                    };
                    (c, u)
                } else {
                    let mut pattern = RatingPattern::any().target(target).term(term).rep_type(k);
                    if k == ReputationType::Interaction {
                        pattern = pattern.source(assessor);
                    }
                    let ratings = store.query(&pattern);
                    let c = self.component_trust(&ratings, k, now)?;
                    let mut u = component_trust_uniform(&ratings, k);
                    if u.value.is_some() {
                        u.weight = c.weight;
                        u.reliability = c.reliability;
                    }
                    (c, u)
                };
                comps.push(c);
                base.push(u);
            }
            let no_evidence = || FireError::NoEvidence {
                target: target.clone(),
                term: term.clone(),
            };
            let ta = TermAssessment::from_components(comps).map_err(|_| no_evidence())?;
            let tu = TermAssessment::from_components(base).map_err(|_| no_evidence())?;
            per_term.insert(term.clone(), ta);
            uniform.insert(term.clone(), tu);
        }
        Ok(FireAssessment {
            assessment: Assessment::build(assessor.clone(), target.clone(), per_term, prefs)?,
            uniform: Assessment::build(assessor.clone(), target.clone(), uniform, prefs)?,
        })
    }
}
