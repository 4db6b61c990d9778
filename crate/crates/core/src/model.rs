//! Domain types shared by every reputation backend.
//!
//! A [`Rating`] is the atom of evidence. Ratings of one reputation type are
//! aggregated into a [`ComponentTrust`], component trusts of one term are
//! combined into a term trust, and term trusts are combined into the overall
//! score under the assessor's [`Preferences`]. Every value that reaches this
//! layer is already normalized to `[0, 1]`.

use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance used when validating recomputed assessments.
pub const ASSESSMENT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("value {raw} is outside the native range {range}")]
    OutOfRange { raw: f64, range: NativeRange },

    #[error("no component carries evidence")]
    NoEvidence,

    #[error("no terms to combine")]
    NoTerms,

    #[error("term weights sum to zero")]
    WeightSumZero,

    #[error("term sets differ: {0}")]
    TermMismatch(String),

    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("assessment inconsistent: {0}")]
    Inconsistent(String),
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;

/// Opaque agent identifier. Never empty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AgentId(String);

impl AgentId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(CoreError::Invalid {
                what: "agent id",
                reason: "empty".into(),
            });
        }
        Ok(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for AgentId {
    type Error = CoreError;
    fn try_from(value: String) -> Result<Self> {
        Self::new(value)
    }
}

impl From<AgentId> for String {
    fn from(value: AgentId) -> Self {
        value.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An assessable aspect of an interaction, e.g. "quality" or "timeliness".
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Term(String);

impl Term {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(CoreError::Invalid {
                what: "term",
                reason: "empty".into(),
            });
        }
        Ok(Self(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Term {
    type Error = CoreError;
    fn try_from(value: String) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Term> for String {
    fn from(value: Term) -> Self {
        value.0
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Evidence channel a rating belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReputationType {
    Interaction,
    Witness,
    RoleBased,
    Certified,
}

impl ReputationType {
    pub const ALL: [ReputationType; 4] = [
        ReputationType::Interaction,
        ReputationType::Witness,
        ReputationType::RoleBased,
        ReputationType::Certified,
    ];

    /// Short code: I, W, R or Cr.
    pub fn code(self) -> &'static str {
        match self {
            Self::Interaction => "I",
            Self::Witness => "W",
            Self::RoleBased => "R",
            Self::Certified => "Cr",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == code)
    }
}

impl fmt::Display for ReputationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Native scale a rating was recorded on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NativeRange {
    /// FIRE ratings in `[-1, 1]`.
    Signed,
    /// TRAVOS outcomes in `{0, 1}`.
    Binary,
    /// Already on `[0, 1]`.
    Unit,
}

impl fmt::Display for NativeRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Signed => f.write_str("[-1, 1]"),
            Self::Binary => f.write_str("{0, 1}"),
            Self::Unit => f.write_str("[0, 1]"),
        }
    }
}

/// Affine map of a native rating onto `[0, 1]`.
pub fn normalize_rating(raw: f64, range: NativeRange) -> Result<f64> {
    let out_of_range = || CoreError::OutOfRange { raw, range };
    match range {
        NativeRange::Signed if (-1.0..=1.0).contains(&raw) => Ok((raw + 1.0) / 2.0),
        NativeRange::Binary if raw == 0.0 || raw == 1.0 => Ok(raw),
        NativeRange::Unit if (0.0..=1.0).contains(&raw) => Ok(raw),
        _ => Err(out_of_range()),
    }
}

/// Inverse of [`normalize_rating`].
pub fn denormalize_rating(value: f64, range: NativeRange) -> Result<f64> {
    if !(0.0..=1.0).contains(&value) {
        return Err(CoreError::OutOfRange {
            raw: value,
            range: NativeRange::Unit,
        });
    }
    match range {
        NativeRange::Signed => Ok(value * 2.0 - 1.0),
        NativeRange::Binary if value == 0.0 || value == 1.0 => Ok(value),
        NativeRange::Binary => Err(CoreError::OutOfRange { raw: value, range }),
        NativeRange::Unit => Ok(value),
    }
}

/// One trust rating `<source, target, term, type, value>` plus metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rating {
    pub source: AgentId,
    pub target: AgentId,
    pub term: Term,
    pub rep_type: ReputationType,
    /// Normalized value in `[0, 1]`.
    pub value: f64,
    /// Value on the native scale it was recorded on.
    pub raw_value: f64,
    pub timestamp: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interaction_id: Option<String>,
}

impl Rating {
    /// Builds a rating from a native value, normalizing it on the way in.
    #[allow(clippy::too_many_arguments)]
    pub fn from_native(
        source: AgentId,
        target: AgentId,
        term: Term,
        rep_type: ReputationType,
        raw_value: f64,
        range: NativeRange,
        timestamp: u64,
        interaction_id: Option<String>,
    ) -> Result<Self> {
        let value = normalize_rating(raw_value, range)?;
        Ok(Self {
            source,
            target,
            term,
            rep_type,
            value,
            raw_value,
            timestamp,
            interaction_id,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.value) {
            return Err(CoreError::OutOfRange {
                raw: self.value,
                range: NativeRange::Unit,
            });
        }
        Ok(())
    }
}

/// Assessor preferences: term weights and component importance.
///
/// Weights need not sum to one; every formula divides by the sum. Term
/// declaration order is significant and drives explanation ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preferences {
    pub term_weights: IndexMap<Term, f64>,
    pub component_weights: IndexMap<ReputationType, f64>,
}

impl Preferences {
    pub fn new(term_weights: IndexMap<Term, f64>, component_weights: IndexMap<ReputationType, f64>) -> Result<Self> {
        let prefs = Self {
            term_weights,
            component_weights,
        };
        prefs.validate()?;
        Ok(prefs)
    }

    pub fn validate(&self) -> Result<()> {
        check_weights("term weights", self.term_weights.values())?;
        check_weights("component weights", self.component_weights.values())
    }

    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        self.term_weights.keys()
    }

    pub fn component_weight(&self, k: ReputationType) -> f64 {
        self.component_weights.get(&k).copied().unwrap_or(0.0)
    }
}

fn check_weights<'a>(what: &'static str, weights: impl Iterator<Item = &'a f64>) -> Result<()> {
    let mut any_positive = false;
    for &w in weights {
        if !w.is_finite() || w < 0.0 {
            return Err(CoreError::Invalid {
                what,
                reason: format!("weight {w} is not a non-negative number"),
            });
        }
        any_positive |= w > 0.0;
    }
    if !any_positive {
        return Err(CoreError::Invalid {
            what,
            reason: "at least one weight must be positive".into(),
        });
    }
    Ok(())
}

/// Trust derived from a single reputation type for one term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentTrust {
    pub rep_type: ReputationType,
    /// `None` when there is no evidence of this type.
    pub value: Option<f64>,
    /// Effective weight; zero whenever `value` is absent.
    pub weight: f64,
    pub reliability: f64,
}

impl ComponentTrust {
    pub fn present(rep_type: ReputationType, value: f64, weight: f64) -> Self {
        Self {
            rep_type,
            value: Some(value),
            weight,
            reliability: 1.0,
        }
    }

    pub fn absent(rep_type: ReputationType) -> Self {
        Self {
            rep_type,
            value: None,
            weight: 0.0,
            reliability: 0.0,
        }
    }

    pub fn with_reliability(mut self, reliability: f64) -> Self {
        self.reliability = reliability;
        self
    }

    /// Weight that actually participates in the mean.
    pub fn effective_weight(&self) -> f64 {
        if self.value.is_some() {
            self.weight
        } else {
            0.0
        }
    }
}

/// Weighted mean of present component values.
pub fn combine_term_trust(components: &[ComponentTrust]) -> Result<f64> {
    let (num, den) = components
        .iter()
        .filter_map(|c| c.value.map(|v| (v, c.effective_weight())))
        .fold((0.0, 0.0), |(num, den), (v, w)| (num + w * v, den + w));
    if den <= 0.0 {
        return Err(CoreError::NoEvidence);
    }
    Ok(num / den)
}

/// Preference-weighted mean of term trusts.
pub fn overall_trust(term_trusts: &IndexMap<Term, f64>, term_weights: &IndexMap<Term, f64>) -> Result<f64> {
    if term_trusts.is_empty() {
        return Err(CoreError::NoTerms);
    }
    if term_trusts.len() != term_weights.len() || term_trusts.keys().any(|t| !term_weights.contains_key(t)) {
        return Err(CoreError::TermMismatch(format!(
            "trusts for {:?}, weights for {:?}",
            term_trusts.keys().map(Term::as_str).collect::<Vec<_>>(),
            term_weights.keys().map(Term::as_str).collect::<Vec<_>>(),
        )));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (term, trust) in term_trusts {
        let w = term_weights[term];
        num += w * trust;
        den += w;
    }
    if den <= 0.0 {
        return Err(CoreError::WeightSumZero);
    }
    Ok(num / den)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermAssessment {
    pub components: Vec<ComponentTrust>,
    pub term_trust: f64,
}

impl TermAssessment {
    pub fn from_components(components: Vec<ComponentTrust>) -> Result<Self> {
        let term_trust = combine_term_trust(&components)?;
        Ok(Self { components, term_trust })
    }

    pub fn component(&self, k: ReputationType) -> Option<&ComponentTrust> {
        self.components.iter().find(|c| c.rep_type == k)
    }

    pub fn component_value(&self, k: ReputationType) -> Option<f64> {
        self.component(k).and_then(|c| c.value)
    }
}

/// Full breakdown of how `assessor` scores `target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assessment {
    pub assessor: AgentId,
    pub target: AgentId,
    pub per_term: IndexMap<Term, TermAssessment>,
    pub overall: f64,
}

impl Assessment {
    /// Combines per-term breakdowns into an assessment, computing the overall
    /// score from the preferences' term weights.
    pub fn build(
        assessor: AgentId,
        target: AgentId,
        per_term: IndexMap<Term, TermAssessment>,
        prefs: &Preferences,
    ) -> Result<Self> {
        let overall = overall_trust(&term_trust_map(&per_term), &prefs.term_weights)?;
        Ok(Self {
            assessor,
            target,
            per_term,
            overall,
        })
    }

    pub fn term_trust(&self, term: &Term) -> Option<f64> {
        self.per_term.get(term).map(|t| t.term_trust)
    }

    pub fn term_trusts(&self) -> IndexMap<Term, f64> {
        term_trust_map(&self.per_term)
    }

    /// Recomputes every derived value and checks it against the stored one.
    pub fn validate(&self, prefs: &Preferences) -> Result<()> {
        for (term, ta) in &self.per_term {
            let recomputed = combine_term_trust(&ta.components)?;
            if (recomputed - ta.term_trust).abs() > ASSESSMENT_TOLERANCE {
                return Err(CoreError::Inconsistent(format!(
                    "term {term}: stored {} but components give {recomputed}",
                    ta.term_trust
                )));
            }
            for c in &ta.components {
                if let Some(v) = c.value {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(CoreError::Inconsistent(format!(
                            "term {term}: component {} value {v} outside [0, 1]",
                            c.rep_type
                        )));
                    }
                }
            }
        }
        let overall = overall_trust(&self.term_trusts(), &prefs.term_weights)?;
        if (overall - self.overall).abs() > ASSESSMENT_TOLERANCE {
            return Err(CoreError::Inconsistent(format!(
                "overall: stored {} but terms give {overall}",
                self.overall
            )));
        }
        Ok(())
    }
}

fn term_trust_map(per_term: &IndexMap<Term, TermAssessment>) -> IndexMap<Term, f64> {
    per_term.iter().map(|(t, a)| (t.clone(), a.term_trust)).collect()
}
