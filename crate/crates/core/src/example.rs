//! The four-provider running example: interaction and witness trust values
//! for quality, timeliness and cost, seen from assessor `A`.

use indexmap::IndexMap;

use crate::explain::ComparisonContext;
use crate::model::{
    AgentId, Assessment, ComponentTrust, CoreError, NativeRange, Preferences, Rating, ReputationType, Term,
    TermAssessment,
};
use crate::store::RatingStore;

pub const ASSESSOR: &str = "A";
/// Source of the witness ratings in [`rating_store`].
pub const WITNESS: &str = "W";
pub const TERMS: [(&str, f64); 3] = [("quality", 0.45), ("timeliness", 0.35), ("cost", 0.20)];
pub const INTERACTION_WEIGHT: f64 = 0.75;
pub const WITNESS_WEIGHT: f64 = 0.25;

/// Provider, interaction values and witness values, terms in [`TERMS`] order.
pub const ROWS: [(&str, [f64; 3], [f64; 3]); 4] = [
    ("B", [0.75, 0.55, 0.40], [0.95, 0.70, 0.30]),
    ("C", [0.10, 0.20, 0.15], [0.40, 0.15, 0.15]),
    ("D", [0.50, 0.95, 0.10], [0.60, 0.80, 0.10]),
    ("E", [0.10, 0.20, 0.40], [0.90, 1.00, 0.95]),
];

fn id(s: &str) -> AgentId {
    AgentId::new(s).expect("non-empty id")
}

fn term(s: &str) -> Term {
    Term::new(s).expect("non-empty term")
}

pub fn preferences() -> Preferences {
    Preferences::new(
        TERMS.iter().map(|(t, w)| (term(t), *w)).collect(),
        [
            (ReputationType::Interaction, INTERACTION_WEIGHT),
            (ReputationType::Witness, WITNESS_WEIGHT),
        ]
        .into_iter()
        .collect(),
    )
    .expect("valid example preferences")
}

/// Assessments built directly from the component values.
pub fn assessments() -> Result<IndexMap<AgentId, Assessment>, CoreError> {
    let prefs = preferences();
    ROWS.iter()
        .map(|(provider, interaction, witness)| {
            let per_term = TERMS
                .iter()
                .enumerate()
                .map(|(i, (t, _))| {
                    let ta = TermAssessment::from_components(vec![
                        ComponentTrust::present(ReputationType::Interaction, interaction[i], INTERACTION_WEIGHT),
                        ComponentTrust::present(ReputationType::Witness, witness[i], WITNESS_WEIGHT),
                    ])?;
                    Ok((term(t), ta))
                })
                .collect::<Result<IndexMap<_, _>, CoreError>>()?;
            let a = Assessment::build(id(ASSESSOR), id(provider), per_term, &prefs)?;
            Ok((id(provider), a))
        })
        .collect()
}

/// Generic comparison context for two example providers.
pub fn context(preferred: &str, other: &str) -> Result<ComparisonContext, CoreError> {
    let all = assessments()?;
    let take = |name: &str| {
        all.get(&id(name))
            .cloned()
            .ok_or_else(|| CoreError::Inconsistent(format!("no example provider {name}")))
    };
    let (p, o) = (take(preferred)?, take(other)?);
    Ok(ComparisonContext::generic(p, o, preferences()))
}

/// One interaction rating by `A` and one witness rating by `W` per provider
/// and term, so that single-rating aggregation reproduces the table.
pub fn rating_store() -> RatingStore {
    let mut store = RatingStore::new();
    for (provider, interaction, witness) in ROWS {
        for (i, (t, _)) in TERMS.iter().enumerate() {
            for (source, k, v) in [
                (ASSESSOR, ReputationType::Interaction, interaction[i]),
                (WITNESS, ReputationType::Witness, witness[i]),
            ] {
                store.insert(
                    Rating::from_native(id(source), id(provider), term(t), k, v, NativeRange::Unit, 0, None)
                        .expect("unit values"),
                );
            }
        }
    }
    store
}
