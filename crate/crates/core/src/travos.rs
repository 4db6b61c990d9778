//! TRAVOS backend.
//!
//! Interaction evidence is a beta distribution over binary outcomes. When
//! the assessor's confidence in it falls below the threshold, witness
//! opinions are discounted by the witness's historical accuracy and summed
//! into the evidence. The composite is then split back into interaction and
//! witness components so it fits the generic term-trust shape.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beta::{beta_mass, NumericError};
use crate::model::{
    AgentId, Assessment, ComponentTrust, CoreError, Preferences, Rating, ReputationType, Term, TermAssessment,
};
use crate::store::{
    bin_bounds, opinion_bin, ObservationRecord, ObservationStore, RatingPattern, RatingStore, StoreError,
};

/// Outcomes at or above this value count as successes.
pub const SUCCESS_THRESHOLD: f64 = 0.5;

const UNIFORM_STD: f64 = 0.288_675_134_594_812_9; // sqrt(1/12)

#[derive(Debug, Error)]
pub enum TravosError {
    #[error("rating value {0} is not binary")]
    NonBinaryRating(f64),

    #[error("discounted moments are not a valid beta distribution ({alpha}, {beta})")]
    DegenerateMoments { alpha: f64, beta: f64 },

    #[error("invalid beta parameters ({alpha}, {beta})")]
    InvalidParams { alpha: f64, beta: f64 },

    #[error("invalid TRAVOS configuration: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numeric(#[from] NumericError),

    #[error(transparent)]
    Store(#[from] StoreError),

    #[error(transparent)]
    Core(#[from] CoreError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaParams {
    pub const UNIFORM: BetaParams = BetaParams { alpha: 1.0, beta: 1.0 };

    pub fn new(alpha: f64, beta: f64) -> Result<Self, TravosError> {
        if alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite() {
            Ok(Self { alpha, beta })
        } else {
            Err(TravosError::InvalidParams { alpha, beta })
        }
    }

    pub fn evidence(&self) -> f64 {
        self.alpha + self.beta
    }

    pub fn expected_value(&self) -> f64 {
        expected_value(*self)
    }

    pub fn variance(&self) -> f64 {
        let n = self.evidence();
        self.alpha * self.beta / (n * n * (n + 1.0))
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TravosConfig {
    /// Half-width of the confidence interval around the expected value.
    pub epsilon: f64,
    /// Interaction confidence below which witnesses are consulted.
    pub confidence_threshold: f64,
    /// Number of equal opinion bins on `[0, 1]`.
    pub bins: usize,
}

impl Default for TravosConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            confidence_threshold: 0.2,
            bins: 5,
        }
    }
}

impl TravosConfig {
    pub fn validate(&self) -> Result<(), TravosError> {
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(TravosError::Config(format!(
                "epsilon {} outside (0, 0.5)",
                self.epsilon
            )));
        }
        if !(self.confidence_threshold > 0.0 && self.confidence_threshold < 1.0) {
            return Err(TravosError::Config(format!(
                "confidence threshold {} outside (0, 1)",
                self.confidence_threshold
            )));
        }
        if self.bins == 0 {
            return Err(TravosError::Config("bins must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessOpinion {
    pub witness: AgentId,
    pub target: AgentId,
    pub term: Term,
    pub params: BetaParams,
    /// Expected value of `params` before discounting.
    pub raw_expected: f64,
}

impl WitnessOpinion {
    pub fn new(witness: AgentId, target: AgentId, term: Term, params: BetaParams) -> Self {
        Self {
            witness,
            target,
            term,
            raw_expected: params.expected_value(),
            params,
        }
    }
}

/// Maps a `[0, 1]` rating onto a binary outcome.
pub fn binarize(value: f64) -> f64 {
    if value >= SUCCESS_THRESHOLD {
        1.0
    } else {
        0.0
    }
}

/// `(1 + successes, 1 + failures)` over strictly binary values.
pub fn beta_from_ratings(values: impl IntoIterator<Item = f64>) -> Result<BetaParams, TravosError> {
    let mut p = BetaParams::UNIFORM;
    for v in values {
        match v {
            1.0 => p.alpha += 1.0,
            0.0 => p.beta += 1.0,
            other => return Err(TravosError::NonBinaryRating(other)),
        }
    }
    Ok(p)
}

/// Evidence counts from `[0, 1]` ratings after thresholding.
pub fn beta_from_outcomes(values: impl IntoIterator<Item = f64>) -> BetaParams {
    beta_from_ratings(values.into_iter().map(binarize)).expect("binarized values are binary")
}

pub fn expected_value(p: BetaParams) -> f64 {
    p.alpha / (p.alpha + p.beta)
}

/// Mass of the distribution within `epsilon` of its expected value.
pub fn confidence(p: BetaParams, epsilon: f64) -> Result<f64, TravosError> {
    let e = p.expected_value();
    Ok(beta_mass(p.alpha, p.beta, e - epsilon, e + epsilon)?)
}

/// Witness accuracy: mass that the outcomes following past opinions in the
/// same bin put on that bin. `observations` must already be filtered to the
/// bin.
pub fn witness_accuracy(
    observations: &[&ObservationRecord],
    opinion_bin: usize,
    bins: usize,
) -> Result<f64, TravosError> {
    let (lo, hi) = bin_bounds(opinion_bin, bins)?;
    let p = beta_from_outcomes(observations.iter().map(|o| o.outcome_rating));
    Ok(beta_mass(p.alpha, p.beta, lo, hi)?)
}

/// Shrinks an opinion toward the uniform prior in proportion to `1 - rho`,
/// matching moments in (mean, standard deviation) space.
pub fn discount_opinion(opinion: &WitnessOpinion, rho: f64) -> Result<BetaParams, TravosError> {
    let rho = rho.clamp(0.0, 1.0);
    let e = 0.5 + rho * (opinion.params.expected_value() - 0.5);
    let sd = UNIFORM_STD + rho * (opinion.params.std_dev() - UNIFORM_STD);
    let var = sd * sd;
    let alpha = (e * e - e * e * e) / var - e;
    let f = 1.0 - e;
    let beta = (f * f - f * f * f) / var - f;
    if alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite() {
        Ok(BetaParams { alpha, beta })
    } else {
        Err(TravosError::DegenerateMoments { alpha, beta })
    }
}

/// Interaction evidence plus every discounted witness contribution.
pub fn combine_evidence(interaction: BetaParams, discounted: &[BetaParams]) -> BetaParams {
    discounted.iter().fold(interaction, |acc, d| BetaParams {
        alpha: acc.alpha + d.alpha,
        beta: acc.beta + d.beta,
    })
}

/// Share of the combined evidence contributed by interaction and by
/// witnesses.
pub fn decomposition_weights(interaction: BetaParams, discounted: &[BetaParams]) -> (f64, f64) {
    let witness_mass: f64 = discounted.iter().map(BetaParams::evidence).sum();
    let w_i = interaction.evidence() / (interaction.evidence() + witness_mass);
    (w_i, 1.0 - w_i)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessContribution {
    pub opinion: WitnessOpinion,
    pub opinion_bin: usize,
    pub accuracy: f64,
    pub discounted: BetaParams,
    /// Set when the discounted moments were invalid and the uniform prior
    /// was used instead.
    pub clamped: bool,
}

/// Per-term TRAVOS intermediate values kept for explanation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TravosTermDiagnostics {
    pub interaction: BetaParams,
    pub interaction_confidence: f64,
    pub low_confidence: bool,
    pub witnesses: Vec<WitnessContribution>,
    pub combined: BetaParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TravosAssessment {
    pub assessment: Assessment,
    pub terms: IndexMap<Term, TravosTermDiagnostics>,
}

#[derive(Debug, Clone)]
pub struct Travos {
    config: TravosConfig,
}

impl Travos {
    pub fn new(config: TravosConfig) -> Result<Self, TravosError> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn config(&self) -> &TravosConfig {
        &self.config
    }

    /// Witnesses that reported on `target` for `term`, ordered by id.
    fn opinions(&self, store: &RatingStore, assessor: &AgentId, target: &AgentId, term: &Term) -> Vec<WitnessOpinion> {
        let mut by_witness: IndexMap<AgentId, Vec<&Rating>> = IndexMap::new();
        let pattern = RatingPattern::any()
            .target(target)
            .term(term)
            .rep_type(ReputationType::Witness);
        for r in store.query(&pattern) {
            if r.source != *assessor {
                by_witness.entry(r.source.clone()).or_default().push(r);
            }
        }
        by_witness.sort_keys();
        by_witness
            .into_iter()
            .map(|(w, rs)| {
                let params = beta_from_outcomes(rs.iter().map(|r| r.value));
                WitnessOpinion::new(w, target.clone(), term.clone(), params)
            })
            .collect()
    }

    pub fn assess_term(
        &self,
        store: &RatingStore,
        observations: &ObservationStore,
        assessor: &AgentId,
        target: &AgentId,
        term: &Term,
    ) -> Result<(TermAssessment, TravosTermDiagnostics), TravosError> {
        let own = store.query(
            &RatingPattern::any()
                .source(assessor)
                .target(target)
                .term(term)
                .rep_type(ReputationType::Interaction),
        );
        let interaction = beta_from_outcomes(own.iter().map(|r| r.value));
        let interaction_confidence = confidence(interaction, self.config.epsilon)?;
        let low_confidence = interaction_confidence < self.config.confidence_threshold;

        let mut witnesses = Vec::new();
        if low_confidence {
            for opinion in self.opinions(store, assessor, target, term) {
                let bin = opinion_bin(opinion.raw_expected, self.config.bins)?;
                let past = observations.query(assessor, &opinion.witness, term, bin, self.config.bins)?;
                let accuracy = witness_accuracy(&past, bin, self.config.bins)?;
                let (discounted, clamped) = match discount_opinion(&opinion, accuracy) {
                    Ok(d) => (d, false),
                    Err(TravosError::DegenerateMoments { .. }) => (BetaParams::UNIFORM, true),
                    Err(e) => return Err(e),
                };
                witnesses.push(WitnessContribution {
                    opinion,
                    opinion_bin: bin,
                    accuracy,
                    discounted,
                    clamped,
                });
            }
        }

        let discounted: Vec<BetaParams> = witnesses.iter().map(|w| w.discounted).collect();
        let combined = combine_evidence(interaction, &discounted);
        let (w_i, w_w) = decomposition_weights(interaction, &discounted);

        let mut components =
            vec![
                ComponentTrust::present(ReputationType::Interaction, interaction.expected_value(), w_i)
                    .with_reliability(interaction_confidence),
            ];
        if discounted.is_empty() {
            components.push(ComponentTrust::absent(ReputationType::Witness));
        } else {
            // Pooled witness evidence without an extra prior, so that the two
            // components recombine exactly to the composite expected value.
            let pooled = combine_evidence(BetaParams { alpha: 0.0, beta: 0.0 }, &discounted);
            components.push(
                ComponentTrust::present(ReputationType::Witness, pooled.expected_value(), w_w)
                    .with_reliability(confidence(pooled, self.config.epsilon)?),
            );
        }
        let mut ta = TermAssessment::from_components(components)?;
        // Use the composite directly; the decomposition reproduces it up to rounding.
        ta.term_trust = combined.expected_value();
        Ok((
            ta,
            TravosTermDiagnostics {
                interaction,
                interaction_confidence,
                low_confidence,
                witnesses,
                combined,
            },
        ))
    }

    pub fn assess(
        &self,
        store: &RatingStore,
        observations: &ObservationStore,
        assessor: &AgentId,
        target: &AgentId,
        prefs: &Preferences,
    ) -> Result<TravosAssessment, TravosError> {
        let mut per_term = IndexMap::new();
        let mut terms = IndexMap::new();
        for term in prefs.terms() {
            let (ta, diag) = self.assess_term(store, observations, assessor, target, term)?;
            per_term.insert(term.clone(), ta);
            terms.insert(term.clone(), diag);
        }
        Ok(TravosAssessment {
            assessment: Assessment::build(assessor.clone(), target.clone(), per_term, prefs)?,
            terms,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beta::beta_mass_quadrature;

    fn id(s: &str) -> AgentId {
        AgentId::new(s).unwrap()
    }

    fn bp(a: f64, b: f64) -> BetaParams {
        BetaParams::new(a, b).unwrap()
    }

    #[test]
    fn counting() {
        assert_eq!(beta_from_ratings([1.0, 1.0, 0.0, 1.0]).unwrap(), bp(4.0, 2.0));
        assert_eq!(beta_from_ratings([]).unwrap(), bp(1.0, 1.0));
        assert_eq!(beta_from_ratings([0.0, 0.0]).unwrap(), bp(1.0, 3.0));
        assert!(matches!(beta_from_ratings([0.7]), Err(TravosError::NonBinaryRating(_))));
        assert_eq!(beta_from_outcomes([0.5, 0.49, 0.9]), bp(3.0, 2.0));
    }

    #[test]
    fn expectations() {
        assert_eq!(expected_value(bp(1.0, 1.0)), 0.5);
        assert!((expected_value(bp(4.0, 2.0)) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(expected_value(bp(7.5, 7.5)), 0.5);
    }

    #[test]
    fn confidence_examples() {
        assert!((confidence(bp(1.0, 1.0), 0.1).unwrap() - 0.2).abs() < 1e-12);
        // Beta(2,1) density 2x: mass on [E-0.1, E+0.1] with E = 2/3.
        let (lo, hi) = (2.0 / 3.0 - 0.1, 2.0 / 3.0 + 0.1);
        let oracle = hi * hi - lo * lo;
        assert!((confidence(bp(2.0, 1.0), 0.1).unwrap() - oracle).abs() < 1e-12);
        assert!((oracle - 0.266_67).abs() < 1e-5);
        let q = beta_mass_quadrature(500.0, 500.0, 0.4, 0.6, 1e-12).unwrap();
        let c = confidence(bp(500.0, 500.0), 0.1).unwrap();
        assert!(c >= 0.999 && (c - q).abs() < 1e-9);
    }

    #[test]
    fn confidence_clips_limits() {
        // E = 11/12, so the upper limit is clipped at 1.
        let p = bp(11.0, 1.0);
        let e = p.expected_value();
        let oracle = 1.0 - (e - 0.2f64).powi(11);
        assert!((confidence(p, 0.2).unwrap() - oracle).abs() < 1e-12);
    }

    fn obs(outcome: f64, opinion: f64) -> ObservationRecord {
        ObservationRecord {
            assessor: id("a"),
            witness: id("w"),
            target: id("b"),
            term: Term::new("q").unwrap(),
            interaction_id: "i".into(),
            opinion_value: opinion,
            outcome_rating: outcome,
        }
    }

    #[test]
    fn accuracy_examples() {
        assert!((witness_accuracy(&[], 3, 5).unwrap() - 0.2).abs() < 1e-12);

        let good: Vec<_> = (0..10).map(|_| obs(1.0, 0.9)).collect();
        let refs: Vec<_> = good.iter().collect();
        let rho = witness_accuracy(&refs, 5, 5).unwrap();
        assert!(rho > 0.6);
        assert!((rho - (1.0 - 0.8f64.powi(11))).abs() < 1e-12);

        let bad: Vec<_> = (0..10).map(|_| obs(0.0, 0.9)).collect();
        let refs: Vec<_> = bad.iter().collect();
        let rho = witness_accuracy(&refs, 5, 5).unwrap();
        // Beta(1, 11): P(X > 0.8) = 0.2^11
        assert!(rho < 0.01);
        assert!((rho - 0.2f64.powi(11)).abs() < 1e-15);
        assert!(witness_accuracy(&refs, 6, 5).is_err());
    }

    fn opinion(a: f64, b: f64) -> WitnessOpinion {
        WitnessOpinion::new(id("w"), id("b"), Term::new("q").unwrap(), bp(a, b))
    }

    #[test]
    fn discount_extremes() {
        let d = discount_opinion(&opinion(4.0, 2.0), 0.0).unwrap();
        assert!((d.alpha - 1.0).abs() < 1e-12 && (d.beta - 1.0).abs() < 1e-12);
        let d = discount_opinion(&opinion(4.0, 2.0), 1.0).unwrap();
        assert!((d.alpha - 4.0).abs() < 1e-9 && (d.beta - 2.0).abs() < 1e-9);
    }

    #[test]
    fn discount_half_matches_moment_oracle() {
        // Independent route: interpolate mean and sd, then solve the beta
        // moment equations n = m(1-m)/v - 1, alpha = m n.
        let p = bp(4.0, 2.0);
        let m0 = 4.0 / 6.0;
        let sd0 = (4.0f64 * 2.0 / (36.0 * 7.0)).sqrt();
        let m = 0.5 + 0.5 * (m0 - 0.5);
        let sd = (1.0f64 / 12.0).sqrt() + 0.5 * (sd0 - (1.0f64 / 12.0).sqrt());
        let n = m * (1.0 - m) / (sd * sd) - 1.0;
        let d = discount_opinion(&WitnessOpinion::new(id("w"), id("b"), Term::new("q").unwrap(), p), 0.5).unwrap();
        assert!((d.alpha - m * n).abs() < 1e-12);
        assert!((d.beta - (1.0 - m) * n).abs() < 1e-12);
        assert!((d.expected_value() - m).abs() < 1e-12);
        assert!((d.std_dev() - sd).abs() < 1e-12);
    }

    #[test]
    fn combination_and_weights() {
        assert_eq!(combine_evidence(bp(3.0, 2.0), &[bp(2.0, 1.0)]), bp(5.0, 3.0));
        assert_eq!(combine_evidence(bp(1.0, 1.0), &[]), bp(1.0, 1.0));
        assert_eq!(
            combine_evidence(bp(1.0, 1.0), &[bp(1.0, 1.0), bp(1.0, 1.0)]),
            bp(3.0, 3.0)
        );

        assert_eq!(decomposition_weights(bp(3.0, 2.0), &[bp(3.0, 2.0)]), (0.5, 0.5));
        assert_eq!(decomposition_weights(bp(1.0, 1.0), &[]), (1.0, 0.0));
        let (wi, ww) = decomposition_weights(bp(2.0, 2.0), &[bp(4.0, 4.0)]);
        assert!((wi - 1.0 / 3.0).abs() < 1e-15 && (ww - 2.0 / 3.0).abs() < 1e-15);
    }

    fn rating(src: &str, k: ReputationType, v: f64, ts: u64) -> Rating {
        Rating {
            source: id(src),
            target: id("b"),
            term: Term::new("q").unwrap(),
            rep_type: k,
            value: v,
            raw_value: v,
            timestamp: ts,
            interaction_id: None,
        }
    }

    #[test]
    fn confident_assessor_ignores_witnesses() {
        let mut store = RatingStore::new();
        for ts in 0..40 {
            store.insert(rating("a", ReputationType::Interaction, 1.0, ts));
        }
        store.insert(rating("w", ReputationType::Witness, 0.0, 0));
        let t = Travos::new(TravosConfig::default()).unwrap();
        let (ta, diag) = t
            .assess_term(
                &store,
                &ObservationStore::new(),
                &id("a"),
                &id("b"),
                &Term::new("q").unwrap(),
            )
            .unwrap();
        assert!(!diag.low_confidence);
        assert!(diag.witnesses.is_empty());
        assert_eq!(ta.component(ReputationType::Interaction).unwrap().weight, 1.0);
        assert!(ta.component_value(ReputationType::Witness).is_none());
        assert!((ta.term_trust - 41.0 / 42.0).abs() < 1e-12);
    }

    #[test]
    fn fully_trusted_witness_chain() {
        // (1,1) interaction, witness (11,1) with accuracy 1 -> (12, 2).
        let d = discount_opinion(&opinion(11.0, 1.0), 1.0).unwrap();
        assert!((d.alpha - 11.0).abs() < 1e-9 && (d.beta - 1.0).abs() < 1e-9);
        let c = combine_evidence(BetaParams::UNIFORM, &[d]);
        assert!((c.expected_value() - 12.0 / 14.0).abs() < 1e-9);
        assert!((c.expected_value() - 0.857).abs() < 1e-3);
    }

    #[test]
    fn no_evidence_is_uniform_and_flagged() {
        let t = Travos::new(TravosConfig::default()).unwrap();
        let (ta, diag) = t
            .assess_term(
                &RatingStore::new(),
                &ObservationStore::new(),
                &id("a"),
                &id("b"),
                &Term::new("q").unwrap(),
            )
            .unwrap();
        assert_eq!(ta.term_trust, 0.5);
        assert!(diag.low_confidence);
    }

    #[test]
    fn witnesses_are_discounted_and_recombine() {
        let mut store = RatingStore::new();
        store.insert(rating("a", ReputationType::Interaction, 0.0, 0));
        for ts in 0..6 {
            store.insert(rating("w", ReputationType::Witness, 1.0, ts));
            store.insert(rating(
                "v",
                ReputationType::Witness,
                if ts % 2 == 0 { 1.0 } else { 0.2 },
                ts,
            ));
        }
        let mut observations = ObservationStore::new();
        for _ in 0..5 {
            observations.insert(obs(1.0, 0.9));
        }
        let t = Travos::new(TravosConfig::default()).unwrap();
        let (ta, diag) = t
            .assess_term(&store, &observations, &id("a"), &id("b"), &Term::new("q").unwrap())
            .unwrap();
        assert!(diag.low_confidence);
        assert_eq!(diag.witnesses.len(), 2);
        assert_eq!(diag.witnesses[0].opinion.witness, id("v"));
        // w's opinion (7,1) lands in bin 5, where its past record is good.
        let w = &diag.witnesses[1];
        assert_eq!(w.opinion_bin, 5);
        assert!((w.accuracy - (1.0 - 0.8f64.powi(6))).abs() < 1e-12);
        // v has no history: accuracy is the uniform mass of one bin.
        assert!((diag.witnesses[0].accuracy - 0.2).abs() < 1e-12);

        let recombined = crate::model::combine_term_trust(&ta.components).unwrap();
        assert!((recombined - ta.term_trust).abs() < 1e-12);
        assert!((ta.term_trust - diag.combined.expected_value()).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(Travos::new(TravosConfig {
            epsilon: 0.5,
            ..TravosConfig::default()
        })
        .is_err());
        assert!(Travos::new(TravosConfig {
            bins: 0,
            ..TravosConfig::default()
        })
        .is_err());
        assert!(Travos::new(TravosConfig {
            confidence_threshold: 1.0,
            ..TravosConfig::default()
        })
        .is_err());
    }
}
