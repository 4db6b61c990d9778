//! Argument generation: why does `preferred` outrank `other`?
//!
//! The coarse argument is always the set of decisive terms, either from the
//! domination rule or from the decisive-criteria / trade-off pattern. For
//! every decisive pro the explainer then looks for decisive reputation types
//! (a permutation of component weights that would invert the term trusts)
//! and for model-specific arguments: recency for FIRE, low interaction
//! confidence for TRAVOS.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fire::FireAssessment;
use crate::model::{
    combine_term_trust, AgentId, Assessment, ComponentTrust, CoreError, Preferences, ReputationType, Term,
    ASSESSMENT_TOLERANCE,
};
use crate::travos::{TravosAssessment, TravosConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExplainError {
    #[error("{other} ({other_score:.4}) outranks {preferred} ({preferred_score:.4})")]
    NotPreferred {
        preferred: AgentId,
        other: AgentId,
        preferred_score: f64,
        other_score: f64,
    },

    #[error("{preferred} and {other} have the same overall score {score:.4}")]
    AmbiguousOrder {
        preferred: AgentId,
        other: AgentId,
        score: f64,
    },

    #[error("{preferred} does not dominate {other}")]
    NotDominant { preferred: AgentId, other: AgentId },

    #[error("no pros outweigh the cons")]
    Infeasible,

    #[error("comparison lacks {0} diagnostics")]
    MissingDiagnostics(&'static str),

    #[error("term {0} missing from an assessment")]
    MissingTerm(Term),

    #[error(transparent)]
    Core(#[from] CoreError),
}

pub type Result<T, E = ExplainError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// Component trusts supplied directly; no model-specific arguments.
    Generic,
    Fire,
    Travos,
}

/// Model-specific values the explainer needs beyond the two assessments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelDiagnostics {
    Generic,
    Fire {
        preferred_uniform: Assessment,
        other_uniform: Assessment,
    },
    Travos {
        confidence_threshold: f64,
        preferred_confidence: IndexMap<Term, f64>,
        other_confidence: IndexMap<Term, f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonContext {
    pub assessor: AgentId,
    pub preferred: Assessment,
    pub other: Assessment,
    pub preferences: Preferences,
    pub diagnostics: ModelDiagnostics,
}

impl ComparisonContext {
    pub fn generic(preferred: Assessment, other: Assessment, preferences: Preferences) -> Self {
        Self {
            assessor: preferred.assessor.clone(),
            preferred,
            other,
            preferences,
            diagnostics: ModelDiagnostics::Generic,
        }
    }

    pub fn fire(preferred: FireAssessment, other: FireAssessment, preferences: Preferences) -> Self {
        Self {
            assessor: preferred.assessment.assessor.clone(),
            preferred: preferred.assessment,
            other: other.assessment,
            preferences,
            diagnostics: ModelDiagnostics::Fire {
                preferred_uniform: preferred.uniform,
                other_uniform: other.uniform,
            },
        }
    }

    pub fn travos(
        preferred: TravosAssessment,
        other: TravosAssessment,
        preferences: Preferences,
        config: &TravosConfig,
    ) -> Self {
        let conf = |a: &TravosAssessment| {
            a.terms
                .iter()
                .map(|(t, d)| (t.clone(), d.interaction_confidence))
                .collect()
        };
        Self {
            assessor: preferred.assessment.assessor.clone(),
            diagnostics: ModelDiagnostics::Travos {
                confidence_threshold: config.confidence_threshold,
                preferred_confidence: conf(&preferred),
                other_confidence: conf(&other),
            },
            preferred: preferred.assessment,
            other: other.assessment,
            preferences,
        }
    }

    pub fn model(&self) -> Model {
        match self.diagnostics {
            ModelDiagnostics::Generic => Model::Generic,
            ModelDiagnostics::Fire { .. } => Model::Fire,
            ModelDiagnostics::Travos { .. } => Model::Travos,
        }
    }

    /// Signed term-trust differences `T(b,t) - T(b',t)` with normalized term
    /// weights, in declaration order.
    fn differences(&self) -> Result<Vec<TermGap>> {
        let total: f64 = self.preferences.term_weights.values().sum();
        if total <= 0.0 {
            return Err(CoreError::WeightSumZero.into());
        }
        self.preferences
            .term_weights
            .iter()
            .map(|(term, w)| {
                let b = self
                    .preferred
                    .term_trust(term)
                    .ok_or_else(|| ExplainError::MissingTerm(term.clone()))?;
                let b2 = self
                    .other
                    .term_trust(term)
                    .ok_or_else(|| ExplainError::MissingTerm(term.clone()))?;
                Ok(TermGap {
                    term: term.clone(),
                    diff: b - b2,
                    weight: w / total,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
struct TermGap {
    term: Term,
    diff: f64,
    weight: f64,
}

impl TermGap {
    fn weighted(&self) -> f64 {
        self.weight * self.diff.abs()
    }
}

/// A term together with its weighted term-trust difference `w_t * |Δ_t|`
/// (term weights normalized to sum to one).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermDifference {
    pub term: Term,
    pub weighted_difference: f64,
}

/// One transposition of component weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeSwap {
    /// Type that carried the smaller weight for the preferred provider.
    pub less_important: ReputationType,
    pub more_important: ReputationType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Argument {
    DecisiveDominance {
        pros: Vec<TermDifference>,
        /// Reference weighted value difference.
        reference: f64,
    },
    DecisiveTradeoff {
        pros: Vec<TermDifference>,
        cons: Vec<TermDifference>,
    },
    TypePermutation {
        term: Term,
        /// Applied left to right.
        swaps: Vec<TypeSwap>,
        preferred_trust: f64,
        other_trust: f64,
        /// Other inverting permutations with as few swaps.
        alternatives: usize,
    },
    FireRecencyGlobal {
        preferred_uniform: f64,
        other_uniform: f64,
    },
    FireRecencyLocal {
        term: Term,
        rep_type: ReputationType,
        preferred_uniform: f64,
        other_uniform: f64,
    },
    TravosLowConfidence {
        term: Term,
        preferred_confidence: f64,
        other_confidence: f64,
        preferred_witness: f64,
        other_witness: f64,
    },
}

impl Argument {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::DecisiveDominance { .. } => "decisive_dominance",
            Self::DecisiveTradeoff { .. } => "decisive_tradeoff",
            Self::TypePermutation { .. } => "type_permutation",
            Self::FireRecencyGlobal { .. } => "fire_recency_global",
            Self::FireRecencyLocal { .. } => "fire_recency_local",
            Self::TravosLowConfidence { .. } => "travos_low_confidence",
        }
    }

    /// Decisive pros, when this is a decisive-terms argument.
    pub fn pros(&self) -> Option<&[TermDifference]> {
        match self {
            Self::DecisiveDominance { pros, .. } | Self::DecisiveTradeoff { pros, .. } => Some(pros),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub assessor: AgentId,
    pub preferred: AgentId,
    pub other: AgentId,
    pub model: Model,
    pub arguments: Vec<Argument>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplainOptions {
    /// Also generate fine-grained arguments for decisive cons.
    pub include_cons: bool,
}

/// At least one term strictly better and none strictly worse.
pub fn dominates(ctx: &ComparisonContext) -> Result<bool> {
    let gaps = ctx.differences()?;
    Ok(gaps.iter().any(|g| g.diff > 0.0) && !gaps.iter().any(|g| g.diff < 0.0))
}

fn sort_desc(items: &mut [TermDifference]) {
    // stable: equal values keep declaration order
    items.sort_by(|a, b| b.weighted_difference.total_cmp(&a.weighted_difference));
}

/// Decisive pros under domination: terms whose weighted difference exceeds
/// the reference `(1/n) * mean(Δ)`.
pub fn decisive_terms_dominance(ctx: &ComparisonContext) -> Result<Argument> {
    if !dominates(ctx)? {
        return Err(ExplainError::NotDominant {
            preferred: ctx.preferred.target.clone(),
            other: ctx.other.target.clone(),
        });
    }
    let gaps = ctx.differences()?;
    let n = gaps.len() as f64;
    let mean_gap = gaps.iter().map(|g| g.diff.abs()).sum::<f64>() / n;
    let reference = mean_gap / n;
    let all: Vec<TermDifference> = gaps
        .iter()
        .map(|g| TermDifference {
            term: g.term.clone(),
            weighted_difference: g.weighted(),
        })
        .collect();
    let mut pros: Vec<TermDifference> = all
        .iter()
        .filter(|d| d.weighted_difference > reference)
        .cloned()
        .collect();
    if pros.is_empty() {
        let mut ranked = all;
        sort_desc(&mut ranked);
        pros.push(ranked.swap_remove(0));
    }
    sort_desc(&mut pros);
    Ok(Argument::DecisiveDominance { pros, reference })
}

/// Minimal decisive pros and cons for weighted differences `pros` and `cons`
/// (all non-negative, in declaration order).
///
/// Returns index sets `(P, C)` with `sum(P) > sum(cons \ C)`. Solutions with
/// `C` empty are preferred; then `|P|` is minimized, then `|C|`, then the
/// sums of `P` and `C` are maximized, then earlier-declared terms win. The
/// indices come back ordered by descending value.
pub fn select_tradeoff(pros: &[f64], cons: &[f64]) -> Option<(Vec<usize>, Vec<usize>)> {
    let by_value = |xs: &[f64]| {
        let mut idx: Vec<usize> = (0..xs.len()).collect();
        idx.sort_by(|&a, &b| xs[b].total_cmp(&xs[a]));
        idx
    };
    let pro_order = by_value(pros);
    let con_order = by_value(cons);
    let sum_of = |xs: &[f64], idx: &[usize]| {
        let mut sorted = idx.to_vec();
        sorted.sort_unstable();
        sorted.iter().map(|&i| xs[i]).sum::<f64>()
    };

    let all_cons: Vec<usize> = (0..cons.len()).collect();
    let all_cons_sum = sum_of(cons, &all_cons);
    for k in 1..=pros.len() {
        let chosen = &pro_order[..k];
        if sum_of(pros, chosen) > all_cons_sum {
            return Some((chosen.to_vec(), Vec::new()));
        }
    }

    // Every pro together still loses: keep the strongest pro and set aside
    // the largest cons until it wins.
    let best = *pro_order.first()?;
    for k in 1..=cons.len() {
        let removed = &con_order[..k];
        let rest: Vec<usize> = con_order[k..].to_vec();
        if pros[best] > sum_of(cons, &rest) {
            return Some((vec![best], removed.to_vec()));
        }
    }
    None
}

/// Decisive criteria when neither provider dominates.
pub fn decisive_terms_tradeoff(ctx: &ComparisonContext) -> Result<Argument> {
    let gaps = ctx.differences()?;
    let pros: Vec<&TermGap> = gaps.iter().filter(|g| g.diff > 0.0).collect();
    let cons: Vec<&TermGap> = gaps.iter().filter(|g| g.diff < 0.0).collect();
    let pv: Vec<f64> = pros.iter().map(|g| g.weighted()).collect();
    let cv: Vec<f64> = cons.iter().map(|g| g.weighted()).collect();
    let (p, c) = select_tradeoff(&pv, &cv).ok_or(ExplainError::Infeasible)?;
    let pick = |src: &[&TermGap], idx: Vec<usize>| {
        idx.into_iter()
            .map(|i| TermDifference {
                term: src[i].term.clone(),
                weighted_difference: src[i].weighted(),
            })
            .collect::<Vec<_>>()
    };
    Ok(Argument::DecisiveTradeoff {
        pros: pick(&pros, p),
        cons: pick(&cons, c),
    })
}

/// Applies `swaps` in order to the weights of `components`.
pub fn apply_swaps(components: &[ComponentTrust], swaps: &[TypeSwap]) -> Vec<ComponentTrust> {
    let mut out = components.to_vec();
    for s in swaps {
        let i = out.iter().position(|c| c.rep_type == s.less_important);
        let j = out.iter().position(|c| c.rep_type == s.more_important);
        if let (Some(i), Some(j)) = (i, j) {
            let wi = out[i].weight;
            out[i].weight = out[j].weight;
            out[j].weight = wi;
        }
    }
    out
}

/// Next permutation in lexicographic order; false after the last one.
fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("pivot exists");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Transpositions turning the identity arrangement into `perm`, fewest first.
fn transpositions(perm: &[usize]) -> Vec<(usize, usize)> {
    let mut cur: Vec<usize> = (0..perm.len()).collect();
    let mut out = Vec::new();
    for i in 0..perm.len() {
        if cur[i] != perm[i] {
            let j = cur.iter().position(|&x| x == perm[i]).expect("perm is a permutation");
            cur.swap(i, j);
            out.push((i, j));
        }
    }
    out
}

fn term_components<'a>(a: &'a Assessment, term: &Term) -> Result<&'a [ComponentTrust]> {
    a.per_term
        .get(term)
        .map(|t| t.components.as_slice())
        .ok_or_else(|| ExplainError::MissingTerm(term.clone()))
}

/// Component-level domination for `term`: on the reputation types both
/// providers have values for, `preferred` is somewhere better and nowhere
/// worse. Naming the term is then argument enough.
pub fn component_dominates(ctx: &ComparisonContext, term: &Term) -> Result<bool> {
    let mine = term_components(&ctx.preferred, term)?;
    let theirs = term_components(&ctx.other, term)?;
    let (mut better, mut worse) = (false, false);
    for c in mine {
        let b = c.value;
        let b2 = theirs.iter().find(|o| o.rep_type == c.rep_type).and_then(|o| o.value);
        if let (Some(b), Some(b2)) = (b, b2) {
            better |= b > b2;
            worse |= b < b2;
        }
    }
    Ok(better && !worse)
}

/// Decisive reputation types for `term`: the cheapest permutation of
/// component weights under which `other` would have the higher term trust.
///
/// Only types with values for both providers take part, and each provider's
/// own weights are permuted. Among permutations with the fewest swaps the
/// one moving the most weight (preferred provider's weights) wins. Returns
/// `None` when no permutation inverts the order.
pub fn invert_permutation(ctx: &ComparisonContext, term: &Term) -> Result<Option<Argument>> {
    let mine = term_components(&ctx.preferred, term)?;
    let theirs = term_components(&ctx.other, term)?;
    let has_value = |cs: &[ComponentTrust], k| cs.iter().any(|c| c.rep_type == k && c.value.is_some());
    let shared: Vec<(ReputationType, f64)> = mine
        .iter()
        .filter(|c| c.value.is_some() && has_value(theirs, c.rep_type))
        .map(|c| (c.rep_type, c.weight))
        .collect();
    if shared.len() < 2 {
        return Ok(None);
    }

    let weight_of = |k: ReputationType| shared.iter().find(|s| s.0 == k).map_or(0.0, |s| s.1);
    let n = shared.len();
    let mut perm: Vec<usize> = (0..n).collect();
    // (swap count, gap, trusts, swaps)
    type Candidate = (usize, f64, (f64, f64), Vec<TypeSwap>);
    let mut best: Option<Candidate> = None;
    let mut tied = 0usize;
    while next_permutation(&mut perm) {
        let swaps: Vec<TypeSwap> = transpositions(&perm)
            .into_iter()
            .map(|(i, j)| {
                let (ki, kj) = (shared[i].0, shared[j].0);
                if weight_of(ki) <= weight_of(kj) {
                    TypeSwap {
                        less_important: ki,
                        more_important: kj,
                    }
                } else {
                    TypeSwap {
                        less_important: kj,
                        more_important: ki,
                    }
                }
            })
            .collect();
        let t_mine = combine_term_trust(&apply_swaps(mine, &swaps))?;
        let t_theirs = combine_term_trust(&apply_swaps(theirs, &swaps))?;
        if t_mine >= t_theirs {
            continue;
        }
        let gap: f64 = swaps
            .iter()
            .map(|s| (weight_of(s.more_important) - weight_of(s.less_important)).abs())
            .sum();
        let candidate = (swaps.len(), gap, (t_mine, t_theirs), swaps);
        match &best {
            None => {
                best = Some(candidate);
                tied = 0;
            }
            Some(b) if candidate.0 < b.0 || (candidate.0 == b.0 && candidate.1 > b.1) => {
                tied = if candidate.0 == b.0 { tied + 1 } else { 0 };
                best = Some(candidate);
            }
            Some(b) if candidate.0 == b.0 => tied += 1,
            Some(_) => {}
        }
    }
    Ok(best.map(|(_, _, (p, o), swaps)| Argument::TypePermutation {
        term: term.clone(),
        swaps,
        preferred_trust: p,
        other_trust: o,
        alternatives: tied,
    }))
}

fn fire_uniform(ctx: &ComparisonContext) -> Result<(&Assessment, &Assessment)> {
    match &ctx.diagnostics {
        ModelDiagnostics::Fire {
            preferred_uniform,
            other_uniform,
        } => Ok((preferred_uniform, other_uniform)),
        _ => Err(ExplainError::MissingDiagnostics("FIRE")),
    }
}

/// Recency decides the overall order: uniform weighting would reverse it.
pub fn fire_recency_global(ctx: &ComparisonContext) -> Result<Option<Argument>> {
    let (pu, ou) = fire_uniform(ctx)?;
    let holds = ctx.preferred.overall > ctx.other.overall && pu.overall < ou.overall;
    Ok(holds.then_some(Argument::FireRecencyGlobal {
        preferred_uniform: pu.overall,
        other_uniform: ou.overall,
    }))
}

/// Recency decides the order of one component's trust values for `term`.
pub fn fire_recency_local(ctx: &ComparisonContext, term: &Term, rep_type: ReputationType) -> Result<Option<Argument>> {
    let (pu, ou) = fire_uniform(ctx)?;
    let get = |a: &Assessment| a.per_term.get(term).and_then(|t| t.component_value(rep_type));
    let (Some(b), Some(b2), Some(ub), Some(ub2)) = (get(&ctx.preferred), get(&ctx.other), get(pu), get(ou)) else {
        return Ok(None);
    };
    Ok((b > b2 && ub < ub2).then(|| Argument::FireRecencyLocal {
        term: term.clone(),
        rep_type,
        preferred_uniform: ub,
        other_uniform: ub2,
    }))
}

/// Witnesses decide `term` because interaction evidence was thin.
pub fn travos_low_confidence(ctx: &ComparisonContext, term: &Term) -> Result<Option<Argument>> {
    let ModelDiagnostics::Travos {
        confidence_threshold,
        preferred_confidence,
        other_confidence,
    } = &ctx.diagnostics
    else {
        return Err(ExplainError::MissingDiagnostics("TRAVOS"));
    };
    let (Some(&cb), Some(&cb2)) = (preferred_confidence.get(term), other_confidence.get(term)) else {
        return Err(ExplainError::MissingDiagnostics("TRAVOS confidence"));
    };
    let witness = |a: &Assessment| {
        a.per_term
            .get(term)
            .and_then(|t| t.component_value(ReputationType::Witness))
    };
    let (Some(wb), Some(wb2)) = (witness(&ctx.preferred), witness(&ctx.other)) else {
        return Ok(None);
    };
    let low = cb < *confidence_threshold || cb2 < *confidence_threshold;
    Ok((low && wb > wb2).then(|| Argument::TravosLowConfidence {
        term: term.clone(),
        preferred_confidence: cb,
        other_confidence: cb2,
        preferred_witness: wb,
        other_witness: wb2,
    }))
}

pub fn explain(ctx: &ComparisonContext) -> Result<Explanation> {
    explain_with(ctx, &ExplainOptions::default())
}

pub fn explain_with(ctx: &ComparisonContext, options: &ExplainOptions) -> Result<Explanation> {
    let (b, b2) = (ctx.preferred.overall, ctx.other.overall);
    if (b - b2).abs() <= ASSESSMENT_TOLERANCE {
        return Err(ExplainError::AmbiguousOrder {
            preferred: ctx.preferred.target.clone(),
            other: ctx.other.target.clone(),
            score: b,
        });
    }
    if b < b2 {
        return Err(ExplainError::NotPreferred {
            preferred: ctx.preferred.target.clone(),
            other: ctx.other.target.clone(),
            preferred_score: b,
            other_score: b2,
        });
    }

    let decisive = if dominates(ctx)? {
        decisive_terms_dominance(ctx)?
    } else {
        decisive_terms_tradeoff(ctx)?
    };
    let mut focus: Vec<Term> = decisive
        .pros()
        .unwrap_or_default()
        .iter()
        .map(|d| d.term.clone())
        .collect();
    if options.include_cons {
        if let Argument::DecisiveTradeoff { cons, .. } = &decisive {
            focus.extend(cons.iter().map(|d| d.term.clone()));
        }
    }
    let mut arguments = vec![decisive];

    let model = ctx.model();
    if model == Model::Fire {
        arguments.extend(fire_recency_global(ctx)?);
    }

    let k_set: Vec<ReputationType> = ctx
        .preferred
        .per_term
        .values()
        .next()
        .map(|t| t.components.iter().map(|c| c.rep_type).collect())
        .unwrap_or_default();
    for term in ctx.preferences.terms().filter(|t| focus.contains(t)) {
        if !component_dominates(ctx, term)? {
            arguments.extend(invert_permutation(ctx, term)?);
        }
        if model == Model::Travos {
            arguments.extend(travos_low_confidence(ctx, term)?);
        }
        if model == Model::Fire {
            for &k in &k_set {
                arguments.extend(fire_recency_local(ctx, term, k)?);
            }
        }
    }

    Ok(Explanation {
        assessor: ctx.assessor.clone(),
        preferred: ctx.preferred.target.clone(),
        other: ctx.other.target.clone(),
        model,
        arguments,
    })
}
