//! WebAssembly bindings for the browser demo.
//!
//! Every export takes plain numbers or a JSON string and returns a JSON
//! string, so the same functions run natively in tests. Failures come back
//! as `{"error": "..."}` instead of exceptions.

use std::collections::HashMap;

use indexmap::IndexMap;
use reptrace::beta::beta_density;
use reptrace::example;
use reptrace::explain::{self, ComparisonContext};
use reptrace::fire::recency_weight;
use reptrace::render::{render_text, ProsOrder, RenderOptions, TemplateSet};
use reptrace::travos::{confidence, discount_opinion, BetaParams, WitnessOpinion};
use reptrace::{AgentId, Assessment, ComponentTrust, Preferences, ReputationType, Term};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermInput {
    pub name: String,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProviderInput {
    pub id: String,
    /// One value per term, in `terms` order.
    pub interaction: Vec<f64>,
    pub witness: Vec<f64>,
}

/// Editable running example: component values per provider plus weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExplorerInput {
    pub terms: Vec<TermInput>,
    pub interaction_weight: f64,
    pub witness_weight: f64,
    pub providers: Vec<ProviderInput>,
    pub preferred: String,
    pub other: String,
    #[serde(default)]
    pub pros_order: ProsOrder,
}

impl Default for ExplorerInput {
    fn default() -> Self {
        Self {
            terms: example::TERMS
                .iter()
                .map(|(name, weight)| TermInput {
                    name: name.to_string(),
                    weight: *weight,
                })
                .collect(),
            interaction_weight: example::INTERACTION_WEIGHT,
            witness_weight: example::WITNESS_WEIGHT,
            providers: example::ROWS
                .iter()
                .map(|(id, interaction, witness)| ProviderInput {
                    id: id.to_string(),
                    interaction: interaction.to_vec(),
                    witness: witness.to_vec(),
                })
                .collect(),
            preferred: "B".into(),
            other: "D".into(),
            pros_order: ProsOrder::Descending,
        }
    }
}

fn error(msg: impl ToString) -> String {
    json!({ "error": msg.to_string() }).to_string()
}

fn assess_all(input: &ExplorerInput) -> Result<(Preferences, IndexMap<String, Assessment>), String> {
    let terms: Vec<Term> = input
        .terms
        .iter()
        .map(|t| Term::new(t.name.clone()).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let prefs = Preferences::new(
        terms
            .iter()
            .cloned()
            .zip(input.terms.iter().map(|t| t.weight))
            .collect(),
        [
            (ReputationType::Interaction, input.interaction_weight),
            (ReputationType::Witness, input.witness_weight),
        ]
        .into_iter()
        .collect(),
    )
    .map_err(|e| e.to_string())?;
    let assessor = AgentId::new(example::ASSESSOR).map_err(|e| e.to_string())?;

    let mut out = IndexMap::new();
    for p in &input.providers {
        if p.interaction.len() != terms.len() || p.witness.len() != terms.len() {
            return Err(format!("provider {} needs {} values per row", p.id, terms.len()));
        }
        if let Some(v) = p
            .interaction
            .iter()
            .chain(&p.witness)
            .find(|v| !(0.0..=1.0).contains(*v))
        {
            return Err(format!("provider {}: {v} is outside [0, 1]", p.id));
        }
        let per_term = terms
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let components = vec![
                    ComponentTrust::present(ReputationType::Interaction, p.interaction[i], input.interaction_weight),
                    ComponentTrust::present(ReputationType::Witness, p.witness[i], input.witness_weight),
                ];
                reptrace::model::TermAssessment::from_components(components).map(|ta| (t.clone(), ta))
            })
            .collect::<Result<IndexMap<_, _>, _>>()
            .map_err(|e| e.to_string())?;
        let target = AgentId::new(p.id.clone()).map_err(|e| e.to_string())?;
        let a = Assessment::build(assessor.clone(), target, per_term, &prefs).map_err(|e| e.to_string())?;
        out.insert(p.id.clone(), a);
    }
    Ok((prefs, out))
}

fn compare(
    input: &ExplorerInput,
    prefs: &Preferences,
    assessed: &IndexMap<String, Assessment>,
) -> Result<Value, String> {
    let get = |id: &str| assessed.get(id).cloned().ok_or_else(|| format!("no provider {id}"));
    let (mut preferred, mut other) = (get(&input.preferred)?, get(&input.other)?);
    // the explanation always runs from the better-scored side
    let swapped = preferred.overall < other.overall;
    if swapped {
        std::mem::swap(&mut preferred, &mut other);
    }
    let ctx = ComparisonContext::generic(preferred, other, prefs.clone());
    let e = explain::explain(&ctx).map_err(|e| e.to_string())?;
    let names: HashMap<AgentId, String> = assessed
        .values()
        .map(|a| (a.target.clone(), a.target.to_string()))
        .collect();
    let options = RenderOptions {
        pros_order: input.pros_order,
    };
    let text = render_text(&e, &names, &TemplateSet::default(), &options).map_err(|e| e.to_string())?;
    Ok(json!({
        "preferred": ctx.preferred.target,
        "other": ctx.other.target,
        "swapped": swapped,
        "text": text,
        "arguments": e.arguments,
    }))
}

/// Explorer input for the unmodified running example.
#[wasm_bindgen]
pub fn example_input() -> String {
    serde_json::to_string(&ExplorerInput::default()).expect("serializable")
}

/// Ranks the providers in `input` and explains the selected pair.
///
/// Returns `{ranking, comparison}`; `comparison` holds `{error}` when the
/// pair cannot be explained, for instance when both scores are equal.
#[wasm_bindgen]
pub fn explore(input: &str) -> String {
    let input: ExplorerInput = match serde_json::from_str(input) {
        Ok(i) => i,
        Err(e) => return error(e),
    };
    let (prefs, assessed) = match assess_all(&input) {
        Ok(r) => r,
        Err(e) => return error(e),
    };
    let mut ranking: Vec<&Assessment> = assessed.values().collect();
    ranking.sort_by(|a, b| b.overall.total_cmp(&a.overall).then_with(|| a.target.cmp(&b.target)));
    let ranking: Vec<Value> = ranking
        .iter()
        .map(|a| {
            let terms: Vec<f64> = a.per_term.values().map(|t| t.term_trust).collect();
            json!({ "id": a.target, "terms": terms, "overall": a.overall })
        })
        .collect();
    let comparison = compare(&input, &prefs, &assessed).unwrap_or_else(|e| json!({ "error": e }));
    json!({ "ranking": ranking, "comparison": comparison }).to_string()
}

fn density_points(p: BetaParams, points: usize) -> Result<Vec<[f64; 2]>, String> {
    (0..=points)
        .map(|i| {
            let x = i as f64 / points as f64;
            let d = beta_density(p.alpha, p.beta, x).map_err(|e| e.to_string())?;
            Ok([x, if d.is_finite() { d } else { f64::NAN }])
        })
        .collect()
}

fn beta_summary(p: BetaParams, epsilon: f64, points: usize) -> Result<Value, String> {
    let c = confidence(p, epsilon).map_err(|e| e.to_string())?;
    let e = p.expected_value();
    Ok(json!({
        "alpha": p.alpha,
        "beta": p.beta,
        "expected": e,
        "std_dev": p.std_dev(),
        "confidence": c,
        "interval": [(e - epsilon).max(0.0), (e + epsilon).min(1.0)],
        "density": density_points(p, points)?,
    }))
}

/// Beta density with its confidence band, before and after discounting
/// the opinion with witness accuracy `rho`.
///
/// Non-finite densities at the edges come back as `null`.
#[wasm_bindgen]
pub fn beta_curve(alpha: f64, beta: f64, epsilon: f64, rho: f64, points: usize) -> String {
    let run = || -> Result<Value, String> {
        let points = points.clamp(2, 1000);
        let p = BetaParams::new(alpha, beta).map_err(|e| e.to_string())?;
        if !(0.0..=1.0).contains(&rho) {
            return Err(format!("accuracy {rho} is outside [0, 1]"));
        }
        let id = |s: &str| AgentId::new(s).expect("non-empty");
        let opinion = WitnessOpinion::new(id("witness"), id("provider"), Term::new("term").expect("non-empty"), p);
        let discounted = discount_opinion(&opinion, rho).map_err(|e| e.to_string())?;
        Ok(json!({
            "opinion": beta_summary(p, epsilon, points)?,
            "discounted": beta_summary(discounted, epsilon, points)?,
        }))
    };
    run().map_or_else(error, |v| v.to_string())
}

/// FIRE recency weights `e^(-dt/lambda)` for `dt` in `[0, horizon]`.
#[wasm_bindgen]
pub fn recency_curve(lambda: f64, horizon: f64, points: usize) -> String {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return error(format!("lambda must be positive, got {lambda}"));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return error(format!("horizon must be positive, got {horizon}"));
    }
    let points = points.clamp(2, 1000);
    let curve: Vec<[f64; 2]> = (0..=points)
        .map(|i| {
            let dt = horizon * i as f64 / points as f64;
            [dt, recency_weight(dt, lambda)]
        })
        .collect();
    json!({ "half_life": lambda * std::f64::consts::LN_2, "curve": curve }).to_string()
}
