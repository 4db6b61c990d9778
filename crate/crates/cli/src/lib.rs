//! Commands behind the `reptrace` binary.
//!
//! Exit codes: 0 success, 2 schema or validation error, 3 I/O error,
//! 4 the requested preferred provider does not outrank the other,
//! 5 the running-example self-check failed.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use reptrace::example;
use reptrace::explain::{self, Argument, ComparisonContext, ExplainError, Explanation, Model};
use reptrace::fire::{Fire, FireError};
use reptrace::render::{render_text, ProsOrder, RenderOptions, TemplateSet};
use reptrace::simulate::run_scenario;
use reptrace::travos::Travos;
use reptrace::{AgentId, ReputationType, Term};
use thiserror::Error;

pub mod documents;

use documents::{
    AssessmentDocument, ExplanationDocument, ModelChoice, ScenarioFile, Scores, StoresDocument, Unassessed,
    ASSESSMENT_SCHEMA, EXPLANATION_SCHEMA, SCENARIO_SCHEMA, STORES_SCHEMA,
};

/// Environment variable overriding the scenario seed.
pub const SEED_ENV: &str = "REPTRACE_SEED";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{0}")]
    NotPreferred(String),

    #[error("running example self-check failed:\n{0}")]
    Golden(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Schema(_) | Self::Invalid(_) => 2,
            Self::Io { .. } => 3,
            Self::NotPreferred(_) => 4,
            Self::Golden(_) => 5,
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(e.to_string())
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}

pub fn load_scenario(path: &Path) -> Result<ScenarioFile, CliError> {
    let file: ScenarioFile = documents::parse(SCENARIO_SCHEMA, &read(path)?)?;
    file.scenario.validate().map_err(invalid)?;
    file.preferences.validate().map_err(invalid)?;
    file.fire.validate().map_err(invalid)?;
    file.travos.validate().map_err(invalid)?;
    if let Some(t) = file
        .preferences
        .terms()
        .find(|t| !file.scenario.profile.terms.contains_key(*t))
    {
        return Err(invalid(format!("preference term {t} is not rated by the profile")));
    }
    Ok(file)
}

pub fn load_stores(path: &Path) -> Result<StoresDocument, CliError> {
    let doc: StoresDocument = documents::parse(STORES_SCHEMA, &read(path)?)?;
    doc.preferences.validate().map_err(invalid)?;
    doc.fire.validate().map_err(invalid)?;
    doc.travos.validate().map_err(invalid)?;
    Ok(doc)
}

/// Runs a scenario and writes the resulting stores document to `out`.
pub fn cmd_simulate(scenario: &Path, out: &Path, seed: Option<u64>) -> Result<StoresDocument, CliError> {
    let mut file = load_scenario(scenario)?;
    if let Some(seed) = seed {
        file.scenario.seed = seed;
    }
    let world = run_scenario(&file.scenario).map_err(invalid)?;
    let doc = StoresDocument::from_world(&file, &world);
    write(out, &to_json(&doc))?;
    Ok(doc)
}

/// Parses the seed override from the environment value, if any.
pub fn seed_override(value: Option<&str>) -> Result<Option<u64>, CliError> {
    value
        .map(|v| {
            v.trim()
                .parse::<u64>()
                .map_err(|_| invalid(format!("{SEED_ENV}={v:?} is not an unsigned integer")))
        })
        .transpose()
}

enum Assessed {
    Fire(reptrace::fire::FireAssessment),
    Travos(reptrace::travos::TravosAssessment),
}

impl Assessed {
    fn assessment(&self) -> &reptrace::Assessment {
        match self {
            Self::Fire(a) => &a.assessment,
            Self::Travos(a) => &a.assessment,
        }
    }
}

fn model_name(model: ModelChoice) -> &'static str {
    match model {
        ModelChoice::Fire => "fire",
        ModelChoice::Travos => "travos",
    }
}

/// The inner `Err` carries the reason when the model has no evidence.
fn assess_one(
    doc: &StoresDocument,
    model: ModelChoice,
    assessor: &AgentId,
    target: &AgentId,
) -> Result<Result<Assessed, String>, CliError> {
    let (ratings, observations) = doc
        .stores(assessor)
        .ok_or_else(|| invalid(format!("unknown assessor {assessor}")))?;
    match model {
        ModelChoice::Fire => {
            let fire = Fire::new(doc.fire.clone()).map_err(invalid)?;
            match fire.assess(&ratings, &doc.roles, assessor, target, &doc.preferences, doc.now) {
                Ok(a) => Ok(Ok(Assessed::Fire(a))),
                Err(e @ FireError::NoEvidence { .. }) => Ok(Err(e.to_string())),
                Err(e) => Err(invalid(e)),
            }
        }
        ModelChoice::Travos => {
            let travos = Travos::new(doc.travos.clone()).map_err(invalid)?;
            travos
                .assess(&ratings, &observations, assessor, target, &doc.preferences)
                .map(|a| Ok(Assessed::Travos(a)))
                .map_err(invalid)
        }
    }
}

pub fn cmd_assess(stores: &Path, model: ModelChoice, assessor: &str) -> Result<AssessmentDocument, CliError> {
    let doc = load_stores(stores)?;
    let assessor = AgentId::new(assessor).map_err(invalid)?;
    if !doc.agents.contains_key(&assessor) {
        return Err(invalid(format!("unknown assessor {assessor}")));
    }
    let mut ranking = Vec::new();
    let mut unassessed = Vec::new();
    for provider in &doc.providers {
        match assess_one(&doc, model, &assessor, provider)? {
            Ok(a) => ranking.push(a.assessment().clone()),
            Err(reason) => unassessed.push(Unassessed {
                provider: provider.clone(),
                reason,
            }),
        }
    }
    ranking.sort_by(|a, b| b.overall.total_cmp(&a.overall).then_with(|| a.target.cmp(&b.target)));
    Ok(AssessmentDocument {
        schema: ASSESSMENT_SCHEMA.to_string(),
        model: model_name(model).to_string(),
        assessor,
        ranking,
        unassessed,
    })
}

fn explain_error(e: ExplainError) -> CliError {
    match e {
        ExplainError::NotPreferred { .. } | ExplainError::AmbiguousOrder { .. } => {
            CliError::NotPreferred(e.to_string())
        }
        other => invalid(other),
    }
}

pub fn cmd_explain(
    stores: &Path,
    model: ModelChoice,
    assessor: &str,
    preferred: &str,
    other: &str,
) -> Result<ExplanationDocument, CliError> {
    let doc = load_stores(stores)?;
    let assessor = AgentId::new(assessor).map_err(invalid)?;
    let pick = |name: &str| -> Result<Assessed, CliError> {
        let id = AgentId::new(name).map_err(invalid)?;
        if !doc.providers.contains(&id) {
            return Err(invalid(format!("unknown provider {id}")));
        }
        assess_one(&doc, model, &assessor, &id)?.map_err(invalid)
    };
    let (p, o) = (pick(preferred)?, pick(other)?);
    let scores = Scores {
        preferred: p.assessment().overall,
        other: o.assessment().overall,
    };
    let ctx = match (p, o) {
        (Assessed::Fire(p), Assessed::Fire(o)) => ComparisonContext::fire(p, o, doc.preferences.clone()),
        (Assessed::Travos(p), Assessed::Travos(o)) => {
            ComparisonContext::travos(p, o, doc.preferences.clone(), &doc.travos)
        }
        _ => unreachable!("both sides use the same model"),
    };
    let explanation = explain::explain(&ctx).map_err(explain_error)?;
    Ok(ExplanationDocument {
        schema: EXPLANATION_SCHEMA.to_string(),
        scores,
        explanation,
    })
}

/// Renders with provider ids as display names.
pub fn render(explanation: &Explanation, pros_order: ProsOrder) -> Result<String, CliError> {
    let names: HashMap<AgentId, String> = [&explanation.assessor, &explanation.preferred, &explanation.other]
        .into_iter()
        .map(|id| (id.clone(), id.to_string()))
        .collect();
    let options = RenderOptions { pros_order };
    render_text(explanation, &names, &TemplateSet::default(), &options).map_err(invalid)
}

pub fn cmd_render(path: &Path, pros_order: ProsOrder) -> Result<String, CliError> {
    let doc: ExplanationDocument = documents::parse(EXPLANATION_SCHEMA, &read(path)?)?;
    render(&doc.explanation, pros_order)
}

/// Stores document for the running example: assessor `A` holds one
/// interaction and one witness rating per provider and term.
pub fn running_example_stores() -> StoresDocument {
    let store = example::rating_store();
    let prefs = example::preferences();
    StoresDocument {
        schema: STORES_SCHEMA.to_string(),
        now: 0,
        providers: example::ROWS
            .iter()
            .map(|(p, _, _)| AgentId::new(*p).unwrap())
            .collect(),
        history_cap: None,
        fire: reptrace::fire::FireConfig::new(reptrace::fire::DEFAULT_LAMBDA, prefs.component_weights.clone())
            .expect("valid"),
        preferences: prefs,
        travos: Default::default(),
        roles: Default::default(),
        agents: [(
            AgentId::new(example::ASSESSOR).unwrap(),
            documents::AgentRecords {
                ratings: store
                    .query(&reptrace::store::RatingPattern::any())
                    .into_iter()
                    .cloned()
                    .collect(),
                observations: Vec::new(),
            },
        )]
        .into_iter()
        .collect(),
    }
}

/// Reference term trusts (quality, timeliness, cost) and scores.
pub const RUNNING_EXAMPLE_SCORES: [(&str, [f64; 3], f64); 4] = [
    ("B", [0.80, 0.59, 0.38], 0.64),
    ("C", [0.18, 0.19, 0.15], 0.17),
    ("D", [0.53, 0.91, 0.10], 0.58),
    ("E", [0.30, 0.40, 0.54], 0.38),
];

pub const DOMINANCE_TEXT: &str = "B has a better reputation than C, because it is better in all aspects that you \
consider in your preferences, mainly with respect to timeliness, and quality.";
pub const TRADEOFF_TEXT: &str = "B has a better reputation than D, mainly due to quality.";

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Prints the running example and checks it against the reference values.
pub fn cmd_demo() -> Result<String, CliError> {
    let assessed = example::assessments().map_err(invalid)?;
    let terms: Vec<Term> = example::TERMS.iter().map(|(t, _)| Term::new(*t).unwrap()).collect();
    let mut out = String::new();
    let mut problems = Vec::new();

    let _ = writeln!(out, "Running example, assessor A (interaction 0.75, witness 0.25)");
    let _ = writeln!(
        out,
        "{:<9}{:>24}{:>24}{:>24}{:>8}",
        "", "interaction", "witness", "term trust", ""
    );
    let header: String = (0..3).map(|_| format!("{:>8}{:>8}{:>8}", "Q", "T", "C")).collect();
    let _ = writeln!(out, "{:<9}{header}{:>8}", "provider", "score");
    for (name, golden_terms, golden_score) in RUNNING_EXAMPLE_SCORES {
        let a = &assessed[&AgentId::new(name).unwrap()];
        let mut row = format!("{name:<9}");
        for k in [ReputationType::Interaction, ReputationType::Witness] {
            for t in &terms {
                let v = a.per_term[t].component_value(k).unwrap_or(f64::NAN);
                let _ = write!(row, "{v:>8.2}");
            }
        }
        for (t, golden) in terms.iter().zip(golden_terms) {
            let v = a.per_term[t].term_trust;
            let _ = write!(row, "{:>8.2}", round2(v));
            if round2(v) != golden {
                problems.push(format!("{name}/{t}: {v:.4} vs {golden:.2}"));
            }
        }
        let _ = write!(row, "{:>8.2}", round2(a.overall));
        if round2(a.overall) != golden_score {
            problems.push(format!("{name} score: {:.4} vs {golden_score:.2}", a.overall));
        }
        let _ = writeln!(out, "{row}");
    }

    let literal = ProsOrder::Ascending;
    let mut example_text = |label: &str, preferred: &str, other: &str, golden: &str| -> Result<(), CliError> {
        let ctx = example::context(preferred, other).map_err(invalid)?;
        let e = explain::explain(&ctx).map_err(explain_error)?;
        let text = render(&e, literal)?;
        let _ = writeln!(out, "\n{label}\n{text}");
        if text != golden {
            problems.push(format!("{label} text differs: {text:?}"));
        }
        Ok(())
    };
    example_text("Dominance (B vs C)", "B", "C", DOMINANCE_TEXT)?;
    example_text("Trade-off (B vs D)", "B", "D", TRADEOFF_TEXT)?;

    let ctx = example::context("B", "E").map_err(invalid)?;
    let timeliness = Term::new("timeliness").unwrap();
    let arg = explain::invert_permutation(&ctx, &timeliness).map_err(explain_error)?;
    if let Some(Argument::TypePermutation {
        swaps,
        preferred_trust,
        other_trust,
        ..
    }) = &arg
    {
        let e = Explanation {
            assessor: ctx.assessor.clone(),
            preferred: ctx.preferred.target.clone(),
            other: ctx.other.target.clone(),
            model: Model::Generic,
            arguments: arg.clone().into_iter().collect(),
        };
        let _ = writeln!(out, "\nPermutation (B vs E, timeliness)\n{}", render(&e, literal)?);
        let _ = writeln!(out, "With swapped weights: B {preferred_trust:.2}, E {other_trust:.2}");
        let got: Vec<_> = swaps.iter().map(|s| (s.less_important, s.more_important)).collect();
        let expected = [(ReputationType::Witness, ReputationType::Interaction)];
        if got != expected || round2(*preferred_trust) != 0.66 || round2(*other_trust) != 0.80 {
            problems.push(format!(
                "Permutation: {got:?}, {preferred_trust:.4} vs {other_trust:.4}"
            ));
        }
    } else {
        problems.push("Permutation: no inverting permutation".to_string());
    }

    if problems.is_empty() {
        let _ = writeln!(out, "\nall checks passed");
        Ok(out)
    } else {
        Err(CliError::Golden(problems.join("\n")))
    }
}
