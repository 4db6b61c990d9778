//! Plain-text rendering of explanations.
//!
//! A [`TemplateSet`] holds one sentence template per argument kind. The
//! shipped set is parsed from `templates/default.txt`; custom sets use the
//! same format (see that file's header).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::explain::{Argument, Explanation, TermDifference};
use crate::model::{AgentId, ReputationType};

const DEFAULT_TEMPLATES: &str = include_str!("../templates/default.txt");

const KINDS: [&str; 6] = [
    "decisive_dominance",
    "decisive_tradeoff",
    "type_permutation",
    "fire_recency_global",
    "fire_recency_local",
    "travos_low_confidence",
];

fn allowed_slots(kind: &str) -> &'static [&'static str] {
    match kind {
        "decisive_dominance" => &["pros", "reference"],
        "decisive_tradeoff" => &["pros", "cons"],
        "type_permutation" => &[
            "term",
            "less_important",
            "more_important",
            "preferred_trust",
            "other_trust",
        ],
        "fire_recency_global" => &["preferred_uniform", "other_uniform"],
        "fire_recency_local" => &["term", "rep_type", "preferred_uniform", "other_uniform"],
        "travos_low_confidence" => &[
            "term",
            "preferred_confidence",
            "other_confidence",
            "preferred_witness",
            "other_witness",
        ],
        _ => &[],
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("no display name for agent {0}")]
    UnknownAgent(AgentId),

    #[error("template line {line}: {reason}")]
    Template { line: usize, reason: String },

    #[error("no template for argument kind {0}")]
    MissingTemplate(String),

    #[error("template {kind} uses unknown placeholder {{{{{name}}}}}")]
    UnknownPlaceholder { kind: String, name: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Text(String),
    Slot(String),
    Optional(Vec<Piece>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    templates: HashMap<String, Vec<Piece>>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::parse(DEFAULT_TEMPLATES).expect("shipped templates are valid")
    }
}

fn parse_pieces(src: &str, line: usize, optional: bool) -> Result<(Vec<Piece>, usize), RenderError> {
    let err = |reason: &str| RenderError::Template {
        line,
        reason: reason.to_string(),
    };
    let mut pieces = Vec::new();
    let mut text = String::new();
    let mut rest = src;
    let mut consumed = 0;
    loop {
        let next = [rest.find("{{"), rest.find("[["), rest.find("]]")]
            .into_iter()
            .flatten()
            .min();
        let Some(at) = next else {
            if optional {
                return Err(err("unclosed [["));
            }
            text.push_str(rest);
            consumed += rest.len();
            break;
        };
        text.push_str(&rest[..at]);
        let marker = &rest[at..at + 2];
        rest = &rest[at + 2..];
        consumed += at + 2;
        if !text.is_empty() {
            pieces.push(Piece::Text(std::mem::take(&mut text)));
        }
        match marker {
            "{{" => {
                let end = rest.find("}}").ok_or_else(|| err("unclosed {{"))?;
                let name = rest[..end].trim();
                if name.is_empty() {
                    return Err(err("empty placeholder"));
                }
                pieces.push(Piece::Slot(name.to_string()));
                rest = &rest[end + 2..];
                consumed += end + 2;
            }
            "[[" => {
                if optional {
                    return Err(err("nested [["));
                }
                let (inner, used) = parse_pieces(rest, line, true)?;
                pieces.push(Piece::Optional(inner));
                rest = &rest[used..];
                consumed += used;
            }
            _ => {
                if !optional {
                    return Err(err("unmatched ]]"));
                }
                return Ok((pieces, consumed));
            }
        }
    }
    if !text.is_empty() {
        pieces.push(Piece::Text(text));
    }
    Ok((pieces, consumed))
}

fn slots(pieces: &[Piece]) -> Vec<&str> {
    pieces
        .iter()
        .flat_map(|p| match p {
            Piece::Text(_) => Vec::new(),
            Piece::Slot(s) => vec![s.as_str()],
            Piece::Optional(inner) => slots(inner),
        })
        .collect()
}

impl TemplateSet {
    /// Parses a template file. Every argument kind must have exactly one
    /// section and only use placeholders that kind can bind.
    pub fn parse(src: &str) -> Result<Self, RenderError> {
        let mut sections: Vec<(String, usize, Vec<String>)> = Vec::new();
        for (i, raw) in src.lines().enumerate() {
            let line = raw.trim();
            if line.starts_with('#') || (line.is_empty() && sections.is_empty()) {
                continue;
            }
            let header = line
                .strip_prefix('[')
                .and_then(|l| l.strip_suffix(']'))
                .filter(|n| !n.is_empty() && n.chars().all(|c| c.is_ascii_lowercase() || c == '_'));
            if let Some(name) = header {
                sections.push((name.to_string(), i + 1, Vec::new()));
            } else if let Some((_, _, body)) = sections.last_mut() {
                if !line.is_empty() {
                    body.push(line.to_string());
                }
            } else {
                return Err(RenderError::Template {
                    line: i + 1,
                    reason: "text before the first section".into(),
                });
            }
        }

        let mut templates = HashMap::new();
        for (name, line, body) in sections {
            if !KINDS.contains(&name.as_str()) {
                return Err(RenderError::Template {
                    line,
                    reason: format!("unknown argument kind {name}"),
                });
            }
            let (pieces, _) = parse_pieces(&body.join(" "), line, false)?;
            let allowed = allowed_slots(&name);
            for slot in slots(&pieces) {
                if !["preferred", "other", "assessor"].contains(&slot) && !allowed.contains(&slot) {
                    return Err(RenderError::UnknownPlaceholder {
                        kind: name,
                        name: slot.to_string(),
                    });
                }
            }
            if templates.insert(name.clone(), pieces).is_some() {
                return Err(RenderError::Template {
                    line,
                    reason: format!("duplicate section {name}"),
                });
            }
        }
        if let Some(missing) = KINDS.iter().find(|k| !templates.contains_key(**k)) {
            return Err(RenderError::MissingTemplate(missing.to_string()));
        }
        Ok(Self { templates })
    }
}

/// Order of decisive pros in the text.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProsOrder {
    /// As stored: strongest first.
    #[default]
    Descending,
    /// Weakest first.
    Ascending,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderOptions {
    pub pros_order: ProsOrder,
}

pub fn type_name(k: ReputationType) -> &'static str {
    match k {
        ReputationType::Interaction => "own interaction",
        ReputationType::Witness => "witness reputation",
        ReputationType::RoleBased => "role-based trust",
        ReputationType::Certified => "certified reputation",
    }
}

/// `a`; `a, and b`; `a, b, and c`.
pub fn join_list(items: &[&str]) -> String {
    match items {
        [] => String::new(),
        [one] => one.to_string(),
        [init @ .., last] => format!("{}, and {last}", init.join(", ")),
    }
}

fn term_list(items: &[TermDifference], order: ProsOrder) -> String {
    let mut items: Vec<&TermDifference> = items.iter().collect();
    if order == ProsOrder::Ascending {
        items.sort_by(|a, b| a.weighted_difference.total_cmp(&b.weighted_difference));
    }
    join_list(&items.iter().map(|d| d.term.as_str()).collect::<Vec<_>>())
}

fn num(v: f64) -> String {
    format!("{v:.2}")
}

fn fill(pieces: &[Piece], vars: &HashMap<&str, String>, out: &mut String) {
    for p in pieces {
        match p {
            Piece::Text(t) => out.push_str(t),
            Piece::Slot(s) => out.push_str(vars.get(s.as_str()).map_or("", String::as_str)),
            Piece::Optional(inner) => {
                let bound = slots(inner).iter().all(|s| vars.get(s).is_some_and(|v| !v.is_empty()));
                if bound {
                    fill(inner, vars, out);
                }
            }
        }
    }
}

/// Renders one block per argument, separated by newlines.
pub fn render_text(
    explanation: &Explanation,
    names: &HashMap<AgentId, String>,
    templates: &TemplateSet,
    options: &RenderOptions,
) -> Result<String, RenderError> {
    let name = |id: &AgentId| {
        names
            .get(id)
            .cloned()
            .ok_or_else(|| RenderError::UnknownAgent(id.clone()))
    };
    let base: HashMap<&str, String> = [
        ("preferred", name(&explanation.preferred)?),
        ("other", name(&explanation.other)?),
        (
            "assessor",
            names.get(&explanation.assessor).cloned().unwrap_or_default(),
        ),
    ]
    .into_iter()
    .collect();

    let mut blocks = Vec::new();
    for arg in &explanation.arguments {
        let kind = arg.kind();
        let pieces = templates
            .templates
            .get(kind)
            .ok_or_else(|| RenderError::MissingTemplate(kind.to_string()))?;
        let mut bindings: Vec<Vec<(&str, String)>> = Vec::new();
        match arg {
            Argument::DecisiveDominance { pros, reference } => bindings.push(vec![
                ("pros", term_list(pros, options.pros_order)),
                ("reference", num(*reference)),
            ]),
            Argument::DecisiveTradeoff { pros, cons } => bindings.push(vec![
                ("pros", term_list(pros, options.pros_order)),
                ("cons", term_list(cons, ProsOrder::Descending)),
            ]),
            Argument::TypePermutation {
                term,
                swaps,
                preferred_trust,
                other_trust,
                ..
            } => {
                for s in swaps {
                    bindings.push(vec![
                        ("term", term.to_string()),
                        ("less_important", type_name(s.less_important).to_string()),
                        ("more_important", type_name(s.more_important).to_string()),
                        ("preferred_trust", num(*preferred_trust)),
                        ("other_trust", num(*other_trust)),
                    ]);
                }
            }
            Argument::FireRecencyGlobal {
                preferred_uniform,
                other_uniform,
            } => bindings.push(vec![
                ("preferred_uniform", num(*preferred_uniform)),
                ("other_uniform", num(*other_uniform)),
            ]),
            Argument::FireRecencyLocal {
                term,
                rep_type,
                preferred_uniform,
                other_uniform,
            } => bindings.push(vec![
                ("term", term.to_string()),
                ("rep_type", type_name(*rep_type).to_string()),
                ("preferred_uniform", num(*preferred_uniform)),
                ("other_uniform", num(*other_uniform)),
            ]),
            Argument::TravosLowConfidence {
                term,
                preferred_confidence,
                other_confidence,
                preferred_witness,
                other_witness,
            } => bindings.push(vec![
                ("term", term.to_string()),
                ("preferred_confidence", num(*preferred_confidence)),
                ("other_confidence", num(*other_confidence)),
                ("preferred_witness", num(*preferred_witness)),
                ("other_witness", num(*other_witness)),
            ]),
        }
        for binding in bindings {
            let mut vars = base.clone();
            vars.extend(binding);
            let mut text = String::new();
            fill(pieces, &vars, &mut text);
            blocks.push(text);
        }
    }
    Ok(blocks.join("\n"))
}
