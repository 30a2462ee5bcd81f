use featline_core::ast::{CrossDep, DepKind, DepSemantics, EnumDecl, Feature, Group};
use featline_core::{compile, serialize, Diagnostic, GoalDirection, JsonInt};
use serde::Serialize;

use crate::ModelEntry;

#[derive(Debug, Clone, Serialize)]
pub struct GoalSummary {
    pub name: String,
    pub direction: GoalDirection,
    pub expr: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct DepSummary {
    #[serde(flatten)]
    pub dep: CrossDep,
    pub text: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VarSummary {
    pub name: String,
    /// Declared values as inclusive ranges.
    pub domain: Vec<(JsonInt, JsonInt)>,
}

/// What `GET /models/{id}` returns.
#[derive(Debug, Clone, Serialize)]
pub struct ModelSummary {
    pub model_id: String,
    pub name: String,
    pub valid: bool,
    pub diagnostics: Vec<Diagnostic>,
    pub enums: Vec<EnumDecl>,
    pub features: Vec<Feature>,
    pub groups: Vec<Group>,
    pub cross_deps: Vec<DepSummary>,
    pub constraints: Vec<String>,
    pub goals: Vec<GoalSummary>,
    /// Every feature and attribute variable; empty for invalid models.
    pub variables: Vec<VarSummary>,
    /// The model in canonical text form.
    pub text: String,
}

fn dep_text(d: &CrossDep) -> String {
    let kind = match d.kind {
        DepKind::Requires => "requires",
        DepKind::Excludes => "excludes",
    };
    match (d.semantics, d.offset) {
        (DepSemantics::Presence, _) => format!("{} {kind} {}", d.from, d.to),
        (DepSemantics::PerInstance, 0) => format!("{} {kind} {} per instance", d.from, d.to),
        (DepSemantics::PerInstance, k) => format!("{} {kind} {} per instance + {k}", d.from, d.to),
    }
}

impl ModelSummary {
    pub fn new(id: &str, e: &ModelEntry) -> Self {
        let m = &e.model;
        let variables = match compile(m) {
            Ok(c) => c
                .vars
                .model_vars()
                .into_iter()
                .map(|v| VarSummary {
                    name: c.vars.name_of(v).unwrap_or_default(),
                    domain: c.declared[v.index()]
                        .runs()
                        .iter()
                        .map(|&(a, b)| (JsonInt(a), JsonInt(b)))
                        .collect(),
                })
                .collect(),
            Err(_) => Vec::new(),
        };
        ModelSummary {
            model_id: id.to_string(),
            name: m.name.clone(),
            valid: e.valid(),
            diagnostics: e.diagnostics.clone(),
            enums: m.enums.clone(),
            features: m.features.clone(),
            groups: m.groups.clone(),
            cross_deps: m
                .cross_deps
                .iter()
                .map(|d| DepSummary {
                    dep: d.clone(),
                    text: dep_text(d),
                })
                .collect(),
            constraints: m.constraints.iter().map(|c| c.to_string()).collect(),
            goals: m
                .goals
                .iter()
                .map(|g| GoalSummary {
                    name: g.name.clone(),
                    direction: g.direction,
                    expr: g.expr.to_string(),
                })
                .collect(),
            variables,
            text: serialize(m),
        }
    }
}
