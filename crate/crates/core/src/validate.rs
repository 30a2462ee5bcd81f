//! Structural validation of feature models and expressions.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ast::*;
use crate::lexer::is_identifier;

/// A problem found in model text or structure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    /// Stable machine-readable token, e.g. `duplicate-feature`.
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub span: Option<Span>,
}

impl Diagnostic {
    pub fn new(code: &str, message: impl Into<String>, span: Option<Span>) -> Self {
        Diagnostic {
            code: code.to_string(),
            message: message.into(),
            span,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.span {
            Some(s) => write!(f, "{s}: {} [{}]", self.message, self.code),
            None => write!(f, "{} [{}]", self.message, self.code),
        }
    }
}

struct Checker<'a> {
    m: &'a FeatureModel,
    features: HashMap<&'a str, &'a Feature>,
    codes: HashSet<&'a str>,
    out: Vec<Diagnostic>,
}

/// Returns every structural problem of `m`; `Ok` when there is none.
pub fn validate_model(m: &FeatureModel) -> Result<(), Vec<Diagnostic>> {
    let mut c = Checker::new(m);
    c.model();
    if c.out.is_empty() {
        Ok(())
    } else {
        Err(c.out)
    }
}

/// Checks a constraint expression against the names declared in `m`.
pub fn check_constraint(m: &FeatureModel, e: &Expr, span: Option<Span>) -> Vec<Diagnostic> {
    let mut c = Checker::new(m);
    c.condition(e, true, span);
    c.out
}

/// Checks a goal or other arithmetic expression against `m`.
pub fn check_arith(m: &FeatureModel, e: &Expr, span: Option<Span>) -> Vec<Diagnostic> {
    let mut c = Checker::new(m);
    c.arith(e, span);
    c.out
}

impl<'a> Checker<'a> {
    fn new(m: &'a FeatureModel) -> Self {
        let mut features = HashMap::new();
        for f in &m.features {
            features.entry(f.name.as_str()).or_insert(f);
        }
        let codes = m.enums.iter().flat_map(|e| e.codes.iter().map(String::as_str)).collect();
        Checker {
            m,
            features,
            codes,
            out: Vec::new(),
        }
    }

    fn err(&mut self, code: &str, msg: impl Into<String>, span: Option<Span>) {
        self.out.push(Diagnostic::new(code, msg, span));
    }

    fn model(&mut self) {
        let m = self.m;
        let sp = &m.spans;
        self.names();

        let mut enum_names = HashSet::new();
        let mut seen_codes = HashSet::new();
        for (i, e) in m.enums.iter().enumerate() {
            let span = sp.enums.get(i).copied();
            if !enum_names.insert(e.name.as_str()) {
                self.err("duplicate-enum", format!("enumeration `{}` is declared twice", e.name), span);
            }
            if e.codes.is_empty() {
                self.err("empty-enum", format!("enumeration `{}` has no codes", e.name), span);
            }
            for code in &e.codes {
                if !seen_codes.insert(code.as_str()) {
                    self.err("duplicate-code", format!("code `{code}` is declared more than once"), span);
                }
                if self.features.contains_key(code.as_str()) {
                    self.err("ambiguous-name", format!("code `{code}` has the same name as a feature"), span);
                }
            }
        }

        let mut names = HashSet::new();
        let mut roots = 0;
        for (i, f) in m.features.iter().enumerate() {
            let span = sp.features.get(i).copied();
            if !names.insert(f.name.as_str()) {
                self.err("duplicate-feature", format!("feature `{}` is declared twice", f.name), span);
            }
            if f.max_count < 1 {
                self.err("bad-max-count", format!("feature `{}` has max {} (must be at least 1)", f.name, f.max_count), span);
            }
            match &f.parent {
                None => {
                    roots += 1;
                    if roots > 1 {
                        self.err("multiple-roots", format!("feature `{}` is a second root", f.name), span);
                    } else if f.max_count != 1 {
                        self.err("root-max-count", format!("root feature `{}` must have max 1", f.name), span);
                    }
                }
                Some(p) => {
                    if !self.features.contains_key(p.name.as_str()) {
                        self.err("unknown-parent", format!("feature `{}` refers to unknown parent `{}`", f.name, p.name), span);
                    } else if p.name == f.name {
                        self.err("cycle", format!("feature `{}` is its own parent", f.name), span);
                    }
                }
            }
            let mut attrs = HashSet::new();
            for (j, a) in f.attributes.iter().enumerate() {
                let aspan = sp.attributes.get(i).and_then(|v| v.get(j)).copied().or(span);
                if !attrs.insert(a.name.as_str()) {
                    self.err(
                        "duplicate-attribute",
                        format!("attribute `{}.{}` is declared twice", f.name, a.name),
                        aspan,
                    );
                }
                match &a.domain {
                    AttrDomain::Range(lo, hi) if lo > hi => self.err(
                        "empty-domain",
                        format!("attribute `{}.{}` has an empty range [{lo}..{hi}]", f.name, a.name),
                        aspan,
                    ),
                    AttrDomain::Set(vals) if vals.is_empty() => self.err(
                        "empty-domain",
                        format!("attribute `{}.{}` has an empty value set", f.name, a.name),
                        aspan,
                    ),
                    AttrDomain::Set(vals) => {
                        for v in vals {
                            self.value(v, aspan);
                        }
                    }
                    AttrDomain::Range(..) => {}
                }
            }
        }
        if roots == 0 && !m.features.is_empty() {
            self.err("no-root", "every feature has a parent; one root is required", None);
        }
        if m.features.is_empty() {
            self.err("no-root", "the model declares no features", None);
        }
        self.tree();

        for (i, g) in m.groups.iter().enumerate() {
            self.group(g, sp.groups.get(i).copied());
        }
        for (i, d) in m.cross_deps.iter().enumerate() {
            self.cross(d, sp.cross_deps.get(i).copied());
        }
        for (i, e) in m.constraints.iter().enumerate() {
            self.condition(e, true, sp.constraints.get(i).copied());
        }
        let mut goals = HashSet::new();
        for (i, g) in m.goals.iter().enumerate() {
            let span = sp.goals.get(i).copied();
            if !goals.insert(g.name.as_str()) {
                self.err("duplicate-goal", format!("goal `{}` is declared twice", g.name), span);
            }
            self.arith(&g.expr, span);
        }
    }

    // Names must be writable in model text.
    fn names(&mut self) {
        let m = self.m;
        let bad = |what: &str, name: &str, span: Option<Span>, out: &mut Vec<Diagnostic>| {
            if !is_identifier(name) {
                out.push(Diagnostic::new(
                    "bad-name",
                    format!("{what} name `{name}` is not an identifier or is a reserved word"),
                    span,
                ));
            }
        };
        bad("model", &m.name, None, &mut self.out);
        for (i, e) in m.enums.iter().enumerate() {
            let span = m.spans.enums.get(i).copied();
            bad("enumeration", &e.name, span, &mut self.out);
            for c in &e.codes {
                bad("code", c, span, &mut self.out);
            }
        }
        for (i, f) in m.features.iter().enumerate() {
            let span = m.spans.features.get(i).copied();
            bad("feature", &f.name, span, &mut self.out);
            for a in &f.attributes {
                bad("attribute", &a.name, span, &mut self.out);
            }
        }
        for (i, g) in m.goals.iter().enumerate() {
            bad("goal", &g.name, m.spans.goals.get(i).copied(), &mut self.out);
        }
    }

    // Every feature must reach the root by following parents.
    fn tree(&mut self) {
        let m = self.m;
        for (i, f) in m.features.iter().enumerate() {
            let mut seen = HashSet::new();
            let mut cur = f;
            while let Some(p) = &cur.parent {
                if !seen.insert(cur.name.as_str()) {
                    self.err(
                        "cycle",
                        format!("feature `{}` is part of a parent cycle", f.name),
                        m.spans.features.get(i).copied(),
                    );
                    break;
                }
                match self.features.get(p.name.as_str()) {
                    Some(next) => cur = next,
                    None => break,
                }
            }
        }
    }

    fn group(&mut self, g: &Group, span: Option<Span>) {
        let Some(parent) = self.features.get(g.parent.as_str()).copied() else {
            self.err("unknown-feature", format!("group parent `{}` is not declared", g.parent), span);
            return;
        };
        if !parent.is_boolean() {
            self.err(
                "unsupported-group-parent",
                format!("group parent `{}` has max {}; groups need a boolean parent", g.parent, parent.max_count),
                span,
            );
        }
        if g.members.len() < 2 {
            self.err("group-too-small", format!("group of `{}` needs at least two members", g.parent), span);
        }
        let mut seen = HashSet::new();
        for mem in &g.members {
            if !seen.insert(mem.as_str()) {
                self.err("duplicate-member", format!("`{mem}` is listed twice in the group of `{}`", g.parent), span);
            }
            match self.features.get(mem.as_str()).copied() {
                None => self.err("unknown-feature", format!("group member `{mem}` is not declared"), span),
                Some(f) => {
                    if f.parent.as_ref().map(|p| p.name.as_str()) != Some(g.parent.as_str()) {
                        self.err(
                            "group-member-not-child",
                            format!("group member `{mem}` is not a child of `{}`", g.parent),
                            span,
                        );
                    }
                    if !f.is_boolean() {
                        self.err(
                            "unsupported-group-member",
                            format!("group member `{mem}` has max {}; group members must be boolean", f.max_count),
                            span,
                        );
                    }
                }
            }
        }
        if g.min < 0 || g.min > g.max || g.max > g.members.len() as i64 {
            self.err(
                "bad-cardinality",
                format!(
                    "group cardinality [{}..{}] is not within [0..{}]",
                    g.min,
                    g.max,
                    g.members.len()
                ),
                span,
            );
        }
    }

    fn cross(&mut self, d: &CrossDep, span: Option<Span>) {
        for n in [&d.from, &d.to] {
            if !self.features.contains_key(n.as_str()) {
                self.err("unknown-feature", format!("dependency refers to unknown feature `{n}`"), span);
            }
        }
        if d.from == d.to {
            self.err("self-dependency", format!("`{}` cannot depend on itself", d.from), span);
        }
        match (d.kind, d.semantics) {
            (DepKind::Excludes, DepSemantics::PerInstance) => self.err(
                "unsupported-dependency",
                "`excludes` has no per-instance form; use a constraint",
                span,
            ),
            (_, DepSemantics::Presence) if d.offset != 0 => {
                self.err("unsupported-dependency", "an offset needs `per instance`", span)
            }
            (_, DepSemantics::PerInstance) if d.offset < 0 => {
                self.err("unsupported-dependency", "a per-instance offset cannot be negative", span)
            }
            _ => {}
        }
    }

    fn value(&mut self, v: &Value, span: Option<Span>) {
        if let Value::Code(c) = v {
            if !self.codes.contains(c.as_str()) {
                self.err("unknown-code", format!("`{c}` is not a declared enumeration code"), span);
            }
        }
    }

    fn var_ref(&mut self, r: &Ref, span: Option<Span>) {
        match r {
            Ref::Feature(n) => {
                if !self.features.contains_key(n.as_str()) {
                    if self.codes.contains(n.as_str()) {
                        self.err("not-a-variable", format!("code `{n}` cannot be used as a variable"), span);
                    } else {
                        self.err("unknown-name", format!("unknown feature `{n}`"), span);
                    }
                }
            }
            Ref::Attr(f, a) => self.attr(f, a, span),
        }
    }

    fn attr(&mut self, f: &str, a: &str, span: Option<Span>) {
        match self.features.get(f) {
            None => self.err("unknown-name", format!("unknown feature `{f}`"), span),
            Some(feat) => {
                if !feat.attributes.iter().any(|x| x.name == a) {
                    self.err("unknown-attribute", format!("feature `{f}` has no attribute `{a}`"), span);
                }
            }
        }
    }

    fn arith(&mut self, e: &Expr, span: Option<Span>) {
        match e {
            Expr::Int(_) => {}
            Expr::Name(n) => {
                if !self.features.contains_key(n.as_str()) && !self.codes.contains(n.as_str()) {
                    self.err("unknown-name", format!("`{n}` is neither a feature nor a code"), span);
                }
            }
            Expr::Attr(f, a) => self.attr(f, a, span),
            Expr::Neg(x) => self.arith(x, span),
            Expr::Arith(_, a, b) => {
                self.arith(a, span);
                self.arith(b, span);
            }
            Expr::Min(xs) | Expr::Max(xs) => {
                if xs.is_empty() {
                    self.err("empty-list", "min/max needs at least one argument", span);
                }
                for x in xs {
                    self.arith(x, span);
                }
            }
            _ => self.err("type-mismatch", "expected an arithmetic expression, found a condition", span),
        }
    }

    // `symbolic_ok` holds at top level and inside top-level conjunctions.
    fn condition(&mut self, e: &Expr, symbolic_ok: bool, span: Option<Span>) {
        match e {
            Expr::Cmp(_, a, b) => {
                self.arith(a, span);
                self.arith(b, span);
            }
            Expr::Not(x) => self.condition(x, false, span),
            Expr::Logic(LogicOp::And, a, b) => {
                self.condition(a, symbolic_ok, span);
                self.condition(b, symbolic_ok, span);
            }
            Expr::Logic(_, a, b) => {
                self.condition(a, false, span);
                self.condition(b, false, span);
            }
            sym if sym.is_symbolic() => {
                if !symbolic_ok {
                    self.err(
                        "not-reifiable",
                        "symbolic constraints may only appear at top level or under `and`",
                        span,
                    );
                }
                self.symbolic(sym, span);
            }
            _ => self.err("type-mismatch", "expected a condition, found an arithmetic expression", span),
        }
    }

    fn symbolic(&mut self, e: &Expr, span: Option<Span>) {
        match e {
            Expr::AllDifferent(vars) => {
                for r in vars {
                    self.var_ref(r, span);
                }
            }
            Expr::Count { n, vars, value, .. } => {
                if *n < 0 {
                    self.err("negative-count", format!("count bound {n} is negative"), span);
                }
                for r in vars {
                    self.var_ref(r, span);
                }
                self.value(value, span);
            }
            Expr::Relation { vars, tuples } => {
                for r in vars {
                    self.var_ref(r, span);
                }
                for t in tuples {
                    if t.len() != vars.len() {
                        self.err(
                            "arity-mismatch",
                            format!("relation tuple has {} values for {} variables", t.len(), vars.len()),
                            span,
                        );
                    }
                    for v in t {
                        self.value(v, span);
                    }
                }
            }
            Expr::Choose { min, max, vars } => {
                if *min < 0 || min > max {
                    self.err("bad-cardinality", format!("choose({min}, {max}) needs 0 <= n <= m"), span);
                }
                for r in vars {
                    self.var_ref(r, span);
                }
            }
            _ => unreachable!("not a symbolic node"),
        }
    }
}
