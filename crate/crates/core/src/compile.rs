//! Lowering of feature models to finite-domain constraint stores.

use std::collections::HashMap;
use std::fmt::Write as _;

use featline_fd::{BoolForm, Cmp, CmpOp, Constraint, CountOp, FdError, IntervalSet, NumExpr, Solution, Status, Store, VarRef};
use indexmap::IndexMap;

use crate::ast::*;
use crate::validate::{check_arith, check_constraint, validate_model, Diagnostic};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompileError {
    #[error("the model has {} problem(s); first: {}", .0.len(), .0.first().map(|d| d.to_string()).unwrap_or_default())]
    Invalid(Vec<Diagnostic>),
    #[error("type error: {0}")]
    Type(String),
    #[error("not reifiable: {0}")]
    NotReifiable(String),
    #[error(transparent)]
    Fd(#[from] FdError),
}

impl CompileError {
    fn from_diagnostics(d: Vec<Diagnostic>) -> Self {
        if let Some(x) = d.iter().find(|x| x.code == "not-reifiable") {
            CompileError::NotReifiable(x.message.clone())
        } else {
            let msgs: Vec<String> = d.iter().map(|x| x.message.clone()).collect();
            CompileError::Type(msgs.join("; "))
        }
    }
}

/// Where each model element lives in the store.
#[derive(Debug, Clone, Default)]
pub struct VarMap {
    features: IndexMap<String, VarRef>,
    attrs: IndexMap<(String, String), VarRef>,
    goals: IndexMap<String, (GoalDirection, NumExpr)>,
    codes: HashMap<String, i64>,
    truth: Option<VarRef>,
}

impl VarMap {
    pub fn feature(&self, name: &str) -> Option<VarRef> {
        self.features.get(name).copied()
    }

    pub fn attr(&self, feature: &str, attr: &str) -> Option<VarRef> {
        self.attrs.get(&(feature.to_string(), attr.to_string())).copied()
    }

    /// Resolves `F` or `F.A`.
    pub fn lookup(&self, name: &str) -> Option<VarRef> {
        match name.split_once('.') {
            Some((f, a)) => self.attr(f, a),
            None => self.feature(name),
        }
    }

    pub fn goal(&self, name: &str) -> Option<(GoalDirection, &NumExpr)> {
        self.goals.get(name).map(|(d, e)| (*d, e))
    }

    pub fn goal_names(&self) -> impl Iterator<Item = &str> {
        self.goals.keys().map(String::as_str)
    }

    pub fn code(&self, name: &str) -> Option<i64> {
        self.codes.get(name).copied()
    }

    pub fn features(&self) -> impl Iterator<Item = (&str, VarRef)> {
        self.features.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn feature_vars(&self) -> Vec<VarRef> {
        self.features.values().copied().collect()
    }

    pub fn attrs(&self) -> impl Iterator<Item = (&str, &str, VarRef)> {
        self.attrs.iter().map(|((f, a), v)| (f.as_str(), a.as_str(), *v))
    }

    /// Feature variables followed by attribute variables.
    pub fn model_vars(&self) -> Vec<VarRef> {
        self.features.values().chain(self.attrs.values()).copied().collect()
    }

    /// Display name of a model variable: `F` or `F.A`.
    pub fn name_of(&self, v: VarRef) -> Option<String> {
        if let Some((n, _)) = self.features.iter().find(|(_, x)| **x == v) {
            return Some(n.clone());
        }
        self.attrs
            .iter()
            .find(|(_, x)| **x == v)
            .map(|((f, a), _)| format!("{f}.{a}"))
    }
}

/// A compiled model: the store after initial propagation and its map.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub store: Store,
    pub vars: VarMap,
    /// Domains as declared, before any propagation.
    pub declared: Vec<IntervalSet>,
}

/// Validates and lowers `m`.
pub fn compile(m: &FeatureModel) -> Result<Compiled, CompileError> {
    validate_model(m).map_err(CompileError::Invalid)?;
    let mut store = Store::new();
    let mut vars = VarMap::default();
    for e in &m.enums {
        for (i, c) in e.codes.iter().enumerate() {
            vars.codes.insert(c.clone(), i as i64);
        }
    }
    for f in &m.features {
        let v = store.int_var(0, f.max_count, f.name.clone())?;
        vars.features.insert(f.name.clone(), v);
    }
    for f in &m.features {
        for a in &f.attributes {
            let d = match &a.domain {
                AttrDomain::Range(lo, hi) => IntervalSet::range(*lo, *hi),
                AttrDomain::Set(vals) => IntervalSet::from_values(vals.iter().map(|x| value_of(&vars.codes, x))),
            };
            let v = store.new_var(d, format!("{}.{}", f.name, a.name))?;
            vars.attrs.insert((f.name.clone(), a.name.clone()), v);
        }
    }
    vars.truth = Some(store.int_var(1, 1, "_true")?);
    let declared = store.domains().to_vec();

    let mut c = Compiled { store, vars, declared };
    let mut out = Vec::new();
    c.lower_structure(m, &mut out);
    for e in &m.constraints {
        c.lower_expr(e, &mut out)?;
    }
    for (con, label) in out {
        c.store.post_labeled(con, Some(label))?;
    }
    for g in &m.goals {
        let e = c.num(&g.expr)?;
        c.vars.goals.insert(g.name.clone(), (g.direction, e));
    }
    Ok(c)
}

fn value_of(codes: &HashMap<String, i64>, v: &Value) -> i64 {
    match v {
        Value::Int(n) => *n,
        Value::Code(c) => codes[c],
    }
}

fn ge1(v: VarRef) -> BoolForm {
    BoolForm::Atom(NumExpr::var(v).ge(1))
}

impl Compiled {
    fn var(&self, r: &Ref) -> Result<VarRef, CompileError> {
        match r {
            Ref::Feature(f) => self.vars.feature(f),
            Ref::Attr(f, a) => self.vars.attr(f, a),
        }
        .ok_or_else(|| CompileError::Type(format!("unknown variable `{r}`")))
    }

    fn vars_of(&self, rs: &[Ref]) -> Result<Vec<VarRef>, CompileError> {
        rs.iter().map(|r| self.var(r)).collect()
    }

    fn value(&self, v: &Value) -> Result<i64, CompileError> {
        match v {
            Value::Int(n) => Ok(*n),
            Value::Code(c) => self
                .vars
                .code(c)
                .ok_or_else(|| CompileError::Type(format!("unknown code `{c}`"))),
        }
    }

    fn truth(&self) -> VarRef {
        self.vars.truth.expect("compiled store has a truth variable")
    }

    /// Hierarchy, group and dependency constraints, in declaration order.
    fn lower_structure(&self, m: &FeatureModel, out: &mut Vec<(Constraint, String)>) {
        let fv = |n: &str| self.vars.feature(n).expect("validated feature");
        if let Some(root) = m.root() {
            out.push((NumExpr::var(fv(&root.name)).eq(1).into(), format!("root {}", root.name)));
        }
        for f in &m.features {
            let Some(p) = &f.parent else { continue };
            let parent = m.feature(&p.name).expect("validated parent");
            let (pv, cv, n) = (fv(&p.name), fv(&f.name), f.max_count);
            let label = format!(
                "{} {} child of {}",
                f.name,
                if p.edge == Edge::Mandatory { "mandatory" } else { "optional" },
                p.name
            );
            let c = NumExpr::var(cv);
            let pn = NumExpr::var(pv);
            match (parent.is_boolean(), f.is_boolean(), p.edge) {
                (true, true, Edge::Mandatory) | (false, _, Edge::Mandatory) => out.push((c.eq(pn).into(), label)),
                (true, true, Edge::Optional) | (false, _, Edge::Optional) => out.push((c.le(pn).into(), label)),
                (true, false, edge) => {
                    if edge == Edge::Mandatory {
                        out.push((c.clone().ge(pn).into(), label.clone()));
                    }
                    out.push((c.le(NumExpr::linear(vec![n], vec![pv], 0)).into(), label));
                }
            }
        }
        for g in &m.groups {
            let pv = fv(&g.parent);
            let members: Vec<VarRef> = g.members.iter().map(|x| fv(x)).collect();
            let label = format!("group of {} [{}..{}] {{ {} }}", g.parent, g.min, g.max, g.members.join(", "));
            for (k, op) in [(g.min, CmpOp::Ge), (g.max, CmpOp::Le)] {
                let rhs = NumExpr::linear(vec![k], vec![pv], 0);
                out.push((NumExpr::sum(members.clone()).cmp(op, rhs).into(), label.clone()));
            }
        }
        for d in &m.cross_deps {
            let (a, b) = (fv(&d.from), fv(&d.to));
            let label = d.to_string();
            let c = match (d.kind, d.semantics) {
                (DepKind::Requires, DepSemantics::Presence) => Constraint::Reified {
                    b: self.truth(),
                    form: BoolForm::implies(ge1(a), ge1(b)),
                },
                (DepKind::Requires, DepSemantics::PerInstance) => {
                    NumExpr::var(b).ge(NumExpr::linear(vec![1], vec![a], d.offset)).into()
                }
                (DepKind::Excludes, _) => Constraint::Reified {
                    b: self.truth(),
                    form: BoolForm::not(BoolForm::And(vec![ge1(a), ge1(b)])),
                },
            };
            out.push((c, label));
        }
    }

    /// Lowers a top-level constraint expression. Top-level conjunctions are
    /// split into separate constraints.
    pub fn lower_expr(&self, e: &Expr, out: &mut Vec<(Constraint, String)>) -> Result<(), CompileError> {
        match e {
            Expr::Logic(LogicOp::And, a, b) => {
                self.lower_expr(a, out)?;
                self.lower_expr(b, out)
            }
            Expr::Cmp(op, a, b) => {
                out.push((Constraint::Cmp(self.cmp(*op, a, b)?), e.to_string()));
                Ok(())
            }
            Expr::Not(_) | Expr::Logic(..) => {
                let form = self.form(e)?;
                out.push((Constraint::Reified { b: self.truth(), form }, e.to_string()));
                Ok(())
            }
            Expr::AllDifferent(rs) => {
                out.push((Constraint::AllDifferent(self.vars_of(rs)?), e.to_string()));
                Ok(())
            }
            Expr::Count { op, n, vars, value } => {
                let c = Constraint::Count {
                    vars: self.vars_of(vars)?,
                    value: self.value(value)?,
                    op: *op,
                    n: *n,
                };
                out.push((c, e.to_string()));
                Ok(())
            }
            Expr::Relation { vars, tuples } => {
                let tuples = tuples
                    .iter()
                    .map(|t| t.iter().map(|v| self.value(v)).collect::<Result<Vec<_>, _>>())
                    .collect::<Result<Vec<_>, _>>()?;
                out.push((
                    Constraint::Table {
                        vars: self.vars_of(vars)?,
                        tuples,
                    },
                    e.to_string(),
                ));
                Ok(())
            }
            Expr::Choose { min, max, vars } => {
                let vs = self.vars_of(vars)?;
                let label = e.to_string();
                for (op, n) in [(CountOp::AtLeast, *min), (CountOp::AtMost, *max)] {
                    out.push((
                        Constraint::Count {
                            vars: vs.clone(),
                            value: 1,
                            op,
                            n,
                        },
                        label.clone(),
                    ));
                }
                Ok(())
            }
            _ => Err(CompileError::Type(format!("`{e}` is not a condition"))),
        }
    }

    /// Type-checks `e` against the model and lowers it.
    pub fn lower_checked(
        &self,
        m: &FeatureModel,
        e: &Expr,
    ) -> Result<Vec<(Constraint, String)>, CompileError> {
        let d = check_constraint(m, e, None);
        if !d.is_empty() {
            return Err(CompileError::from_diagnostics(d));
        }
        let mut out = Vec::new();
        self.lower_expr(e, &mut out)?;
        Ok(out)
    }

    /// Type-checks and lowers an arithmetic expression, e.g. an ad hoc goal.
    pub fn lower_goal(&self, m: &FeatureModel, e: &Expr) -> Result<NumExpr, CompileError> {
        let d = check_arith(m, e, None);
        if !d.is_empty() {
            return Err(CompileError::from_diagnostics(d));
        }
        self.num(e)
    }

    fn cmp(&self, op: CmpOp, a: &Expr, b: &Expr) -> Result<Cmp, CompileError> {
        Ok(self.num(a)?.cmp(op, self.num(b)?))
    }

    fn form(&self, e: &Expr) -> Result<BoolForm, CompileError> {
        Ok(match e {
            Expr::Cmp(op, a, b) => BoolForm::Atom(self.cmp(*op, a, b)?),
            Expr::Not(x) => BoolForm::not(self.form(x)?),
            Expr::Logic(op, a, b) => {
                let (a, b) = (self.form(a)?, self.form(b)?);
                match op {
                    LogicOp::And => BoolForm::And(flatten(a, b, true)),
                    LogicOp::Or => BoolForm::Or(flatten(a, b, false)),
                    LogicOp::Xor => BoolForm::xor(a, b),
                    LogicOp::Implies => BoolForm::implies(a, b),
                    LogicOp::Iff => BoolForm::iff(a, b),
                }
            }
            x if x.is_symbolic() => {
                return Err(CompileError::NotReifiable(format!(
                    "`{x}` can only appear at top level or under `and`"
                )))
            }
            x => return Err(CompileError::Type(format!("`{x}` is not a condition"))),
        })
    }

    fn num(&self, e: &Expr) -> Result<NumExpr, CompileError> {
        Ok(match e {
            Expr::Int(n) => NumExpr::Const(*n),
            Expr::Name(n) => match (self.vars.feature(n), self.vars.code(n)) {
                (Some(v), _) => NumExpr::Var(v),
                (None, Some(c)) => NumExpr::Const(c),
                (None, None) => return Err(CompileError::Type(format!("unknown name `{n}`"))),
            },
            Expr::Attr(f, a) => NumExpr::Var(
                self.vars
                    .attr(f, a)
                    .ok_or_else(|| CompileError::Type(format!("unknown attribute `{f}.{a}`")))?,
            ),
            Expr::Neg(x) => -self.num(x)?,
            Expr::Arith(op, a, b) => {
                let (a, b) = (self.num(a)?, self.num(b)?);
                match op {
                    ArithOp::Add => a + b,
                    ArithOp::Sub => a - b,
                    ArithOp::Mul => NumExpr::product(a, b),
                }
            }
            Expr::Min(xs) => NumExpr::Min(xs.iter().map(|x| self.num(x)).collect::<Result<_, _>>()?),
            Expr::Max(xs) => NumExpr::Max(xs.iter().map(|x| self.num(x)).collect::<Result<_, _>>()?),
            x => return Err(CompileError::Type(format!("`{x}` is not arithmetic"))),
        })
    }

    /// Model variable values of `sol`, keyed `F` or `F.A`.
    pub fn assignment(&self, sol: &Solution) -> IndexMap<String, i64> {
        let mut out = IndexMap::new();
        for (f, v) in self.vars.features() {
            out.insert(f.to_string(), sol.value(v));
        }
        for (f, a, v) in self.vars.attrs() {
            out.insert(format!("{f}.{a}"), sol.value(v));
        }
        out
    }

    pub fn is_failed(&self) -> bool {
        self.store.status() == Status::Failed
    }

    /// The lowered problem as stable text: declared domains, then one
    /// constraint per line with its source.
    pub fn emit_csp(&self) -> String {
        let mut out = String::new();
        for (i, d) in self.declared.iter().enumerate() {
            let _ = writeln!(out, "var {} in {d}", self.store.name(VarRef::from_index(i)));
        }
        for (i, _) in self.store.constraints().iter().enumerate() {
            let id = featline_fd::ConstraintId::from_index(i);
            let _ = write!(out, "c{i}: {}", self.store.describe(id));
            if let Some(l) = self.store.label(id) {
                let _ = write!(out, "  # {l}");
            }
            out.push('\n');
        }
        out
    }
}

fn flatten(a: BoolForm, b: BoolForm, and: bool) -> Vec<BoolForm> {
    let mut out = Vec::new();
    for x in [a, b] {
        match x {
            BoolForm::And(xs) if and => out.extend(xs),
            BoolForm::Or(xs) if !and => out.extend(xs),
            x => out.push(x),
        }
    }
    out
}
