//! Interactive configuration: staged decisions and extra constraints, each on
//! its own store level, with undo and solution browsing.

use std::sync::atomic::AtomicBool;
use std::sync::Arc;
use std::time::{Duration, Instant};

use featline_fd::{Cause, IntervalSet, Labeling, Limits, Status, Step, Store, Strategy, VarRef};
use serde::{Deserialize, Serialize};

use crate::analysis::{AnalysisError, Assignment, OptimumReport};
use crate::ast::{Expr, FeatureModel};
use crate::compile::{compile, CompileError, Compiled};
use crate::json::JsonInt;
use crate::parser::parse_constraint;
use crate::validate::Diagnostic;

/// Default cap on the remaining-configuration count shown in views.
pub const DEFAULT_VIEW_CAP: u64 = 10_000;

/// How a decision narrows one variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Restriction {
    Fix(JsonInt),
    AtLeast(JsonInt),
    AtMost(JsonInt),
    /// Keep only these inclusive ranges.
    In(Vec<(JsonInt, JsonInt)>),
}

impl Restriction {
    pub fn domain(&self) -> IntervalSet {
        match self {
            Restriction::Fix(v) => IntervalSet::singleton(v.0),
            Restriction::AtLeast(v) => IntervalSet::range(v.0, i64::MAX),
            Restriction::AtMost(v) => IntervalSet::range(i64::MIN, v.0),
            Restriction::In(rs) => IntervalSet::from_ranges(rs.iter().map(|(a, b)| (a.0, b.0))),
        }
    }
}

/// One step of a session's history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogEntry {
    Decide { name: String, restriction: Restriction },
    Constraint { text: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum VarStatus {
    /// Domain is `{0}`.
    ForcedOut,
    Fixed { value: JsonInt },
    /// Every remaining value is at least 1.
    ForcedIn,
    Open,
}

impl VarStatus {
    pub fn of(d: &IntervalSet) -> VarStatus {
        match (d.value(), d.min()) {
            (Some(0), _) => VarStatus::ForcedOut,
            (Some(v), _) => VarStatus::Fixed { value: JsonInt(v) },
            (None, Some(lo)) if lo >= 1 => VarStatus::ForcedIn,
            _ => VarStatus::Open,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarView {
    pub name: String,
    /// Remaining values as inclusive ranges.
    pub domain: Vec<(JsonInt, JsonInt)>,
    #[serde(flatten)]
    pub status: VarStatus,
}

impl VarView {
    fn new(name: String, d: &IntervalSet) -> Self {
        VarView {
            name,
            domain: d.runs().iter().map(|&(a, b)| (JsonInt(a), JsonInt(b))).collect(),
            status: VarStatus::of(d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Remaining {
    pub count: JsonInt,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct View {
    pub vars: Vec<VarView>,
    pub remaining: Remaining,
    /// Number of open log entries.
    pub depth: usize,
}

/// Why an action was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conflict {
    pub action: LogEntry,
    /// Source text of the constraint whose filtering emptied a domain, or of
    /// the earlier decision that ruled the requested values out.
    pub culprit: Option<String>,
    /// The lowered culprit over variable names.
    pub culprit_detail: Option<String>,
    pub emptied: Option<String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SessionError {
    #[error("the model has no valid configuration")]
    VoidModel,
    #[error("no feature or attribute named `{0}`")]
    UnknownName(String),
    #[error("cannot parse the constraint")]
    Parse(Vec<Diagnostic>),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error("cannot undo {k} step(s); {open} open")]
    OutOfRange { k: usize, open: usize },
    #[error("rejected: {}", .0.culprit.as_deref().unwrap_or("no consistent value left"))]
    Conflict(Box<Conflict>),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// Result of stepping the solution iterator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NextSolution {
    Solution { solution: Assignment },
    Exhausted,
    /// The time budget ran out; calling again resumes.
    Interrupted,
}

pub struct Session {
    model: FeatureModel,
    compiled: Compiled,
    log: Vec<(LogEntry, featline_fd::LevelId)>,
    iter: Option<(Store, Labeling)>,
    strategy: Strategy,
    view_cap: u64,
    budget: Option<Duration>,
    cancel: Option<Arc<AtomicBool>>,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session")
            .field("model", &self.model.name)
            .field("log", &self.log)
            .finish_non_exhaustive()
    }
}

impl Session {
    /// Compiles `m` and opens a session on it.
    pub fn start(m: &FeatureModel) -> Result<Session, SessionError> {
        let mut compiled = compile(m)?;
        if compiled.is_void(&Limits::none())? {
            return Err(SessionError::VoidModel);
        }
        Ok(Session {
            model: m.clone(),
            compiled,
            log: Vec::new(),
            iter: None,
            strategy: Strategy::default(),
            view_cap: DEFAULT_VIEW_CAP,
            budget: None,
            cancel: None,
        })
    }

    /// Opens a session and replays `log`. On failure, reports the index of
    /// the first entry that could not be applied.
    pub fn replay(m: &FeatureModel, log: &[LogEntry]) -> Result<Session, (usize, SessionError)> {
        let mut s = Session::start(m).map_err(|e| (0, e))?;
        for (i, e) in log.iter().enumerate() {
            s.apply(e).map_err(|err| (i, err))?;
        }
        Ok(s)
    }

    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    /// Cap for the remaining-configuration count in views.
    pub fn with_view_cap(mut self, cap: u64) -> Self {
        self.view_cap = cap.max(1);
        self
    }

    /// Wall-clock budget for counting, solution browsing and optimization.
    pub fn with_budget(mut self, budget: Option<Duration>) -> Self {
        self.budget = budget;
        self
    }

    /// Flag that stops counting, browsing and optimization early when set.
    pub fn set_cancel(&mut self, cancel: Option<Arc<AtomicBool>>) {
        self.cancel = cancel;
    }

    pub fn model(&self) -> &FeatureModel {
        &self.model
    }

    pub fn compiled(&self) -> &Compiled {
        &self.compiled
    }

    pub fn store(&self) -> &Store {
        &self.compiled.store
    }

    pub fn log(&self) -> Vec<LogEntry> {
        self.log.iter().map(|(e, _)| e.clone()).collect()
    }

    fn limits(&self) -> Limits {
        Limits {
            deadline: self.budget.map(|b| Instant::now() + b),
            cancel: self.cancel.clone(),
        }
    }

    pub fn apply(&mut self, entry: &LogEntry) -> Result<Vec<VarView>, SessionError> {
        match entry {
            LogEntry::Decide { name, restriction } => self.decide(name, restriction.clone()),
            LogEntry::Constraint { text } => self.add_constraint_text(text),
        }
    }

    fn snapshot(&self) -> Vec<IntervalSet> {
        self.compiled
            .vars
            .model_vars()
            .iter()
            .map(|v| self.compiled.store.domain(*v).clone())
            .collect()
    }

    fn delta(&self, before: &[IntervalSet]) -> Vec<VarView> {
        self.compiled
            .vars
            .model_vars()
            .iter()
            .zip(before)
            .filter(|(v, d)| self.compiled.store.domain(**v) != *d)
            .map(|(v, _)| self.var_view(*v))
            .collect()
    }

    fn var_view(&self, v: VarRef) -> VarView {
        let name = self.compiled.vars.name_of(v).unwrap_or_else(|| self.compiled.store.name(v).to_string());
        VarView::new(name, self.compiled.store.domain(v))
    }

    /// Narrows `name` and propagates on a new level.
    pub fn decide(&mut self, name: &str, restriction: Restriction) -> Result<Vec<VarView>, SessionError> {
        let var = self
            .compiled
            .vars
            .lookup(name)
            .ok_or_else(|| SessionError::UnknownName(name.to_string()))?;
        let keep = restriction.domain();
        let entry = LogEntry::Decide {
            name: name.to_string(),
            restriction,
        };
        let before = self.snapshot();
        let level = self.compiled.store.push_level();
        let status = self.compiled.store.restrict(var, &keep).map_err(CompileError::from)?;
        if status == Status::Failed {
            let conflict = self.conflict(entry, Some((var, &keep)));
            self.compiled.store.pop_to(level).map_err(CompileError::from)?;
            return Err(SessionError::Conflict(Box::new(conflict)));
        }
        self.log.push((entry, level));
        self.iter = None;
        Ok(self.delta(&before))
    }

    /// Parses, type-checks and posts a configure-time constraint.
    pub fn add_constraint_text(&mut self, text: &str) -> Result<Vec<VarView>, SessionError> {
        let e = parse_constraint(text).map_err(SessionError::Parse)?;
        self.add_constraint(&e)
    }

    pub fn add_constraint(&mut self, e: &Expr) -> Result<Vec<VarView>, SessionError> {
        let lowered = self.compiled.lower_checked(&self.model, e)?;
        let entry = LogEntry::Constraint { text: e.to_string() };
        let before = self.snapshot();
        let level = self.compiled.store.push_level();
        for (c, label) in lowered {
            let posted = self.compiled.store.post_labeled(c, Some(label));
            match posted {
                Ok((_, Status::Consistent)) => {}
                Ok((_, Status::Failed)) => {
                    let conflict = self.conflict(entry, None);
                    self.compiled.store.pop_to(level).map_err(CompileError::from)?;
                    return Err(SessionError::Conflict(Box::new(conflict)));
                }
                Err(err) => {
                    self.compiled.store.pop_to(level).map_err(CompileError::from)?;
                    return Err(CompileError::from(err).into());
                }
            }
        }
        self.log.push((entry, level));
        self.iter = None;
        Ok(self.delta(&before))
    }

    // Explains the current failure. `restricted` is the variable and
    // domain of a decision that failed on its own.
    fn conflict(&self, action: LogEntry, restricted: Option<(VarRef, &IntervalSet)>) -> Conflict {
        let store = &self.compiled.store;
        let failure = store.failure();
        let emptied = failure
            .and_then(|f| f.emptied)
            .or(restricted.map(|(v, _)| v))
            .map(|v| self.compiled.vars.name_of(v).unwrap_or_else(|| store.name(v).to_string()));
        let mut cause = failure.and_then(|f| f.culprit).map(Cause::Constraint);
        if cause.is_none() {
            if let Some((v, keep)) = restricted {
                let wanted = keep.intersect(&self.compiled.declared[v.index()]);
                cause = wanted.iter().take(4096).find_map(|x| store.removal_cause(v, x));
                if cause.is_none() {
                    cause = Some(Cause::Decision);
                }
            }
        }
        let (culprit, culprit_detail) = match cause {
            Some(Cause::Constraint(id)) => (
                Some(store.label(id).map_or_else(|| store.describe(id), str::to_string)),
                Some(store.describe(id)),
            ),
            Some(Cause::Decision) => {
                let target = restricted.map(|(v, _)| v);
                let earlier = self.log.iter().rev().find_map(|(e, _)| match e {
                    LogEntry::Decide { name, restriction } if self.compiled.vars.lookup(name) == target => {
                        Some(describe_decision(name, restriction))
                    }
                    _ => None,
                });
                match earlier {
                    Some(text) => (Some(text.clone()), Some(text)),
                    None => {
                        let text = restricted
                            .map(|(v, _)| format!("domain of {}", self.compiled.vars.name_of(v).unwrap_or_default()));
                        (text.clone(), text)
                    }
                }
            }
            _ => (None, None),
        };
        Conflict {
            action,
            culprit,
            culprit_detail,
            emptied,
        }
    }

    /// Removes the last `k` log entries.
    pub fn undo(&mut self, k: usize) -> Result<Vec<VarView>, SessionError> {
        if k == 0 || k > self.log.len() {
            return Err(SessionError::OutOfRange { k, open: self.log.len() });
        }
        let before = self.snapshot();
        let level = self.log[self.log.len() - k].1;
        self.compiled.store.pop_to(level).map_err(CompileError::from)?;
        self.log.truncate(self.log.len() - k);
        self.iter = None;
        Ok(self.delta(&before))
    }

    /// The next solution of the current store. Any decision, constraint or
    /// undo restarts the sequence.
    pub fn next_solution(&mut self) -> NextSolution {
        let limits = self.limits();
        let (store, lab) = self.iter.get_or_insert_with(|| {
            let lab = Labeling::new(self.strategy).over(self.compiled.vars.model_vars());
            (self.compiled.store.clone(), lab)
        });
        let mut resumed = std::mem::replace(lab, Labeling::new(Strategy::default()));
        resumed = resumed.with_limits(limits);
        let step = resumed.next(store);
        *lab = resumed;
        match step {
            Step::Solution(s) => NextSolution::Solution {
                solution: self.compiled.assignment(&s).into_iter().map(|(k, v)| (k, JsonInt(v))).collect(),
            },
            Step::Exhausted => NextSolution::Exhausted,
            Step::Interrupted => NextSolution::Interrupted,
        }
    }

    pub fn vars(&self) -> Vec<VarView> {
        self.compiled.vars.model_vars().into_iter().map(|v| self.var_view(v)).collect()
    }

    /// Domains and statuses of every feature and attribute, with a capped
    /// count of the configurations still possible.
    pub fn view(&mut self) -> View {
        let limits = self.limits();
        let lab = Labeling::new(Strategy::default())
            .over(self.compiled.vars.model_vars())
            .with_limits(limits);
        let r = self.compiled.store.count_with(lab, self.view_cap);
        View {
            vars: self.vars(),
            remaining: Remaining {
                count: JsonInt(r.count.min(i64::MAX as u64) as i64),
                exact: r.exact,
            },
            depth: self.log.len(),
        }
    }

    /// Best configuration for a declared goal under the current decisions.
    pub fn optimize(&mut self, goal: &str) -> Result<OptimumReport, SessionError> {
        let limits = self.limits();
        Ok(self.compiled.optimize_goal(goal, self.strategy, &limits)?)
    }
}

fn describe_decision(name: &str, r: &Restriction) -> String {
    match r {
        Restriction::Fix(v) => format!("decision {name} = {v}"),
        Restriction::AtLeast(v) => format!("decision {name} >= {v}"),
        Restriction::AtMost(v) => format!("decision {name} <= {v}"),
        Restriction::In(rs) => {
            let d = IntervalSet::from_ranges(rs.iter().map(|(a, b)| (a.0, b.0)));
            format!("decision {name} in {d}")
        }
    }
}
