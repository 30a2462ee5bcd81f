use serde::{Deserialize, Serialize};

use crate::domain::IntervalSet;
use crate::expr::{Constraint, VarRef};
use crate::prop::Prop;
use crate::state::{Cause, ConstraintId, VarState};
use crate::FdError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Consistent,
    Failed,
}

impl Status {
    pub fn is_failed(self) -> bool {
        self == Status::Failed
    }
}

/// An open backtracking level, as returned by [`Store::push_level`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LevelId(pub(crate) usize);

impl LevelId {
    pub fn depth(self) -> usize {
        self.0
    }
}

/// What went wrong in the last failed propagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    /// The propagator that detected the failure; `None` when a direct
    /// restriction emptied a domain.
    pub culprit: Option<ConstraintId>,
    pub emptied: Option<VarRef>,
}

#[derive(Debug, Clone)]
struct LevelMark {
    trail_len: usize,
    n_vars: usize,
    n_constraints: usize,
    status: Status,
    failure: Option<Failure>,
}

/// Finite-domain constraint store.
///
/// Owns the variable domains, the posted constraints and a trail of domain
/// changes. Every change made after [`push_level`](Store::push_level) is
/// undone by the matching [`pop_to`](Store::pop_to), including variables
/// created and constraints posted above that level.
#[derive(Debug, Clone, Default)]
pub struct Store {
    st: VarState,
    constraints: Vec<Constraint>,
    labels: Vec<Option<String>>,
    props: Vec<Prop>,
    levels: Vec<LevelMark>,
    failure: Option<Failure>,
}

impl Store {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn new_var(&mut self, domain: IntervalSet, name: impl Into<String>) -> Result<VarRef, FdError> {
        let name = name.into();
        if domain.is_empty() {
            return Err(FdError::EmptyDomain { name });
        }
        let v = self.st.domains.len();
        self.st.domains.push(domain);
        self.st.names.push(name);
        self.st.watchers.push(Vec::new());
        Ok(VarRef(v))
    }

    pub fn int_var(&mut self, lo: i64, hi: i64, name: impl Into<String>) -> Result<VarRef, FdError> {
        self.new_var(IntervalSet::range(lo, hi), name)
    }

    pub fn bool_var(&mut self, name: impl Into<String>) -> VarRef {
        self.new_var(IntervalSet::range(0, 1), name).expect("non-empty domain")
    }

    pub fn num_vars(&self) -> usize {
        self.st.domains.len()
    }

    pub fn vars(&self) -> impl Iterator<Item = VarRef> {
        (0..self.num_vars()).map(VarRef)
    }

    pub fn domain(&self, v: VarRef) -> &IntervalSet {
        &self.st.domains[v.0]
    }

    pub fn domains(&self) -> &[IntervalSet] {
        &self.st.domains
    }

    pub fn name(&self, v: VarRef) -> &str {
        &self.st.names[v.0]
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarRef> {
        self.st.names.iter().position(|n| n == name).map(VarRef)
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn constraint(&self, id: ConstraintId) -> &Constraint {
        &self.constraints[id.0]
    }

    pub fn label(&self, id: ConstraintId) -> Option<&str> {
        self.labels[id.0].as_deref()
    }

    /// Human-readable rendering of a constraint using variable names.
    pub fn describe(&self, id: ConstraintId) -> String {
        let names = |v: VarRef| self.name(v).to_string();
        let text = self.constraints[id.0].display(&names).to_string();
        text
    }

    pub fn status(&self) -> Status {
        if self.failure.is_some() {
            Status::Failed
        } else {
            Status::Consistent
        }
    }

    pub fn failure(&self) -> Option<Failure> {
        self.failure
    }

    fn check_var(&self, v: VarRef) -> Result<(), FdError> {
        if v.0 < self.num_vars() {
            Ok(())
        } else {
            Err(FdError::UnknownVar(v.0))
        }
    }

    /// Registers `c` and propagates to a fixpoint.
    pub fn post(&mut self, c: Constraint) -> Result<Status, FdError> {
        self.post_labeled(c, None::<String>).map(|(_, s)| s)
    }

    /// Like [`post`](Store::post), attaching a caller-chosen label that is
    /// reported when this constraint is the culprit of a failure.
    pub fn post_labeled(
        &mut self,
        c: Constraint,
        label: Option<impl Into<String>>,
    ) -> Result<(ConstraintId, Status), FdError> {
        c.check_shape()?;
        let vars = c.vars();
        for &v in &vars {
            self.check_var(v)?;
        }
        let prop = Prop::compile(&c)?;
        for node in prop.nodes() {
            node.check_range(&self.st.domains)?;
        }
        let id = self.install(c, label.map(Into::into), prop, &vars);
        // reified control variables live in [0..1]
        if let Constraint::Reified { b, .. } = &self.constraints[id.0] {
            let b = b.0;
            if self.failure.is_none() {
                self.st.cause = Some(Cause::Constraint(id));
                if self.st.retain(b, &IntervalSet::range(0, 1)).is_err() {
                    self.record_failure(Some(id));
                }
            }
        }
        Ok((id, self.propagate()))
    }

    fn install(&mut self, c: Constraint, label: Option<String>, prop: Prop, vars: &[VarRef]) -> ConstraintId {
        let id = ConstraintId(self.props.len());
        self.constraints.push(c);
        self.labels.push(label);
        self.props.push(prop);
        self.st.queued.push(false);
        for v in vars {
            self.st.watchers[v.0].push(id.0);
        }
        if self.failure.is_none() {
            self.st.enqueue(id.0);
        }
        id
    }

    pub(crate) fn post_bound(&mut self, objective: crate::norm::Node, shown: Constraint) -> ConstraintId {
        let mut vars = Vec::new();
        objective.collect_vars(&mut vars);
        vars.sort_unstable();
        vars.dedup();
        let vars: Vec<VarRef> = vars.into_iter().map(VarRef).collect();
        self.install(
            shown,
            Some("objective bound".to_string()),
            Prop::Bound {
                node: objective,
                limit: i64::MAX,
            },
            &vars,
        )
    }

    pub(crate) fn tighten_bound(&mut self, id: ConstraintId, limit: i64) {
        if let Prop::Bound { limit: l, .. } = &mut self.props[id.0] {
            *l = limit;
        }
        if self.failure.is_none() {
            self.st.enqueue(id.0);
        }
    }

    fn record_failure(&mut self, culprit: Option<ConstraintId>) {
        self.failure = Some(Failure {
            culprit,
            emptied: self.st.emptied.take().map(VarRef),
        });
        self.st.clear_queue();
    }

    /// Runs queued propagators until none can remove anything more.
    pub fn propagate(&mut self) -> Status {
        if self.failure.is_some() {
            self.st.clear_queue();
            return Status::Failed;
        }
        while let Some(c) = self.st.queue.pop_front() {
            self.st.queued[c] = false;
            self.st.cause = Some(Cause::Constraint(ConstraintId(c)));
            self.st.emptied = None;
            if self.props[c].propagate(&mut self.st).is_err() {
                self.record_failure(Some(ConstraintId(c)));
                self.st.cause = None;
                return Status::Failed;
            }
        }
        self.st.cause = None;
        Status::Consistent
    }

    fn restrict_with(&mut self, v: VarRef, keep: &IntervalSet, cause: Cause) -> Result<Status, FdError> {
        self.check_var(v)?;
        if self.failure.is_some() {
            return Ok(Status::Failed);
        }
        self.st.cause = Some(cause);
        self.st.emptied = None;
        let r = self.st.retain(v.0, keep);
        self.st.cause = None;
        if r.is_err() {
            self.record_failure(None);
            return Ok(Status::Failed);
        }
        Ok(self.propagate())
    }

    /// Intersects the domain of `v` with `keep` and propagates.
    pub fn restrict(&mut self, v: VarRef, keep: &IntervalSet) -> Result<Status, FdError> {
        self.restrict_with(v, keep, Cause::Decision)
    }

    pub(crate) fn search_fix(&mut self, v: VarRef, x: i64) -> Status {
        self.restrict_with(v, &IntervalSet::singleton(x), Cause::Search)
            .unwrap_or(Status::Failed)
    }

    pub(crate) fn search_exclude(&mut self, v: VarRef, x: i64) -> Status {
        if self.failure.is_some() {
            return Status::Failed;
        }
        self.st.cause = Some(Cause::Search);
        self.st.emptied = None;
        let r = self.st.remove(v.0, x);
        self.st.cause = None;
        if r.is_err() {
            self.record_failure(None);
            return Status::Failed;
        }
        self.propagate()
    }

    /// Who removed `value` from the domain of `v` at some open level.
    /// `None` if the value is still present or was never in the domain since
    /// the store was created.
    pub fn removal_cause(&self, v: VarRef, value: i64) -> Option<Cause> {
        if self.domain(v).contains(value) {
            return None;
        }
        self.st
            .trail
            .iter()
            .rev()
            .find(|e| e.var == v.0 && e.old.contains(value))
            .map(|e| e.cause)
    }

    pub fn push_level(&mut self) -> LevelId {
        self.levels.push(LevelMark {
            trail_len: self.st.trail.len(),
            n_vars: self.num_vars(),
            n_constraints: self.props.len(),
            status: self.status(),
            failure: self.failure,
        });
        LevelId(self.levels.len() - 1)
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// Closes `level` and every level above it, restoring domains,
    /// variables and constraints to their state when `level` was opened.
    pub fn pop_to(&mut self, level: LevelId) -> Result<(), FdError> {
        if level.0 >= self.levels.len() {
            return Err(FdError::UnknownLevel(level.0));
        }
        let mark = self.levels[level.0].clone();
        self.levels.truncate(level.0);
        self.st.clear_queue();
        self.st.undo_to(mark.trail_len);
        self.st.domains.truncate(mark.n_vars);
        self.st.names.truncate(mark.n_vars);
        self.st.watchers.truncate(mark.n_vars);
        let nc = mark.n_constraints;
        for w in &mut self.st.watchers {
            while w.last().is_some_and(|&c| c >= nc) {
                w.pop();
            }
        }
        self.constraints.truncate(nc);
        self.labels.truncate(nc);
        self.props.truncate(nc);
        self.st.queued.truncate(nc);
        self.failure = mark.failure;
        debug_assert_eq!(mark.status, self.status());
        Ok(())
    }
}
