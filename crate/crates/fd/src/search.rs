//! Depth-first labeling, solution counting and branch-and-bound.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::expr::{Constraint, NumExpr, VarRef};
use crate::norm;
use crate::state::ConstraintId;
use crate::store::{LevelId, Status, Store};
use crate::FdError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarOrder {
    #[default]
    DeclarationOrder,
    /// Smallest domain first, ties broken by declaration order.
    FirstFail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueOrder {
    #[default]
    Ascending,
    Descending,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Strategy {
    pub var_order: VarOrder,
    pub value_order: ValueOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Minimize,
    Maximize,
}

/// A total assignment, indexed by variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Solution {
    values: Vec<i64>,
}

impl Solution {
    pub fn new(values: Vec<i64>) -> Self {
        Solution { values }
    }

    pub fn value(&self, v: VarRef) -> i64 {
        self.values[v.0]
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Optional stop conditions for long searches.
#[derive(Debug, Clone, Default)]
pub struct Limits {
    pub deadline: Option<Instant>,
    pub cancel: Option<Arc<AtomicBool>>,
}

impl Limits {
    pub fn none() -> Self {
        Self::default()
    }

    fn hit(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
            || self.cancel.as_ref().is_some_and(|c| c.load(Ordering::Relaxed))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Solution(Solution),
    Exhausted,
    /// A [`Limits`] condition fired; the search may be resumed.
    Interrupted,
}

#[derive(Debug, Clone)]
struct Frame {
    level: LevelId,
    var: VarRef,
    value: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Fresh,
    Descend,
    AfterSolution,
    Done,
}

/// Resumable depth-first search state over a store it does not own.
///
/// Branches are `x = v` then `x ≠ v`. The search opens one level on top of
/// the store when it starts and closes it again when exhausted or
/// [`finish`](Labeling::finish)ed, so the store ends up exactly as it was.
#[derive(Debug, Clone)]
pub struct Labeling {
    strategy: Strategy,
    decision_vars: Option<Vec<VarRef>>,
    limits: Limits,
    frames: Vec<Frame>,
    base: Option<LevelId>,
    phase: Phase,
    bound: Option<ConstraintId>,
    limit: i64,
    nodes: u64,
}

impl Labeling {
    pub fn new(strategy: Strategy) -> Self {
        Labeling {
            strategy,
            decision_vars: None,
            limits: Limits::none(),
            frames: Vec::new(),
            base: None,
            phase: Phase::Fresh,
            bound: None,
            limit: i64::MAX,
            nodes: 0,
        }
    }

    /// Branch only on `vars`. Each distinct assignment of them that extends
    /// to a full solution is reported once, with one such full solution.
    pub fn over(mut self, vars: Vec<VarRef>) -> Self {
        let mut seen = std::collections::HashSet::new();
        self.decision_vars = Some(vars.into_iter().filter(|v| seen.insert(*v)).collect());
        self
    }

    pub fn with_limits(mut self, limits: Limits) -> Self {
        self.limits = limits;
        self
    }

    pub fn nodes(&self) -> u64 {
        self.nodes
    }

    fn select(&self, store: &Store) -> Option<VarRef> {
        let open = |v: &VarRef| !store.domain(*v).is_fixed();
        let cands: Box<dyn Iterator<Item = VarRef>> = match &self.decision_vars {
            Some(vs) => Box::new(vs.iter().copied().filter(open)),
            None => Box::new(store.vars().filter(open)),
        };
        match self.strategy.var_order {
            VarOrder::DeclarationOrder => cands.into_iter().next(),
            VarOrder::FirstFail => cands.min_by_key(|v| (store.domain(*v).size(), v.0)),
        }
    }

    fn pick_value(&self, store: &Store, v: VarRef) -> i64 {
        let d = store.domain(v);
        match self.strategy.value_order {
            ValueOrder::Ascending => d.min().unwrap(),
            ValueOrder::Descending => d.max().unwrap(),
        }
    }

    // Undo the most recent choice and take its other branch. False when the
    // tree is exhausted.
    fn backtrack(&mut self, store: &mut Store) -> bool {
        while let Some(f) = self.frames.pop() {
            store.pop_to(f.level).expect("search level is open");
            if let Some(b) = self.bound {
                store.tighten_bound(b, self.limit);
            }
            if store.search_exclude(f.var, f.value) == Status::Consistent {
                return true;
            }
        }
        false
    }

    /// Advances to the next solution.
    pub fn next(&mut self, store: &mut Store) -> Step {
        match self.phase {
            Phase::Done => return Step::Exhausted,
            Phase::Fresh => {
                self.base = Some(store.push_level());
                self.phase = Phase::Descend;
                if store.propagate() == Status::Failed {
                    return self.exhaust(store);
                }
            }
            Phase::AfterSolution => {
                self.phase = Phase::Descend;
                if !self.backtrack(store) {
                    return self.exhaust(store);
                }
            }
            Phase::Descend => {}
        }
        loop {
            if self.limits.hit() {
                return Step::Interrupted;
            }
            if store.status() == Status::Failed && !self.backtrack(store) {
                return self.exhaust(store);
            }
            let Some(var) = self.select(store) else {
                let sol = match self.decision_vars {
                    None => Some(current(store)),
                    Some(_) => complete(store, self.strategy),
                };
                match sol {
                    Some(sol) => {
                        self.phase = Phase::AfterSolution;
                        return Step::Solution(sol);
                    }
                    None => {
                        if !self.backtrack(store) {
                            return self.exhaust(store);
                        }
                        continue;
                    }
                }
            };
            let value = self.pick_value(store, var);
            self.nodes += 1;
            let level = store.push_level();
            self.frames.push(Frame { level, var, value });
            store.search_fix(var, value);
        }
    }

    fn exhaust(&mut self, store: &mut Store) -> Step {
        self.finish(store);
        Step::Exhausted
    }

    /// Abandons the search and restores the store.
    pub fn finish(&mut self, store: &mut Store) {
        if let Some(base) = self.base.take() {
            store.pop_to(base).expect("search base level is open");
        }
        self.frames.clear();
        self.phase = Phase::Done;
    }
}

fn current(store: &Store) -> Solution {
    Solution::new(store.domains().iter().map(|d| d.value().expect("all fixed")).collect())
}

// Finds one full extension of the current (projected) assignment.
fn complete(store: &mut Store, strategy: Strategy) -> Option<Solution> {
    let mut inner = Labeling::new(strategy);
    let out = match inner.next(store) {
        Step::Solution(s) => Some(s),
        _ => None,
    };
    inner.finish(store);
    out
}

/// Iterator over the solutions of a borrowed store. Dropping it restores the
/// store to its pre-search state.
pub struct Search<'a> {
    store: &'a mut Store,
    labeling: Labeling,
}

impl<'a> Search<'a> {
    pub fn new(store: &'a mut Store, labeling: Labeling) -> Self {
        Search { store, labeling }
    }

    pub fn step(&mut self) -> Step {
        self.labeling.next(self.store)
    }
}

impl Iterator for Search<'_> {
    type Item = Solution;

    fn next(&mut self) -> Option<Solution> {
        match self.labeling.next(self.store) {
            Step::Solution(s) => Some(s),
            _ => None,
        }
    }
}

impl Drop for Search<'_> {
    fn drop(&mut self) {
        self.labeling.finish(self.store);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountResult {
    pub count: u64,
    /// False when the cap or a limit stopped the count early.
    pub exact: bool,
}

/// Optimum found by [`Store::optimize`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Optimum {
    pub solution: Solution,
    pub value: i64,
    /// False when a limit interrupted the search before optimality was proven.
    pub proven: bool,
}

impl Store {
    pub fn search(&mut self, strategy: Strategy) -> Search<'_> {
        Search::new(self, Labeling::new(strategy))
    }

    /// Counts solutions up to `cap` (≥ 1).
    pub fn count_solutions(&mut self, cap: u64) -> CountResult {
        self.count_with(Labeling::new(Strategy::default()), cap)
    }

    pub fn count_with(&mut self, labeling: Labeling, cap: u64) -> CountResult {
        let cap = cap.max(1);
        let mut search = Search::new(self, labeling);
        let mut count = 0u64;
        loop {
            match search.step() {
                Step::Solution(_) if count == cap => return CountResult { count, exact: false },
                Step::Solution(_) => count += 1,
                Step::Exhausted => return CountResult { count, exact: true },
                Step::Interrupted => return CountResult { count, exact: false },
            }
        }
    }

    pub fn optimize(
        &mut self,
        objective: &NumExpr,
        direction: Direction,
        strategy: Strategy,
    ) -> Result<Optimum, FdError> {
        self.optimize_with(objective, direction, Labeling::new(strategy))
    }

    /// Branch and bound: every incumbent tightens `objective` strictly and
    /// the search continues in the same tree.
    pub fn optimize_with(
        &mut self,
        objective: &NumExpr,
        direction: Direction,
        mut labeling: Labeling,
    ) -> Result<Optimum, FdError> {
        objective.check_shape()?;
        let mut vars = Vec::new();
        objective.vars(&mut vars);
        for v in &vars {
            if v.0 >= self.num_vars() {
                return Err(FdError::UnknownVar(v.0));
            }
        }
        let node = norm::normalize(objective)?;
        node.check_range(self.domains())?;
        let (node, sign) = match direction {
            Direction::Minimize => (node, 1i64),
            Direction::Maximize => (norm::negated(node)?, -1),
        };
        node.check_range(self.domains())?;

        let base = self.push_level();
        let shown = Constraint::Cmp(objective.clone().le(NumExpr::Const(i64::MAX)));
        let bound = self.post_bound(node, shown);
        labeling.bound = Some(bound);
        labeling.limit = i64::MAX;

        let mut best: Option<(Solution, i64)> = None;
        let mut proven = true;
        loop {
            match labeling.next(self) {
                Step::Solution(sol) => {
                    let value = objective.eval(&|v| sol.value(v))?;
                    // minimisation form: sign·objective ≤ limit
                    let signed = sign * value;
                    best = Some((sol, value));
                    if signed == i64::MIN {
                        break;
                    }
                    labeling.limit = signed - 1;
                }
                Step::Exhausted => break,
                Step::Interrupted => {
                    proven = false;
                    break;
                }
            }
        }
        labeling.finish(self);
        self.pop_to(base)?;
        match best {
            Some((solution, value)) => Ok(Optimum {
                solution,
                value,
                proven,
            }),
            None if proven => Err(FdError::Unsatisfiable),
            None => Err(FdError::Interrupted),
        }
    }
}
