//! Trailed variable domains and the propagation queue.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::domain::IntervalSet;

/// Identifies a posted constraint by its position in the store.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConstraintId(pub(crate) usize);

impl ConstraintId {
    pub fn index(self) -> usize {
        self.0
    }

    pub fn from_index(index: usize) -> Self {
        ConstraintId(index)
    }
}

/// Who removed values from a domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cause {
    Constraint(ConstraintId),
    /// A direct domain restriction requested by the caller.
    Decision,
    /// A labeling choice or refutation made by the search.
    Search,
}

#[derive(Debug, Clone)]
pub(crate) struct TrailEntry {
    pub var: usize,
    pub old: IntervalSet,
    pub cause: Cause,
}

/// Marker error: a domain became empty or a constraint is violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Fail;

#[derive(Debug, Clone, Default)]
pub(crate) struct VarState {
    pub names: Vec<String>,
    pub domains: Vec<IntervalSet>,
    pub watchers: Vec<Vec<usize>>,
    pub trail: Vec<TrailEntry>,
    pub queue: VecDeque<usize>,
    pub queued: Vec<bool>,
    pub cause: Option<Cause>,
    /// Variable whose domain emptied in the last failure, if any.
    pub emptied: Option<usize>,
}

impl VarState {
    pub fn fail_without_var(&mut self) -> Fail {
        Fail
    }

    fn fail_on(&mut self, v: usize) -> Fail {
        self.emptied = Some(v);
        Fail
    }

    pub fn enqueue(&mut self, c: usize) {
        if !self.queued[c] {
            self.queued[c] = true;
            self.queue.push_back(c);
        }
    }

    pub fn clear_queue(&mut self) {
        for c in self.queue.drain(..) {
            self.queued[c] = false;
        }
    }

    // Records the old domain, installs the new one and wakes watchers.
    fn commit(&mut self, v: usize, next: IntervalSet) -> Result<bool, Fail> {
        if next.is_empty() {
            return Err(self.fail_on(v));
        }
        let old = std::mem::replace(&mut self.domains[v], next);
        self.trail.push(TrailEntry {
            var: v,
            old,
            cause: self.cause.unwrap_or(Cause::Decision),
        });
        for i in 0..self.watchers[v].len() {
            let c = self.watchers[v][i];
            self.enqueue(c);
        }
        Ok(true)
    }

    pub fn set_min(&mut self, v: usize, lo: i64) -> Result<bool, Fail> {
        if self.domains[v].min().is_some_and(|m| m >= lo) {
            return Ok(false);
        }
        let mut next = self.domains[v].clone();
        next.remove_below(lo);
        self.commit(v, next)
    }

    pub fn set_max(&mut self, v: usize, hi: i64) -> Result<bool, Fail> {
        if self.domains[v].max().is_some_and(|m| m <= hi) {
            return Ok(false);
        }
        let mut next = self.domains[v].clone();
        next.remove_above(hi);
        self.commit(v, next)
    }

    pub fn remove(&mut self, v: usize, x: i64) -> Result<bool, Fail> {
        if !self.domains[v].contains(x) {
            return Ok(false);
        }
        let mut next = self.domains[v].clone();
        next.remove_value(x);
        self.commit(v, next)
    }

    pub fn fix(&mut self, v: usize, x: i64) -> Result<bool, Fail> {
        if !self.domains[v].contains(x) {
            return Err(self.fail_on(v));
        }
        if self.domains[v].is_fixed() {
            return Ok(false);
        }
        self.commit(v, IntervalSet::singleton(x))
    }

    pub fn retain(&mut self, v: usize, keep: &IntervalSet) -> Result<bool, Fail> {
        let next = self.domains[v].intersect(keep);
        if next == self.domains[v] {
            return Ok(false);
        }
        self.commit(v, next)
    }

    pub fn undo_to(&mut self, len: usize) {
        while self.trail.len() > len {
            let e = self.trail.pop().unwrap();
            if e.var < self.domains.len() {
                self.domains[e.var] = e.old;
            }
        }
    }
}
