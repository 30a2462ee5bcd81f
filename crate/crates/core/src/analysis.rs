//! Whole-model analyses over a compiled store.
//!
//! Every analysis leaves the store exactly as it found it.

use std::collections::HashSet;
use std::time::Instant;

use featline_fd::{
    ConstraintId, Direction, FdError, IntervalSet, Labeling, Limits, Solution, Status, Step, Strategy, VarRef,
};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::ast::{FeatureModel, GoalDirection};
use crate::compile::{compile, CompileError, Compiled};
use crate::json::JsonInt;
use crate::validate::Diagnostic;

/// Default cap for counting when none is given.
pub const DEFAULT_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error("the model has no valid configuration")]
    VoidModel,
    #[error("no goal named `{0}`")]
    UnknownGoal(String),
    #[error("no feature or attribute named `{0}`")]
    UnknownName(String),
    #[error("the configuration gives no value for `{0}`")]
    Incomplete(String),
    #[error("no solution exists")]
    Unsatisfiable,
    #[error("the time budget ran out before an answer was found")]
    Interrupted,
    #[error("{0}")]
    InvalidArgument(String),
}

impl From<FdError> for AnalysisError {
    fn from(e: FdError) -> Self {
        match e {
            FdError::Unsatisfiable => AnalysisError::Unsatisfiable,
            FdError::Interrupted => AnalysisError::Interrupted,
            e => AnalysisError::Compile(CompileError::Fd(e)),
        }
    }
}

/// Which variables distinguish two configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    /// Feature counts and attribute values.
    #[default]
    All,
    /// Feature counts only.
    Features,
}

/// A configuration, keyed `F` or `F.A`.
pub type Assignment = IndexMap<String, JsonInt>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Source of the violated constraint, e.g. `Visual + Audio = 1`.
    pub constraint: String,
    /// The lowered constraint over variable names.
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptimumReport {
    pub goal: String,
    pub direction: GoalDirection,
    pub value: JsonInt,
    /// False when the time budget stopped the search before optimality was
    /// proven.
    pub proven: bool,
    pub solution: Assignment,
}

/// Result payload, tagged by analysis kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Report {
    Check {
        valid: bool,
        void: Option<bool>,
        diagnostics: Vec<Diagnostic>,
    },
    Void {
        void: bool,
    },
    CoreDead {
        core: Vec<String>,
        dead: Vec<String>,
    },
    Count {
        count: JsonInt,
        exact: bool,
        projection: Projection,
    },
    Enumerate {
        solutions: Vec<Assignment>,
        /// True when every solution was listed.
        complete: bool,
    },
    Optimize(OptimumReport),
    ValidateConfiguration {
        ok: bool,
        violations: Vec<Violation>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisReport {
    #[serde(flatten)]
    pub report: Report,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub elapsed_ms: Option<u64>,
}

/// An analysis to run, as accepted by the command line and the HTTP API.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnalysisRequest {
    Void,
    CoreDead,
    Count {
        #[serde(default)]
        cap: Option<u64>,
        #[serde(default)]
        projection: Projection,
    },
    Enumerate {
        limit: u64,
        #[serde(default)]
        strategy: Strategy,
        #[serde(default)]
        projection: Projection,
    },
    Optimize {
        goal: String,
        #[serde(default)]
        strategy: Strategy,
    },
    ValidateConfiguration {
        assignment: IndexMap<String, JsonInt>,
    },
}

impl Compiled {
    fn labeling(&self, strategy: Strategy, projection: Projection, limits: &Limits) -> Labeling {
        let vars = match projection {
            Projection::All => self.vars.model_vars(),
            Projection::Features => self.vars.feature_vars(),
        };
        Labeling::new(strategy).over(vars).with_limits(limits.clone())
    }

    /// True iff the model has no configuration.
    pub fn is_void(&mut self, limits: &Limits) -> Result<bool, AnalysisError> {
        if self.is_failed() {
            return Ok(true);
        }
        let mut lab = self.labeling(Strategy::default(), Projection::Features, limits);
        let r = lab.next(&mut self.store);
        lab.finish(&mut self.store);
        match r {
            Step::Solution(_) => Ok(false),
            Step::Exhausted => Ok(true),
            Step::Interrupted => Err(AnalysisError::Interrupted),
        }
    }

    /// Features present in every configuration and features present in none.
    ///
    /// One satisfiability probe per feature and polarity, skipped when an
    /// earlier probe's witness already settles it.
    pub fn core_and_dead(&mut self, limits: &Limits) -> Result<(Vec<String>, Vec<String>), AnalysisError> {
        let feats: Vec<(String, VarRef)> = self.vars.features().map(|(n, v)| (n.to_string(), v)).collect();
        let mut seen_in: HashSet<VarRef> = HashSet::new();
        let mut seen_out: HashSet<VarRef> = HashSet::new();
        let note = |sol: &Solution, seen_in: &mut HashSet<VarRef>, seen_out: &mut HashSet<VarRef>| {
            for (_, v) in &feats {
                if sol.value(*v) >= 1 {
                    seen_in.insert(*v);
                } else {
                    seen_out.insert(*v);
                }
            }
        };
        match self.probe(None, limits)? {
            Some(sol) => note(&sol, &mut seen_in, &mut seen_out),
            None => return Err(AnalysisError::VoidModel),
        }
        let (mut core, mut dead) = (Vec::new(), Vec::new());
        for (name, v) in &feats {
            let max = self.store.domain(*v).max().unwrap_or(0);
            if !seen_in.contains(v) {
                let w = if max < 1 {
                    None
                } else {
                    self.probe(Some((*v, IntervalSet::range(1, max))), limits)?
                };
                match w {
                    Some(sol) => note(&sol, &mut seen_in, &mut seen_out),
                    None => dead.push(name.clone()),
                }
            }
            if !seen_out.contains(v) {
                match self.probe(Some((*v, IntervalSet::singleton(0))), limits)? {
                    Some(sol) => note(&sol, &mut seen_in, &mut seen_out),
                    None => core.push(name.clone()),
                }
            }
        }
        Ok((core, dead))
    }

    // One solution under an optional extra restriction, on a popped level.
    fn probe(&mut self, keep: Option<(VarRef, IntervalSet)>, limits: &Limits) -> Result<Option<Solution>, AnalysisError> {
        let level = self.store.push_level();
        let ok = match &keep {
            Some((v, d)) => self.store.restrict(*v, d)? == Status::Consistent,
            None => self.store.status() == Status::Consistent,
        };
        let mut step = Step::Exhausted;
        if ok {
            let mut lab = self.labeling(Strategy::default(), Projection::Features, limits);
            step = lab.next(&mut self.store);
            lab.finish(&mut self.store);
        }
        self.store.pop_to(level)?;
        match step {
            Step::Solution(sol) => Ok(Some(sol)),
            Step::Exhausted => Ok(None),
            Step::Interrupted => Err(AnalysisError::Interrupted),
        }
    }

    pub fn count(&mut self, cap: u64, projection: Projection, limits: &Limits) -> featline_fd::CountResult {
        let lab = self.labeling(Strategy::default(), projection, limits);
        self.store.count_with(lab, cap)
    }

    /// Up to `limit` configurations in strategy order, and whether that is
    /// all of them.
    pub fn enumerate(
        &mut self,
        limit: u64,
        strategy: Strategy,
        projection: Projection,
        limits: &Limits,
    ) -> Result<(Vec<Assignment>, bool), AnalysisError> {
        if limit == 0 {
            return Err(AnalysisError::InvalidArgument("limit must be at least 1".into()));
        }
        let mut lab = self.labeling(strategy, projection, limits);
        let mut out = Vec::new();
        let complete = loop {
            match lab.next(&mut self.store) {
                Step::Solution(s) if (out.len() as u64) < limit => out.push(to_json(self.assignment(&s))),
                Step::Solution(_) => break false,
                Step::Exhausted => break true,
                Step::Interrupted => break false,
            }
        };
        lab.finish(&mut self.store);
        Ok((out, complete))
    }

    pub fn optimize_goal(
        &mut self,
        goal: &str,
        strategy: Strategy,
        limits: &Limits,
    ) -> Result<OptimumReport, AnalysisError> {
        let (direction, expr) = self
            .vars
            .goal(goal)
            .map(|(d, e)| (d, e.clone()))
            .ok_or_else(|| AnalysisError::UnknownGoal(goal.to_string()))?;
        let dir = match direction {
            GoalDirection::Minimize => Direction::Minimize,
            GoalDirection::Maximize => Direction::Maximize,
        };
        let lab = self.labeling(strategy, Projection::All, limits);
        let o = self.store.optimize_with(&expr, dir, lab)?;
        Ok(OptimumReport {
            goal: goal.to_string(),
            direction,
            value: JsonInt(o.value),
            proven: o.proven,
            solution: to_json(self.assignment(&o.solution)),
        })
    }

    /// Checks a total configuration. Violations come from evaluating each
    /// constraint directly on the given values.
    pub fn validate_configuration(
        &mut self,
        assignment: &IndexMap<String, i64>,
    ) -> Result<(bool, Vec<Violation>), AnalysisError> {
        for name in assignment.keys() {
            if self.vars.lookup(name).is_none() {
                return Err(AnalysisError::UnknownName(name.clone()));
            }
        }
        let mut values: Vec<Option<i64>> = vec![None; self.store.num_vars()];
        for (name, &x) in assignment {
            values[self.vars.lookup(name).expect("checked").index()] = Some(x);
        }
        let mut violations = Vec::new();
        for v in self.vars.model_vars() {
            let name = self.vars.name_of(v).expect("model variable");
            match values[v.index()] {
                None => return Err(AnalysisError::Incomplete(name)),
                Some(x) if !self.declared[v.index()].contains(x) => violations.push(Violation {
                    constraint: format!("domain of {name}"),
                    detail: format!("{name} in {}", self.declared[v.index()]),
                }),
                Some(_) => {}
            }
        }
        // unconstrained helpers keep their only value
        for (i, slot) in values.iter_mut().enumerate() {
            if slot.is_none() {
                *slot = self.declared[i].value();
            }
        }
        let value = |v: VarRef| values[v.index()].unwrap_or(0);
        for (i, c) in self.store.constraints().iter().enumerate() {
            if !c.holds(&value).unwrap_or(false) {
                let id = ConstraintId::from_index(i);
                let v = Violation {
                    constraint: self.store.label(id).map_or_else(|| self.store.describe(id), str::to_string),
                    detail: self.store.describe(id),
                };
                if !violations.contains(&v) {
                    violations.push(v);
                }
            }
        }

        let level = self.store.push_level();
        let mut ok = true;
        for v in self.vars.model_vars() {
            let x = values[v.index()].expect("total");
            if self.store.restrict(v, &IntervalSet::singleton(x))? == Status::Failed {
                ok = false;
                break;
            }
        }
        self.store.pop_to(level)?;
        Ok((ok, violations))
    }

    pub fn run(&mut self, req: &AnalysisRequest, limits: &Limits) -> Result<Report, AnalysisError> {
        Ok(match req {
            AnalysisRequest::Void => Report::Void {
                void: self.is_void(limits)?,
            },
            AnalysisRequest::CoreDead => {
                let (core, dead) = self.core_and_dead(limits)?;
                Report::CoreDead { core, dead }
            }
            AnalysisRequest::Count { cap, projection } => {
                let r = self.count(cap.unwrap_or(DEFAULT_CAP), *projection, limits);
                Report::Count {
                    count: JsonInt(r.count.min(i64::MAX as u64) as i64),
                    exact: r.exact,
                    projection: *projection,
                }
            }
            AnalysisRequest::Enumerate {
                limit,
                strategy,
                projection,
            } => {
                let (solutions, complete) = self.enumerate(*limit, *strategy, *projection, limits)?;
                Report::Enumerate { solutions, complete }
            }
            AnalysisRequest::Optimize { goal, strategy } => Report::Optimize(self.optimize_goal(goal, *strategy, limits)?),
            AnalysisRequest::ValidateConfiguration { assignment } => {
                let a = assignment.iter().map(|(k, v)| (k.clone(), v.0)).collect();
                let (ok, violations) = self.validate_configuration(&a)?;
                Report::ValidateConfiguration { ok, violations }
            }
        })
    }
}

fn to_json(a: IndexMap<String, i64>) -> Assignment {
    a.into_iter().map(|(k, v)| (k, JsonInt(v))).collect()
}

/// Compiles `m` and runs `req` on a private store.
pub fn analyze(m: &FeatureModel, req: &AnalysisRequest, limits: &Limits) -> Result<AnalysisReport, AnalysisError> {
    let start = Instant::now();
    let mut c = compile(m)?;
    let report = c.run(req, limits)?;
    Ok(AnalysisReport {
        report,
        elapsed_ms: Some(start.elapsed().as_millis() as u64),
    })
}

pub fn is_void(m: &FeatureModel) -> Result<bool, AnalysisError> {
    compile(m)?.is_void(&Limits::none())
}

pub fn core_and_dead(m: &FeatureModel) -> Result<(Vec<String>, Vec<String>), AnalysisError> {
    compile(m)?.core_and_dead(&Limits::none())
}

pub fn count_configurations(
    m: &FeatureModel,
    cap: u64,
    projection: Projection,
) -> Result<featline_fd::CountResult, AnalysisError> {
    Ok(compile(m)?.count(cap, projection, &Limits::none()))
}

pub fn enumerate(m: &FeatureModel, limit: u64, strategy: Strategy) -> Result<Vec<Assignment>, AnalysisError> {
    Ok(compile(m)?.enumerate(limit, strategy, Projection::All, &Limits::none())?.0)
}

pub fn optimize_goal(m: &FeatureModel, goal: &str, strategy: Strategy) -> Result<OptimumReport, AnalysisError> {
    compile(m)?.optimize_goal(goal, strategy, &Limits::none())
}

pub fn validate_configuration(
    m: &FeatureModel,
    assignment: &IndexMap<String, i64>,
) -> Result<(bool, Vec<Violation>), AnalysisError> {
    compile(m)?.validate_configuration(assignment)
}
