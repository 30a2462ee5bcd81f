//! Propagators: the executable form of each [`Constraint`] variant.

use crate::domain::IntervalSet;
use crate::expr::{BoolForm, CmpOp, Constraint, CountOp};
use crate::norm::{self, Node, INF};
use crate::state::{Fail, VarState};
use crate::FdError;

#[derive(Debug, Clone)]
pub(crate) enum RForm {
    Atom { diff: Node, op: CmpOp },
    And(Vec<RForm>),
    Or(Vec<RForm>),
    Not(Box<RForm>),
    Implies(Box<RForm>, Box<RForm>),
    Iff(Box<RForm>, Box<RForm>),
    Xor(Box<RForm>, Box<RForm>),
}

#[derive(Debug, Clone)]
pub(crate) enum Prop {
    Cmp {
        diff: Node,
        op: CmpOp,
    },
    Element {
        index: usize,
        values: Vec<i64>,
        result: usize,
    },
    Table {
        vars: Vec<usize>,
        tuples: Vec<Vec<i64>>,
    },
    AllDifferent(Vec<usize>),
    Count {
        vars: Vec<usize>,
        value: i64,
        op: CountOp,
        n: i64,
    },
    Reified {
        b: usize,
        form: RForm,
    },
    /// `node <= limit`, where `limit` only ever tightens (branch and bound).
    Bound {
        node: Node,
        limit: i64,
    },
}

fn lower_form(f: &BoolForm) -> Result<RForm, FdError> {
    Ok(match f {
        BoolForm::Atom(c) => RForm::Atom {
            diff: norm::difference(&c.lhs, &c.rhs)?,
            op: c.op,
        },
        BoolForm::And(fs) => RForm::And(fs.iter().map(lower_form).collect::<Result<_, _>>()?),
        BoolForm::Or(fs) => RForm::Or(fs.iter().map(lower_form).collect::<Result<_, _>>()?),
        BoolForm::Not(a) => RForm::Not(Box::new(lower_form(a)?)),
        BoolForm::Implies(a, b) => RForm::Implies(Box::new(lower_form(a)?), Box::new(lower_form(b)?)),
        BoolForm::Iff(a, b) => RForm::Iff(Box::new(lower_form(a)?), Box::new(lower_form(b)?)),
        BoolForm::Xor(a, b) => RForm::Xor(Box::new(lower_form(a)?), Box::new(lower_form(b)?)),
    })
}

impl RForm {
    fn nodes<'a>(&'a self, out: &mut Vec<&'a Node>) {
        match self {
            RForm::Atom { diff, .. } => out.push(diff),
            RForm::And(fs) | RForm::Or(fs) => fs.iter().for_each(|f| f.nodes(out)),
            RForm::Not(a) => a.nodes(out),
            RForm::Implies(a, b) | RForm::Iff(a, b) | RForm::Xor(a, b) => {
                a.nodes(out);
                b.nodes(out);
            }
        }
    }

    /// Entailed (`Some(true)`), disentailed (`Some(false)`) or unknown.
    fn truth(&self, doms: &[IntervalSet]) -> Option<bool> {
        match self {
            RForm::Atom { diff, op } => diff.truth(*op, doms),
            RForm::And(fs) => {
                let mut all = true;
                for f in fs {
                    match f.truth(doms) {
                        Some(false) => return Some(false),
                        None => all = false,
                        Some(true) => {}
                    }
                }
                all.then_some(true)
            }
            RForm::Or(fs) => {
                let mut none = true;
                for f in fs {
                    match f.truth(doms) {
                        Some(true) => return Some(true),
                        None => none = false,
                        Some(false) => {}
                    }
                }
                none.then_some(false)
            }
            RForm::Not(a) => a.truth(doms).map(|t| !t),
            RForm::Implies(a, b) => match (a.truth(doms), b.truth(doms)) {
                (Some(false), _) | (_, Some(true)) => Some(true),
                (Some(true), Some(false)) => Some(false),
                _ => None,
            },
            RForm::Iff(a, b) => Some(a.truth(doms)? == b.truth(doms)?),
            RForm::Xor(a, b) => Some(a.truth(doms)? != b.truth(doms)?),
        }
    }

    /// Enforces the form (`pol = true`) or its complement (`pol = false`).
    fn enforce(&self, pol: bool, st: &mut VarState) -> Result<(), Fail> {
        match self {
            RForm::Atom { diff, op } => diff.enforce(if pol { *op } else { op.negate() }, st),
            RForm::Not(a) => a.enforce(!pol, st),
            RForm::And(fs) if pol => fs.iter().try_for_each(|f| f.enforce(true, st)),
            RForm::And(fs) => enforce_some(fs.iter().map(|f| (f, false)).collect(), st),
            RForm::Or(fs) if pol => enforce_some(fs.iter().map(|f| (f, true)).collect(), st),
            RForm::Or(fs) => fs.iter().try_for_each(|f| f.enforce(false, st)),
            RForm::Implies(a, b) if pol => enforce_some(vec![(a, false), (b, true)], st),
            RForm::Implies(a, b) => {
                a.enforce(true, st)?;
                b.enforce(false, st)
            }
            RForm::Iff(a, b) | RForm::Xor(a, b) => {
                // same truth value for Iff under pol, opposite for Xor
                let same = matches!(self, RForm::Iff(..)) == pol;
                if let Some(ta) = a.truth(&st.domains) {
                    b.enforce(ta == same, st)
                } else if let Some(tb) = b.truth(&st.domains) {
                    a.enforce(tb == same, st)
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// At least one `(form, polarity)` literal must hold.
fn enforce_some(lits: Vec<(&RForm, bool)>, st: &mut VarState) -> Result<(), Fail> {
    let mut open = Vec::new();
    for (f, pol) in lits {
        match f.truth(&st.domains).map(|t| t == pol) {
            Some(true) => return Ok(()),
            Some(false) => {}
            None => open.push((f, pol)),
        }
    }
    match open.as_slice() {
        [] => Err(st.fail_without_var()),
        [(f, pol)] => f.enforce(*pol, st),
        _ => Ok(()),
    }
}

impl Prop {
    pub(crate) fn compile(c: &Constraint) -> Result<Prop, FdError> {
        Ok(match c {
            Constraint::Cmp(c) => Prop::Cmp {
                diff: norm::difference(&c.lhs, &c.rhs)?,
                op: c.op,
            },
            Constraint::Element {
                index,
                values,
                result,
            } => Prop::Element {
                index: index.0,
                values: values.clone(),
                result: result.0,
            },
            Constraint::Table { vars, tuples } => Prop::Table {
                vars: vars.iter().map(|v| v.0).collect(),
                tuples: tuples.clone(),
            },
            Constraint::AllDifferent(vars) => Prop::AllDifferent(vars.iter().map(|v| v.0).collect()),
            Constraint::Count {
                vars,
                value,
                op,
                n,
            } => Prop::Count {
                vars: vars.iter().map(|v| v.0).collect(),
                value: *value,
                op: *op,
                n: *n,
            },
            Constraint::Reified { b, form } => Prop::Reified {
                b: b.0,
                form: lower_form(form)?,
            },
        })
    }

    pub(crate) fn nodes(&self) -> Vec<&Node> {
        let mut out = Vec::new();
        match self {
            Prop::Cmp { diff, .. } => out.push(diff),
            Prop::Bound { node, .. } => out.push(node),
            Prop::Reified { form, .. } => form.nodes(&mut out),
            _ => {}
        }
        out
    }

    pub(crate) fn propagate(&self, st: &mut VarState) -> Result<(), Fail> {
        match self {
            Prop::Cmp { diff, op } => diff.enforce(*op, st),
            Prop::Bound { node, limit } => node.narrow(-INF, *limit as i128, st),
            Prop::Element {
                index,
                values,
                result,
            } => {
                st.set_min(*index, 1)?;
                st.set_max(*index, values.len() as i64)?;
                let idx_keep = IntervalSet::from_values(
                    st.domains[*index]
                        .iter()
                        .filter(|&i| st.domains[*result].contains(values[(i - 1) as usize])),
                );
                st.retain(*index, &idx_keep)?;
                let res_keep =
                    IntervalSet::from_values(st.domains[*index].iter().map(|i| values[(i - 1) as usize]));
                st.retain(*result, &res_keep)?;
                Ok(())
            }
            Prop::Table { vars, tuples } => {
                let live: Vec<&Vec<i64>> = tuples
                    .iter()
                    .filter(|t| t.iter().zip(vars).all(|(&x, &v)| st.domains[v].contains(x)))
                    .collect();
                if live.is_empty() {
                    return Err(st.fail_without_var());
                }
                for (k, &v) in vars.iter().enumerate() {
                    let support = IntervalSet::from_values(live.iter().map(|t| t[k]));
                    st.retain(v, &support)?;
                }
                Ok(())
            }
            Prop::AllDifferent(vars) => {
                let mut changed = true;
                while changed {
                    changed = false;
                    for (i, &vi) in vars.iter().enumerate() {
                        let Some(x) = st.domains[vi].value() else { continue };
                        for (j, &vj) in vars.iter().enumerate() {
                            if i != j && vj != vi {
                                changed |= st.remove(vj, x)?;
                            } else if i != j {
                                // the same variable listed twice can never differ from itself
                                return Err(st.fail_without_var());
                            }
                        }
                    }
                }
                let union = IntervalSet::from_ranges(
                    vars.iter().flat_map(|&v| st.domains[v].runs().iter().copied()),
                );
                if union.size() < vars.len() as u64 {
                    return Err(st.fail_without_var());
                }
                Ok(())
            }
            Prop::Count {
                vars,
                value,
                op,
                n,
            } => {
                let fixed = vars
                    .iter()
                    .filter(|&&v| st.domains[v].value() == Some(*value))
                    .count() as i64;
                let possible = vars.iter().filter(|&&v| st.domains[v].contains(*value)).count() as i64;
                if matches!(op, CountOp::AtMost | CountOp::Exactly) {
                    if fixed > *n {
                        return Err(st.fail_without_var());
                    }
                    if fixed == *n {
                        for &v in vars {
                            if !st.domains[v].is_fixed() {
                                st.remove(v, *value)?;
                            }
                        }
                    }
                }
                if matches!(op, CountOp::AtLeast | CountOp::Exactly) {
                    if possible < *n {
                        return Err(st.fail_without_var());
                    }
                    if possible == *n {
                        for &v in vars {
                            if st.domains[v].contains(*value) {
                                st.fix(v, *value)?;
                            }
                        }
                    }
                }
                Ok(())
            }
            Prop::Reified { b, form } => {
                match form.truth(&st.domains) {
                    Some(true) => {
                        st.fix(*b, 1)?;
                    }
                    Some(false) => {
                        st.fix(*b, 0)?;
                    }
                    None => {}
                }
                match st.domains[*b].value() {
                    Some(1) => form.enforce(true, st),
                    Some(0) => form.enforce(false, st),
                    _ => Ok(()),
                }
            }
        }
    }
}
