//! Normalised arithmetic used by the propagators.
//!
//! Expressions are flattened into sums with merged variable coefficients and
//! folded constants, so that `X - X` becomes `0` and `2*(X + 1) - X` becomes
//! `X + 2`. Bounds are computed in `i128`; the store rejects any expression
//! whose bounds over the initial domains leave the `i64` range, and since
//! domains only shrink every later bound stays inside it.

use crate::domain::IntervalSet;
use crate::expr::{CmpOp, NumExpr};
use crate::state::{Fail, VarState};
use crate::FdError;

/// Stand-in for an unbounded side of a target interval.
pub(crate) const INF: i128 = 1 << 100;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    Const(i64),
    Var(usize),
    /// `offset + Σ c·t`, with no constant terms and non-zero coefficients.
    Sum { terms: Vec<(i64, Node)>, offset: i64 },
    Product(Box<Node>, Box<Node>),
    Min(Vec<Node>),
    Max(Vec<Node>),
}

fn ovf<T>(x: Option<T>) -> Result<T, FdError> {
    x.ok_or(FdError::IntegerOverflow)
}

#[derive(Default)]
struct LinAcc {
    terms: Vec<(i64, Node)>,
    offset: i64,
}

impl LinAcc {
    fn add(&mut self, coeff: i64, node: Node) -> Result<(), FdError> {
        match node {
            Node::Const(c) => {
                self.offset = ovf(self.offset.checked_add(ovf(coeff.checked_mul(c))?))?;
            }
            Node::Sum { terms, offset } => {
                self.offset = ovf(self.offset.checked_add(ovf(coeff.checked_mul(offset))?))?;
                for (c, t) in terms {
                    self.add(ovf(coeff.checked_mul(c))?, t)?;
                }
            }
            Node::Var(v) => {
                if let Some(slot) = self
                    .terms
                    .iter_mut()
                    .find(|(_, t)| matches!(t, Node::Var(w) if *w == v))
                {
                    slot.0 = ovf(slot.0.checked_add(coeff))?;
                } else {
                    self.terms.push((coeff, Node::Var(v)));
                }
            }
            other => self.terms.push((coeff, other)),
        }
        Ok(())
    }

    fn finish(mut self) -> Node {
        self.terms.retain(|(c, _)| *c != 0);
        match (self.terms.len(), self.offset) {
            (0, off) => Node::Const(off),
            (1, 0) if self.terms[0].0 == 1 => self.terms.pop().unwrap().1,
            _ => Node::Sum {
                terms: self.terms,
                offset: self.offset,
            },
        }
    }
}

pub(crate) fn normalize(e: &NumExpr) -> Result<Node, FdError> {
    Ok(match e {
        NumExpr::Const(c) => Node::Const(*c),
        NumExpr::Var(v) => Node::Var(v.0),
        NumExpr::WeightedSum {
            coeffs,
            terms,
            offset,
        } => {
            let mut acc = LinAcc {
                offset: *offset,
                ..Default::default()
            };
            for (c, t) in coeffs.iter().zip(terms) {
                acc.add(*c, normalize(t)?)?;
            }
            acc.finish()
        }
        NumExpr::Product(a, b) => {
            let (a, b) = (normalize(a)?, normalize(b)?);
            match (a, b) {
                (Node::Const(x), Node::Const(y)) => Node::Const(ovf(x.checked_mul(y))?),
                (Node::Const(k), other) | (other, Node::Const(k)) => {
                    let mut acc = LinAcc::default();
                    acc.add(k, other)?;
                    acc.finish()
                }
                (a, b) => Node::Product(Box::new(a), Box::new(b)),
            }
        }
        NumExpr::Min(xs) | NumExpr::Max(xs) => {
            let nodes = xs.iter().map(normalize).collect::<Result<Vec<_>, _>>()?;
            let is_min = matches!(e, NumExpr::Min(_));
            if nodes.iter().all(|n| matches!(n, Node::Const(_))) {
                let vals = nodes.iter().map(|n| match n {
                    Node::Const(c) => *c,
                    _ => unreachable!(),
                });
                Node::Const(if is_min { vals.min().unwrap() } else { vals.max().unwrap() })
            } else if nodes.len() == 1 {
                nodes.into_iter().next().unwrap()
            } else if is_min {
                Node::Min(nodes)
            } else {
                Node::Max(nodes)
            }
        }
    })
}

/// Normal form of `lhs - rhs`.
pub(crate) fn difference(lhs: &NumExpr, rhs: &NumExpr) -> Result<Node, FdError> {
    let mut acc = LinAcc::default();
    acc.add(1, normalize(lhs)?)?;
    acc.add(-1, normalize(rhs)?)?;
    Ok(acc.finish())
}

pub(crate) fn negated(node: Node) -> Result<Node, FdError> {
    let mut acc = LinAcc::default();
    acc.add(-1, node)?;
    Ok(acc.finish())
}

fn mul_bounds(a: (i128, i128), b: (i128, i128)) -> (i128, i128) {
    let ps = [a.0 * b.0, a.0 * b.1, a.1 * b.0, a.1 * b.1];
    (*ps.iter().min().unwrap(), *ps.iter().max().unwrap())
}

fn scale(c: i64, (lo, hi): (i128, i128)) -> (i128, i128) {
    let c = c as i128;
    if c >= 0 {
        (c * lo, c * hi)
    } else {
        (c * hi, c * lo)
    }
}

fn floor_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn ceil_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) == (b < 0)) {
        q + 1
    } else {
        q
    }
}

fn fits(x: i128) -> bool {
    x >= i64::MIN as i128 && x <= i64::MAX as i128
}

impl Node {
    pub(crate) fn bounds(&self, doms: &[IntervalSet]) -> (i128, i128) {
        match self {
            Node::Const(c) => (*c as i128, *c as i128),
            Node::Var(v) => {
                let d = &doms[*v];
                (d.min().unwrap_or(0) as i128, d.max().unwrap_or(0) as i128)
            }
            Node::Sum { terms, offset } => {
                let mut lo = *offset as i128;
                let mut hi = lo;
                for (c, t) in terms {
                    let (a, b) = scale(*c, t.bounds(doms));
                    lo += a;
                    hi += b;
                }
                (lo, hi)
            }
            Node::Product(a, b) => mul_bounds(a.bounds(doms), b.bounds(doms)),
            Node::Min(xs) => xs.iter().map(|x| x.bounds(doms)).fold((INF, INF), |acc, b| {
                (acc.0.min(b.0), acc.1.min(b.1))
            }),
            Node::Max(xs) => xs.iter().map(|x| x.bounds(doms)).fold((-INF, -INF), |acc, b| {
                (acc.0.max(b.0), acc.1.max(b.1))
            }),
        }
    }

    /// Fails when any sub-expression can leave the `i64` range.
    pub(crate) fn check_range(&self, doms: &[IntervalSet]) -> Result<(), FdError> {
        match self {
            Node::Const(_) | Node::Var(_) => Ok(()),
            Node::Sum { terms, .. } => terms.iter().try_for_each(|(_, t)| t.check_range(doms)),
            Node::Product(a, b) => {
                a.check_range(doms)?;
                b.check_range(doms)
            }
            Node::Min(xs) | Node::Max(xs) => xs.iter().try_for_each(|x| x.check_range(doms)),
        }?;
        let (lo, hi) = self.bounds(doms);
        if fits(lo) && fits(hi) {
            Ok(())
        } else {
            Err(FdError::IntegerOverflow)
        }
    }

    pub(crate) fn collect_vars(&self, out: &mut Vec<usize>) {
        match self {
            Node::Const(_) => {}
            Node::Var(v) => out.push(*v),
            Node::Sum { terms, .. } => terms.iter().for_each(|(_, t)| t.collect_vars(out)),
            Node::Product(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Node::Min(xs) | Node::Max(xs) => xs.iter().for_each(|x| x.collect_vars(out)),
        }
    }

    #[cfg(test)]
    pub(crate) fn eval(&self, values: &dyn Fn(usize) -> i64) -> i128 {
        match self {
            Node::Const(c) => *c as i128,
            Node::Var(v) => values(*v) as i128,
            Node::Sum { terms, offset } => terms
                .iter()
                .fold(*offset as i128, |acc, (c, t)| acc + *c as i128 * t.eval(values)),
            Node::Product(a, b) => a.eval(values) * b.eval(values),
            Node::Min(xs) => xs.iter().map(|x| x.eval(values)).min().unwrap(),
            Node::Max(xs) => xs.iter().map(|x| x.eval(values)).max().unwrap(),
        }
    }

    /// Enforces `lo <= self <= hi` by bounds reasoning.
    pub(crate) fn narrow(&self, lo: i128, hi: i128, st: &mut VarState) -> Result<(), Fail> {
        if lo > hi {
            return Err(st.fail_without_var());
        }
        match self {
            Node::Const(c) => {
                let c = *c as i128;
                if c < lo || c > hi {
                    Err(st.fail_without_var())
                } else {
                    Ok(())
                }
            }
            Node::Var(v) => {
                if lo > -INF {
                    st.set_min(*v, clamp(lo))?;
                }
                if hi < INF {
                    st.set_max(*v, clamp(hi))?;
                }
                Ok(())
            }
            Node::Sum { terms, offset } => {
                let off = *offset as i128;
                let lo = if lo <= -INF { -INF } else { lo - off };
                let hi = if hi >= INF { INF } else { hi - off };
                let mut tb: Vec<(i128, i128)> = terms
                    .iter()
                    .map(|(c, t)| scale(*c, t.bounds(&st.domains)))
                    .collect();
                let mut sum_lo: i128 = tb.iter().map(|b| b.0).sum();
                let mut sum_hi: i128 = tb.iter().map(|b| b.1).sum();
                if sum_lo > hi || sum_hi < lo {
                    return Err(st.fail_without_var());
                }
                for (i, (c, t)) in terms.iter().enumerate() {
                    let rest_lo = sum_lo - tb[i].0;
                    let rest_hi = sum_hi - tb[i].1;
                    // c·t ∈ [lo - rest_hi, hi - rest_lo]
                    let (a, b) = (
                        if lo <= -INF { -INF } else { lo - rest_hi },
                        if hi >= INF { INF } else { hi - rest_lo },
                    );
                    if a <= tb[i].0 && b >= tb[i].1 {
                        continue;
                    }
                    let c = *c as i128;
                    let (tlo, thi) = if c > 0 {
                        (div_up(a, c), div_down(b, c))
                    } else {
                        (div_up(b, c), div_down(a, c))
                    };
                    t.narrow(tlo, thi, st)?;
                    let nb = scale(c as i64, t.bounds(&st.domains));
                    sum_lo += nb.0 - tb[i].0;
                    sum_hi += nb.1 - tb[i].1;
                    tb[i] = nb;
                }
                Ok(())
            }
            Node::Product(a, b) => {
                let bb = b.bounds(&st.domains);
                if let Some((xlo, xhi)) = div_range(lo, hi, bb) {
                    a.narrow(xlo, xhi, st)?;
                }
                let ab = a.bounds(&st.domains);
                if let Some((ylo, yhi)) = div_range(lo, hi, ab) {
                    b.narrow(ylo, yhi, st)?;
                }
                let (plo, phi) = mul_bounds(a.bounds(&st.domains), b.bounds(&st.domains));
                if plo > hi || phi < lo {
                    return Err(st.fail_without_var());
                }
                Ok(())
            }
            Node::Min(xs) => {
                if lo > -INF {
                    for x in xs {
                        x.narrow(lo, INF, st)?;
                    }
                }
                if hi < INF {
                    let cands: Vec<&Node> =
                        xs.iter().filter(|x| x.bounds(&st.domains).0 <= hi).collect();
                    match cands.as_slice() {
                        [] => return Err(st.fail_without_var()),
                        [only] => only.narrow(-INF, hi, st)?,
                        _ => {}
                    }
                }
                Ok(())
            }
            Node::Max(xs) => {
                if hi < INF {
                    for x in xs {
                        x.narrow(-INF, hi, st)?;
                    }
                }
                if lo > -INF {
                    let cands: Vec<&Node> =
                        xs.iter().filter(|x| x.bounds(&st.domains).1 >= lo).collect();
                    match cands.as_slice() {
                        [] => return Err(st.fail_without_var()),
                        [only] => only.narrow(lo, INF, st)?,
                        _ => {}
                    }
                }
                Ok(())
            }
        }
    }

    /// If every term but one plain variable is fixed, returns that variable
    /// and the value it would need for the expression to equal `target`
    /// (`None` for the value when no integer works).
    fn single_free_var(&self, target: i128, doms: &[IntervalSet]) -> Option<(usize, Option<i64>)> {
        match self {
            Node::Var(v) => Some((*v, i64::try_from(target).ok())),
            Node::Sum { terms, offset } => {
                let mut free = None;
                let mut fixed: i128 = *offset as i128;
                for (c, t) in terms {
                    let (lo, hi) = t.bounds(doms);
                    if lo == hi {
                        fixed += *c as i128 * lo;
                    } else if free.is_none() {
                        match t {
                            Node::Var(v) => free = Some((*c as i128, *v)),
                            _ => return None,
                        }
                    } else {
                        return None;
                    }
                }
                let (c, v) = free?;
                let need = target - fixed;
                if need % c != 0 {
                    Some((v, None))
                } else {
                    Some((v, i64::try_from(need / c).ok()))
                }
            }
            _ => None,
        }
    }

    /// Three-valued truth of `self op 0` under the current domains.
    pub(crate) fn truth(&self, op: CmpOp, doms: &[IntervalSet]) -> Option<bool> {
        let (lo, hi) = self.bounds(doms);
        match op {
            CmpOp::Eq | CmpOp::Ne => {
                let eq = if lo == 0 && hi == 0 {
                    Some(true)
                } else if lo > 0 || hi < 0 {
                    Some(false)
                } else {
                    match self.single_free_var(0, doms) {
                        Some((_, None)) => Some(false),
                        Some((v, Some(x))) if !doms[v].contains(x) => Some(false),
                        _ => None,
                    }
                };
                if op == CmpOp::Eq {
                    eq
                } else {
                    eq.map(|b| !b)
                }
            }
            CmpOp::Lt => decide(hi < 0, lo >= 0),
            CmpOp::Le => decide(hi <= 0, lo > 0),
            CmpOp::Gt => decide(lo > 0, hi <= 0),
            CmpOp::Ge => decide(lo >= 0, hi < 0),
        }
    }

    /// Enforces `self op 0`.
    pub(crate) fn enforce(&self, op: CmpOp, st: &mut VarState) -> Result<(), Fail> {
        match op {
            CmpOp::Eq => self.narrow(0, 0, st),
            CmpOp::Le => self.narrow(-INF, 0, st),
            CmpOp::Lt => self.narrow(-INF, -1, st),
            CmpOp::Ge => self.narrow(0, INF, st),
            CmpOp::Gt => self.narrow(1, INF, st),
            CmpOp::Ne => {
                let (lo, hi) = self.bounds(&st.domains);
                if lo == 0 && hi == 0 {
                    return Err(st.fail_without_var());
                }
                if lo > 0 || hi < 0 {
                    return Ok(());
                }
                if let Some((v, Some(x))) = self.single_free_var(0, &st.domains) {
                    st.remove(v, x)?;
                }
                Ok(())
            }
        }
    }
}

fn decide(yes: bool, no: bool) -> Option<bool> {
    if yes {
        Some(true)
    } else if no {
        Some(false)
    } else {
        None
    }
}

fn clamp(x: i128) -> i64 {
    x.clamp(i64::MIN as i128, i64::MAX as i128) as i64
}

fn div_up(a: i128, c: i128) -> i128 {
    if a.abs() >= INF {
        if (a < 0) == (c < 0) {
            INF
        } else {
            -INF
        }
    } else {
        ceil_div(a, c)
    }
}

fn div_down(a: i128, c: i128) -> i128 {
    if a.abs() >= INF {
        if (a < 0) == (c < 0) {
            INF
        } else {
            -INF
        }
    } else {
        floor_div(a, c)
    }
}

/// Hull of `{x : ∃y ∈ [p, q], x·y ∈ [lo, hi]}` for `1 <= p <= q`.
fn div_positive(lo: i128, hi: i128, p: i128, q: i128) -> (i128, i128) {
    let xmin = if lo <= -INF {
        -INF
    } else if lo < 0 {
        ceil_div(lo, p)
    } else {
        ceil_div(lo, q)
    };
    let xmax = if hi >= INF {
        INF
    } else if hi >= 0 {
        floor_div(hi, p)
    } else {
        floor_div(hi, q)
    };
    (xmin, xmax)
}

/// Bounds for `x` given `x·y ∈ [lo, hi]` and `y ∈ yb`, or `None` when
/// nothing can be deduced. An empty result is returned as `lo > hi`.
fn div_range(lo: i128, hi: i128, yb: (i128, i128)) -> Option<(i128, i128)> {
    let (ylo, yhi) = yb;
    let zero_ok = lo <= 0 && hi >= 0;
    if ylo <= 0 && yhi >= 0 && zero_ok {
        return None;
    }
    let mut hull: Option<(i128, i128)> = None;
    let mut join = |r: (i128, i128)| {
        if r.0 <= r.1 {
            hull = Some(match hull {
                None => r,
                Some(h) => (h.0.min(r.0), h.1.max(r.1)),
            });
        }
    };
    if yhi >= 1 {
        join(div_positive(lo, hi, ylo.max(1), yhi));
    }
    if ylo <= -1 {
        // x·y ∈ [lo, hi] with y < 0  ⇔  x·(-y) ∈ [-hi, -lo]
        let (nlo, nhi) = (
            if hi >= INF { -INF } else { -hi },
            if lo <= -INF { INF } else { -lo },
        );
        join(div_positive(nlo, nhi, (-yhi).max(1), -ylo));
    }
    Some(hull.unwrap_or((1, 0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cancels_identical_vars() {
        let x = NumExpr::Var(crate::VarRef(0));
        assert_eq!(difference(&x, &x).unwrap(), Node::Const(0));
        let e = NumExpr::Const(2) * (x.clone() + NumExpr::Const(1)) - x;
        assert_eq!(
            normalize(&e).unwrap(),
            Node::Sum {
                terms: vec![(1, Node::Var(0))],
                offset: 2
            }
        );
    }

    #[test]
    fn constant_overflow_is_reported() {
        let e = NumExpr::Const(i64::MAX) + NumExpr::Const(1);
        assert_eq!(normalize(&e), Err(FdError::IntegerOverflow));
    }

    #[test]
    fn rounding_helpers() {
        assert_eq!(floor_div(-7, 2), -4);
        assert_eq!(ceil_div(-7, 2), -3);
        assert_eq!(floor_div(7, -2), -4);
        assert_eq!(ceil_div(7, -2), -3);
        assert_eq!(ceil_div(6, 3), 2);
    }

    #[test]
    fn division_ranges() {
        // x·y = 5 with y ∈ [2, 3] has no integer x; the hull is still sound.
        assert_eq!(div_range(5, 5, (2, 3)), Some((2, 2)));
        // y ∈ {0} and the target excludes 0
        assert_eq!(div_range(1, 4, (0, 0)), Some((1, 0)));
        // zero on both sides: no information
        assert_eq!(div_range(-3, 3, (-1, 1)), None);
        // x·y ∈ [8, 15], y ∈ [4, 5] → x ∈ [2, 3]
        assert_eq!(div_range(8, 15, (4, 5)), Some((2, 3)));
        // negative divisor
        assert_eq!(div_range(4, 6, (-2, -2)), Some((-3, -2)));
    }

    fn small_expr() -> impl proptest::strategy::Strategy<Value = NumExpr> {
        use proptest::prelude::*;
        let leaf = prop_oneof![
            (-20i64..20).prop_map(NumExpr::Const),
            (0usize..3).prop_map(|v| NumExpr::Var(crate::VarRef(v))),
        ];
        leaf.prop_recursive(4, 24, 3, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
                proptest::collection::vec(inner.clone(), 1..3).prop_map(NumExpr::Min),
                proptest::collection::vec(inner, 1..3).prop_map(NumExpr::Max),
            ]
        })
    }

    proptest::proptest! {
        #[test]
        fn normal_form_evaluates_like_the_source(
            e in small_expr(),
            vals in proptest::collection::vec(-5i64..5, 3),
        ) {
            let node = normalize(&e).unwrap();
            let want = e.eval(&|v| vals[v.0]).unwrap();
            proptest::prop_assert_eq!(node.eval(&|v| vals[v]), want as i128);
            let (lo, hi) = node.bounds(&vals.iter().map(|&x| IntervalSet::singleton(x)).collect::<Vec<_>>());
            proptest::prop_assert_eq!((lo, hi), (want as i128, want as i128));
        }
    }
}
