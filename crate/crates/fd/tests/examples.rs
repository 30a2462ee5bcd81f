use featline_fd::{
    BoolForm, Constraint, Direction, FdError, IntervalSet, NumExpr, Status, Store, Strategy, VarRef,
};
use featline_testkit::brute::Csp;

fn v(x: VarRef) -> NumExpr {
    NumExpr::var(x)
}

fn set(xs: &[i64]) -> IntervalSet {
    IntervalSet::from_values(xs.iter().copied())
}

#[test]
fn new_var_domains() {
    let mut s = Store::new();
    let f = s.int_var(0, 1, "F").unwrap();
    assert_eq!(s.domain(f).size(), 2);
    let mem = s.new_var(set(&[32, 64, 256, 512, 1024]), "InternalMemory").unwrap();
    assert_eq!(s.domain(mem).size(), 5);
    assert_eq!(s.domain(mem).min(), Some(32));
    assert_eq!(s.domain(mem).max(), Some(1024));
    assert!(matches!(s.new_var(IntervalSet::empty(), "E"), Err(FdError::EmptyDomain { .. })));
}

#[test]
fn post_excludes_leaves_domains() {
    let mut s = Store::new();
    let f1 = s.bool_var("F1");
    let f2 = s.bool_var("F2");
    assert_eq!(s.post((v(f1) + v(f2)).le(1).into()).unwrap(), Status::Consistent);
    assert_eq!(s.domain(f1), &IntervalSet::range(0, 1));
    assert_eq!(s.domain(f2), &IntervalSet::range(0, 1));
}

#[test]
fn post_atmost_is_consistent() {
    let mut s = Store::new();
    let xs: Vec<VarRef> = ["X", "Y", "Z", "T"].iter().map(|n| s.int_var(0, 10, *n).unwrap()).collect();
    assert_eq!(s.post(Constraint::atmost(2, xs.clone(), 10)).unwrap(), Status::Consistent);
    for x in xs {
        assert_eq!(s.domain(x), &IntervalSet::range(0, 10));
    }
}

#[test]
fn feedback_bundle_forces_third_member_out() {
    let mut s = Store::new();
    let fb: Vec<VarRef> = ["Visual", "Audio", "Vibration"].iter().map(|n| s.bool_var(*n)).collect();
    s.post(NumExpr::sum(fb.clone()).ge(1).into()).unwrap();
    s.post(NumExpr::sum(fb.clone()).le(2).into()).unwrap();
    s.restrict(fb[0], &IntervalSet::singleton(1)).unwrap();
    s.restrict(fb[1], &IntervalSet::singleton(1)).unwrap();
    assert_eq!(s.domain(fb[2]).value(), Some(0));

    // same answer from the oracle
    let mut p = Csp::new();
    let q: Vec<VarRef> = (0..3).map(|_| p.add_var(0..=1)).collect();
    p.add(NumExpr::sum(q.clone()).ge(1).into());
    p.add(NumExpr::sum(q.clone()).le(2).into());
    p.add(v(q[0]).eq(1).into());
    p.add(v(q[1]).eq(1).into());
    assert_eq!(p.supports()[2].iter().copied().collect::<Vec<_>>(), vec![0]);
}

#[test]
fn sum_less_than_bounds() {
    let mut s = Store::new();
    let x = s.int_var(0, 9, "X").unwrap();
    let y = s.int_var(0, 9, "Y").unwrap();
    let z = s.int_var(0, 9, "Z").unwrap();
    s.post((v(x) + v(y)).lt(z).into()).unwrap();
    assert_eq!(s.domain(x), &IntervalSet::range(0, 8));
    assert_eq!(s.domain(y), &IntervalSet::range(0, 8));
    assert_eq!(s.domain(z), &IntervalSet::range(1, 9));
}

#[test]
fn no_constraints_is_identity() {
    let mut s = Store::new();
    let x = s.int_var(-4, 4, "X").unwrap();
    assert_eq!(s.propagate(), Status::Consistent);
    assert_eq!(s.domain(x), &IntervalSet::range(-4, 4));
}

#[test]
fn product_bounds() {
    let mut s = Store::new();
    let x = s.int_var(2, 3, "X").unwrap();
    let y = s.int_var(4, 5, "Y").unwrap();
    let z = s.int_var(0, 100, "Z").unwrap();
    s.post((v(x) * v(y)).eq(z).into()).unwrap();
    assert_eq!(s.domain(z), &IntervalSet::range(8, 15));
}

#[test]
fn weighted_or_of_pair() {
    let mut s = Store::new();
    let f: Vec<VarRef> = (1..=3).map(|i| s.bool_var(format!("F{i}"))).collect();
    s.post(NumExpr::linear(vec![2, 1, 1], f.clone(), 0).eq(2).into()).unwrap();
    for &x in &f {
        assert_eq!(s.domain(x), &IntervalSet::range(0, 1));
    }
    s.restrict(f[0], &IntervalSet::singleton(0)).unwrap();
    assert_eq!(s.domain(f[1]).value(), Some(1));
    assert_eq!(s.domain(f[2]).value(), Some(1));
}

#[test]
fn ne_against_fixed_value() {
    let mut s = Store::new();
    let x = s.int_var(5, 5, "X").unwrap();
    let y = s.int_var(4, 6, "Y").unwrap();
    s.post(v(x).ne(y).into()).unwrap();
    assert_eq!(s.domain(y), &set(&[4, 6]));
}

#[test]
fn element_examples() {
    let mut s = Store::new();
    let i = s.int_var(-5, 10, "I").unwrap();
    let x = s.int_var(20, 20, "X").unwrap();
    s.post(Constraint::Element { index: i, values: vec![10, 20, 30], result: x }).unwrap();
    assert_eq!(s.domain(i).value(), Some(2));

    let mut s = Store::new();
    let i = s.int_var(1, 3, "I").unwrap();
    let x = s.int_var(0, 100, "X").unwrap();
    s.post(Constraint::Element { index: i, values: vec![10, 20, 30], result: x }).unwrap();
    assert_eq!(s.domain(x), &set(&[10, 20, 30]));

    let mut s = Store::new();
    let i = s.int_var(0, 9, "I").unwrap();
    let x = s.int_var(0, 9, "X").unwrap();
    s.post(Constraint::Element { index: i, values: vec![7], result: x }).unwrap();
    assert_eq!(s.domain(i).value(), Some(1));
    assert_eq!(s.domain(x).value(), Some(7));
}

fn relation_tuples() -> Vec<Vec<i64>> {
    vec![
        vec![1, 1, 32],
        vec![1, 2, 64],
        vec![2, 1, 64],
        vec![2, 2, 128],
        vec![3, 3, 512],
        vec![4, 4, 1024],
    ]
}

#[test]
fn table_examples() {
    let mut s = Store::new();
    let sensor = s.int_var(0, 4, "Sensor").unwrap();
    let act = s.int_var(0, 100, "Actuator").unwrap();
    let mem = s.int_var(0, 1024, "InternalMemory").unwrap();
    s.post(Constraint::Table { vars: vec![sensor, act, mem], tuples: relation_tuples() }).unwrap();
    s.restrict(sensor, &IntervalSet::singleton(2)).unwrap();
    assert_eq!(s.domain(act), &set(&[1, 2]));
    assert_eq!(s.domain(mem), &set(&[64, 128]));

    let mut s = Store::new();
    let x = s.int_var(0, 4, "X").unwrap();
    assert_eq!(s.post(Constraint::Table { vars: vec![x], tuples: vec![] }).unwrap(), Status::Failed);

    let mut s = Store::new();
    let x = s.int_var(5, 5, "X").unwrap();
    let y = s.int_var(0, 4, "Y").unwrap();
    let st = s.post(Constraint::Table { vars: vec![x, y], tuples: vec![vec![1, 1], vec![2, 3]] }).unwrap();
    assert_eq!(st, Status::Failed);
}

#[test]
fn alldifferent_examples() {
    let mut s = Store::new();
    let xs: Vec<VarRef> = ["X", "Y", "Z"].iter().map(|n| s.int_var(1, 3, *n).unwrap()).collect();
    s.post(Constraint::AllDifferent(xs.clone())).unwrap();
    assert_eq!(s.count_solutions(100).count, 6);
    s.restrict(xs[0], &IntervalSet::singleton(1)).unwrap();
    assert_eq!(s.domain(xs[1]), &IntervalSet::range(2, 3));
    assert_eq!(s.domain(xs[2]), &IntervalSet::range(2, 3));

    let mut s = Store::new();
    let x = s.int_var(1, 1, "X").unwrap();
    let y = s.int_var(1, 1, "Y").unwrap();
    assert_eq!(s.post(Constraint::AllDifferent(vec![x, y])).unwrap(), Status::Failed);
}

#[test]
fn count_examples() {
    let mut s = Store::new();
    let xs: Vec<VarRef> = ["X", "Y", "Z", "T"].iter().map(|n| s.int_var(0, 10, *n).unwrap()).collect();
    s.post(Constraint::atmost(2, xs.clone(), 10)).unwrap();
    s.restrict(xs[0], &IntervalSet::singleton(10)).unwrap();
    s.restrict(xs[1], &IntervalSet::singleton(10)).unwrap();
    assert_eq!(s.domain(xs[2]), &IntervalSet::range(0, 9));
    assert_eq!(s.domain(xs[3]), &IntervalSet::range(0, 9));

    let mut s = Store::new();
    let xs: Vec<VarRef> = ["X", "Y", "Z"].iter().map(|n| s.int_var(0, 3, *n).unwrap()).collect();
    s.post(Constraint::atleast(3, xs.clone(), 1)).unwrap();
    for x in xs {
        assert_eq!(s.domain(x).value(), Some(1));
    }

    let mut s = Store::new();
    let x = s.int_var(4, 6, "X").unwrap();
    let y = s.int_var(0, 9, "Y").unwrap();
    s.post(Constraint::exactly(0, vec![x, y], 5)).unwrap();
    assert_eq!(s.domain(x), &set(&[4, 6]));
}

#[test]
fn reified_implication_complement() {
    // B <=> X < Y together with B => K = 8
    let mut s = Store::new();
    let x = s.int_var(0, 5, "X").unwrap();
    let y = s.int_var(0, 5, "Y").unwrap();
    let k = s.int_var(0, 10, "K").unwrap();
    let b = s.bool_var("B");
    s.post(Constraint::Reified { b, form: BoolForm::Atom(v(x).lt(y)) }).unwrap();
    let one = s.int_var(1, 1, "T").unwrap();
    s.post(Constraint::Reified {
        b: one,
        form: BoolForm::implies(BoolForm::Atom(v(b).eq(1)), BoolForm::Atom(v(k).eq(8))),
    })
    .unwrap();
    s.restrict(y, &IntervalSet::singleton(3)).unwrap();
    s.restrict(k, &IntervalSet::range(9, 10)).unwrap();
    assert_eq!(s.domain(b).value(), Some(0));
    // X >= Y, not X > Y: X = 3 survives
    assert_eq!(s.domain(x), &IntervalSet::range(3, 5));
}

#[test]
fn reified_sensor_exclusion() {
    let mut s = Store::new();
    let speed = s.int_var(0, 4, "SpeedSensor").unwrap();
    let vib = s.bool_var("Vibration");
    let b = s.int_var(1, 1, "B").unwrap();
    s.post(Constraint::Reified {
        b,
        form: BoolForm::iff(BoolForm::Atom(v(speed).ne(0)), BoolForm::Atom(v(vib).eq(0))),
    })
    .unwrap();
    s.restrict(speed, &IntervalSet::singleton(2)).unwrap();
    assert_eq!(s.domain(vib).value(), Some(0));
}

#[test]
fn reified_tautology() {
    let mut s = Store::new();
    let x = s.int_var(0, 9, "X").unwrap();
    let b = s.bool_var("B");
    s.post(Constraint::Reified { b, form: BoolForm::Atom(v(x).eq(x)) }).unwrap();
    assert_eq!(s.domain(b).value(), Some(1));
}

#[test]
fn solve_next_order() {
    let mut s = Store::new();
    let x = s.bool_var("X");
    let y = s.bool_var("Y");
    s.post((v(x) + v(y)).eq(1).into()).unwrap();
    let sols: Vec<Vec<i64>> = s.search(Strategy::default()).map(|s| s.values().to_vec()).collect();
    assert_eq!(sols, vec![vec![0, 1], vec![1, 0]]);
    assert_eq!(s.domain(x), &IntervalSet::range(0, 1));
}

#[test]
fn failed_store_has_no_solutions() {
    let mut s = Store::new();
    let x = s.int_var(3, 3, "X").unwrap();
    s.post(v(x).eq(4).into()).unwrap();
    assert_eq!(s.search(Strategy::default()).next(), None);
}

#[test]
fn counting_with_cap() {
    let mut s = Store::new();
    for n in ["A", "B", "C"] {
        s.bool_var(n);
    }
    let r = s.count_solutions(100);
    assert_eq!((r.count, r.exact), (8, true));
    let r = s.count_solutions(5);
    assert_eq!((r.count, r.exact), (5, false));
    // a cap equal to the total is still exact
    let r = s.count_solutions(8);
    assert_eq!((r.count, r.exact), (8, true));
}

#[test]
fn optimize_examples() {
    let mut s = Store::new();
    let x = s.int_var(2, 5, "X").unwrap();
    let y = s.int_var(2, 5, "Y").unwrap();
    s.post((v(x) * v(y)).ge(12).into()).unwrap();
    let before = s.domains().to_vec();
    let best = s.optimize(&(v(x) + v(y)), Direction::Minimize, Strategy::default()).unwrap();
    assert_eq!(best.value, 7);
    assert!(best.proven);
    let (a, b) = (best.solution.value(x), best.solution.value(y));
    assert!(a * b >= 12 && a + b == 7);
    assert_eq!(s.domains(), &before[..]);
    assert_eq!(s.constraints().len(), 1);

    let mut s = Store::new();
    let f = s.int_var(0, 4, "F").unwrap();
    assert_eq!(s.optimize(&v(f), Direction::Maximize, Strategy::default()).unwrap().value, 4);

    let mut s = Store::new();
    let f = s.int_var(0, 4, "F").unwrap();
    s.post(v(f).gt(4).into()).unwrap();
    assert_eq!(s.optimize(&v(f), Direction::Maximize, Strategy::default()), Err(FdError::Unsatisfiable));
}

#[test]
fn levels() {
    let mut s = Store::new();
    let x = s.int_var(0, 9, "X").unwrap();
    let l = s.push_level();
    s.post(v(x).eq(3).into()).unwrap();
    s.pop_to(l).unwrap();
    assert_eq!(s.domain(x), &IntervalSet::range(0, 9));

    let outer = s.push_level();
    s.post(v(x).ge(2).into()).unwrap();
    s.push_level();
    s.post(v(x).le(4).into()).unwrap();
    s.pop_to(outer).unwrap();
    assert_eq!(s.domain(x), &IntervalSet::range(0, 9));
    assert_eq!(s.level_count(), 0);
    assert_eq!(s.pop_to(outer), Err(FdError::UnknownLevel(0)));
}

#[test]
fn describe_renders_names() {
    let mut s = Store::new();
    let a = s.bool_var("Visual");
    let b = s.bool_var("Audio");
    let (id, _) = s.post_labeled((v(a) + v(b)).eq(1).into(), Some("xor")).unwrap();
    assert_eq!(s.describe(id), "Visual + Audio = 1");
}
