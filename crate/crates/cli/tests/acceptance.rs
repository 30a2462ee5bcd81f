//! Acceptance run: one `[PASS]` or `[FAIL]` line per criterion.
//!
//! `cargo test -p featline-cli --test acceptance`

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use featline_core::analysis::Report;
use featline_core::session::{LogEntry, Restriction};
use featline_core::*;
use featline_fd::{Constraint, IntervalSet, Labeling, NumExpr, Status, Strategy, ValueOrder, VarOrder, VarRef};
use featline_testkit::brute::Csp;
use featline_testkit::gen::{GenConfig, Generator};
use featline_testkit::model::{compiled_solutions, ModelOracle};
use featline_testkit::modelgen::ModelGen;
use featline_testkit::{fixture_path, gprolog, read_fixture};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

fn load(name: &str) -> FeatureModel {
    parse(&read_fixture(name)).unwrap_or_else(|d| panic!("{name}: {d:?}"))
}

const STRATEGIES: [Strategy; 4] = [
    Strategy {
        var_order: VarOrder::DeclarationOrder,
        value_order: ValueOrder::Ascending,
    },
    Strategy {
        var_order: VarOrder::DeclarationOrder,
        value_order: ValueOrder::Descending,
    },
    Strategy {
        var_order: VarOrder::FirstFail,
        value_order: ValueOrder::Ascending,
    },
    Strategy {
        var_order: VarOrder::FirstFail,
        value_order: ValueOrder::Descending,
    },
];

fn family(c: &Constraint) -> &'static str {
    match c {
        Constraint::Cmp(cmp) => match cmp.lhs {
            NumExpr::Product(..) => "product",
            NumExpr::Min(_) | NumExpr::Max(_) => "min/max",
            _ => "linear",
        },
        Constraint::Element { .. } => "element",
        Constraint::Table { .. } => "table",
        Constraint::AllDifferent(_) => "alldifferent",
        Constraint::Count { .. } => "count",
        Constraint::Reified { .. } => "reified",
    }
}

fn solver_vs_oracle() -> Outcome {
    let t = Instant::now();
    let cfg = GenConfig::default();
    let mut families = BTreeSet::new();
    let mut solutions = 0;
    let n = 600u64;
    for seed in 0..n {
        let p = Generator::new(seed, cfg).csp();
        ensure!(p.domains.len() <= 6, "seed {seed}: {} vars", p.domains.len());
        ensure!(p.constraints.len() <= 8, "seed {seed}: {} constraints", p.constraints.len());
        ensure!(p.domains.iter().flatten().all(|v| (0..=6).contains(v)), "seed {seed}: domain outside [0..6]");
        families.extend(p.constraints.iter().map(family));
        let want = p.solutions();
        let mut s = p.to_store().map_err(|e| format!("seed {seed}: {e}"))?;
        let found: Vec<Vec<i64>> = s.search(STRATEGIES[seed as usize % 4]).map(|x| x.values().to_vec()).collect();
        let got: BTreeSet<Vec<i64>> = found.iter().cloned().collect();
        ensure!(got.len() == found.len(), "seed {seed}: duplicate solutions");
        ensure!(got == want, "seed {seed}: {} solutions, oracle has {}", got.len(), want.len());
        solutions += want.len();
    }
    let elapsed = t.elapsed();
    ensure!(families.len() == 8, "only {families:?} drawn");
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!(
        "{n} problems, {solutions} solutions, {} constraint families, {:.1} s",
        families.len(),
        elapsed.as_secs_f64()
    ))
}

const REDUCED: [&str; 13] = [
    "Sensor",
    "SpeedSensor",
    "PositionSensor",
    "SensorAutoTest",
    "ConsistencyCheck",
    "ResponseTimeCheck",
    "SensorFunctionalityCheck",
    "ResponseTime",
    "Actuator",
    "PositionActuator",
    "ActuatorAutoTest",
    "MemoryCheck",
    "ActuatorFunctionalityCheck",
];

fn verbatim_program() -> Outcome {
    let text = read_fixture("vmc_gprolog.pl");
    ensure!(text.contains("Sensor #> VMC"), "fixture lacks `Sensor #> VMC`");
    ensure!(text.contains("Visual + Audio + Vibration #>= 1"), "fixture lacks the bundle lower bound");
    let p = gprolog::read(&text)?;
    let s = p.to_store().map_err(|e| e.to_string())?;
    let var = |n: &str| p.var(n).ok_or(format!("no {n}"));
    ensure!(s.status() == Status::Consistent, "initial propagation failed");
    ensure!(s.domain(var("VMC")?).value() == Some(0), "VMC is {}", s.domain(var("VMC")?));

    let mut q = p.clone();
    for n in REDUCED {
        q.domains[var(n)?.index()] = IntervalSet::range(0, 3);
    }
    let mut store = q.to_store().map_err(|e| e.to_string())?;
    let lab = Labeling::new(Strategy::default()).over(q.labeling.clone());
    let r = store.count_with(lab, u64::MAX);
    let oracle = Csp {
        names: q.names.clone(),
        domains: q.domains.iter().map(|d| d.iter().collect()).collect(),
        constraints: q.constraints.clone(),
    };
    let keep: Vec<usize> = q.labeling.iter().map(|v| v.index()).collect();
    let want = oracle.projected_solutions(&keep).len() as u64;
    ensure!(r.exact, "count not exact");
    ensure!(r.count == want, "solver counts {}, oracle {want}", r.count);
    Ok(format!("VMC = 0 after propagation; reduced count {} = oracle", r.count))
}

fn vmc_fixture() -> Outcome {
    let m = load("vmc.fm");
    let oracle = ModelOracle::new(&m);
    let sols = oracle.solutions();
    let mut c = compile(&m).map_err(|e| e.to_string())?;
    ensure!(compiled_solutions(&mut c) == sols, "solution sets differ");
    ensure!(!sols.is_empty(), "oracle finds the model void");
    ensure!(!c.is_void(&featline_fd::Limits::none()).map_err(|e| e.to_string())?, "solver reports void");

    let (core, dead) = c.core_and_dead(&featline_fd::Limits::none()).map_err(|e| e.to_string())?;
    let fb = oracle.var("Feedback").unwrap();
    let fb_core = sols.iter().all(|a| a[fb] >= 1);
    let fb_dead = sols.iter().all(|a| a[fb] == 0);
    ensure!(!fb_core && !fb_dead, "oracle: Feedback core={fb_core} dead={fb_dead}");
    let feedback = "Feedback".to_string();
    ensure!(!core.contains(&feedback) && !dead.contains(&feedback), "Feedback in core/dead");
    for i in oracle.feature_indices() {
        let name = &oracle.names[i];
        ensure!(core.contains(name) == sols.iter().all(|a| a[i] >= 1), "core disagrees on {name}");
        ensure!(dead.contains(name) == sols.iter().all(|a| a[i] == 0), "dead disagrees on {name}");
    }

    let mut s = Session::start(&m).map_err(|e| e.to_string())?;
    s.decide("SpeedSensor", Restriction::AtLeast(JsonInt(1))).map_err(|e| e.to_string())?;
    let vib = s.compiled().vars.feature("Vibration").unwrap();
    ensure!(s.store().domain(vib).value() == Some(0), "Vibration is {}", s.store().domain(vib));
    let (sp, vi) = (oracle.var("SpeedSensor").unwrap(), oracle.var("Vibration").unwrap());
    ensure!(sols.iter().filter(|a| a[sp] >= 1).all(|a| a[vi] == 0), "oracle allows Vibration with SpeedSensor");

    let mut xor = m.clone();
    xor.constraints.push(parse_constraint("Visual + Audio = 1").map_err(|d| format!("{d:?}"))?);
    let xo = ModelOracle::new(&xor);
    let xsols = xo.solutions();
    let (v, a) = (xo.var("Visual").unwrap(), xo.var("Audio").unwrap());
    ensure!(xsols.iter().all(|x| !(x[v] == 1 && x[a] == 1)), "oracle admits both");
    let mut xc = compile(&xor).map_err(|e| e.to_string())?;
    ensure!(compiled_solutions(&mut xc) == xsols, "solution sets differ with the added constraint");
    let both = sols.iter().find(|x| x[v] == 1 && x[a] == 1).ok_or("no configuration with both")?;
    let assignment = oracle.names.iter().cloned().zip(both.iter().copied()).collect();
    let (ok, violations) = xc.validate_configuration(&assignment).map_err(|e| e.to_string())?;
    ensure!(!ok, "a configuration with both is accepted");
    ensure!(violations.iter().any(|x| x.constraint == "Visual + Audio = 1"), "{violations:?}");
    Ok(format!(
        "{} configurations; Feedback optional; {} remain with Visual + Audio = 1",
        sols.len(),
        xsols.len()
    ))
}

fn choose_equivalence() -> Outcome {
    let mut checked = 0;
    for k in 1..=10usize {
        let mut text = String::from("model M\nfeature R\n");
        for i in 0..k {
            text.push_str(&format!("feature F{i} of R optional\n"));
        }
        let names: Vec<String> = (0..k).map(|i| format!("F{i}")).collect();
        for n in 0..=k {
            for mx in n..=k {
                let full = format!("{text}constraint choose({n}, {mx}, [{}])\n", names.join(", "));
                let m = parse(&full).map_err(|d| format!("{d:?}"))?;
                let mut c = compile(&m).map_err(|e| e.to_string())?;
                let got = compiled_solutions(&mut c);
                let want: BTreeSet<Vec<i64>> = (0u32..1 << k)
                    .filter(|bits| (n..=mx).contains(&(bits.count_ones() as usize)))
                    .map(|bits| {
                        let mut a = vec![1];
                        a.extend((0..k).map(|i| i64::from((bits >> i) & 1)));
                        a
                    })
                    .collect();
                ensure!(got == want, "k={k} choose({n}, {mx})");
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} (k, n, m) cases over all 2^k assignments"))
}

fn relation_fixture() -> Outcome {
    let m = load("relation.fm");
    let oracle = ModelOracle::new(&m);
    let sols = oracle.solutions();
    let mut c = compile(&m).map_err(|e| e.to_string())?;
    ensure!(sols.len() == 6, "oracle finds {}", sols.len());
    ensure!(compiled_solutions(&mut c) == sols, "solution sets differ");

    let mut s = Session::start(&m).map_err(|e| e.to_string())?;
    s.decide("Sensor", Restriction::Fix(JsonInt(2))).map_err(|e| e.to_string())?;
    let act = s.compiled().vars.feature("Actuator").unwrap();
    let mem = s.compiled().vars.lookup("Actuator.InternalMemory").unwrap();
    let act_d: Vec<i64> = s.store().domain(act).iter().collect();
    let mem_d: Vec<i64> = s.store().domain(mem).iter().collect();
    let tuples = [(1, 1, 32), (1, 2, 64), (2, 1, 64), (2, 2, 128), (3, 3, 512), (4, 4, 1024)];
    let want_act: BTreeSet<i64> = tuples.iter().filter(|t| t.0 == 2).map(|t| t.1).collect();
    let want_mem: BTreeSet<i64> = tuples.iter().filter(|t| t.0 == 2).map(|t| t.2).collect();
    ensure!(act_d.iter().copied().collect::<BTreeSet<_>>() == want_act, "Actuator {act_d:?}");
    ensure!(mem_d.iter().copied().collect::<BTreeSet<_>>() == want_mem, "InternalMemory {mem_d:?}");
    Ok(format!("Sensor = 2 gives Actuator {act_d:?}, InternalMemory {mem_d:?}; 6 solutions"))
}

fn stago_optimization() -> Outcome {
    let m = load("stago.fm");
    let oracle = ModelOracle::new(&m);
    let sols = oracle.solutions();
    let mut found = Vec::new();
    for g in &m.goals {
        let vals = sols.iter().map(|a| oracle.eval(&g.expr, a));
        let best = match g.direction {
            GoalDirection::Minimize => vals.min(),
            GoalDirection::Maximize => vals.max(),
        }
        .ok_or("no configurations")?;
        let r = analysis::optimize_goal(&m, &g.name, Strategy::default()).map_err(|e| e.to_string())?;
        ensure!(r.proven, "{} not proven", g.name);
        ensure!(r.value.0 as i128 == best, "{}: solver {} brute force {best}", g.name, r.value);
        let a: Vec<i64> = oracle.names.iter().map(|n| r.solution[n.as_str()].0).collect();
        ensure!(oracle.accepts(&a), "{} witness rejected", g.name);
        found.push(format!("{} = {best}", g.name));
    }
    ensure!(found.len() == 2, "expected two goals");

    let tca = m.code("TCA").ok_or("no TCA code")?;
    let normal = m.code("normal").ok_or("no normal code")?;
    let mut s = Session::start(&m).map_err(|e| e.to_string())?;
    s.decide("LaunchTest.TestType", Restriction::Fix(JsonInt(tca))).map_err(|e| e.to_string())?;
    let chrono = s.compiled().vars.feature("Chronometric").unwrap();
    let speed = s.compiled().vars.lookup("Chronometric.Speed").unwrap();
    ensure!(s.store().domain(chrono).value() == Some(1), "Chronometric is {}", s.store().domain(chrono));
    ensure!(s.store().domain(speed).value() == Some(normal), "Speed is {}", s.store().domain(speed));
    Ok(format!("{} over {} configurations; TCA forces Chronometric = 1, Speed = normal", found.join(", "), sols.len()))
}

const CASES: usize = 200;

fn properties() -> Outcome {
    let cfg = GenConfig::default();
    let mut report = Vec::new();

    // fixpoint idempotence and monotonicity
    let (mut idem, mut mono) = (0, 0);
    let mut seed = 0u64;
    while idem < CASES && seed < 100 * CASES as u64 {
        seed += 1;
        let mut g = Generator::new(seed, cfg);
        let p = g.csp();
        let mut s = p.to_store().map_err(|e| e.to_string())?;
        if s.status() != Status::Consistent {
            continue;
        }
        let once = s.domains().to_vec();
        ensure!(s.propagate() == Status::Consistent, "seed {seed}: second propagation failed");
        ensure!(s.domains() == &once[..], "seed {seed}: fixpoint not idempotent");
        for (d, orig) in once.iter().zip(&p.domains) {
            ensure!(d.iter().all(|x| orig.contains(&x)), "seed {seed}: value added by propagation");
        }
        idem += 1;
        let v = VarRef::from_index(g.rng().gen_range(0..p.domains.len()));
        let keep = IntervalSet::from_values(g.domain());
        s.push_level();
        if s.restrict(v, &keep).map_err(|e| e.to_string())? == Status::Consistent {
            for (after, before) in s.domains().iter().zip(&once) {
                ensure!(after.is_subset_of(before), "seed {seed}: narrowing widened a domain");
            }
        }
        mono += 1;
    }
    ensure!(idem >= CASES, "only {idem} consistent problems");
    report.push(format!("fixpoint {idem}"));
    report.push(format!("monotonicity {mono}"));

    // trail exactness
    for seed in 0..CASES as u64 {
        let mut g = Generator::new(seed, cfg);
        let p = g.csp();
        let mut s = p.to_store().map_err(|e| e.to_string())?;
        let mut stack = Vec::new();
        for _ in 0..12 {
            match g.rng().gen_range(0..3) {
                0 => stack.push((s.domains().to_vec(), s.push_level())),
                1 => {
                    if let Some((snap, l)) = stack.pop() {
                        s.pop_to(l).map_err(|e| e.to_string())?;
                        ensure!(s.domains() == &snap[..], "seed {seed}: pop did not restore domains");
                    }
                }
                _ => {
                    let fam = featline_testkit::gen::FAMILIES[g.rng().gen_range(0..8)];
                    let c = g.constraint(fam, p.domains.len());
                    s.post(c).map_err(|e| e.to_string())?;
                }
            }
        }
        while let Some((snap, l)) = stack.pop() {
            s.pop_to(l).map_err(|e| e.to_string())?;
            ensure!(s.domains() == &snap[..], "seed {seed}: pop did not restore domains");
        }
    }
    report.push(format!("trail {CASES}"));

    // enumeration determinism
    for seed in 0..CASES as u64 {
        let p = Generator::new(seed, cfg).csp();
        let strat = STRATEGIES[seed as usize % 4];
        let run = || -> Result<Vec<Vec<i64>>, String> {
            let mut s = p.to_store().map_err(|e| e.to_string())?;
            let v = s.search(strat).map(|x| x.values().to_vec()).collect();
            Ok(v)
        };
        ensure!(run()? == run()?, "seed {seed}: enumeration order differs");
    }
    report.push(format!("enumeration {CASES}"));

    // replay determinism and rejection atomicity over sessions
    let (mut replays, mut sessions, mut rejections) = (0, 0, 0);
    let mut seed = 0u64;
    while sessions < CASES {
        seed += 1;
        let mut gen = ModelGen::new(seed);
        let m = gen.model();
        if analysis::is_void(&m).map_err(|e| e.to_string())? {
            continue;
        }
        sessions += 1;
        let oracle = ModelOracle::new(&m);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = Session::start(&m).map_err(|e| e.to_string())?;
        let mut views = vec![s.view()];
        for _ in 0..8 {
            let e = session_action(&mut rng, &m, &oracle, &mut gen);
            let before = (s.store().domains().to_vec(), s.log(), s.view());
            if s.apply(&e).is_err() {
                rejections += 1;
                ensure!(s.store().domains() == &before.0[..], "seed {seed}: rejection changed domains");
                ensure!(s.log() == before.1, "seed {seed}: rejection changed the log");
                ensure!(s.view() == before.2, "seed {seed}: rejection changed the view");
            } else {
                views.push(s.view());
            }
        }
        let log = s.log();
        let mut again = Session::start(&m).map_err(|e| e.to_string())?;
        ensure!(again.view() == views[0], "seed {seed}: fresh view differs");
        for (i, e) in log.iter().enumerate() {
            again.apply(e).map_err(|err| format!("seed {seed}: replay of entry {i}: {err}"))?;
            ensure!(again.view() == views[i + 1], "seed {seed}: view differs after entry {i}");
        }
        ensure!(again.store().domains() == s.store().domains(), "seed {seed}: replayed domains differ");
        replays += 1;
    }
    ensure!(rejections > 0, "no action was rejected");
    report.push(format!("replay {replays}"));
    report.push(format!("rejection {sessions} sessions/{rejections} rejections"));
    Ok(report.join(", "))
}

fn session_action(rng: &mut ChaCha8Rng, m: &FeatureModel, oracle: &ModelOracle, gen: &mut ModelGen) -> LogEntry {
    if rng.gen_bool(0.2) {
        return LogEntry::Constraint {
            text: gen.condition_in(m, 2).to_string(),
        };
    }
    let i = rng.gen_range(0..oracle.names.len());
    let d = &oracle.domains[i];
    let v = d[rng.gen_range(0..d.len())];
    let restriction = match rng.gen_range(0..3) {
        0 => Restriction::AtLeast(JsonInt(v)),
        1 => Restriction::AtMost(JsonInt(v)),
        _ => Restriction::Fix(JsonInt(v)),
    };
    LogEntry::Decide {
        name: oracle.names[i].clone(),
        restriction,
    }
}

fn parser_robustness() -> Outcome {
    for name in ["vmc.fm", "stago.fm", "relation.fm"] {
        let m = load(name);
        let text = serialize(&m);
        let back = parse(&text).map_err(|d| format!("{name} reprint: {d:?}"))?;
        ensure!(back == m, "{name}: reparse differs");
        ensure!(serialize(&back) == text, "{name}: second print differs");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce);
    let n = 100_000;
    let mut rejected = 0;
    for i in 0..n {
        let len = rng.gen_range(0..96);
        let bytes: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
        let text = String::from_utf8_lossy(&bytes).into_owned();
        let r = catch_unwind(|| (parse(&text).is_err(), parse_constraint(&text).is_err()))
            .map_err(|_| format!("input {i} panicked: {bytes:?}"))?;
        if r.0 {
            rejected += 1;
        }
    }
    ensure!(rejected == n, "{} random byte strings parsed as models", n - rejected);
    Ok(format!("3 fixtures round-trip; {n} random byte strings rejected without a crash"))
}

fn featline(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_featline"))
        .args(args)
        .env_remove("FEATLINE_CAP")
        .output()
        .expect("run featline")
}

fn json_report(o: &Output) -> Result<Report, String> {
    let r: AnalysisReport = serde_json::from_slice(&o.stdout).map_err(|e| format!("{e}"))?;
    let again = serde_json::to_string_pretty(&r).map_err(|e| e.to_string())? + "\n";
    ensure!(again.as_bytes() == &o.stdout[..], "JSON does not round-trip");
    Ok(r.report)
}

fn cli() -> Outcome {
    let fx = |n: &str| fixture_path(n).to_string_lossy().into_owned();
    let (vmc, stago, rel) = (fx("vmc.fm"), fx("stago.fm"), fx("relation.fm"));
    let runs: Vec<(Vec<&str>, i32)> = vec![
        (vec!["--json", "check", &vmc], 0),
        (vec!["--json", "count", &vmc, "--cap", "100000", "--project", "features"], 0),
        (vec!["--json", "solve", &rel], 0),
        (vec!["--json", "optimize", &stago, "--goal", "cost"], 0),
        (vec!["--json", "optimize", &stago, "--goal", "revenue"], 0),
    ];
    let mut outputs = Vec::new();
    for (args, code) in &runs {
        let a = featline(args);
        let b = featline(args);
        ensure!(a.status.code() == Some(*code), "{args:?} exited {:?}", a.status.code());
        ensure!(a.stdout == b.stdout, "{args:?} output differs between runs");
        outputs.push(json_report(&a).map_err(|e| format!("{args:?}: {e}"))?);
    }
    ensure!(
        outputs[0] == Report::Check { valid: true, void: Some(false), diagnostics: vec![] },
        "check: {:?}",
        outputs[0]
    );
    let m = load("vmc.fm");
    let oracle = ModelOracle::new(&m);
    let want = oracle.projected(&oracle.feature_indices()).len() as i64;
    let Report::Count { count, exact, .. } = &outputs[1] else { return Err("count kind".into()) };
    ensure!(count.0 == want && *exact, "count {count} (exact {exact}), oracle {want}");
    let Report::Enumerate { solutions, .. } = &outputs[2] else { return Err("solve kind".into()) };
    let rm = load("relation.fm");
    let ro = ModelOracle::new(&rm);
    let first: Vec<i64> = ro.names.iter().map(|n| solutions[0][n.as_str()].0).collect();
    ensure!(solutions.len() == 1 && ro.accepts(&first), "solve gave {solutions:?}");
    let sm = load("stago.fm");
    let so = ModelOracle::new(&sm);
    let sols = so.solutions();
    for (r, g) in outputs[3..].iter().zip(["cost", "revenue"]) {
        let Report::Optimize(r) = r else { return Err("optimize kind".into()) };
        let goal = sm.goal(g).unwrap();
        let vals = sols.iter().map(|a| so.eval(&goal.expr, a));
        let best = if g == "cost" { vals.min() } else { vals.max() }.unwrap();
        ensure!(r.value.0 as i128 == best && r.proven, "{g}: {} vs {best}", r.value);
    }

    let void = std::env::temp_dir().join(format!("featline-acceptance-{}.fm", std::process::id()));
    std::fs::write(&void, "model M\nfeature R\nconstraint R = 0\n").map_err(|e| e.to_string())?;
    let void = void.to_string_lossy().into_owned();
    let gprolog_path = fx("vmc_gprolog.pl");
    let codes = [
        (vec!["check", void.as_str()], 1),
        (vec!["solve", void.as_str()], 1),
        (vec!["count", void.as_str()], 1),
        (vec!["check", gprolog_path.as_str()], 2),
        (vec!["count"], 2),
        (vec!["optimize", &stago, "--goal", "nope"], 2),
    ];
    for (args, code) in &codes {
        let got = featline(args).status.code();
        ensure!(got == Some(*code), "{args:?} exited {got:?}, expected {code}");
    }
    let _ = std::fs::remove_file(&void);
    Ok(format!("{} JSON runs stable and round-tripping; exit codes 0/1/2 as documented", runs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("solver matches brute force on random problems", solver_vs_oracle),
        ("verbatim constraint program", verbatim_program),
        ("VMC model fixture", vmc_fixture),
        ("choose lowering equals the between predicate", choose_equivalence),
        ("relation fixture", relation_fixture),
        ("STAGO-style optimization", stago_optimization),
        ("property suites", properties),
        ("parser round trip and fuzzing", parser_robustness),
        ("CLI exit codes and stable JSON", cli),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(detail) => println!("[PASS] {}. {name}: {detail} ({secs:.1} s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {}. {name}: {why} ({secs:.1} s)", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
