use std::collections::BTreeSet;
use std::time::Duration;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use featline_core::session::LogEntry;
use featline_core::{parse, GoalDirection, Session};
use featline_service::{router, AppState, Config};
use featline_testkit::model::ModelOracle;
use featline_testkit::read_fixture;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn app() -> Router {
    router(AppState::new(Config::default()))
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header(header::CONTENT_TYPE, "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&bytes)))
    };
    (status, v)
}

async fn post(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    call(app, Method::POST, uri, Some(body)).await
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    call(app, Method::GET, uri, None).await
}

async fn add_model(app: &Router, text: &str) -> String {
    let (s, v) = post(app, "/models", json!({ "text": text })).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    v["model_id"].as_str().unwrap().to_string()
}

async fn start(app: &Router, model_id: &str) -> (String, Value) {
    let (s, v) = post(app, "/sessions", json!({ "model_id": model_id })).await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    (v["session_id"].as_str().unwrap().to_string(), v["view"].clone())
}

fn var<'a>(view: &'a Value, name: &str) -> &'a Value {
    view["vars"]
        .as_array()
        .unwrap()
        .iter()
        .find(|v| v["name"] == name)
        .unwrap_or_else(|| panic!("{name} not in view"))
}

fn assert_api_error(v: &Value, code: &str) {
    assert_eq!(v["code"], code, "{v}");
    assert!(v["message"].as_str().is_some_and(|m| !m.is_empty()), "{v}");
}

#[tokio::test]
async fn vmc_model_is_accepted() {
    let app = app();
    let (s, v) = post(&app, "/models", json!({ "text": read_fixture("vmc.fm") })).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["diagnostics"], json!([]));
    assert_eq!(v["valid"], true);

    let id = v["model_id"].as_str().unwrap();
    let (s, m) = get(&app, &format!("/models/{id}")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(m["name"], "VMC");
    assert_eq!(m["features"].as_array().unwrap().len(), 19);
    assert_eq!(m["groups"][0]["members"], json!(["Visual", "Audio", "Vibration"]));
    let deps: Vec<&str> = m["cross_deps"].as_array().unwrap().iter().map(|d| d["text"].as_str().unwrap()).collect();
    assert_eq!(deps, ["SpeedSensor excludes Vibration", "ConsistencyCheck requires ResponseTimeCheck"]);
    let size = m["variables"].as_array().unwrap().iter().find(|x| x["name"] == "InternalMemory.Size").unwrap();
    assert_eq!(size["domain"], json!([[32, 32], [64, 64], [256, 256], [512, 512], [1024, 1024]]));
    assert_eq!(parse(m["text"].as_str().unwrap()).unwrap(), parse(&read_fixture("vmc.fm")).unwrap());
}

#[tokio::test]
async fn syntax_errors_are_400_with_spans() {
    let app = app();
    let (s, v) = post(&app, "/models", json!({ "text": "model M\nfeature R\nfeature A of R optionl\n" })).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_api_error(&v, "parse_error");
    assert_eq!(v["span"]["line"], 3);
    assert!(!v["diagnostics"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn invalid_models_are_kept_with_diagnostics() {
    let app = app();
    let (s, v) = post(&app, "/models", json!({ "text": "model M\nfeature R\nfeature X of Nowhere mandatory\n" })).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["valid"], false);
    assert_eq!(v["diagnostics"][0]["code"], "unknown-parent");
    let id = v["model_id"].as_str().unwrap();
    let (s, v) = post(&app, "/sessions", json!({ "model_id": id })).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_api_error(&v, "invalid_model");
    let (s, v) = post(&app, &format!("/models/{id}/analyses"), json!({ "kind": "check" })).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!((v["valid"].clone(), v["void"].clone()), (json!(false), Value::Null));
}

#[tokio::test]
async fn analyses_on_the_vmc_model() {
    let app = app();
    let id = add_model(&app, &read_fixture("vmc.fm")).await;
    let uri = format!("/models/{id}/analyses");

    let (s, v) = post(&app, &uri, json!({ "kind": "check" })).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!((v["valid"].clone(), v["void"].clone()), (json!(true), json!(false)));

    let (_, v) = post(&app, &uri, json!({ "kind": "count", "params": { "cap": 100000, "projection": "features" } })).await;
    assert_eq!((v["count"].clone(), v["exact"].clone()), (json!(57_800), json!(true)));
    let (_, v) = post(&app, &uri, json!({ "kind": "count", "cap": 10 })).await;
    assert_eq!((v["count"].clone(), v["exact"].clone()), (json!(10), json!(false)));

    let (_, v) = post(&app, &uri, json!({ "kind": "core_dead" })).await;
    assert!(v["core"].as_array().unwrap().contains(&json!("VMC")));
    assert!(!v["core"].as_array().unwrap().contains(&json!("Feedback")));
    assert_eq!(v["dead"], json!([]));

    let (_, v) = post(&app, &uri, json!({ "kind": "enumerate", "params": { "limit": 2 } })).await;
    assert_eq!(v["solutions"].as_array().unwrap().len(), 2);
    assert_eq!(v["complete"], false);
    assert!(v["elapsed_ms"].is_u64());

    let (s, v) = post(&app, &uri, json!({ "kind": "teleport" })).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_api_error(&v, "bad_request");
    let (s, v) = post(&app, &uri, json!({ "kind": "optimize", "goal": "nothing" })).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_api_error(&v, "unknown_goal");
}

#[tokio::test]
async fn void_models_are_422() {
    let app = app();
    let id = add_model(&app, "model M\nfeature R\nconstraint R = 0\n").await;
    let (s, v) = post(&app, &format!("/models/{id}/analyses"), json!({ "kind": "core_dead" })).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_api_error(&v, "void_model");
    let (s, v) = post(&app, "/sessions", json!({ "model_id": id })).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_api_error(&v, "void_model");
}

#[tokio::test]
async fn stago_optimum_over_http() {
    let app = app();
    let text = read_fixture("stago.fm");
    let m = parse(&text).unwrap();
    let oracle = ModelOracle::new(&m);
    let sols = oracle.solutions();
    let id = add_model(&app, &text).await;
    for g in &m.goals {
        let vals = sols.iter().map(|a| oracle.eval(&g.expr, a));
        let best = match g.direction {
            GoalDirection::Minimize => vals.min(),
            GoalDirection::Maximize => vals.max(),
        }
        .unwrap();
        let (s, v) = post(&app, &format!("/models/{id}/analyses"), json!({ "kind": "optimize", "params": { "goal": g.name } })).await;
        assert_eq!(s, StatusCode::OK, "{v}");
        assert_eq!(v["value"].as_i64().unwrap() as i128, best);
        assert_eq!(v["proven"], true);
    }

    let (sid, _) = start(&app, &id).await;
    let (s, _) = post(&app, &format!("/sessions/{sid}/decisions"), json!({ "name": "LaunchTest.TestType", "restriction": { "fix": m.code("TCA").unwrap() } })).await;
    assert_eq!(s, StatusCode::OK);
    let (s, v) = post(&app, &format!("/sessions/{sid}/optimize"), json!({ "goal": "cost" })).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["solution"]["Chronometric"], 1);
    assert_eq!(v["solution"]["Chronometric.Speed"], m.code("normal").unwrap());
}

#[tokio::test]
async fn decisions_propagate_and_read_back() {
    let app = app();
    let id = add_model(&app, &read_fixture("vmc.fm")).await;
    let (sid, initial) = start(&app, &id).await;
    assert_eq!(var(&initial, "VMC")["status"], "fixed");
    assert_eq!(var(&initial, "VMC")["value"], 1);
    assert_eq!(initial["depth"], 0);
    assert_eq!(initial["vars"].as_array().unwrap().len(), 19 + 1);

    let (s, v) = post(&app, &format!("/sessions/{sid}/decisions"), json!({ "name": "SpeedSensor", "restriction": { "at_least": 1 } })).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    let delta = &v["delta"];
    let vib = delta.as_array().unwrap().iter().find(|x| x["name"] == "Vibration").unwrap();
    assert_eq!(vib["status"], "forced_out");
    assert_eq!(var(&v["view"], "Vibration")["status"], "forced_out");

    let (s, now) = get(&app, &format!("/sessions/{sid}")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(now["view"], v["view"]);
    assert_eq!(now["log"], json!([{ "type": "decide", "name": "SpeedSensor", "restriction": { "at_least": 1 } }]));
    assert_eq!(now["model_id"], id);

    let (s, v) = post(&app, &format!("/sessions/{sid}/undo"), json!({ "k": 1 })).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["view"], initial);
    let (s, v) = post(&app, &format!("/sessions/{sid}/undo"), json!({ "k": 5 })).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_api_error(&v, "out_of_range");
    let (s, v) = post(&app, &format!("/sessions/{sid}/decisions"), json!({ "name": "Nope", "restriction": { "fix": 1 } })).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_api_error(&v, "unknown_name");
}

#[tokio::test]
async fn exclusive_choice_clash_is_409_with_culprit() {
    let app = app();
    let id = add_model(&app, &read_fixture("vmc.fm")).await;
    let (sid, _) = start(&app, &id).await;
    let (s, _) = post(&app, &format!("/sessions/{sid}/constraints"), json!({ "expr_text": "Visual + Audio = 1" })).await;
    assert_eq!(s, StatusCode::OK);
    let (s, before) = post(&app, &format!("/sessions/{sid}/decisions"), json!({ "name": "Visual", "restriction": { "fix": 1 } })).await;
    assert_eq!(s, StatusCode::OK);
    let (s, v) = post(&app, &format!("/sessions/{sid}/decisions"), json!({ "name": "Audio", "restriction": { "fix": 1 } })).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_api_error(&v, "conflict");
    assert_eq!(v["culprit"], "Visual + Audio = 1");
    assert_eq!(v["conflict"]["action"]["name"], "Audio");
    let (_, now) = get(&app, &format!("/sessions/{sid}")).await;
    assert_eq!(now["view"], before["view"]);
    assert_eq!(now["log"].as_array().unwrap().len(), 2);

    let (s, v) = post(&app, &format!("/sessions/{sid}/constraints"), json!({ "expr_text": "Visual + = 1" })).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_api_error(&v, "parse_error");
    let (s, v) = post(&app, &format!("/sessions/{sid}/constraints"), json!({ "expr_text": "Radar = 1" })).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_api_error(&v, "type_error");
}

#[tokio::test]
async fn solutions_run_out_with_204() {
    let app = app();
    let id = add_model(&app, &read_fixture("relation.fm")).await;
    let (sid, _) = start(&app, &id).await;
    let next = format!("/sessions/{sid}/solutions/next");
    let mut seen = BTreeSet::new();
    loop {
        let (s, v) = call(&app, Method::POST, &next, None).await;
        if s == StatusCode::NO_CONTENT {
            assert_eq!(v, Value::Null);
            break;
        }
        assert_eq!(s, StatusCode::OK);
        assert!(seen.insert(v["solution"].to_string()), "repeated {v}");
    }
    assert_eq!(seen.len(), 6);

    post(&app, &format!("/sessions/{sid}/decisions"), json!({ "name": "Sensor", "restriction": { "fix": 4 } })).await;
    let (s, v) = call(&app, Method::POST, &next, None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["solution"], json!({ "Unit": 1, "Sensor": 4, "Actuator": 4, "Actuator.InternalMemory": 1024 }));
    assert_eq!(call(&app, Method::POST, &next, None).await.0, StatusCode::NO_CONTENT);
}

#[tokio::test]
async fn exported_log_replays_to_the_same_view() {
    let app = app();
    let text = read_fixture("vmc.fm");
    let id = add_model(&app, &text).await;
    let (sid, _) = start(&app, &id).await;
    for (name, r) in [("Sensor", json!({ "at_most": 2 })), ("Feedback", json!({ "fix": 1 })), ("InternalMemory.Size", json!({ "in": [[64, 300]] }))] {
        let (s, v) = post(&app, &format!("/sessions/{sid}/decisions"), json!({ "name": name, "restriction": r })).await;
        assert_eq!(s, StatusCode::OK, "{v}");
    }
    post(&app, &format!("/sessions/{sid}/constraints"), json!({ "expr_text": "Audio = 1 or Visual = 1" })).await;
    let (_, log) = get(&app, &format!("/sessions/{sid}/log")).await;
    let (_, original) = get(&app, &format!("/sessions/{sid}")).await;

    // a fresh server
    let other = crate::app();
    let id2 = add_model(&other, &text).await;
    let (s, v) = post(&other, "/sessions", json!({ "model_id": id2, "log": log })).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(v["view"], original["view"]);

    let mut bad = log.as_array().unwrap().clone();
    bad.insert(1, json!({ "type": "decide", "name": "Sensor", "restriction": { "fix": 0 } }));
    let (s, v) = post(&other, "/sessions", json!({ "model_id": id2, "log": bad })).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["index"], 1);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_requests_on_one_session_are_serialized() {
    let app = app();
    let text = read_fixture("vmc.fm");
    let id = add_model(&app, &text).await;
    let (sid, _) = start(&app, &id).await;
    let mut tasks = Vec::new();
    for i in 0..24i64 {
        let app = app.clone();
        let uri = format!("/sessions/{sid}/decisions");
        // half of these contradict each other
        let body = match i % 4 {
            0 => json!({ "name": "Sensor", "restriction": { "at_most": 4 - i / 8 } }),
            1 => json!({ "name": "Sensor", "restriction": { "at_least": 1 + i / 8 } }),
            2 => json!({ "name": "Feedback", "restriction": { "fix": (i / 4) % 2 } }),
            _ => json!({ "name": "SpeedSensor", "restriction": { "at_most": 4 - i / 6 } }),
        };
        tasks.push(tokio::spawn(async move { post(&app, &uri, body).await }));
    }
    let mut depths = Vec::new();
    for t in tasks {
        let (s, v) = t.await.unwrap();
        match s {
            StatusCode::OK => depths.push(v["view"]["depth"].as_u64().unwrap()),
            StatusCode::CONFLICT => assert_api_error(&v, "conflict"),
            other => panic!("{other}: {v}"),
        }
    }
    depths.sort_unstable();
    assert_eq!(depths, (1..=depths.len() as u64).collect::<Vec<_>>());

    let (_, now) = get(&app, &format!("/sessions/{sid}")).await;
    let log: Vec<LogEntry> = serde_json::from_value(now["log"].clone()).unwrap();
    assert_eq!(log.len(), depths.len());
    let mut replayed = Session::replay(&parse(&text).unwrap(), &log).unwrap();
    assert_eq!(serde_json::to_value(replayed.view()).unwrap(), now["view"]);
}

#[tokio::test]
async fn idle_sessions_are_evicted() {
    let state = AppState::new(Config {
        session_ttl: Duration::ZERO,
        ..Config::default()
    });
    let app = router(state.clone());
    let id = add_model(&app, &read_fixture("relation.fm")).await;
    let (sid, _) = start(&app, &id).await;
    assert_eq!(state.session_count(), 1);
    assert_eq!(state.evict_idle(), 1);
    let (s, v) = get(&app, &format!("/sessions/{sid}")).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_api_error(&v, "not_found");

    let kept = AppState::new(Config::default());
    let app = router(kept.clone());
    let id = add_model(&app, &read_fixture("relation.fm")).await;
    start(&app, &id).await;
    assert_eq!(kept.evict_idle(), 0);
}

#[tokio::test]
async fn budget_caps_counting() {
    let app = router(AppState::new(Config {
        time_budget: Duration::ZERO,
        ..Config::default()
    }));
    let id = add_model(&app, &read_fixture("vmc.fm")).await;
    let (s, v) = post(&app, &format!("/models/{id}/analyses"), json!({ "kind": "count", "cap": 1000000 })).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["exact"], false);
    assert!(v["count"].as_i64().unwrap() < 289_000);
}

#[tokio::test]
async fn every_error_body_is_an_api_error() {
    let app = app();
    let (s, v) = get(&app, "/models/missing").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_api_error(&v, "not_found");
    let (s, v) = get(&app, "/no/such/route").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_api_error(&v, "not_found");
    let (s, v) = call(&app, Method::DELETE, "/models", None).await;
    assert_eq!(s, StatusCode::METHOD_NOT_ALLOWED);
    assert_api_error(&v, "method_not_allowed");
    let (s, v) = post(&app, "/models", json!({ "txt": "model M" })).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_api_error(&v, "bad_request");
    let (s, v) = call(&app, Method::POST, "/models", None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_api_error(&v, "bad_request");
    let (s, v) = call(&app, Method::DELETE, "/sessions/missing", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_api_error(&v, "not_found");
}

#[tokio::test]
async fn delete_ends_a_session() {
    let app = app();
    let id = add_model(&app, &read_fixture("relation.fm")).await;
    let (sid, _) = start(&app, &id).await;
    let (s, v) = call(&app, Method::DELETE, &format!("/sessions/{sid}"), None).await;
    assert_eq!((s, v), (StatusCode::NO_CONTENT, Value::Null));
    assert_eq!(get(&app, &format!("/sessions/{sid}")).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn wide_integers_travel_as_strings() {
    let app = app();
    let id = add_model(&app, "model M\nfeature R\n  attr serial in [0..9007199254740999]\n").await;
    let (sid, view) = start(&app, &id).await;
    assert_eq!(var(&view, "R.serial")["domain"], json!([[0, "9007199254740999"]]));
    let (s, v) = post(&app, &format!("/sessions/{sid}/decisions"), json!({ "name": "R.serial", "restriction": { "fix": "9007199254740993" } })).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(var(&v["view"], "R.serial")["value"], "9007199254740993");
}

#[tokio::test]
async fn static_assets_and_cors() {
    let dir = std::env::temp_dir().join(format!("featline-static-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("index.html"), "<!doctype html><title>featline</title>").unwrap();
    let app = router(AppState::new(Config {
        static_dir: Some(dir.clone()),
        cors_origin: Some("http://localhost:5173".into()),
        ..Config::default()
    }));

    let resp = app.clone().oneshot(Request::get("/index.html").body(Body::empty()).unwrap()).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let body = resp.into_body().collect().await.unwrap().to_bytes();
    assert!(body.starts_with(b"<!doctype html>"));
    let (s, v) = get(&app, "/missing.js").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_api_error(&v, "not_found");
    assert_eq!(get(&app, "/health").await, (StatusCode::OK, json!({ "status": "ok" })));

    let req = Request::get("/health")
        .header(header::ORIGIN, "http://localhost:5173")
        .body(Body::empty())
        .unwrap();
    let resp = app.oneshot(req).await.unwrap();
    assert_eq!(resp.headers()[header::ACCESS_CONTROL_ALLOW_ORIGIN], "http://localhost:5173");
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn config_from_environment() {
    let env = |k: &str| match k {
        "FEATLINE_TIME_BUDGET_MS" => Some("250".to_string()),
        "FEATLINE_SESSION_TTL_SECS" => Some("60".to_string()),
        "FEATLINE_CORS_ORIGIN" => Some("http://ui.local".to_string()),
        _ => None,
    };
    let c = Config::from_lookup(env).unwrap();
    assert_eq!(c.time_budget, Duration::from_millis(250));
    assert_eq!(c.session_ttl, Duration::from_secs(60));
    assert_eq!(c.cors_origin.as_deref(), Some("http://ui.local"));
    assert_eq!(c.static_dir, None);
    assert_eq!(Config::from_lookup(|_| None).unwrap(), Config::default());
    assert!(Config::from_lookup(|k| (k == "FEATLINE_TIME_BUDGET_MS").then(|| "soon".to_string())).is_err());
}
