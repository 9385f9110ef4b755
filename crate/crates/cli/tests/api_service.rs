use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use qmonty_cli::api::{router, Store, DEFAULT_IDLE_TIMEOUT};

fn app() -> Router {
    router(Arc::new(Store::new(DEFAULT_IDLE_TIMEOUT)))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let request = Request::builder().method(method).uri(uri);
    let request = match body {
        Some(body) => request
            .header("content-type", "application/json")
            .body(Body::from(body.to_string())),
        None => request.body(Body::empty()),
    }
    .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, value)
}

async fn create(app: &Router, body: Value) -> String {
    let (status, v) = call(app, "POST", "/api/v1/sessions", Some(body)).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    v["session_id"].as_str().unwrap().to_string()
}

async fn door(app: &Router, id: &str, body: Value) -> (StatusCode, Value) {
    call(app, "POST", &format!("/api/v1/sessions/{id}/door"), Some(body)).await
}

async fn final_door(app: &Router, id: &str, body: Value) -> (StatusCode, Value) {
    call(app, "POST", &format!("/api/v1/sessions/{id}/final"), Some(body)).await
}

async fn hint(app: &Router, id: &str, mode: &str) -> (StatusCode, Value) {
    call(app, "GET", &format!("/api/v1/sessions/{id}/hint?mode={mode}"), None).await
}

fn vector(v: &Value) -> [(f64, f64); 3] {
    let a = v.as_array().unwrap();
    std::array::from_fn(|k| (a[k][0].as_f64().unwrap(), a[k][1].as_f64().unwrap()))
}

fn real(x: f64, y: f64, z: f64) -> Value {
    let n = (x * x + y * y + z * z).sqrt();
    json!([[x / n, 0.0], [y / n, 0.0], [z / n, 0.0]])
}

fn axis(k: usize) -> Value {
    let mut v = [0.0; 3];
    v[k] = 1.0;
    real(v[0], v[1], v[2])
}

fn diagonal() -> Value {
    real(1.0, 1.0, 1.0)
}

/// |⟨a|b⟩|
fn overlap(a: [(f64, f64); 3], b: [(f64, f64); 3]) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for k in 0..3 {
        re += a[k].0 * b[k].0 + a[k].1 * b[k].1;
        im += a[k].0 * b[k].1 - a[k].1 * b[k].0;
    }
    (re * re + im * im).sqrt()
}

fn assert_error(status: StatusCode, v: &Value, want: StatusCode, code: &str) {
    assert_eq!(status, want, "{v}");
    assert_eq!(v["code"], code, "{v}");
    assert!(v["message"].as_str().is_some_and(|m| !m.is_empty()));
}

#[tokio::test]
async fn creation_returns_a_prepared_session() {
    let app = app();
    let (status, v) = call(
        &app,
        "POST",
        "/api/v1/sessions",
        Some(json!({"host": {"kind": "haar"}, "rules": {"variant": "strict"}})),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED);
    let id = v["session_id"].as_str().unwrap();
    assert_eq!(v["stage"], "prepared");
    assert_eq!(v["hint_modes"], json!(["stick", "switch"]));
    assert!(v["transcript"].is_null());
    let (status, again) = call(&app, "GET", &format!("/api/v1/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(again["session_id"], id);

    let other = create(&app, json!({"host": {"kind": "haar"}})).await;
    assert_ne!(other, id);
}

#[tokio::test]
async fn axes_door_shows_the_prize_as_the_zero_component() {
    let app = app();
    let s = 0.5f64.sqrt();
    for seed in 0..12 {
        let id = create(&app, json!({"host": {"kind": "axes"}, "seed": seed})).await;
        let (status, v) = door(&app, &id, json!({"phi": diagonal()})).await;
        assert_eq!(status, StatusCode::OK, "{v}");
        assert_eq!(v["event"], "opened");
        let chi = vector(&v["chi"]);
        let zero = (0..3).find(|&k| chi[k].0.abs() < 1e-12 && chi[k].1.abs() < 1e-12).unwrap();
        let rest: Vec<f64> = (0..3).filter(|&k| k != zero).map(|k| chi[k].0).collect();
        assert!((rest[0] - s).abs() < 1e-12 && (rest[1] + s).abs() < 1e-12, "{chi:?}");

        let (status, v) = final_door(&app, &id, json!({"mode": "cheat_finite"})).await;
        assert_eq!(status, StatusCode::OK, "{v}");
        assert_eq!(v["won"], true);
        let prize = vector(&v["transcript"]["rounds"][0]["prepared"]);
        assert!((overlap(prize, vector(&axis(zero))) - 1.0).abs() < 1e-12);
    }
}

#[tokio::test]
async fn switch_hint_completes_the_basis() {
    let app = app();
    let mut found = false;
    for seed in 0..50 {
        let id = create(&app, json!({"host": {"kind": "axes"}, "seed": seed})).await;
        let (_, v) = door(&app, &id, json!({"phi": axis(0)})).await;
        let chi = vector(&v["chi"]);
        if overlap(chi, vector(&axis(1))) < 1.0 - 1e-12 {
            continue;
        }
        let (status, h) = hint(&app, &id, "switch").await;
        assert_eq!(status, StatusCode::OK, "{h}");
        assert_eq!(h["mode"], "switch");
        assert!((overlap(vector(&h["vector"]), vector(&axis(2))) - 1.0).abs() < 1e-12);
        // A hint does not commit anything.
        let (_, v) = call(&app, "GET", &format!("/api/v1/sessions/{id}"), None).await;
        assert_eq!(v["stage"], "opened");
        found = true;
        break;
    }
    assert!(found, "no game with q = e2 in 50 seeds");
}

#[tokio::test]
async fn real_cheat_hint_reads_the_prize_off_the_door() {
    let app = app();
    let id = create(&app, json!({"host": {"kind": "real_vector"}, "seed": 5})).await;
    for _ in 0..20 {
        let s = 0.5f64.sqrt();
        let (status, v) = door(&app, &id, json!({"phi": [[s, 0.0], [0.0, s], [0.0, 0.0]]})).await;
        assert_eq!(status, StatusCode::OK, "{v}");
        let chi = vector(&v["chi"]);
        let (_, h) = hint(&app, &id, "cheat_real").await;
        let want = [(-chi[2].0, 0.0), (chi[2].1, 0.0), (chi[0].0, 0.0)];
        let norm = want.iter().map(|z| z.0 * z.0).sum::<f64>().sqrt();
        let want = want.map(|z| (z.0 / norm, 0.0));
        assert!((overlap(vector(&h["vector"]), want) - 1.0).abs() < 1e-12);
        let (_, v) = final_door(&app, &id, json!({"mode": "cheat_real"})).await;
        assert_eq!(v["won"], true);
    }
    let (_, v) = call(&app, "GET", &format!("/api/v1/sessions/{id}"), None).await;
    assert_eq!(v["stats"]["games"], 20);
    assert_eq!(v["stats"]["wins"], 20);
    assert_eq!(v["by_mode"]["cheat_real"]["analytic"], 1.0);
    assert_eq!(v["round"], 20);
}

#[tokio::test]
async fn cheat_hints_need_a_disclosed_matching_host() {
    let app = app();
    let id = create(&app, json!({"host": {"kind": "haar"}})).await;
    door(&app, &id, json!({"phi": diagonal()})).await;
    let (status, v) = hint(&app, &id, "cheat_finite").await;
    assert_error(status, &v, StatusCode::BAD_REQUEST, "invalid_input");
    let (status, v) = final_door(&app, &id, json!({"mode": "cheat_real"})).await;
    assert_error(status, &v, StatusCode::BAD_REQUEST, "invalid_input");

    let id = create(&app, json!({"host": {"kind": "real_vector"}, "disclose_host": false})).await;
    let (_, v) = door(&app, &id, json!({"phi": diagonal()})).await;
    assert!(v["host"].is_null() && v["host_label"].is_null());
    assert_eq!(v["hint_modes"], json!(["stick", "switch"]));
    let (status, v) = hint(&app, &id, "cheat_real").await;
    assert_error(status, &v, StatusCode::BAD_REQUEST, "invalid_input");
    let (status, _) = hint(&app, &id, "stick").await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn stages_are_enforced() {
    let app = app();
    let id = create(&app, json!({"host": {"kind": "haar"}})).await;
    let (status, v) = hint(&app, &id, "switch").await;
    assert_error(status, &v, StatusCode::CONFLICT, "wrong_stage");
    let (status, v) = final_door(&app, &id, json!({"mode": "switch"})).await;
    assert_error(status, &v, StatusCode::CONFLICT, "wrong_stage");
    door(&app, &id, json!({"phi": diagonal()})).await;
    let (status, v) = door(&app, &id, json!({"phi": diagonal()})).await;
    assert_error(status, &v, StatusCode::CONFLICT, "wrong_stage");
}

#[tokio::test]
async fn rule_violations_are_conflicts() {
    let app = app();
    let id = create(&app, json!({"host": {"kind": "haar"}})).await;
    let (_, v) = door(&app, &id, json!({"phi": diagonal()})).await;
    let chi = v["chi"].clone();
    let (status, v) = final_door(&app, &id, json!({"vector": chi})).await;
    assert_error(status, &v, StatusCode::CONFLICT, "rule_violation");
    // Still open: the violation changed nothing.
    let (status, v) = final_door(&app, &id, json!({"mode": "stick"})).await;
    assert_eq!(status, StatusCode::OK, "{v}");

    let id = create(&app, json!({"host": {"kind": "haar"}, "rules": {"variant": "triple_choice"}})).await;
    let (status, v) = door(&app, &id, json!({"doors": [axis(0), axis(1), axis(1)]})).await;
    assert_error(status, &v, StatusCode::BAD_REQUEST, "invalid_input");

    // A host that ignores its notepad is caught by the referee under strict rules.
    let id = create(&app, json!({"host": {"kind": "ignore_notepad"}, "seed": 1})).await;
    let mut caught = 0;
    for _ in 0..200 {
        let (status, v) = door(&app, &id, json!({"phi": diagonal()})).await;
        if status == StatusCode::OK {
            final_door(&app, &id, json!({"mode": "switch"})).await;
            continue;
        }
        assert_error(status, &v, StatusCode::CONFLICT, "rule_violation");
        assert_eq!(v["detail"], "host_violation");
        caught += 1;
    }
    assert!(caught > 0);
    let (_, v) = call(&app, "GET", &format!("/api/v1/sessions/{id}"), None).await;
    assert!(v["by_mode"]["aborted"]["games"].as_u64().unwrap() >= caught);
}

#[tokio::test]
async fn bad_input_and_unknown_sessions() {
    let app = app();
    let (status, v) = call(&app, "POST", "/api/v1/sessions", Some(json!({"host": {"kind": "nope"}}))).await;
    assert_error(status, &v, StatusCode::BAD_REQUEST, "invalid_input");
    let (status, v) = call(&app, "POST", "/api/v1/sessions", Some(json!({}))).await;
    assert_error(status, &v, StatusCode::BAD_REQUEST, "invalid_input");

    let id = create(&app, json!({"host": {"kind": "haar"}})).await;
    let (status, v) = door(&app, &id, json!({"phi": [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]})).await;
    assert_error(status, &v, StatusCode::BAD_REQUEST, "invalid_input");
    let (status, v) = door(&app, &id, json!({})).await;
    assert_error(status, &v, StatusCode::BAD_REQUEST, "invalid_input");
    let (status, v) = hint(&app, &id, "psychic").await;
    assert_error(status, &v, StatusCode::BAD_REQUEST, "invalid_input");
    door(&app, &id, json!({"phi": diagonal()})).await;
    let (status, v) = final_door(&app, &id, json!({"mode": "switch", "vector": diagonal()})).await;
    assert_error(status, &v, StatusCode::BAD_REQUEST, "invalid_input");

    let (status, v) = call(&app, "GET", "/api/v1/sessions/missing", None).await;
    assert_error(status, &v, StatusCode::NOT_FOUND, "not_found");
    let (status, _) = call(&app, "DELETE", &format!("/api/v1/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    let (status, v) = door(&app, &id, json!({"phi": diagonal()})).await;
    assert_error(status, &v, StatusCode::NOT_FOUND, "not_found");
}

#[tokio::test]
async fn announced_doors_round_trip_exactly() {
    let app = app();
    let id = create(&app, json!({"host": {"kind": "haar"}, "seed": 9})).await;
    let (_, v) = door(&app, &id, json!({"phi": [[0.6, 0.0], [0.0, 0.8], [0.0, 0.0]]})).await;
    let chi = v["chi"].clone();
    let (_, v) = final_door(&app, &id, json!({"mode": "switch"})).await;
    let recorded = &v["transcript"]["rounds"][0]["announced"]["chi"];
    assert_eq!(&chi, recorded);
    // Every double survives text exactly.
    for x in chi.as_array().unwrap().iter().flat_map(|z| z.as_array().unwrap()) {
        let f = x.as_f64().unwrap();
        assert_eq!(f.to_string().parse::<f64>().unwrap().to_bits(), f.to_bits());
    }
    let door_pairs = vector(&chi);
    assert!(door_pairs.iter().any(|z| z.0.to_string().len() > 10), "{chi}");

    let id = create(
        &app,
        json!({"host": {"kind": "haar"}, "rules": {"announce_precision_digits": 3}, "seed": 9}),
    )
    .await;
    let (_, v) = door(&app, &id, json!({"phi": diagonal()})).await;
    for (re, im) in vector(&v["chi"]) {
        for x in [re, im] {
            assert_eq!(format!("{x:.2e}").parse::<f64>().unwrap(), x);
        }
    }
    let (status, v) = final_door(&app, &id, json!({"mode": "switch"})).await;
    assert_eq!(status, StatusCode::OK, "{v}");
}

#[tokio::test]
async fn rule_variants_through_the_api() {
    let app = app();

    let id = create(
        &app,
        json!({"host": {"kind": "entangled", "policy": "transpose_of_player_triple"}, "rules": {"variant": "triple_choice"}}),
    )
    .await;
    let (status, v) = door(&app, &id, json!({"phi": diagonal()})).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["doors"].as_array().unwrap().len(), 3);
    let chi = vector(&v["chi"]);
    let doors: Vec<_> = v["doors"].as_array().unwrap().iter().map(vector).collect();
    assert!(overlap(chi, doors[0]) < 1e-9);
    assert!(doors[1..].iter().any(|d| (overlap(chi, *d) - 1.0).abs() < 1e-9));
    let (status, _) = final_door(&app, &id, json!({"mode": "switch"})).await;
    assert_eq!(status, StatusCode::OK);

    let id = create(&app, json!({"host": {"kind": "ignore_notepad"}, "rules": {"variant": "reveal_wins"}, "seed": 2})).await;
    let mut revealed = false;
    for _ in 0..100 {
        let (status, v) = door(&app, &id, json!({"phi": diagonal()})).await;
        assert_eq!(status, StatusCode::OK, "{v}");
        if v["event"] == "revealed_prize" {
            assert_eq!(v["won"], true);
            assert_eq!(v["stage"], "finished");
            revealed = true;
            break;
        }
        final_door(&app, &id, json!({"mode": "switch"})).await;
    }
    assert!(revealed);

    let id = create(
        &app,
        json!({"host": {"kind": "ignore_notepad"}, "rules": {"variant": "restart_on_reveal"}, "seed": 2}),
    )
    .await;
    let mut restarted = false;
    for _ in 0..100 {
        let (_, v) = door(&app, &id, json!({"phi": diagonal()})).await;
        if v["event"] == "restarted" {
            assert_eq!(v["stage"], "prepared");
            assert!(v["restarts"].as_u64().unwrap() >= 1);
            restarted = true;
            break;
        }
        final_door(&app, &id, json!({"mode": "switch"})).await;
    }
    assert!(restarted);

    let id = create(&app, json!({"host": {"kind": "haar"}, "rules": {"variant": "open_players_door"}})).await;
    let (status, v) = door(&app, &id, json!({})).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert!(v["phi"].is_null());
    let (status, _) = final_door(&app, &id, json!({"mode": "stick"})).await;
    assert_eq!(status, StatusCode::OK);

    let id = create(
        &app,
        json!({"host": {"kind": "complete_vn", "prize": axis(0)}, "rules": {"variant": "complete_vn"}}),
    )
    .await;
    let (status, v) = door(&app, &id, json!({"phi": axis(1)})).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(hint(&app, &id, "cheat_finite").await.0, StatusCode::OK);
    let (status, _) = final_door(&app, &id, json!({"mode": "cheat_finite"})).await;
    assert_eq!(status, StatusCode::OK);

    let id = create(&app, json!({"host": {"kind": "haar"}, "rules": {"variant": "touch_allowed"}})).await;
    door(&app, &id, json!({"phi": diagonal()})).await;
    let (_, v) = final_door(&app, &id, json!({"mode": "stick"})).await;
    assert_eq!(v["transcript"]["rounds"][0]["touched"], true);
}

#[tokio::test]
async fn strategies_catalog_lists_hosts_and_helpers() {
    let app = app();
    let (status, v) = call(&app, "GET", "/api/v1/strategies", None).await;
    assert_eq!(status, StatusCode::OK);
    let hosts = v["hosts"].as_array().unwrap();
    let modes = |kind: &str| {
        hosts
            .iter()
            .find(|h| h["kind"] == kind)
            .map(|h| h["hint_modes"].clone())
            .unwrap()
    };
    assert_eq!(modes("haar"), json!(["stick", "switch"]));
    assert_eq!(modes("real_vector"), json!(["stick", "switch", "cheat_real"]));
    assert_eq!(modes("axes"), json!(["stick", "switch", "cheat_finite"]));
    assert_eq!(v["variants"].as_array().unwrap().len(), 7);
    assert_eq!(v["presets"].as_array().unwrap().len(), 5);
    // Every example is a valid creation body.
    for h in hosts {
        create(&app, json!({"host": h["example"]})).await;
    }
}

#[tokio::test]
async fn sessions_expire_when_idle() {
    let app = router(Arc::new(Store::new(Duration::from_millis(50))));
    let id = create(&app, json!({"host": {"kind": "haar"}})).await;
    let (status, _) = call(&app, "GET", &format!("/api/v1/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    tokio::time::sleep(Duration::from_millis(120)).await;
    let (status, v) = call(&app, "GET", &format!("/api/v1/sessions/{id}"), None).await;
    assert_error(status, &v, StatusCode::NOT_FOUND, "not_found");

    let store = Store::new(Duration::from_millis(20));
    store.create(qmonty::strategies::HostStrategy::Haar, Default::default(), true, None).unwrap();
    assert_eq!(store.len(), 1);
    std::thread::sleep(Duration::from_millis(40));
    assert_eq!(store.purge_expired(), 1);
    assert!(store.is_empty());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_requests_on_one_session_are_serialized() {
    let app = app();
    let id = create(&app, json!({"host": {"kind": "haar"}})).await;
    let tasks: Vec<_> = (0..16)
        .map(|_| {
            let (app, id) = (app.clone(), id.clone());
            tokio::spawn(async move { door(&app, &id, json!({"phi": diagonal()})).await.0 })
        })
        .collect();
    let mut ok = 0;
    for t in tasks {
        match t.await.unwrap() {
            StatusCode::OK => ok += 1,
            StatusCode::CONFLICT => {}
            other => panic!("unexpected status {other}"),
        }
    }
    assert_eq!(ok, 1);
}

#[tokio::test]
async fn scoreboard_and_rounds() {
    let app = app();
    let id = create(&app, json!({"host": {"kind": "haar"}, "seed": 3})).await;
    for mode in ["stick", "switch", "switch"] {
        door(&app, &id, json!({"phi": diagonal()})).await;
        final_door(&app, &id, json!({"mode": mode})).await;
    }
    let (_, v) = call(&app, "GET", &format!("/api/v1/sessions/{id}"), None).await;
    assert_eq!(v["round"], 3);
    assert_eq!(v["stats"]["games"], 3);
    assert_eq!(v["by_mode"]["switch"]["games"], 2);
    assert!((v["by_mode"]["switch"]["analytic"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-15);
    assert!((v["by_mode"]["stick"]["analytic"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    let (_, board) = call(&app, "GET", "/api/v1/scoreboard", None).await;
    let entries = board.as_array().unwrap();
    assert_eq!(entries.len(), 2);
    assert!(entries.iter().all(|e| e["host"] == "haar" && e["rules"] == "strict"));
}

/// A scripted client: 10⁵ fresh sessions, each played once with switch.
#[tokio::test]
async fn scripted_switch_client_reproduces_two_thirds() {
    let app = app();
    let n: u64 = 100_000;
    for seed in 0..n {
        let id = create(&app, json!({"host": {"kind": "haar"}, "rules": {"variant": "strict"}, "seed": seed})).await;
        let (status, _) = door(&app, &id, json!({"phi": diagonal()})).await;
        assert_eq!(status, StatusCode::OK);
        let (status, _) = final_door(&app, &id, json!({"mode": "switch"})).await;
        assert_eq!(status, StatusCode::OK);
        call(&app, "DELETE", &format!("/api/v1/sessions/{id}"), None).await;
    }
    let (_, board) = call(&app, "GET", "/api/v1/scoreboard", None).await;
    let entry = &board.as_array().unwrap()[0];
    assert_eq!(entry["mode"], "switch");
    assert_eq!(entry["games"], n);
    let rate = entry["rate"].as_f64().unwrap();
    let sigma = (2.0 / 9.0 / n as f64).sqrt();
    assert!((rate - 2.0 / 3.0).abs() <= 4.0 * sigma, "rate {rate}");
}
