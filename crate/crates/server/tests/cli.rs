mod common;

use serde_json::Value;

use common::{fixture_path, run_cli, TestServer};

fn seeded(dir: &std::path::Path) -> TestServer {
    let server = TestServer::start(dir);
    let (code, out, err) = server.cli(&["seed", fixture_path().to_str().unwrap()]);
    assert_eq!(code, 0, "{out}{err}");
    server
}

fn fixture_calls() -> Vec<Value> {
    serde_json::from_str(&std::fs::read_to_string(fixture_path()).unwrap()).unwrap()
}

#[test]
fn seed_populates_then_refuses() {
    let dir = tempfile::tempdir().unwrap();
    let server = TestServer::start(dir.path());
    let fixture = fixture_path();
    let (code, out, err) = server.cli(&["seed", fixture.to_str().unwrap()]);
    assert_eq!(code, 0, "{out}{err}");
    let (code, _, err) = server.cli(&["seed", fixture.to_str().unwrap()]);
    assert_eq!(code, 4, "{err}");
    assert!(err.contains("non-empty"));
}


#[test]
fn ticket_open_prints_the_new_id() {
    let dir = tempfile::tempdir().unwrap();
    let server = seeded(dir.path());
    let (code, out, err) = server.cli(&[
        "ticket", "open", "--category", "hardware", "--issue", "fan noise", "--username", "ravi",
        "--asset", "AST000001", "--risk", "low",
    ]);
    assert_eq!(code, 0, "{err}");
    // the fixture opened 25 hardware tickets
    assert_eq!(out.trim(), "hrd000026");
}

#[test]
fn schedule_inside_the_normal_window_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let server = TestServer::start(dir.path());
    let ok = |args: &[&str]| {
        let (code, out, err) = server.cli(args);
        assert_eq!(code, 0, "{args:?}: {out}{err}");
        out.trim().to_string()
    };
    let asof = ["--as-of", "2016-03-01T09:00:00Z"];
    let project = ok(&[&asof[..], &["project", "create", "--name", "p", "--organization", "o"]].concat());
    let change = ok(&[
        &asof[..],
        &["change", "submit", "--project", &project, "--target", "mail", "--kind", "software", "--downtime-minutes", "10",
          "--risk-note", "r", "--alternate-solution", "a", "--roi", "j", "--department", "Finance"],
    ]
    .concat());
    ok(&[&asof[..], &["change", "cab", &change, "--head-signoff", "head"]].concat());
    let (code, _, err) = server.cli(&[&asof[..], &["change", "schedule", &change, "--at", "2016-03-03T09:00:00Z"]].concat());
    assert_eq!(code, 4, "{err}");
    assert!(err.contains("72"), "{err}");
    ok(&[&asof[..], &["change", "schedule", &change, "--at", "2016-03-04T09:00:00Z"]].concat());
}

#[test]
fn json_output_is_the_api_body() {
    let dir = tempfile::tempdir().unwrap();
    let server = seeded(dir.path());
    let (code, out, _) = server.cli(&["--json", "vendor", "report", "ven000001", "--quarter", "2016Q3"]);
    assert_eq!(code, 0);
    let via_cli: Value = serde_json::from_str(out.trim()).unwrap();
    let client = itil_forge_server::client::Client::new(&server.base, Some(common::TOKEN.into())).unwrap();
    let via_api = client.get("/vendors/ven000001/reports?period=2016Q3").unwrap();
    assert_eq!(Some(&via_cli), via_api.json());
    assert_eq!(via_cli["total_downtime_minutes"], 255.0);
}

#[test]
fn renewal_matches_an_oracle_over_the_fixture() {
    let calls = fixture_calls();
    let mut scores = Vec::new();
    let (mut opened, mut closed) = (std::collections::BTreeSet::new(), std::collections::BTreeSet::new());
    for c in &calls {
        let path = c["path"].as_str().unwrap();
        let body = &c["body"];
        if path == "/vendors/ven000001/surveys" && body["period"].as_str().unwrap().starts_with("2016") {
            scores.extend(body["scores"].as_array().unwrap().iter().map(|v| v.as_i64().unwrap()));
        }
        let parts: Vec<&str> = path.split('/').collect();
        if path == "/tickets" {
            opened.insert(opened.len());
        } else if parts.len() == 4 && parts[1] == "tickets" && parts[3] == "close" {
            closed.insert(parts[2].to_string());
        }
    }
    let mean = scores.iter().sum::<i64>() as f64 / scores.len() as f64;
    let unresolved = 100.0 * (opened.len() - closed.len()) as f64 / opened.len() as f64;
    let (outcome, rule) = if unresolved > 1.0 {
        ("Terminate", "R1")
    } else if mean < 4.0 || (unresolved > 0.5 && unresolved <= 1.0) {
        ("ReviewRequired", "R2")
    } else {
        ("Renew", "R3")
    };

    let dir = tempfile::tempdir().unwrap();
    let server = seeded(dir.path());
    let (code, out, err) = server.cli(&["--json", "vendor", "renewal", "ven000001", "--year", "2016"]);
    assert_eq!(code, 0, "{err}");
    let got: Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(got["outcome"], outcome);
    assert_eq!(got["reasons"][0], rule);
    assert!((got["survey_mean"].as_f64().unwrap() - mean).abs() < 1e-9);
    assert!((got["unresolved_pct"].as_f64().unwrap() - unresolved).abs() < 1e-9);
}

#[test]
fn seeded_log_replays_to_the_same_state() {
    let dir = tempfile::tempdir().unwrap();
    let live = {
        let server = seeded(dir.path());
        server.state.state_json()
    };
    let (code, out, err) = run_cli(&[
        "itil-forge".into(), "verify-log".into(), "--data-dir".into(), dir.path().display().to_string(),
    ]);
    assert_eq!(code, 0, "{out}{err}");
    let reopened = TestServer::start(dir.path());
    assert_eq!(reopened.state.state_json(), live);
}

#[test]
fn error_classes_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let server = TestServer::start(dir.path());
    let (code, _, _) = server.cli(&["ticket", "show", "apl999999"]);
    assert_eq!(code, 3);
    let (code, _, _) = run_cli(&["itil-forge".into(), "--server".into(), server.base.clone(), "--token".into(), "bad".into(), "state".into()]);
    assert_eq!(code, 5);

    // nothing listens on a port we just released
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let (code, _, err) = run_cli(&["itil-forge".into(), "--server".into(), format!("http://127.0.0.1:{port}"), "status".into()]);
    assert_eq!(code, 2, "{err}");
}
