//! Runs the HTTP API in-process on an ephemeral port and drives it with the
//! blocking client, the same way the CLI does.

use std::sync::Arc;

use itil_forge::notifications::MemorySink;
use itil_forge_server::api::{self, AppState};
use itil_forge_server::client::{Client, ClientError};
use itil_forge_server::config::ServiceConfig;
use serde_json::json;

fn main() {
    let dir = std::env::temp_dir().join(format!("itil-forge-embedded-{}", std::process::id()));
    let config = ServiceConfig::from_toml(&format!(
        "listen = \"127.0.0.1:0\"\ndata_dir = {:?}\n[tokens]\n\"demo-token\" = \"it-manager\"\n[notifications]\nsink = \"memory\"\n",
        dir.display().to_string()
    ))
    .expect("valid config");
    config.validate().expect("valid config");

    let sink = Arc::new(MemorySink::default());
    let state = Arc::new(AppState::open(&config, sink.clone()).expect("open data dir"));
    let (addr_tx, addr_rx) = std::sync::mpsc::channel();
    let server_state = state.clone();
    let server_config = config.clone();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().expect("runtime");
        rt.block_on(async move {
            let (addr, handle) = api::spawn(&server_config, server_state).await.expect("bind");
            addr_tx.send(addr).unwrap();
            let _ = handle.await;
        });
    });
    let base = format!("http://{}", addr_rx.recv().unwrap());
    let client = Client::new(&base, Some("demo-token".into())).unwrap();

    println!("status: {}", client.get("/status").unwrap().render());
    let post = |path: &str, body| client.post(path, &body).map(|b| b.json().cloned().unwrap_or_default());
    post("/vendors", json!({ "name": "Acme Systems", "contact": "+91-80-5550100", "categories": { "Servers": true },
                             "at": "2016-01-04T09:00:00Z" })).unwrap();
    post("/assets", json!({ "device": "PowerEdge R730", "category": "Servers", "vendor_id": "ven000001",
                            "location": "DC-1", "purchase_date": "2016-01-04", "warranty_months": 36 })).unwrap();
    for category in ["Application", "Hardware"] {
        let t = post("/tickets", json!({ "category": category, "issue": "slow logins", "username": "asha",
                                         "asset_tag": "AST000001", "risk_level": "High", "scope": "SingleUser" })).unwrap();
        println!("opened {}", t["id"]);
    }
    match post("/tickets/apl000001/resolve", json!({ "resolution": "x", "permanence": "Permanent" })) {
        Err(ClientError::Api { status, body }) => println!("resolve before analysis: HTTP {status} {}", body.render()),
        other => println!("unexpected: {other:?}"),
    }
    let queue = client.get("/tickets?view=queue").unwrap();
    let ids: Vec<_> = queue.json().and_then(|q| q.as_array()).into_iter().flatten().map(|t| t["id"].to_string()).collect();
    println!("queue: {}", ids.join(", "));
    println!("events logged: {}", state.event_count());
    std::fs::remove_dir_all(&dir).ok();
}
