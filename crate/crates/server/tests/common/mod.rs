#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use itil_forge::notifications::MemorySink;
use itil_forge_server::api::{self, AppState};
use itil_forge_server::cli;
use itil_forge_server::config::{ServiceConfig, SinkKind};

pub const TOKEN: &str = "test-token";

pub fn fixture_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/demo.json")
}

pub fn config(dir: &Path) -> ServiceConfig {
    let mut c = ServiceConfig::default();
    c.listen = "127.0.0.1:0".into();
    c.data_dir = dir.to_path_buf();
    c.tokens.insert(TOKEN.into(), "it-admin".into());
    c.notifications.sink = SinkKind::Memory;
    c.validate().unwrap();
    c
}

/// A server on an ephemeral port, driven by its own runtime thread.
pub struct TestServer {
    pub base: String,
    pub state: Arc<AppState>,
    pub sink: Arc<MemorySink>,
    pub config: ServiceConfig,
    shutdown: Option<std::sync::mpsc::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl TestServer {
    pub fn start(dir: &Path) -> Self {
        let config = config(dir);
        let sink = Arc::new(MemorySink::default());
        let state = Arc::new(AppState::open(&config, sink.clone()).unwrap());
        let (addr_tx, addr_rx) = std::sync::mpsc::channel();
        let (stop_tx, stop_rx) = std::sync::mpsc::channel::<()>();
        let (cfg, st) = (config.clone(), state.clone());
        let thread = std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .worker_threads(2)
                .enable_all()
                .build()
                .unwrap();
            rt.block_on(async move {
                let (addr, handle) = api::spawn(&cfg, st).await.unwrap();
                addr_tx.send(addr).unwrap();
                tokio::task::spawn_blocking(move || {
                    let _ = stop_rx.recv();
                })
                .await
                .unwrap();
                handle.abort();
            });
        });
        let addr = addr_rx.recv().unwrap();
        Self {
            base: format!("http://{addr}"),
            state,
            sink,
            config,
            shutdown: Some(stop_tx),
            thread: Some(thread),
        }
    }

    /// Runs the CLI against this server; returns (exit code, stdout, stderr).
    pub fn cli(&self, args: &[&str]) -> (i32, String, String) {
        let mut argv = vec!["itil-forge".to_string(), "--server".into(), self.base.clone(), "--token".into(), TOKEN.into()];
        argv.extend(args.iter().map(|s| s.to_string()));
        run_cli(&argv)
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        drop(self.shutdown.take());
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

pub fn run_cli(argv: &[String]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}
