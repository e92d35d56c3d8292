#![allow(dead_code)]

pub mod oracle;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::http::{Method, StatusCode};
use chrono::Duration;
use psn_core::accounts::{Argon2Scheme, TokenSource};
use psn_core::clock::ManualClock;
use psn_core::store::{MemStore, Store};
use psn_server::fixture::Client;
use psn_server::{transport, Api, ApiRequest, ApiResponse, Parts};
use serde_json::Value;

/// `tok-000001`, `tok-000002`, ... so tests can predict every token.
#[derive(Default)]
pub struct CountingTokens(AtomicU64);

impl TokenSource for CountingTokens {
    fn generate(&self) -> String {
        format!("tok-{:06}", self.0.fetch_add(1, Ordering::SeqCst) + 1)
    }
}

/// An in-process API over a memory store with a manual clock.
pub struct Harness {
    pub api: Arc<Api>,
    pub store: Arc<MemStore>,
    pub clock: Arc<ManualClock>,
}

impl Harness {
    pub fn new() -> Self {
        Self::with_page_size(10)
    }

    pub fn with_page_size(page_size: u32) -> Self {
        let store = Arc::new(MemStore::new());
        let clock = Arc::new(ManualClock::fixed());
        let api = Api::new(Parts {
            store: store.clone(),
            clock: clock.clone(),
            tokens: Arc::new(CountingTokens::default()),
            passwords: Arc::new(Argon2Scheme::minimal()),
            session_ttl: Duration::hours(24),
            default_page_size: page_size,
        });
        Self {
            api: Arc::new(api),
            store,
            clock,
        }
    }

    pub fn dump(&self) -> String {
        self.store.dump().to_canonical_json()
    }

    pub fn call(
        &self,
        method: Method,
        path: &str,
        token: Option<&str>,
        body: Option<Value>,
    ) -> ApiResponse {
        self.api.handle(request(method, path, token, body))
    }

    /// Register and sign in; returns (user id, token).
    pub fn user(&self, email: &str, first: &str, last: &str) -> (u64, String) {
        sign_up(&mut &*self.api, email, first, last)
    }
}

pub fn request(method: Method, path: &str, token: Option<&str>, body: Option<Value>) -> ApiRequest {
    let mut r = ApiRequest::new(method, path);
    if let Some(t) = token {
        r = r.bearer(t);
    }
    if let Some(b) = body {
        r = r.json(&b);
    }
    r
}

pub fn sign_up(client: &mut dyn Client, email: &str, first: &str, last: &str) -> (u64, String) {
    let password = "correct horse battery";
    let r = client.send(request(
        Method::POST,
        "/v1/users",
        None,
        Some(serde_json::json!({
            "email": email, "password": password, "first_name": first, "last_name": last
        })),
    ));
    assert_eq!(r.status, StatusCode::CREATED, "{:?}", r.body);
    let id = r.body.unwrap()["user_id"].as_u64().unwrap();
    let r = client.send(request(
        Method::POST,
        "/v1/sessions",
        None,
        Some(serde_json::json!({ "email": email, "password": password })),
    ));
    assert_eq!(r.status, StatusCode::CREATED, "{:?}", r.body);
    let token = r.body.unwrap()["token"].as_str().unwrap().to_string();
    (id, token)
}

/// A real server on an ephemeral port, stopped on drop.
pub struct LiveServer {
    pub base: String,
    pub api: Arc<Api>,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl LiveServer {
    pub fn start(api: Arc<Api>) -> Self {
        let (ready_tx, ready_rx) = std::sync::mpsc::channel();
        let (stop_tx, stop_rx) = tokio::sync::oneshot::channel::<()>();
        let served = api.clone();
        let thread = std::thread::spawn(move || {
            let runtime = tokio::runtime::Builder::new_multi_thread()
                .worker_threads(4)
                .enable_all()
                .build()
                .unwrap();
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
                ready_tx.send(listener.local_addr().unwrap()).unwrap();
                transport::serve(listener, served, async {
                    let _ = stop_rx.await;
                })
                .await
                .unwrap();
            });
        });
        let addr = ready_rx.recv().unwrap();
        Self {
            base: format!("http://{addr}"),
            api,
            stop: Some(stop_tx),
            thread: Some(thread),
        }
    }

    pub fn client(&self) -> HttpClient {
        HttpClient {
            base: self.base.clone(),
            inner: reqwest::blocking::Client::new(),
        }
    }
}

impl Drop for LiveServer {
    fn drop(&mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Sends [`ApiRequest`]s over real HTTP and reads the reply back into an
/// [`ApiResponse`].
pub struct HttpClient {
    pub base: String,
    pub inner: reqwest::blocking::Client,
}

impl Client for HttpClient {
    fn send(&mut self, request: ApiRequest) -> ApiResponse {
        let mut url = format!("{}{}", self.base, request.path);
        if let Some(q) = &request.query {
            url.push('?');
            url.push_str(q);
        }
        let mut builder = self.inner.request(request.method.clone(), url);
        if let Some(a) = &request.authorization {
            builder = builder.header("authorization", a);
        }
        if let Some(ct) = &request.content_type {
            builder = builder.header("content-type", ct);
        }
        let response = builder.body(request.body).send().expect("server reachable");
        let status = response.status();
        let trace_id = response
            .headers()
            .get("x-trace-id")
            .and_then(|v| v.to_str().ok())
            .unwrap_or_default()
            .to_string();
        let allow = response
            .headers()
            .get("allow")
            .and_then(|v| v.to_str().ok())
            .map(|v| v.split(',').map(|m| m.trim().parse().unwrap()).collect())
            .unwrap_or_default();
        let bytes = response.bytes().expect("body readable");
        let body = if bytes.is_empty() {
            None
        } else {
            Some(serde_json::from_slice(&bytes).expect("json body"))
        };
        ApiResponse {
            status,
            body,
            trace_id,
            allow,
        }
    }
}

/// Strip password digests, which are salted and cannot be predicted.
pub fn redacted(store: &dyn Store) -> String {
    let mut dump = store.dump();
    for u in &mut dump.users {
        u.password_digest.clear();
    }
    dump.to_canonical_json()
}
