#![allow(dead_code)]

use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;
use trackmate_core::harmony::{ChordLabel, PitchClass};
use trackmate_core::llm::{BackendError, ChatBackend, Message, MockBackend};
use trackmate_core::{encode_wav_pcm16, synth, AudioClip};
use trackmate_service::{router, AppState, BackendKind, ServiceConfig};

pub const SR: u32 = 22_050;
pub const BOUNDARY: &str = "trackmate-test-boundary";

/// A 4-bar pop loop as 16-bit WAV bytes; `variant` changes the tempo so the
/// bytes (and track id) differ.
pub fn wav(variant: u32) -> Vec<u8> {
    let prog = [
        ChordLabel::major(PitchClass::C),
        ChordLabel::minor(PitchClass::A),
        ChordLabel::major(PitchClass::F),
        ChordLabel::major(PitchClass::G),
    ];
    encode_wav_pcm16(&AudioClip::from_mono(synth::pop_loop(100.0 + variant as f64, 4, &prog, SR), SR))
}

pub fn short_wav() -> Vec<u8> {
    encode_wav_pcm16(&AudioClip::from_mono(synth::sine(440.0, 0.5, 0.5, SR), SR))
}

pub fn multipart(filename: &str, bytes: &[u8]) -> Vec<u8> {
    let mut body = format!(
        "--{BOUNDARY}\r\nContent-Disposition: form-data; name=\"file\"; filename=\"{filename}\"\r\n\
Content-Type: application/octet-stream\r\n\r\n"
    )
    .into_bytes();
    body.extend_from_slice(bytes);
    body.extend_from_slice(format!("\r\n--{BOUNDARY}--\r\n").as_bytes());
    body
}

/// Demo mock that can be switched off to simulate a dead backend.
pub struct Switchable {
    pub mock: MockBackend,
    pub down: AtomicBool,
}

impl Switchable {
    pub fn demo() -> Arc<Self> {
        Arc::new(Self { mock: MockBackend::demo(), down: AtomicBool::new(false) })
    }

    pub fn set_down(&self, down: bool) {
        self.down.store(down, Ordering::SeqCst);
    }
}

impl ChatBackend for Switchable {
    fn send(&self, messages: &[Message], temperature: f64) -> Result<String, BackendError> {
        if self.down.load(Ordering::SeqCst) {
            return Err(BackendError::Transport("connection refused".into()));
        }
        self.mock.send(messages, temperature)
    }
}

pub struct Response {
    pub status: StatusCode,
    pub bytes: Vec<u8>,
    pub location: Option<String>,
}

impl Response {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.bytes)))
    }
}

pub struct Harness {
    pub state: AppState,
    pub app: Router,
}

pub fn config(store: &Path) -> ServiceConfig {
    ServiceConfig { store_dir: store.to_path_buf(), workers: 2, ..ServiceConfig::default() }
}

impl Harness {
    pub fn new(config: ServiceConfig, backend: Option<Arc<dyn ChatBackend>>) -> Self {
        let kind = if backend.is_some() { BackendKind::Mock } else { BackendKind::None };
        let state = AppState::with_backend(config, backend, kind).unwrap();
        Self { app: router(state.clone()), state }
    }

    pub async fn send(&self, method: Method, uri: &str, content_type: Option<&str>, body: Vec<u8>) -> Response {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(ct) = content_type {
            req = req.header(header::CONTENT_TYPE, ct);
        }
        let resp = self.app.clone().oneshot(req.body(Body::from(body)).unwrap()).await.unwrap();
        let status = resp.status();
        let location = resp.headers().get(header::LOCATION).map(|v| v.to_str().unwrap().to_owned());
        let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
        Response { status, bytes, location }
    }

    pub async fn get(&self, uri: &str) -> Response {
        self.send(Method::GET, uri, None, Vec::new()).await
    }

    pub async fn post_json(&self, uri: &str, body: Value) -> Response {
        self.send(Method::POST, uri, Some("application/json"), body.to_string().into_bytes()).await
    }

    pub async fn upload(&self, filename: &str, bytes: &[u8]) -> Response {
        let ct = format!("multipart/form-data; boundary={BOUNDARY}");
        self.send(Method::POST, "/tracks", Some(&ct), multipart(filename, bytes)).await
    }
}
