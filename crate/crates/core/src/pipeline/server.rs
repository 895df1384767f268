//! Local HTTP service for the review step: lists bundles, serves their
//! images and records selections.
//!
//! ```text
//! GET  /api/rois              [{roi_id, candidate_count, reviewed, selected}]
//! GET  /api/roi/{id}          bundle descriptor
//! GET  /api/selections        {roi_id: entry, ...}
//! GET  /api/selection/{id}    one entry
//! POST /api/selection/{id}    {candidate, contour?, reviewer} -> stored entry
//! GET  /files/{id}/{name}     bundle file (PNG or JSON)
//! GET  /...                   static UI assets
//! ```
//!
//! Errors are JSON `{"error": code, "message": text}`.

use std::fs;
use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::Deserialize;
use serde_json::json;
use tiny_http::{Header, Method, Request, Response, Server};

use super::commands::{now_timestamp, review_status};
use crate::error::{Error, Result};
use crate::segmentation::{BundleDescriptor, SelectionEntry, SelectionManifest, BUNDLE_FILE};

const PLACEHOLDER: &str = "<!doctype html><title>mammocad review</title>\
<p>The review UI is not installed. The JSON API is available under <code>/api/</code>.</p>\n";

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SelectionBody {
    candidate: usize,
    #[serde(default)]
    contour: Option<Vec<[i64; 2]>>,
    reviewer: String,
}

struct State {
    bundles: PathBuf,
    selections_path: PathBuf,
    ui_dir: Option<PathBuf>,
    selections: Mutex<SelectionManifest>,
}

pub struct ReviewServer {
    server: Arc<Server>,
    state: State,
}

/// Stops a running [`ReviewServer`] from another thread.
#[derive(Clone)]
pub struct StopHandle(Arc<Server>);

impl StopHandle {
    pub fn stop(&self) {
        self.0.unblock();
    }
}

type Reply = Response<std::io::Cursor<Vec<u8>>>;

fn content_type(value: &str) -> Header {
    Header::from_bytes("Content-Type", value).expect("static header")
}

fn json_reply(status: u16, value: &serde_json::Value) -> Reply {
    Response::from_data(serde_json::to_vec(value).expect("json serializes"))
        .with_status_code(status)
        .with_header(content_type("application/json"))
}

fn error_reply(status: u16, err: &Error) -> Reply {
    json_reply(status, &json!({ "error": err.code(), "message": err.to_string() }))
}

fn status_for(err: &Error) -> u16 {
    match err {
        Error::Io(_) => 500,
        _ => 400,
    }
}

fn not_found(what: &str) -> Reply {
    json_reply(404, &json!({ "error": "not-found", "message": what }))
}

/// Joins `rel` under `root`, refusing absolute paths and `..`.
fn safe_join(root: &Path, rel: &str) -> Option<PathBuf> {
    let rel = Path::new(rel);
    if rel.components().all(|c| matches!(c, Component::Normal(_))) {
        Some(root.join(rel))
    } else {
        None
    }
}

fn mime(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("png") => "image/png",
        Some("json") => "application/json",
        Some("html") => "text/html; charset=utf-8",
        Some("js") | Some("mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("svg") => "image/svg+xml",
        _ => "application/octet-stream",
    }
}

fn file_reply(path: &Path) -> Reply {
    match fs::read(path) {
        Ok(bytes) => Response::from_data(bytes).with_header(content_type(mime(path))),
        Err(_) => not_found(&path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()),
    }
}

impl ReviewServer {
    /// Binds `addr` (port 0 picks a free port). A busy port is a `bind` error.
    pub fn bind(
        addr: &str,
        bundles: &Path,
        selections_path: &Path,
        ui_dir: Option<&Path>,
    ) -> Result<Self> {
        if !bundles.is_dir() {
            return Err(Error::InvalidInput(format!("{}: not a bundle directory", bundles.display())));
        }
        let selections = SelectionManifest::load(selections_path)?;
        let server = Server::http(addr).map_err(|e| Error::Bind(format!("{addr}: {e}")))?;
        Ok(Self {
            server: Arc::new(server),
            state: State {
                bundles: bundles.to_path_buf(),
                selections_path: selections_path.to_path_buf(),
                ui_dir: ui_dir.map(Path::to_path_buf),
                selections: Mutex::new(selections),
            },
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.server.server_addr().to_ip().expect("tcp listener")
    }

    pub fn stop_handle(&self) -> StopHandle {
        StopHandle(Arc::clone(&self.server))
    }

    /// Serves requests one at a time until stopped, which also serializes
    /// selection writes.
    pub fn run(&self) {
        for mut request in self.server.incoming_requests() {
            let reply = self.route(&mut request);
            if let Err(e) = request.respond(reply) {
                log::warn!("responding: {e}");
            }
        }
    }

    fn route(&self, req: &mut Request) -> Reply {
        let url = req.url().split('?').next().unwrap_or("").to_string();
        let parts: Vec<&str> = url.trim_start_matches('/').splitn(3, '/').collect();
        match (req.method(), parts.as_slice()) {
            (Method::Get, ["api", "rois"]) => self.list_rois(),
            (Method::Get, ["api", "roi", id]) => self.descriptor(id),
            (Method::Get, ["api", "selections"]) => {
                let sel = self.state.selections.lock().expect("selection lock");
                let map: serde_json::Map<String, serde_json::Value> = sel
                    .iter()
                    .map(|(k, v)| (k.clone(), serde_json::to_value(v).expect("entry serializes")))
                    .collect();
                json_reply(200, &serde_json::Value::Object(map))
            }
            (Method::Get, ["api", "selection", id]) => {
                let sel = self.state.selections.lock().expect("selection lock");
                match sel.get(id) {
                    Some(e) => json_reply(200, &serde_json::to_value(e).expect("entry serializes")),
                    None => not_found(id),
                }
            }
            (Method::Post, ["api", "selection", id]) => {
                let id = id.to_string();
                let mut body = String::new();
                if let Err(e) = req.as_reader().read_to_string(&mut body) {
                    return error_reply(400, &Error::Schema(format!("unreadable body: {e}")));
                }
                self.post_selection(&id, &body)
            }
            (Method::Get, ["files", rest @ ..]) => match safe_join(&self.state.bundles, &rest.join("/")) {
                Some(p) => file_reply(&p),
                None => not_found("path"),
            },
            (Method::Get, _) => self.static_asset(&url),
            _ => json_reply(405, &json!({ "error": "method-not-allowed", "message": url })),
        }
    }

    fn list_rois(&self) -> Reply {
        let sel = self.state.selections.lock().expect("selection lock");
        match review_status(&self.state.bundles, &sel) {
            Ok(list) => json_reply(200, &serde_json::to_value(list).expect("status serializes")),
            Err(e) => error_reply(500, &e),
        }
    }

    fn read_descriptor(&self, id: &str) -> Option<Result<BundleDescriptor>> {
        let path = safe_join(&self.state.bundles, id)?.join(BUNDLE_FILE);
        if !path.is_file() {
            return None;
        }
        Some(crate::fsutil::read_json(&path))
    }

    fn descriptor(&self, id: &str) -> Reply {
        match self.read_descriptor(id) {
            None => not_found(id),
            Some(Ok(d)) => json_reply(200, &serde_json::to_value(d).expect("descriptor serializes")),
            Some(Err(e)) => error_reply(500, &e),
        }
    }

    fn post_selection(&self, id: &str, body: &str) -> Reply {
        let desc = match self.read_descriptor(id) {
            None => return not_found(id),
            Some(Err(e)) => return error_reply(500, &e),
            Some(Ok(d)) => d,
        };
        let parsed: SelectionBody = match serde_json::from_str(body) {
            Ok(b) => b,
            Err(e) => return error_reply(400, &Error::Schema(format!("selection body: {e}"))),
        };
        if parsed.candidate >= desc.candidate_count {
            return error_reply(
                400,
                &Error::BadSelection(format!(
                    "{id}: candidate {} of {}",
                    parsed.candidate, desc.candidate_count
                )),
            );
        }
        if parsed.reviewer.trim().is_empty() {
            return error_reply(400, &Error::BadSelection("reviewer must be non-empty".into()));
        }
        let entry = SelectionEntry {
            candidate: parsed.candidate,
            contour: parsed.contour,
            reviewer: parsed.reviewer,
            timestamp: now_timestamp(),
        };
        let mut sel = self.state.selections.lock().expect("selection lock");
        match sel.append(&self.state.selections_path, id, entry.clone()) {
            Ok(()) => json_reply(200, &serde_json::to_value(entry).expect("entry serializes")),
            Err(e) => error_reply(status_for(&e), &e),
        }
    }

    fn static_asset(&self, url: &str) -> Reply {
        let rel = url.trim_start_matches('/');
        let rel = if rel.is_empty() { "index.html" } else { rel };
        match &self.state.ui_dir {
            Some(dir) => match safe_join(dir, rel) {
                Some(p) => file_reply(&p),
                None => not_found(rel),
            },
            None if rel == "index.html" => Response::from_data(PLACEHOLDER.as_bytes().to_vec())
                .with_header(content_type("text/html; charset=utf-8")),
            None => not_found(rel),
        }
    }
}
