//! Local HTTP fixtures: a tiny threaded server and a fake WebDriver endpoint.
#![allow(dead_code)]

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use base64::Engine;
use image::{ImageFormat, Rgb, RgbImage};
use regex::Regex;
use serde_json::{json, Value};

#[derive(Debug, Clone)]
pub struct Request {
    pub method: String,
    pub path: String,
    pub headers: HashMap<String, String>,
    pub body: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct Response {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
    pub delay: Duration,
}

impl Response {
    pub fn new(status: u16, body: impl Into<Vec<u8>>) -> Self {
        Response {
            status,
            headers: vec![("Content-Type".into(), "text/html; charset=utf-8".into())],
            body: body.into(),
            delay: Duration::ZERO,
        }
    }

    pub fn html(body: impl Into<Vec<u8>>) -> Self {
        Self::new(200, body)
    }

    pub fn json(status: u16, v: Value) -> Self {
        Response {
            status,
            headers: vec![("Content-Type".into(), "application/json".into())],
            body: v.to_string().into_bytes(),
            delay: Duration::ZERO,
        }
    }

    pub fn header(mut self, k: &str, v: &str) -> Self {
        self.headers.push((k.into(), v.into()));
        self
    }

    pub fn delayed(mut self, d: Duration) -> Self {
        self.delay = d;
        self
    }
}

type Handler = dyn Fn(&Request) -> Response + Send + Sync + 'static;

pub struct TestServer {
    pub addr: String,
}

impl TestServer {
    pub fn start(handler: impl Fn(&Request) -> Response + Send + Sync + 'static) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap().to_string();
        let handler: Arc<Handler> = Arc::new(handler);
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let h = handler.clone();
                thread::spawn(move || {
                    let _ = serve(stream, &*h);
                });
            }
        });
        TestServer { addr }
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{}", self.addr, path)
    }
}

fn serve(mut stream: TcpStream, handler: &Handler) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            return Ok(());
        }
        let mut parts = line.split_whitespace();
        let method = parts.next().unwrap_or("").to_string();
        let path = parts.next().unwrap_or("/").to_string();
        let mut headers = HashMap::new();
        loop {
            let mut h = String::new();
            reader.read_line(&mut h)?;
            let h = h.trim_end();
            if h.is_empty() {
                break;
            }
            if let Some((k, v)) = h.split_once(':') {
                headers.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
            }
        }
        let len: usize = headers.get("content-length").and_then(|v| v.parse().ok()).unwrap_or(0);
        let mut body = vec![0; len];
        reader.read_exact(&mut body)?;
        let req = Request {
            method,
            path,
            headers,
            body,
        };
        let resp = handler(&req);
        if !resp.delay.is_zero() {
            thread::sleep(resp.delay);
        }
        let mut out = format!("HTTP/1.1 {} X\r\nContent-Length: {}\r\nConnection: close\r\n", resp.status, resp.body.len());
        for (k, v) in &resp.headers {
            out.push_str(&format!("{k}: {v}\r\n"));
        }
        out.push_str("\r\n");
        stream.write_all(out.as_bytes())?;
        stream.write_all(&resp.body)?;
        stream.flush()?;
        return Ok(());
    }
}

/// A port with nothing listening on it.
pub fn refused_url() -> String {
    let l = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = l.local_addr().unwrap();
    drop(l);
    format!("http://{addr}/")
}

#[derive(Debug, Clone, Copy)]
struct SessionState {
    window: (u32, u32),
    content: (u32, u32),
}

/// Fake WebDriver endpoint. Navigation really fetches the page; its
/// "layout" is the sum of `height: Npx` declarations and the largest
/// `width: Npx`. Screenshots are PNGs of the current window size.
pub struct FakeWebDriver {
    pub server: TestServer,
    pub screenshots: Arc<AtomicU64>,
}

impl FakeWebDriver {
    pub fn start() -> Self {
        let sessions: Arc<Mutex<HashMap<String, SessionState>>> = Arc::default();
        let next_id = Arc::new(AtomicU64::new(1));
        let screenshots = Arc::new(AtomicU64::new(0));
        let shots = screenshots.clone();
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(10))
            .build()
            .unwrap();
        let heights = Regex::new(r"height:\s*(\d+)px").unwrap();
        let widths = Regex::new(r"width:\s*(\d+)px").unwrap();

        let server = TestServer::start(move |req| {
            let segs: Vec<&str> = req.path.trim_matches('/').split('/').collect();
            let body: Value = serde_json::from_slice(&req.body).unwrap_or(Value::Null);
            match (req.method.as_str(), segs.as_slice()) {
                ("POST", ["session"]) => {
                    let id = format!("s{}", next_id.fetch_add(1, Ordering::Relaxed));
                    sessions.lock().unwrap().insert(
                        id.clone(),
                        SessionState {
                            window: (800, 600),
                            content: (0, 0),
                        },
                    );
                    Response::json(200, json!({"value": {"sessionId": id, "capabilities": {}}}))
                }
                ("DELETE", ["session", id]) => {
                    sessions.lock().unwrap().remove(*id);
                    Response::json(200, json!({"value": null}))
                }
                (_, ["session", id, rest @ ..]) => {
                    let mut map = sessions.lock().unwrap();
                    let Some(state) = map.get_mut(*id) else {
                        return Response::json(404, json!({"value": {"error": "invalid session id", "message": id}}));
                    };
                    match (req.method.as_str(), rest) {
                        ("POST", ["timeouts"]) => Response::json(200, json!({"value": null})),
                        ("POST", ["window", "rect"]) => {
                            let w = body["width"].as_u64().unwrap_or(800) as u32;
                            let h = body["height"].as_u64().unwrap_or(600) as u32;
                            state.window = (w, h);
                            Response::json(200, json!({"value": {"x": 0, "y": 0, "width": w, "height": h}}))
                        }
                        ("POST", ["url"]) => {
                            let url = body["url"].as_str().unwrap_or("").to_string();
                            drop(map);
                            let page = client.get(&url).send().and_then(|r| r.error_for_status()).and_then(|r| r.text());
                            let mut map = sessions.lock().unwrap();
                            let state = map.get_mut(*id).unwrap();
                            match page {
                                Ok(html) => {
                                    let h: u32 = heights.captures_iter(&html).map(|c| c[1].parse::<u32>().unwrap()).sum();
                                    let w: u32 = widths.captures_iter(&html).map(|c| c[1].parse::<u32>().unwrap()).max().unwrap_or(0);
                                    state.content = (w, h);
                                    Response::json(200, json!({"value": null}))
                                }
                                Err(e) => Response::json(
                                    500,
                                    json!({"value": {"error": "unknown error", "message": format!("net::ERR_CONNECTION_FAILED {e}")}}),
                                ),
                            }
                        }
                        ("POST", ["execute", "sync"]) => {
                            let w = state.content.0.max(state.window.0);
                            let h = state.content.1.max(state.window.1);
                            Response::json(200, json!({"value": [w, h]}))
                        }
                        ("GET", ["screenshot"]) => {
                            let (w, h) = state.window;
                            drop(map);
                            shots.fetch_add(1, Ordering::Relaxed);
                            let img = RgbImage::from_fn(w, h, |x, y| Rgb([(x % 251) as u8, (y % 241) as u8, 128]));
                            let mut png = std::io::Cursor::new(Vec::new());
                            img.write_to(&mut png, ImageFormat::Png).unwrap();
                            let b64 = base64::engine::general_purpose::STANDARD.encode(png.into_inner());
                            Response::json(200, json!({"value": b64}))
                        }
                        _ => Response::json(404, json!({"value": {"error": "unknown command", "message": req.path}})),
                    }
                }
                _ => Response::json(404, json!({"value": {"error": "unknown command", "message": req.path}})),
            }
        });
        FakeWebDriver { server, screenshots }
    }

    pub fn endpoint(&self) -> String {
        self.server.url("")
    }
}

/// A page whose fake layout height is `height` px, built from stacked blocks.
pub fn tall_page(height: u32) -> String {
    let blocks = height / 500;
    let rest = height % 500;
    let mut s = String::from("<!doctype html><html><body style=\"margin:0\">");
    for i in 0..blocks {
        s.push_str(&format!("<div style=\"height: 500px\">block {i}</div>"));
    }
    if rest > 0 {
        s.push_str(&format!("<div style=\"height: {rest}px\">tail</div>"));
    }
    s.push_str("</body></html>");
    s
}
