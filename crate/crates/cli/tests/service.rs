//! Runs the service binary on a free port and talks to it over HTTP.

use std::io::{BufRead, BufReader};
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use serde_json::{json, Value};

struct Service {
    child: Child,
    base: String,
}

impl Service {
    fn start(extra: &[&str]) -> Service {
        let mut child = Command::new(env!("CARGO_BIN_EXE_mpx"))
            .args(["serve", "--port", "0"])
            .args(extra)
            .env("RUST_LOG", "warn")
            .stdout(Stdio::piped())
            .spawn()
            .unwrap();
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
        let base = line.trim().strip_prefix("listening on ").expect(&line).to_string();
        Service { child, base }
    }

    fn call(&self, method: &str, path: &str, body: Option<&str>) -> (u16, String) {
        let req = ureq::request(method, &format!("{}{path}", self.base));
        let res = match body {
            Some(b) => req.set("content-type", "application/json").send_string(b),
            None => req.call(),
        };
        match res {
            Ok(r) => (r.status(), r.into_string().unwrap()),
            Err(ureq::Error::Status(code, r)) => (code, r.into_string().unwrap()),
            Err(e) => panic!("{method} {path}: {e}"),
        }
    }

    fn json(&self, method: &str, path: &str, body: Option<Value>) -> (u16, Value) {
        let text = body.map(|b| b.to_string());
        let (status, out) = self.call(method, path, text.as_deref());
        (status, serde_json::from_str(&out).unwrap_or(Value::Null))
    }

    fn command(&self, sid: &str, cmd: Value) -> (u16, Value) {
        self.json("POST", &format!("/api/v1/sessions/{sid}/commands"), Some(cmd))
    }

    /// Starts an expansion of the selection and waits for it.
    fn expand(&self, sid: &str) -> Value {
        let (status, job) = self.command(sid, json!({ "cmd": "expand" }));
        assert_eq!(status, 202, "{job}");
        self.wait(job["poll"].as_str().unwrap())
    }

    fn wait(&self, poll: &str) -> Value {
        let t = Instant::now();
        loop {
            let (status, j) = self.json("GET", poll, None);
            assert_eq!(status, 200);
            if j["state"] != "running" {
                assert_eq!(j["state"], "done", "{j}");
                let schema = schema();
                let route = route(&schema, "GET", "/api/v1/jobs/{token}");
                assert_fields(&j, &route["response"]["required"]);
                assert_fields(&j, &route["response"]["done"]);
                return j["response"].clone();
            }
            assert!(t.elapsed() < Duration::from_secs(240), "job did not finish");
            std::thread::sleep(Duration::from_millis(100));
        }
    }
}

impl Drop for Service {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn schema() -> Value {
    serde_json::from_str(include_str!("../schema/api-v1.json")).unwrap()
}

fn route<'a>(schema: &'a Value, method: &str, path: &str) -> &'a Value {
    schema["routes"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["method"] == method && r["path"] == path)
        .unwrap_or_else(|| panic!("{method} {path} missing from the schema"))
}

fn assert_fields(v: &Value, required: &Value) {
    for f in required.as_array().unwrap() {
        assert!(v.get(f.as_str().unwrap()).is_some(), "missing `{f}` in {v}");
    }
}

fn counts(view: &Value) -> Vec<(i64, u64)> {
    view["level_counts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| (c["level"].as_i64().unwrap(), c["count"].as_u64().unwrap()))
        .collect()
}

#[test]
fn responses_follow_the_schema_and_errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("mine.toml"), minima_explorer::scenarios::builtin_text("empty_2d").unwrap()).unwrap();
    let log = dir.path().join("events.jsonl");
    let svc = Service::start(&[
        "--scenario-dir",
        dir.path().to_str().unwrap(),
        "--event-log",
        log.to_str().unwrap(),
    ]);
    let schema = schema();
    assert_eq!(schema["api"], "v1");

    let (s, health) = svc.json("GET", "/api/v1/health", None);
    assert_eq!(s, 200);
    assert_fields(&health, &route(&schema, "GET", "/api/v1/health")["response"]["required"]);
    let (_, list) = svc.json("GET", "/api/v1/scenarios", None);
    assert_eq!(list["directory"], json!(["mine"]));

    let (s, created) = svc.json("POST", "/api/v1/sessions", Some(json!({ "scenario": "mine", "seed": 3 })));
    assert_eq!(s, 201, "{created}");
    assert_fields(&created, &route(&schema, "POST", "/api/v1/sessions")["response"]["required"]);
    assert_fields(&created["view"], &schema["view"]["required"]);
    let sid = created["session"].as_str().unwrap().to_string();
    let (_, fresh) = svc.json("GET", &format!("/api/v1/sessions/{sid}/tree"), None);
    assert_eq!(fresh["tree"]["nodes"].as_array().unwrap().len(), 1);

    // Malformed bodies and bad scenarios carry diagnostics.
    let (s, e) = svc.json("POST", "/api/v1/sessions", Some(json!({ "scenario": "mine", "colour": 1 })));
    assert_eq!((s, e["error"].as_str()), (400, Some("malformed_request")));
    let (s, e) = svc.call("POST", &format!("/api/v1/sessions/{sid}/commands"), Some("{\"cmd\": "));
    assert_eq!(s, 400);
    assert!(e.contains("line 1"), "{e}");
    let (s, e) = svc.json("POST", "/api/v1/sessions", Some(json!({ "scenario_toml": "version = 1\nname = 3\n" })));
    assert_eq!((s, e["error"].as_str()), (400, Some("invalid_scenario")));
    assert!(e["detail"].as_str().unwrap().contains("line 2"), "{e}");
    let (s, _) = svc.json("POST", "/api/v1/sessions", Some(json!({ "scenario": "../etc/passwd" })));
    assert_eq!(s, 400);
    let (s, _) = svc.json("GET", "/api/v1/sessions/nope", None);
    assert_eq!(s, 404);
    let (s, e) = svc.command(&sid, json!({ "cmd": "select", "id": 9 }));
    assert_eq!((s, e["error"].as_str()), (404, Some("unknown_node")));

    let (s, moved) = svc.command(&sid, json!({ "cmd": "up" }));
    assert_eq!(s, 200);
    assert_fields(&moved, &route(&schema, "POST", "/api/v1/sessions/{sid}/commands")["response"]["required"]);
    assert_eq!(moved["outcome"]["kind"], "unchanged");

    let done = svc.expand(&sid);
    assert_eq!(done["outcome"]["kind"], "expanded");
    assert_eq!(counts(&done["view"]), vec![(-1, 1), (0, 1)]);
    let (_, down) = svc.command(&sid, json!({ "cmd": "down" }));
    assert_eq!(down["view"]["selection"], 1);
    let (s, e) = svc.command(&sid, json!({ "cmd": "expand" }));
    assert_eq!((s, e["error"].as_str()), (409, Some("leaf_level")));

    for (path, key) in [
        ("", "GET /api/v1/sessions/{sid}"),
        ("/tree", "GET /api/v1/sessions/{sid}/tree"),
        ("/document", "GET /api/v1/sessions/{sid}/document"),
        ("/scene", "GET /api/v1/sessions/{sid}/scene"),
        ("/nodes/1/geometry", "GET /api/v1/sessions/{sid}/nodes/{node}/geometry"),
        ("/nodes/1/export", "GET /api/v1/sessions/{sid}/nodes/{node}/export"),
    ] {
        let (s, v) = svc.json("GET", &format!("/api/v1/sessions/{sid}{path}"), None);
        assert_eq!(s, 200, "{path}");
        let (method, p) = key.split_once(' ').unwrap();
        assert_fields(&v, &route(&schema, method, p)["response"]["required"]);
    }
    let (s, v) = svc.json("GET", &format!("/api/v1/sessions/{sid}/events"), None);
    assert_eq!(s, 200);
    for e in v.as_array().unwrap() {
        assert_fields(e, &route(&schema, "GET", "/api/v1/sessions/{sid}/events")["response"]["array_of"]);
    }
    let (s, svg) = svc.call("GET", &format!("/api/v1/sessions/{sid}/svg"), None);
    assert_eq!(s, 200);
    assert!(svg.starts_with("<svg"));
    let (s, _) = svc.json("GET", &format!("/api/v1/sessions/{sid}/nodes/0/geometry"), None);
    assert_eq!(s, 404);
    let (s, g) = svc.json("GET", &format!("/api/v1/sessions/{sid}/nodes/1/geometry?samples=7"), None);
    assert_eq!((s, g["waypoints"].as_array().unwrap().len()), (200, 7));
    let (s, _) = svc.json("GET", &format!("/api/v1/sessions/{sid}/nodes/1/geometry?samples=1"), None);
    assert_eq!(s, 400);

    // The event log replays into the same tree.
    let lines: Vec<Value> =
        std::fs::read_to_string(&log).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(lines[0].get("created").is_some());
    let events: Vec<minima_explorer::explorer::Event> = lines
        .iter()
        .filter(|l| l["session"] == sid.as_str() && l.get("event").is_some())
        .map(|l| serde_json::from_value(l["event"].clone()).unwrap())
        .collect();
    let sc = minima_explorer::scenarios::Scenario::builtin("empty_2d").unwrap();
    let params = serde_json::from_value(lines[0]["created"]["params"].clone()).unwrap();
    let replayed = minima_explorer::explorer::Session::replay(std::sync::Arc::new(sc), params, &events).unwrap();
    let (_, text) = svc.call("GET", &format!("/api/v1/sessions/{sid}/document"), None);
    assert_eq!(replayed.document().to_text(), text);
    let (_, tree) = svc.json("GET", &format!("/api/v1/sessions/{sid}/tree"), None);
    assert_eq!(tree["tree"], serde_json::from_str::<Value>(&text).unwrap());
    assert_eq!(tree["selection"], 1);

    let (s, _) = svc.json("DELETE", &format!("/api/v1/sessions/{sid}"), None);
    assert_eq!(s, 204);
    let (s, _) = svc.json("GET", &format!("/api/v1/sessions/{sid}"), None);
    assert_eq!(s, 404);
}

#[test]
fn car_session_walkthrough() {
    let svc = Service::start(&[]);
    let (_, created) = svc.json("POST", "/api/v1/sessions", Some(json!({ "scenario": "builtin:planar_car", "seed": 0 })));
    let sid = created["session"].as_str().unwrap().to_string();

    let (s, job) = svc.command(&sid, json!({ "cmd": "expand" }));
    assert_eq!(s, 202);
    let (s, e) = svc.command(&sid, json!({ "cmd": "expand" }));
    assert_eq!((s, e["error"].as_str()), (409, Some("busy")), "{e}");
    let (_, state) = svc.json("GET", &format!("/api/v1/sessions/{sid}"), None);
    assert_eq!(state["busy"], 0);
    let done = svc.wait(job["poll"].as_str().unwrap());
    assert_eq!(counts(&done["view"]), vec![(-1, 1), (0, 2)]);

    // Visit both base minima, cheapest first, and expand each.
    let (_, d) = svc.command(&sid, json!({ "cmd": "down" }));
    let first = d["view"]["selection"].clone();
    svc.expand(&sid);
    let (_, r) = svc.command(&sid, json!({ "cmd": "right" }));
    assert_ne!(r["view"]["selection"], first);
    let last = svc.expand(&sid);
    assert_eq!(counts(&last["view"]), vec![(-1, 1), (0, 2), (1, 4)]);

    let (_, leaf) = svc.command(&sid, json!({ "cmd": "down" }));
    assert_eq!(leaf["view"]["nodes"][leaf["view"]["selection"].as_u64().unwrap() as usize]["level"], 1);
    let (_, export) = svc.command(&sid, json!({ "cmd": "export_selected" }));
    let rows = export["export"]["waypoints"].as_array().unwrap();
    assert_eq!(export["export"]["quotient_level"], false);
    assert_eq!(rows[0], json!([1.5, 3.0, std::f64::consts::FRAC_PI_2]));
    assert_eq!(rows[rows.len() - 1], json!([8.5, 3.0, std::f64::consts::FRAC_PI_2]));
}

#[test]
fn a_busy_port_exits_with_2() {
    let holder = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = holder.local_addr().unwrap().port().to_string();
    let status = Command::new(env!("CARGO_BIN_EXE_mpx"))
        .args(["serve", "--port", &port])
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
