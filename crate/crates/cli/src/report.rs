use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Map, Value};

pub const SCHEMA: u32 = 1;
/// The only key whose value differs between identical runs.
pub const TIMESTAMP_KEY: &str = "generated_at";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Compare {
    #[serde(rename = "<")]
    Below,
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">")]
    Above,
}

/// One checked invariant. `invariant` names the property in the library
/// module that owns it.
#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub invariant: &'static str,
    pub observed: f64,
    pub threshold: f64,
    pub compare: Compare,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Assertion {
    pub fn new(invariant: &'static str, observed: f64, compare: Compare, threshold: f64) -> Self {
        let pass = match compare {
            Compare::Below => observed < threshold,
            Compare::AtMost => observed <= threshold,
            Compare::Above => observed > threshold,
        };
        Assertion { invariant, observed, threshold, compare, pass, detail: None }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    command: String,
    config: Map<String, Value>,
    results: Map<String, Value>,
    assertions: Vec<Assertion>,
}

impl Report {
    pub fn new(command: &str, config: Map<String, Value>) -> Self {
        Report { command: command.to_string(), config, results: Map::new(), assertions: Vec::new() }
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.results.insert(key.to_string(), v);
    }

    pub fn check(&mut self, a: Assertion) {
        self.assertions.push(a);
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }

    pub fn to_json(&self, timestamp: bool) -> Value {
        let mut v = json!({
            "schema": SCHEMA,
            "command": self.command,
            "config": self.config,
            "results": self.results,
            "assertions": self.assertions,
            "status": if self.passed() { "pass" } else { "fail" },
        });
        if let Some(first) = self.assertions.iter().find(|a| !a.pass) {
            v["failure"] = json!({
                "invariant": first.invariant,
                "observed": first.observed,
                "threshold": first.threshold,
                "compare": first.compare,
                "detail": first.detail,
            });
        }
        if timestamp {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            v[TIMESTAMP_KEY] = json!(secs);
        }
        v
    }
}

/// Report for a run that stopped with an error.
pub fn error_report(command: &str, code: u8, message: &str) -> Value {
    json!({
        "schema": SCHEMA,
        "command": command,
        "status": "error",
        "exit_code": code,
        "error": message,
    })
}
