use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    pub fn of(ok: bool) -> Status {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: Value,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub counterexamples: Vec<Value>,
}

impl Check {
    pub fn new(name: impl Into<String>, ok: bool, detail: Value) -> Check {
        Check { name: name.into(), status: Status::of(ok), detail, counterexamples: Vec::new() }
    }

    pub fn with_counterexamples<T: Serialize>(mut self, xs: impl IntoIterator<Item = T>) -> Check {
        self.counterexamples = xs.into_iter().take(20).map(|x| serde_json::to_value(x).expect("serializable")).collect();
        self
    }

    pub fn error(name: impl Into<String>, err: impl std::fmt::Display) -> Check {
        Check::new(name, false, serde_json::json!({ "error": err.to_string() }))
    }

    pub fn passes(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: Vec<String>,
    pub status: Status,
    pub checks: Vec<Check>,
    pub wall_time_ms: u128,
}

impl Report {
    pub fn new(command: Vec<String>, checks: Vec<Check>, wall_time_ms: u128) -> Report {
        let status = Status::of(checks.iter().all(Check::passes));
        Report { command, status, checks, wall_time_ms }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "command: {}", self.command.join(" ")).unwrap();
        for c in &self.checks {
            let tag = if c.passes() { "PASS" } else { "FAIL" };
            writeln!(s, "{tag}  {}  {}", c.name, c.detail).unwrap();
            for x in &c.counterexamples {
                writeln!(s, "      counterexample: {x}").unwrap();
            }
        }
        let failed = self.checks.iter().filter(|c| !c.passes()).count();
        writeln!(s, "result: {} ({} checks, {} failed, {} ms)", if failed == 0 { "pass" } else { "fail" }, self.checks.len(), failed, self.wall_time_ms).unwrap();
        s
    }
}
