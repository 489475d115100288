//! The JSON envelope shared by every subcommand.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::input::InputRecord;

pub const TOOL: &str = "qrs";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Named tolerance or threshold that influenced a result.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tolerance {
    pub name: &'static str,
    pub value: f64,
}

pub fn tol(name: &'static str, value: f64) -> Tolerance {
    Tolerance { name, value }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report<T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// Master seed of every random choice made by the command.
    pub seed: Option<u64>,
    pub inputs: Vec<InputRecord>,
    pub tolerances: Vec<Tolerance>,
    pub result: T,
}

impl<T: Serialize> Report<T> {
    pub fn new(
        command: &str,
        seed: Option<u64>,
        inputs: Vec<InputRecord>,
        tolerances: Vec<Tolerance>,
        result: T,
    ) -> Self {
        Report {
            tool: TOOL,
            version: VERSION,
            command: command.to_string(),
            seed,
            inputs,
            tolerances,
            result,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    /// Writes to `out`, or to standard output when `out` is `None`.
    pub fn emit(&self, out: Option<&Path>) -> std::io::Result<()> {
        let text = self.to_json();
        match out {
            Some(path) => std::fs::write(path, text),
            None => std::io::stdout().lock().write_all(text.as_bytes()),
        }
    }
}
