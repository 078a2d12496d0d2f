//! Verification reports: human-readable lines plus a stable JSON schema.

use std::collections::BTreeMap;

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
    Info,
}

#[derive(Serialize)]
pub struct CheckRecord {
    pub id: String,
    pub verdict: Verdict,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<serde_json::Value>,
}

#[derive(Default, Serialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
}

#[derive(Serialize)]
pub struct Report {
    pub schema: u32,
    pub tool: String,
    pub command: String,
    pub system: String,
    pub input_digest: String,
    pub seed: u64,
    pub tol: f64,
    pub trials: u32,
    pub checks: Vec<CheckRecord>,
    /// Command-specific payloads (tables, expressions, drift stats).
    pub sections: BTreeMap<String, serde_json::Value>,
    pub summary: Summary,
}

impl Report {
    pub fn new(command: &str, system: &str, digest: &str, seed: u64, tol: f64, trials: u32) -> Self {
        Report {
            schema: SCHEMA_VERSION,
            tool: format!("noether {}", env!("CARGO_PKG_VERSION")),
            command: command.to_string(),
            system: system.to_string(),
            input_digest: digest.to_string(),
            seed,
            tol,
            trials,
            checks: Vec::new(),
            sections: BTreeMap::new(),
            summary: Summary::default(),
        }
    }

    pub fn push(&mut self, id: impl Into<String>, verdict: Verdict, detail: impl Into<String>) {
        self.push_witness(id, verdict, detail, None);
    }

    pub fn push_witness(
        &mut self,
        id: impl Into<String>,
        verdict: Verdict,
        detail: impl Into<String>,
        witness: Option<serde_json::Value>,
    ) {
        match verdict {
            Verdict::Pass => self.summary.pass += 1,
            Verdict::Fail => self.summary.fail += 1,
            Verdict::Inconclusive => self.summary.inconclusive += 1,
            Verdict::Info => {}
        }
        self.checks.push(CheckRecord {
            id: id.into(),
            verdict,
            detail: detail.into(),
            witness,
        });
    }

    pub fn section(&mut self, key: &str, value: serde_json::Value) {
        self.sections.insert(key.to_string(), value);
    }

    pub fn all_passed(&self) -> bool {
        self.summary.fail == 0 && self.summary.inconclusive == 0
    }

    /// Prints the human-readable form to stdout.
    pub fn print(&self) {
        println!("{} :: {} ({})", self.tool, self.command, self.system);
        for check in &self.checks {
            let tag = match check.verdict {
                Verdict::Pass => "PASS",
                Verdict::Fail => "FAIL",
                Verdict::Inconclusive => "????",
                Verdict::Info => "info",
            };
            println!("  [{tag}] {}: {}", check.id, check.detail);
            if let Some(w) = &check.witness {
                println!("         witness: {w}");
            }
        }
        println!(
            "  summary: {} passed, {} failed, {} inconclusive",
            self.summary.pass, self.summary.fail, self.summary.inconclusive
        );
    }

    pub fn write_json(&self, path: &std::path::Path) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}
