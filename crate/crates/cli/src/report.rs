use std::fmt::Write as _;

use condstop::io::FormatError;
use condstop::recursion::Check;
use condstop::scalar::decimal_12;
use condstop::{AtomTree, ModelError, Scalar, SolveError};
use serde::Serialize;
use serde_json::{json, Value};

pub const EXIT_PARSE: u8 = 2;
pub const EXIT_MODEL: u8 = 3;
pub const EXIT_GUARD: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_PARSE,
            message: message.into(),
        }
    }

    pub fn model(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_MODEL,
            message: message.into(),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        let code = if matches!(e, ModelError::Parse(_)) {
            EXIT_PARSE
        } else {
            EXIT_MODEL
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Model(m) => m.into(),
            SolveError::SizeGuard { .. } => CliError {
                code: EXIT_GUARD,
                message: e.to_string(),
            },
            other => CliError::model(other.to_string()),
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        match e {
            FormatError::Model(m) => m.into(),
            other => CliError::usage(other.to_string()),
        }
    }
}

#[derive(Serialize, Debug, Clone)]
pub struct CheckOut {
    pub name: String,
    pub holds: bool,
    pub at: Vec<String>,
}

impl CheckOut {
    pub fn new(name: impl Into<String>, holds: bool, at: Vec<String>) -> Self {
        CheckOut {
            name: name.into(),
            holds,
            at,
        }
    }

    pub fn from_check<S: Scalar>(tree: &AtomTree<S>, prefix: &str, check: &Check) -> Self {
        CheckOut {
            name: format!("{prefix}{}", check.name),
            holds: check.holds,
            at: check
                .atoms
                .iter()
                .map(|&a| tree.name(a).to_string())
                .collect(),
        }
    }
}

#[derive(Serialize, Debug, Clone)]
pub struct ModelInfo {
    pub source: String,
    pub kind: String,
    pub sha256: String,
}

#[derive(Serialize, Debug)]
pub struct Report {
    pub command: Vec<String>,
    pub model: Option<ModelInfo>,
    pub scalar: String,
    pub results: Value,
    pub verification: Vec<CheckOut>,
    pub passed: bool,
    pub timing_ms: f64,
    #[serde(skip)]
    pub text: Vec<String>,
}

impl Report {
    pub fn new(
        model: Option<ModelInfo>,
        results: Value,
        verification: Vec<CheckOut>,
        text: Vec<String>,
    ) -> Self {
        let passed = verification.iter().all(|c| c.holds);
        Report {
            command: Vec::new(),
            model,
            scalar: String::new(),
            results,
            verification,
            passed,
            timing_ms: 0.0,
            text,
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "condstop {}", self.command.join(" ")).unwrap();
        if let Some(m) = &self.model {
            writeln!(
                out,
                "model: {} ({}, sha256 {})",
                m.source,
                m.kind,
                &m.sha256[..16]
            )
            .unwrap();
        }
        writeln!(out, "arithmetic: {}", self.scalar).unwrap();
        for line in &self.text {
            writeln!(out, "{line}").unwrap();
        }
        if !self.verification.is_empty() {
            writeln!(out, "checks:").unwrap();
            for c in &self.verification {
                let mark = if c.holds { "pass" } else { "FAIL" };
                if c.at.is_empty() {
                    writeln!(out, "  [{mark}] {}", c.name).unwrap();
                } else {
                    writeln!(out, "  [{mark}] {} at {}", c.name, c.at.join(", ")).unwrap();
                }
            }
        }
        writeln!(out, "time: {:.1} ms", self.timing_ms).unwrap();
        out
    }
}

/// Rational string plus a 12-digit decimal.
pub fn num<S: Scalar>(x: &S) -> Value {
    json!({ "value": x.to_canonical_string(), "decimal": decimal_12(x.to_f64()) })
}

pub fn opt_num<S: Scalar>(x: &Option<S>) -> Value {
    x.as_ref().map_or(Value::Null, num)
}

pub fn show<S: Scalar>(x: &S) -> String {
    let exact = x.to_canonical_string();
    let decimal = decimal_12(x.to_f64());
    if S::EXACT && exact.contains('/') {
        format!("{exact} ({decimal})")
    } else {
        exact
    }
}

pub fn show_opt<S: Scalar>(x: &Option<S>) -> String {
    x.as_ref().map_or_else(|| "-".to_string(), show)
}

/// Left-aligned text table.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> Vec<String> {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<String>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = vec![line(header.iter().map(|h| h.to_string()).collect())];
    out.extend(rows.iter().map(|r| line(r.clone())));
    out.into_iter().map(|l| format!("  {l}")).collect()
}
