//! The `parse` command: checks a `.sched` file.

use std::path::Path;

use anyhow::{Context, Result};
use ghz_transfer::dsl::Severity;
use ghz_transfer::{parse_schedule, serialize_schedule, validate_schedule, Diagnostic, PhysicalParams};

pub struct ParseOutcome {
    /// One line per diagnostic, prefixed with the file name.
    pub messages: Vec<String>,
    /// The file in canonical form when it is valid.
    pub canonical: Option<String>,
    pub segments: usize,
    pub tau: Option<f64>,
}

impl ParseOutcome {
    pub fn ok(&self) -> bool {
        self.canonical.is_some()
    }
}

pub fn check_file(path: &Path, params: &PhysicalParams) -> Result<ParseOutcome> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(check_text(&path.display().to_string(), &text, params))
}

pub fn check_text(name: &str, text: &str, params: &PhysicalParams) -> ParseOutcome {
    let render = |d: &[Diagnostic]| d.iter().map(|d| format!("{name}:{d}")).collect::<Vec<_>>();
    let doc = match parse_schedule(text) {
        Ok(doc) => doc,
        Err(d) => return ParseOutcome { messages: render(&d), canonical: None, segments: 0, tau: None },
    };
    match validate_schedule(&doc, params) {
        Ok(v) => ParseOutcome {
            messages: render(&v.warnings),
            canonical: Some(serialize_schedule(&v.schedule, &v.layout)),
            segments: v.schedule.segments.len(),
            tau: Some(v.schedule.total_duration()),
        },
        Err(d) => {
            debug_assert!(d.iter().any(|d| d.severity == Severity::Error));
            ParseOutcome { messages: render(&d), canonical: None, segments: doc.segments.len(), tau: None }
        }
    }
}
