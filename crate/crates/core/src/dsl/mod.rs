//! The `.sched` text format: a line-oriented description of a pulse
//! schedule that can be parsed, checked against parameters and written back.
//!
//! ```text
//! version 1
//! layout n_left=3 n_right=3 cutoff_l=4 cutoff_r=4
//! param mu1 = 2pi*71MHz
//! segment step1a resonant-ef cavity=L site=q1 coupling=mu1 duration=auto ramp=3ns
//! final-ramp 3ns
//! ```

use std::fmt;

use serde::Serialize;

use crate::layout::SystemLayout;
use crate::schedule::{CavitySel, SegmentKind, SiteSel};

pub mod expr;
mod parse;
mod serialize;
mod validate;

pub use expr::{Dim, Expr};
pub use parse::parse_schedule;
pub use serialize::{format_frequency, format_time, serialize_schedule};
pub use validate::{validate_schedule, validate_schedule_with, ValidatedSchedule};

/// The only format version understood by this parser.
pub const SCHEDULE_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticCode {
    Syntax,
    Version,
    UnknownDirective,
    UnknownKind,
    UndeclaredSite,
    MissingUnit,
    UnitMismatch,
    DuplicateLabel,
    BadNumber,
    UnknownKey,
    MissingKey,
    DuplicateKey,
    Layout,
    UnknownSymbol,
    Resonance,
    CannotDeriveAuto,
    BadValue,
    Reordered,
}

impl DiagnosticCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticCode::Syntax => "syntax",
            DiagnosticCode::Version => "version",
            DiagnosticCode::UnknownDirective => "unknown-directive",
            DiagnosticCode::UnknownKind => "unknown-kind",
            DiagnosticCode::UndeclaredSite => "undeclared-site",
            DiagnosticCode::MissingUnit => "missing-unit",
            DiagnosticCode::UnitMismatch => "unit-mismatch",
            DiagnosticCode::DuplicateLabel => "duplicate-label",
            DiagnosticCode::BadNumber => "bad-number",
            DiagnosticCode::UnknownKey => "unknown-key",
            DiagnosticCode::MissingKey => "missing-key",
            DiagnosticCode::DuplicateKey => "duplicate-key",
            DiagnosticCode::Layout => "layout",
            DiagnosticCode::UnknownSymbol => "unknown-symbol",
            DiagnosticCode::Resonance => "resonance",
            DiagnosticCode::CannotDeriveAuto => "cannot-derive-auto",
            DiagnosticCode::BadValue => "bad-value",
            DiagnosticCode::Reordered => "reordered",
        }
    }
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// A source range on one line. Line and column are 1-based; column and
/// length count chars.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Span {
    pub line: usize,
    pub column: usize,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostic {
    pub span: Span,
    pub code: DiagnosticCode,
    pub severity: Severity,
    pub message: String,
    /// The offending source text.
    pub token: String,
}

impl Diagnostic {
    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {sev}[{}]: {}", self.span.line, self.span.column, self.code, self.message)?;
        if !self.token.is_empty() {
            write!(f, " (at `{}`)", self.token)?;
        }
        Ok(())
    }
}

/// A value with its source span and text.
#[derive(Clone, Debug, PartialEq)]
pub struct Spanned<T> {
    pub value: T,
    pub span: Span,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DurationExpr {
    Auto,
    Expr(Expr),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamBinding {
    pub name: Spanned<String>,
    pub expr: Spanned<Expr>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentDecl {
    pub label: Spanned<String>,
    pub kind: SegmentKind,
    pub cavity: CavitySel,
    pub site: Spanned<SiteSel>,
    pub coupling: Spanned<Expr>,
    pub coupling_r: Option<Spanned<Expr>>,
    pub duration: Spanned<DurationExpr>,
    pub ramp: Spanned<Expr>,
}

/// A parsed schedule file before parameter binding.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScheduleDocument {
    pub version: Option<u32>,
    pub layout: Option<SystemLayout>,
    pub params: Vec<ParamBinding>,
    pub segments: Vec<SegmentDecl>,
    pub final_ramp: Option<Spanned<Expr>>,
    /// Non-fatal findings, such as segments out of protocol order.
    pub warnings: Vec<Diagnostic>,
}

impl ScheduleDocument {
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty() && self.params.is_empty() && self.layout.is_none() && self.final_ramp.is_none()
    }
}
