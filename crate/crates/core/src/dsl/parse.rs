use std::collections::{HashMap, HashSet};

use super::expr::{parse_expr, Dim, Expr};
use super::{
    Diagnostic, DiagnosticCode, DurationExpr, ParamBinding, ScheduleDocument, SegmentDecl, Severity, Span, Spanned,
    SCHEDULE_FORMAT_VERSION,
};
use crate::layout::{Site, SystemLayout, DEFAULT_FOCK_CUTOFF};
use crate::schedule::{CavitySel, SegmentKind, SiteSel, CANONICAL_LABELS};

/// Symbols bound from [`crate::params::PhysicalParams`] unless a `param` line
/// overrides them.
pub(crate) const BUILTIN_SYMBOLS: [(&str, Dim); 17] = [
    ("mu1", Dim::FREQUENCY),
    ("mu1_tilde", Dim::FREQUENCY),
    ("mu1p", Dim::FREQUENCY),
    ("mu1p_tilde", Dim::FREQUENCY),
    ("mu_al", Dim::FREQUENCY),
    ("mu_ar", Dim::FREQUENCY),
    ("mu", Dim::FREQUENCY),
    ("mu_prime", Dim::FREQUENCY),
    ("delta", Dim::FREQUENCY),
    ("delta_prime", Dim::FREQUENCY),
    ("lambda", Dim::FREQUENCY),
    ("lambda_prime", Dim::FREQUENCY),
    ("tau_a", Dim::TIME),
    ("tau_1", Dim::TIME),
    ("tau_1p", Dim::TIME),
    ("tau_q", Dim::TIME),
    ("tau_qp", Dim::TIME),
];

#[derive(Clone, Debug)]
struct Word {
    text: String,
    /// 0-based char column.
    col: usize,
}

impl Word {
    fn len(&self) -> usize {
        self.text.chars().count()
    }
}

struct Line {
    number: usize,
    words: Vec<Word>,
    /// Chars of the line with the comment removed.
    chars: Vec<char>,
}

fn split_line(number: usize, raw: &str) -> Line {
    let mut chars: Vec<char> = raw.chars().collect();
    if let Some(p) = chars.iter().position(|&c| c == '#') {
        chars.truncate(p);
    }
    let mut words = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        words.push(Word { text: chars[start..i].iter().collect(), col: start });
    }
    Line { number, words, chars }
}

struct Ctx {
    diags: Vec<Diagnostic>,
}

impl Ctx {
    fn push(&mut self, code: DiagnosticCode, line: usize, col: usize, len: usize, token: &str, message: impl Into<String>) {
        self.diags.push(Diagnostic {
            span: Span { line, column: col + 1, len: len.max(1) },
            code,
            severity: Severity::Error,
            message: message.into(),
            token: token.to_string(),
        });
    }

    fn at(&mut self, code: DiagnosticCode, line: usize, w: &Word, message: impl Into<String>) {
        self.push(code, line, w.col, w.len(), &w.text, message);
    }
}

/// Parses `text` into a document, or returns every diagnostic found
/// (errors and warnings) when at least one error occurred. Never panics.
pub fn parse_schedule(text: &str) -> Result<ScheduleDocument, Vec<Diagnostic>> {
    let lines: Vec<Line> = text
        .lines()
        .enumerate()
        .map(|(i, l)| split_line(i + 1, l))
        .filter(|l| !l.words.is_empty())
        .collect();
    let mut ctx = Ctx { diags: Vec::new() };
    let mut doc = ScheduleDocument::default();

    // Header: the version must be the first directive.
    let mut seen_directive = false;
    for line in &lines {
        let head = &line.words[0];
        if head.text == "version" {
            if doc.version.is_some() {
                ctx.at(DiagnosticCode::Version, line.number, head, "version declared twice");
            } else if seen_directive {
                ctx.at(DiagnosticCode::Version, line.number, head, "the version line must come first");
            }
            match line.words.get(1) {
                Some(w) if line.words.len() == 2 => match w.text.parse::<u32>() {
                    Ok(v) if v == SCHEDULE_FORMAT_VERSION => {
                        doc.version.get_or_insert(v);
                    }
                    Ok(v) => {
                        ctx.at(DiagnosticCode::Version, line.number, w, format!("unsupported version {v} (expected {SCHEDULE_FORMAT_VERSION})"));
                        doc.version.get_or_insert(v);
                    }
                    Err(_) => ctx.at(DiagnosticCode::BadNumber, line.number, w, "version must be an integer"),
                },
                Some(_) => ctx.at(DiagnosticCode::Syntax, line.number, &line.words[2], "unexpected text after the version"),
                None => ctx.at(DiagnosticCode::Syntax, line.number, head, "expected `version <n>`"),
            }
        }
        seen_directive = true;
    }
    if doc.version.is_none() && !lines.is_empty() && !lines.iter().any(|l| l.words[0].text == "version") {
        let first = &lines[0];
        ctx.at(DiagnosticCode::Version, first.number, &first.words[0], "missing `version 1` line");
    }

    // Layout.
    for line in lines.iter().filter(|l| l.words[0].text == "layout") {
        if doc.layout.is_some() {
            ctx.at(DiagnosticCode::Layout, line.number, &line.words[0], "layout declared twice");
            continue;
        }
        doc.layout = parse_layout(&mut ctx, line);
    }

    // Params, in order; each may use builtins and earlier params.
    let mut dims: HashMap<String, Dim> = BUILTIN_SYMBOLS.iter().map(|(n, d)| (n.to_string(), *d)).collect();
    let mut defined = HashSet::new();
    for line in lines.iter().filter(|l| l.words[0].text == "param") {
        if let Some(p) = parse_param(&mut ctx, line, &dims) {
            if !defined.insert(p.name.value.clone()) {
                let w = Word { text: p.name.text.clone(), col: p.name.span.column - 1 };
                ctx.at(DiagnosticCode::DuplicateKey, line.number, &w, format!("parameter `{}` defined twice", p.name.value));
                continue;
            }
            if let Ok(d) = p.expr.value.dim(&|s| dims.get(s).copied()) {
                dims.insert(p.name.value.clone(), d);
            }
            doc.params.push(p);
        }
    }

    let mut labels: HashSet<String> = HashSet::new();
    let mut layout_complained = false;
    for line in &lines {
        let head = &line.words[0];
        match head.text.as_str() {
            "version" | "layout" | "param" => {}
            "segment" => {
                let Some(layout) = doc.layout else {
                    if !layout_complained {
                        ctx.at(DiagnosticCode::Layout, line.number, head, "segments need a preceding `layout` line");
                        layout_complained = true;
                    }
                    continue;
                };
                if let Some(seg) = parse_segment(&mut ctx, line, &layout, &dims) {
                    if !labels.insert(seg.label.value.clone()) {
                        let w = Word { text: seg.label.text.clone(), col: seg.label.span.column - 1 };
                        ctx.at(DiagnosticCode::DuplicateLabel, line.number, &w, format!("segment label `{}` used twice", seg.label.value));
                        continue;
                    }
                    doc.segments.push(seg);
                }
            }
            "final-ramp" => {
                if doc.final_ramp.is_some() {
                    ctx.at(DiagnosticCode::DuplicateKey, line.number, head, "final-ramp given twice");
                    continue;
                }
                match rest_of_line(line, 1) {
                    Some(w) => doc.final_ramp = typed_expr(&mut ctx, line.number, &w, Dim::TIME, &dims),
                    None => ctx.at(DiagnosticCode::Syntax, line.number, head, "expected `final-ramp <time>`"),
                }
            }
            other => ctx.at(DiagnosticCode::UnknownDirective, line.number, head, format!("unknown directive `{other}`")),
        }
    }

    // Protocol order is not enforced, only flagged.
    let mut last = None;
    for seg in &doc.segments {
        if let Some(pos) = CANONICAL_LABELS.iter().position(|l| *l == seg.label.value) {
            if last.is_some_and(|p| pos < p) {
                doc.warnings.push(Diagnostic {
                    span: seg.label.span,
                    code: DiagnosticCode::Reordered,
                    severity: Severity::Warning,
                    message: format!("`{}` comes after a later protocol step; executing in the order written", seg.label.value),
                    token: seg.label.text.clone(),
                });
            }
            last = Some(last.map_or(pos, |p: usize| p.max(pos)));
        }
    }

    if ctx.diags.is_empty() {
        return Ok(doc);
    }
    let mut all = ctx.diags;
    all.extend(doc.warnings);
    all.sort_by_key(|d| (d.span.line, d.span.column));
    Err(all)
}

/// The remainder of a line from word `from` on, as a single word.
fn rest_of_line(line: &Line, from: usize) -> Option<Word> {
    let start = line.words.get(from)?.col;
    let text: String = line.chars[start..].iter().collect::<String>().trim_end().to_string();
    Some(Word { text, col: start })
}

fn parse_layout(ctx: &mut Ctx, line: &Line) -> Option<SystemLayout> {
    let mut vals: HashMap<&str, usize> = HashMap::new();
    let mut ok = true;
    for w in &line.words[1..] {
        let Some((k, v)) = w.text.split_once('=') else {
            ctx.at(DiagnosticCode::Syntax, line.number, w, "expected `key=value`");
            ok = false;
            continue;
        };
        let key = match k {
            "n_left" | "n_right" | "cutoff_l" | "cutoff_r" => k,
            _ => {
                ctx.at(DiagnosticCode::UnknownKey, line.number, w, format!("unknown layout key `{k}`"));
                ok = false;
                continue;
            }
        };
        let vw = Word { text: v.to_string(), col: w.col + k.chars().count() + 1 };
        match v.parse::<usize>() {
            Ok(n) => {
                if vals.insert(key, n).is_some() {
                    ctx.at(DiagnosticCode::DuplicateKey, line.number, w, format!("`{k}` given twice"));
                    ok = false;
                }
            }
            Err(_) => {
                ctx.at(DiagnosticCode::BadNumber, line.number, &vw, format!("`{k}` must be a non-negative integer"));
                ok = false;
            }
        }
    }
    for key in ["n_left", "n_right"] {
        if !vals.contains_key(key) && ok {
            ctx.at(DiagnosticCode::MissingKey, line.number, &line.words[0], format!("layout needs `{key}`"));
            ok = false;
        }
    }
    if !ok {
        return None;
    }
    let cutoff = |k| vals.get(k).copied().unwrap_or(DEFAULT_FOCK_CUTOFF);
    match SystemLayout::new(vals["n_left"], vals["n_right"], cutoff("cutoff_l"), cutoff("cutoff_r")) {
        Ok(l) => Some(l),
        Err(e) => {
            let whole = Word { text: line.chars.iter().collect::<String>().trim().to_string(), col: line.words[0].col };
            ctx.at(DiagnosticCode::Layout, line.number, &whole, e.to_string());
            None
        }
    }
}

fn is_identifier(s: &str) -> bool {
    let mut c = s.chars();
    c.next().is_some_and(|f| f.is_alphabetic() || f == '_') && c.all(|x| x.is_alphanumeric() || x == '_')
}

fn parse_param(ctx: &mut Ctx, line: &Line, dims: &HashMap<String, Dim>) -> Option<ParamBinding> {
    let Some(rest) = rest_of_line(line, 1) else {
        ctx.at(DiagnosticCode::Syntax, line.number, &line.words[0], "expected `param <name> = <value>`");
        return None;
    };
    let Some((name, value)) = rest.text.split_once('=') else {
        ctx.at(DiagnosticCode::Syntax, line.number, &rest, "expected `param <name> = <value>`");
        return None;
    };
    let name_trim = name.trim_end();
    let name_word = Word { text: name_trim.to_string(), col: rest.col };
    if !is_identifier(name_trim) || matches!(name_trim, "pi" | "auto") {
        ctx.at(DiagnosticCode::Syntax, line.number, &name_word, format!("`{name_trim}` is not a valid parameter name"));
        return None;
    }
    let lead = value.chars().take_while(|c| c.is_whitespace()).count();
    let value_col = rest.col + name.chars().count() + 1 + lead;
    let vw = Word { text: value.trim().to_string(), col: value_col };
    if vw.text.is_empty() {
        ctx.at(DiagnosticCode::Syntax, line.number, &Word { text: "=".into(), col: value_col - lead - 1 }, "missing value");
        return None;
    }
    let expected = dims.get(name_trim).copied();
    let expr = match expected {
        Some(d) => typed_expr(ctx, line.number, &vw, d, dims)?,
        None => {
            let e = expr_or_report(ctx, line.number, &vw)?;
            if let Err(err) = e.dim(&|s| dims.get(s).copied()) {
                report_expr(ctx, line.number, &vw, err);
                return None;
            }
            spanned(line.number, &vw, e)
        }
    };
    Some(ParamBinding { name: spanned(line.number, &name_word, name_trim.to_string()), expr })
}

fn spanned<T>(line: usize, w: &Word, value: T) -> Spanned<T> {
    Spanned { value, span: Span { line, column: w.col + 1, len: w.len().max(1) }, text: w.text.clone() }
}

fn report_expr(ctx: &mut Ctx, line: usize, w: &Word, err: super::expr::ExprError) {
    let total = w.len().max(1);
    let offset = err.offset.min(total.saturating_sub(1));
    let len = err.len.min(total - offset);
    let token: String = w.text.chars().skip(offset).take(len).collect();
    ctx.push(err.code, line, w.col + offset, len, &token, err.message);
}

fn expr_or_report(ctx: &mut Ctx, line: usize, w: &Word) -> Option<Expr> {
    match parse_expr(&w.text) {
        Ok(e) => Some(e),
        Err(err) => {
            report_expr(ctx, line, w, err);
            None
        }
    }
}

/// Parses and dimension-checks an expression that must have dimension `want`.
fn typed_expr(ctx: &mut Ctx, line: usize, w: &Word, want: Dim, dims: &HashMap<String, Dim>) -> Option<Spanned<Expr>> {
    let e = expr_or_report(ctx, line, w)?;
    let got = match e.dim(&|s| dims.get(s).copied()) {
        Ok(d) => d,
        Err(err) => {
            report_expr(ctx, line, w, err);
            return None;
        }
    };
    if got != want {
        let (code, msg) = if got == Dim::NONE {
            let units = if want == Dim::TIME { "ns, us, ms or s" } else { "2pi*<f>MHz or rad/s" };
            (DiagnosticCode::MissingUnit, format!("missing unit: `{}` needs {units}", w.text))
        } else if want == Dim::FREQUENCY && got == (Dim { time: -1, cycle: 1 }) {
            (DiagnosticCode::UnitMismatch, "frequency given in Hz; write 2pi*<f>MHz or give rad/s".to_string())
        } else {
            (DiagnosticCode::UnitMismatch, format!("expected {}, found {}", want.describe(), got.describe()))
        };
        ctx.at(code, line, w, msg);
        return None;
    }
    Some(spanned(line, w, e))
}

fn parse_segment(ctx: &mut Ctx, line: &Line, layout: &SystemLayout, dims: &HashMap<String, Dim>) -> Option<SegmentDecl> {
    let n = line.number;
    let head = &line.words[0];
    let Some(label_w) = line.words.get(1) else {
        ctx.at(DiagnosticCode::Syntax, n, head, "expected `segment <label> <kind> key=value ...`");
        return None;
    };
    if label_w.text.contains('=') || !label_w.text.chars().all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.')) {
        ctx.at(DiagnosticCode::Syntax, n, label_w, "segment label must be letters, digits, `_`, `-` or `.`");
        return None;
    }
    let Some(kind_w) = line.words.get(2) else {
        ctx.at(DiagnosticCode::Syntax, n, label_w, "expected a segment kind after the label");
        return None;
    };
    let kind = SegmentKind::from_keyword(&kind_w.text);
    if kind.is_none() {
        ctx.at(
            DiagnosticCode::UnknownKind,
            n,
            kind_w,
            format!("unknown segment kind `{}` (expected resonant-ef, resonant-ge or dispersive)", kind_w.text),
        );
    }
    let errors_before = ctx.diags.len();

    let mut fields: HashMap<&'static str, Word> = HashMap::new();
    for w in &line.words[3..] {
        let Some((k, v)) = w.text.split_once('=') else {
            ctx.at(DiagnosticCode::Syntax, n, w, "expected `key=value`");
            continue;
        };
        let key = match k {
            "cavity" => "cavity",
            "site" => "site",
            "coupling" => "coupling",
            "coupling_r" => "coupling_r",
            "duration" => "duration",
            "ramp" => "ramp",
            _ => {
                let kw = Word { text: k.to_string(), col: w.col };
                ctx.at(DiagnosticCode::UnknownKey, n, &kw, format!("unknown key `{k}`"));
                continue;
            }
        };
        let vw = Word { text: v.to_string(), col: w.col + k.chars().count() + 1 };
        if fields.insert(key, vw).is_some() {
            ctx.at(DiagnosticCode::DuplicateKey, n, w, format!("`{k}` given twice"));
        }
    }
    let kind = kind?;
    for key in ["cavity", "site", "coupling", "duration", "ramp"] {
        if !fields.contains_key(key) {
            ctx.at(DiagnosticCode::MissingKey, n, label_w, format!("segment `{}` needs `{key}=`", label_w.text));
        }
    }
    let dispersive = kind == SegmentKind::Dispersive;
    if dispersive && !fields.contains_key("coupling_r") {
        ctx.at(DiagnosticCode::MissingKey, n, label_w, "dispersive segments need `coupling_r=` (lambda')");
    }
    if let (false, Some(w)) = (dispersive, fields.get("coupling_r")) {
        ctx.at(DiagnosticCode::BadValue, n, w, "`coupling_r` only applies to dispersive segments");
    }

    let cavity = fields.get("cavity").and_then(|w| {
        let c = CavitySel::from_keyword(&w.text);
        if c.is_none() {
            ctx.at(DiagnosticCode::BadValue, n, w, format!("cavity must be L, R or LR, not `{}`", w.text));
        }
        c
    });
    let site = fields.get("site").and_then(|w| {
        let s = if w.text == "spectators" {
            if layout.n_left < 2 || layout.n_right < 2 {
                ctx.at(DiagnosticCode::UndeclaredSite, n, w, "the layout has no spectator qubits");
                return None;
            }
            SiteSel::Spectators
        } else {
            let Some(site) = Site::parse_id(&w.text) else {
                ctx.at(DiagnosticCode::BadValue, n, w, format!("`{}` is not a site (expected q<i>, q<i>', A or spectators)", w.text));
                return None;
            };
            let declared = match site {
                Site::Left(i) => i <= layout.n_left,
                Site::Right(i) => i <= layout.n_right,
                _ => true,
            };
            if !declared {
                ctx.at(
                    DiagnosticCode::UndeclaredSite,
                    n,
                    w,
                    format!("site `{}` is not in the layout ({} + {} qubits)", w.text, layout.n_left, layout.n_right),
                );
                return None;
            }
            SiteSel::One(site)
        };
        Some(spanned(n, w, s))
    });

    // Combination rules between kind, cavity and site.
    if let (Some(c), Some(s)) = (cavity, &site) {
        let sw = &fields["site"];
        match (kind, s.value) {
            (SegmentKind::Dispersive, SiteSel::Spectators) if c == CavitySel::Both => {}
            (SegmentKind::Dispersive, SiteSel::Spectators) => {
                ctx.at(DiagnosticCode::BadValue, n, &fields["cavity"], "dispersive segments act on both cavities (cavity=LR)")
            }
            (SegmentKind::Dispersive, _) => ctx.at(DiagnosticCode::BadValue, n, sw, "dispersive segments act on site=spectators"),
            (_, SiteSel::Spectators) => ctx.at(DiagnosticCode::BadValue, n, sw, "resonant segments act on a single site"),
            (_, SiteSel::One(_)) if c == CavitySel::Both => {
                ctx.at(DiagnosticCode::BadValue, n, &fields["cavity"], "resonant segments couple to one cavity (L or R)")
            }
            (SegmentKind::ResonantEf, SiteSel::One(Site::Coupler)) => {
                ctx.at(DiagnosticCode::BadValue, n, sw, "the coupler has no f level; use resonant-ge")
            }
            (_, SiteSel::One(site)) => {
                if site.cavity().is_some_and(|sc| Some(sc) != c.single()) {
                    ctx.at(DiagnosticCode::BadValue, n, sw, format!("`{site}` does not sit in cavity {}", c.keyword()));
                }
            }
        }
    }

    let coupling = fields.get("coupling").and_then(|w| typed_expr(ctx, n, w, Dim::FREQUENCY, dims));
    let coupling_r = match fields.get("coupling_r") {
        Some(w) if dispersive => typed_expr(ctx, n, w, Dim::FREQUENCY, dims).map(Some),
        _ => Some(None),
    };
    let duration = fields.get("duration").and_then(|w| {
        if w.text == "auto" {
            Some(spanned(n, w, DurationExpr::Auto))
        } else {
            typed_expr(ctx, n, w, Dim::TIME, dims).map(|e| Spanned { value: DurationExpr::Expr(e.value), span: e.span, text: e.text })
        }
    });
    let ramp = fields.get("ramp").and_then(|w| typed_expr(ctx, n, w, Dim::TIME, dims));

    if ctx.diags.len() != errors_before {
        return None;
    }
    Some(SegmentDecl {
        label: spanned(n, label_w, label_w.text.clone()),
        kind,
        cavity: cavity?,
        site: site?,
        coupling: coupling?,
        coupling_r: coupling_r?,
        duration: duration?,
        ramp: ramp?,
    })
}
