use std::collections::HashMap;
use std::f64::consts::PI;

use super::parse::BUILTIN_SYMBOLS;
use super::{Diagnostic, DiagnosticCode, DurationExpr, ScheduleDocument, Severity, Span, Spanned};
use crate::layout::SystemLayout;
use crate::params::PhysicalParams;
use crate::schedule::{
    canonical_photon_factor, resonant_duration, solve_resonance, PulseSegment, Schedule, SegmentKind,
    DEFAULT_RESONANCE_BOUND, DEFAULT_RESONANCE_TOLERANCE,
};

/// A schedule with every value resolved, plus the layout it was written for.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidatedSchedule {
    pub schedule: Schedule,
    pub layout: SystemLayout,
    /// `params` after applying the document's `param` lines.
    pub params: PhysicalParams,
    pub warnings: Vec<Diagnostic>,
}

pub fn validate_schedule(doc: &ScheduleDocument, params: &PhysicalParams) -> Result<ValidatedSchedule, Vec<Diagnostic>> {
    validate_schedule_with(doc, params, DEFAULT_RESONANCE_TOLERANCE, DEFAULT_RESONANCE_BOUND)
}

fn field_mut<'a>(p: &'a mut PhysicalParams, name: &str) -> Option<&'a mut f64> {
    Some(match name {
        "mu1" => &mut p.mu1,
        "mu1_tilde" => &mut p.mu1_tilde,
        "mu1p" => &mut p.mu1p,
        "mu1p_tilde" => &mut p.mu1p_tilde,
        "mu_al" => &mut p.mu_al,
        "mu_ar" => &mut p.mu_ar,
        "mu" => &mut p.mu,
        "mu_prime" => &mut p.mu_prime,
        "delta" => &mut p.delta,
        "delta_prime" => &mut p.delta_prime,
        "tau_a" => &mut p.ramps.tau_a,
        "tau_1" => &mut p.ramps.tau_1,
        "tau_1p" => &mut p.ramps.tau_1p,
        "tau_q" => &mut p.ramps.tau_q,
        "tau_qp" => &mut p.ramps.tau_qp,
        _ => return None,
    })
}

fn symbol_table(p: &PhysicalParams) -> HashMap<String, f64> {
    let rates = p.effective_rates();
    let mut copy = p.clone();
    BUILTIN_SYMBOLS
        .iter()
        .map(|(name, _)| {
            let v = match *name {
                "lambda" => rates.lambda,
                "lambda_prime" => rates.lambda_prime,
                n => *field_mut(&mut copy, n).expect("builtin symbol"),
            };
            (name.to_string(), v)
        })
        .collect()
}

fn error(span: Span, token: &str, code: DiagnosticCode, message: impl Into<String>) -> Diagnostic {
    Diagnostic { span, code, severity: Severity::Error, message: message.into(), token: token.to_string() }
}

fn diag(s: &Spanned<impl Sized>, code: DiagnosticCode, message: impl Into<String>) -> Diagnostic {
    error(s.span, &s.text, code, message)
}

/// Residual of `t` against the nearest odd multiple of `pi / rate`.
fn odd_multiple_residual(t: f64, rate: f64) -> (u64, f64) {
    let m = ((t * rate / PI - 1.0) / 2.0).round().max(0.0);
    let target = (2.0 * m + 1.0) * PI / rate;
    (m as u64, (t - target).abs() / t)
}

/// Binds symbols, resolves `auto` durations and checks every phase step
/// against the odd-multiple resonance condition.
pub fn validate_schedule_with(
    doc: &ScheduleDocument,
    params: &PhysicalParams,
    tolerance: f64,
    bound: u32,
) -> Result<ValidatedSchedule, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let Some(layout) = doc.layout.or_else(|| doc.segments.is_empty().then(|| SystemLayout::symmetric(1).ok()).flatten())
    else {
        return Err(vec![error(
            Span { line: 1, column: 1, len: 1 },
            "",
            DiagnosticCode::Layout,
            "the document declares no layout",
        )]);
    };

    let mut p = params.clone();
    let mut values = symbol_table(&p);
    let mut rates_overridden = [false, false];
    for binding in &doc.params {
        let name = binding.name.value.as_str();
        let Some(v) = binding.expr.value.eval(&|s| values.get(s).copied()) else {
            diags.push(diag(&binding.expr, DiagnosticCode::UnknownSymbol, "expression uses an unbound symbol"));
            continue;
        };
        if !v.is_finite() {
            diags.push(diag(&binding.expr, DiagnosticCode::BadValue, format!("`{name}` evaluates to {v}")));
            continue;
        }
        values.insert(name.to_string(), v);
        match name {
            "lambda" => rates_overridden[0] = true,
            "lambda_prime" => rates_overridden[1] = true,
            _ => {
                if let Some(slot) = field_mut(&mut p, name) {
                    *slot = v;
                    let r = p.effective_rates();
                    if !rates_overridden[0] {
                        values.insert("lambda".into(), r.lambda);
                    }
                    if !rates_overridden[1] {
                        values.insert("lambda_prime".into(), r.lambda_prime);
                    }
                }
            }
        }
    }
    let lookup = |s: &str| values.get(s).copied();
    let eval = |e: &Spanned<super::Expr>, diags: &mut Vec<Diagnostic>| -> Option<f64> {
        match e.value.eval(&lookup) {
            Some(v) => Some(v),
            None => {
                diags.push(diag(e, DiagnosticCode::UnknownSymbol, "expression uses an unbound symbol"));
                None
            }
        }
    };

    let mut segments = Vec::new();
    for seg in &doc.segments {
        let before = diags.len();
        let coupling = eval(&seg.coupling, &mut diags);
        if let Some(c) = coupling.filter(|c| !(c.is_finite() && *c > 0.0)) {
            diags.push(diag(&seg.coupling, DiagnosticCode::BadValue, format!("coupling must be positive and finite, got {c} rad/s")));
        }
        let coupling_r = seg.coupling_r.as_ref().map(|e| {
            let v = eval(e, &mut diags);
            if let Some(c) = v.filter(|c| !(c.is_finite() && *c > 0.0)) {
                diags.push(diag(e, DiagnosticCode::BadValue, format!("coupling_r must be positive and finite, got {c} rad/s")));
            }
            v
        });
        let ramp = eval(&seg.ramp, &mut diags);
        if let Some(r) = ramp.filter(|r| !(r.is_finite() && *r >= 0.0)) {
            diags.push(diag(&seg.ramp, DiagnosticCode::BadValue, format!("ramp must be non-negative and finite, got {r} s")));
        }
        if diags.len() != before {
            continue;
        }
        let (coupling, ramp) = (coupling.expect("checked"), ramp.expect("checked"));
        let coupling_r = coupling_r.flatten();

        let duration = match (&seg.duration.value, seg.kind) {
            (DurationExpr::Auto, SegmentKind::Dispersive) => {
                let lr = coupling_r.expect("parser requires coupling_r");
                match solve_resonance(coupling, lr, tolerance, bound) {
                    Ok(sol) => sol.t3,
                    Err(_) => {
                        diags.push(diag(
                            &seg.duration,
                            DiagnosticCode::Resonance,
                            format!(
                                "resonance condition violated: no common odd multiple of π/λ and π/λ' within m, k <= {bound} \
                                 (λ = {coupling:e} rad/s, λ' = {lr:e} rad/s, tolerance {tolerance:e})"
                            ),
                        ));
                        continue;
                    }
                }
            }
            (DurationExpr::Auto, _) => match canonical_photon_factor(&seg.label.value) {
                Some(f) => resonant_duration(coupling, f),
                None => {
                    diags.push(diag(
                        &seg.duration,
                        DiagnosticCode::CannotDeriveAuto,
                        format!("cannot derive a duration for `{}`; auto works for the canonical step labels only", seg.label.value),
                    ));
                    continue;
                }
            },
            (DurationExpr::Expr(e), kind) => {
                let Some(t) = e.eval(&lookup) else {
                    diags.push(diag(&seg.duration, DiagnosticCode::UnknownSymbol, "expression uses an unbound symbol"));
                    continue;
                };
                if !(t.is_finite() && t > 0.0) {
                    diags.push(diag(&seg.duration, DiagnosticCode::BadValue, format!("duration must be positive and finite, got {t} s")));
                    continue;
                }
                if kind == SegmentKind::Dispersive {
                    let lr = coupling_r.expect("parser requires coupling_r");
                    for (rate, name) in [(coupling, "λ"), (lr, "λ'")] {
                        let (m, residual) = odd_multiple_residual(t, rate);
                        if residual > tolerance {
                            diags.push(diag(
                                &seg.duration,
                                DiagnosticCode::Resonance,
                                format!(
                                    "resonance condition violated: requires odd multiple of π/{name} \
                                     (λ = {coupling:e} rad/s, λ' = {lr:e} rad/s; duration is {:.6} π/{name}, nearest odd multiple {})",
                                    t * rate / PI,
                                    2 * m + 1
                                ),
                            ));
                            break;
                        }
                    }
                }
                t
            }
        };
        segments.push(PulseSegment {
            label: seg.label.value.clone(),
            kind: seg.kind,
            cavity: seg.cavity,
            site: seg.site.value,
            coupling,
            coupling_r,
            duration,
            ramp,
        });
    }

    let final_ramp = match &doc.final_ramp {
        Some(e) => match eval(e, &mut diags) {
            Some(v) if v.is_finite() && v >= 0.0 => v,
            Some(v) => {
                diags.push(diag(e, DiagnosticCode::BadValue, format!("final-ramp must be non-negative and finite, got {v} s")));
                0.0
            }
            None => 0.0,
        },
        None => 0.0,
    };

    if !diags.is_empty() {
        diags.extend(doc.warnings.iter().cloned());
        diags.sort_by_key(|d| (d.span.line, d.span.column));
        return Err(diags);
    }
    Ok(ValidatedSchedule { schedule: Schedule { segments, final_ramp }, layout, params: p, warnings: doc.warnings.clone() })
}
