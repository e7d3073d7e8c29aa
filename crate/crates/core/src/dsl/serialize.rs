use std::fmt::Write;

use super::expr::eval_literal;
use super::SCHEDULE_FORMAT_VERSION;
use crate::layout::SystemLayout;
use crate::schedule::Schedule;

/// How many neighbouring floats to try before falling back to SI units.
const ULP_SEARCH: i64 = 16;

fn next_toward(x: f64, steps: i64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    let bits = x.to_bits() as i64;
    f64::from_bits((bits + steps) as u64)
}

/// Writes `value` as the shortest `prefix{x}suffix` with `x` near `guess`
/// that evaluates back to exactly `value`, otherwise as `{value}{fallback}`.
fn exact_form(value: f64, guess: f64, prefix: &str, suffix: &str, fallback: &str) -> String {
    if value.is_finite() && value != 0.0 && guess.is_finite() {
        let best = (-ULP_SEARCH..=ULP_SEARCH)
            .map(|k| format!("{prefix}{}{suffix}", next_toward(guess, k)))
            .filter(|text| eval_literal(text) == Some(value))
            .min_by_key(|text| text.len());
        if let Some(text) = best {
            return text;
        }
    }
    format!("{value}{fallback}")
}

/// An angular frequency as `2pi*<f>MHz` when that reads back bit-exactly,
/// else in rad/s.
pub fn format_frequency(omega: f64) -> String {
    exact_form(omega, omega / std::f64::consts::TAU / 1e6, "2pi*", "MHz", "rad/s")
}

/// A time in ns when that reads back bit-exactly, else in seconds.
pub fn format_time(t: f64) -> String {
    if t == 0.0 {
        return "0ns".into();
    }
    exact_form(t, t * 1e9, "", "ns", "s")
}

/// Writes a schedule in the `.sched` format with every value as a literal.
/// Parsing and validating the output gives back an identical schedule.
pub fn serialize_schedule(schedule: &Schedule, layout: &SystemLayout) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "version {SCHEDULE_FORMAT_VERSION}");
    let _ = writeln!(
        out,
        "layout n_left={} n_right={} cutoff_l={} cutoff_r={}",
        layout.n_left, layout.n_right, layout.cutoff_l, layout.cutoff_r
    );
    for s in &schedule.segments {
        let _ = write!(
            out,
            "segment {} {} cavity={} site={} coupling={}",
            s.label,
            s.kind.keyword(),
            s.cavity.keyword(),
            s.site,
            format_frequency(s.coupling)
        );
        if let Some(r) = s.coupling_r {
            let _ = write!(out, " coupling_r={}", format_frequency(r));
        }
        let _ = writeln!(out, " duration={} ramp={}", format_time(s.duration), format_time(s.ramp));
    }
    let _ = writeln!(out, "final-ramp {}", format_time(schedule.final_ramp));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_forms() {
        assert_eq!(format_time(3e-9), "3ns");
        assert_eq!(format_frequency(std::f64::consts::TAU * 50e6), "2pi*50MHz");
        for v in [1.234567e-8, 7.0710678e8, 4.4e8 / 3.0, 1e-300] {
            assert_eq!(eval_literal(&format_frequency(v)), Some(v));
            assert_eq!(eval_literal(&format_time(v)), Some(v));
        }
    }
}
