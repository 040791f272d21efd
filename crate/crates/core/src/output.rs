//! CSV serialization shared by the CLI and the fixture generator.

use std::fmt::Write;

use crate::mc::SweepResult;
use crate::sched::RateSample;

pub const SAMPLES_HEADER: &str = "policy,bias_db,eta,variant,tier,range_expanded,rate_bps";
pub const SUMMARY_HEADER: &str =
    "experiment,policy,bias_db,eta,objective_kind,objective_value,is_argmax";
pub const SWEEP_HEADER: &str = "bias_db,eta,objective_value";

/// Six significant digits, `%g` style: plain decimals for exponents in
/// `-4..6`, scientific notation otherwise, trailing zeros removed.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Context columns written next to every rate sample.
#[derive(Debug, Clone, Copy)]
pub struct SampleContext<'a> {
    pub policy: &'a str,
    pub bias_db: f64,
    pub eta: f64,
    pub variant: &'a str,
}

pub fn write_samples(out: &mut String, ctx: SampleContext, samples: &[RateSample]) {
    for s in samples {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            ctx.policy,
            fmt_num(ctx.bias_db),
            fmt_num(ctx.eta),
            ctx.variant,
            s.tier_id,
            s.range_expanded,
            fmt_num(s.rate_bps)
        )
        .unwrap();
    }
}

pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for p in &result.points {
        writeln!(
            out,
            "{},{},{}",
            fmt_num(p.bias_db),
            fmt_num(p.eta),
            fmt_num(p.value)
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub experiment: String,
    pub policy: String,
    pub bias_db: f64,
    pub eta: f64,
    pub objective_kind: String,
    pub objective_value: f64,
    pub is_argmax: bool,
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.experiment,
            r.policy,
            fmt_num(r.bias_db),
            fmt_num(r.eta),
            r.objective_kind,
            fmt_num(r.objective_value),
            r.is_argmax
        )
        .unwrap();
    }
    out
}
