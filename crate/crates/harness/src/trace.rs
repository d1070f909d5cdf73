//! Trace and path files.
//!
//! A trace has one tab-separated line per iteration,
//! `iter success f delta rho`, with `f`, `δ` and `ρ` in signed scientific
//! notation carrying 8, 2 and 2 fractional digits and an undefined `ρ`
//! written as `nan`. The column header is always present. Lines starting
//! with `#` before it hold `key = value` metadata.

use std::io::{self, Write};

use nalgebra::DVector;
use probdfo_core::trust_region::IterationRecord;

use crate::error::{HarnessError, Result};

pub const COLUMNS: &str = "iter\tsuccess\tf\tdelta\trho";

/// `v` in C-style `%+.{digits}e` notation with an exponent of at least two
/// digits; non-finite values are `nan`, `+inf` and `-inf`.
pub fn sci(v: f64, digits: usize) -> String {
    if v.is_nan() {
        return "nan".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "+inf" } else { "-inf" }.to_string();
    }
    let raw = format!("{v:+.digits$e}");
    let (mantissa, exponent) = raw.split_once('e').expect("exponent present");
    let (sign, magnitude) = match exponent.strip_prefix('-') {
        Some(m) => ('-', m),
        None => ('+', exponent),
    };
    format!("{mantissa}e{sign}{magnitude:0>2}")
}

fn parse_number(text: &str) -> Option<f64> {
    match text {
        "nan" => Some(f64::NAN),
        "+inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => text.parse().ok(),
    }
}

/// The trace line of `record`, without a newline.
pub fn format_record(record: &IterationRecord) -> String {
    format!(
        "{}\t{}\t{}\t{}\t{}",
        record.iter,
        u8::from(record.success),
        sci(record.f, 8),
        sci(record.delta, 2),
        record.rho.map_or_else(|| "nan".to_string(), |r| sci(r, 2)),
    )
}

/// Writes the column header and one line per record.
pub fn emit_trace(trace: &[IterationRecord], sink: &mut dyn Write) -> io::Result<()> {
    writeln!(sink, "{COLUMNS}")?;
    for record in trace {
        writeln!(sink, "{}", format_record(record))?;
    }
    Ok(())
}

/// Writes `# key = value` metadata lines followed by the trace.
pub fn emit_trace_with_metadata(
    metadata: &[(String, String)],
    trace: &[IterationRecord],
    sink: &mut dyn Write,
) -> io::Result<()> {
    for (key, value) in metadata {
        writeln!(sink, "# {key} = {value}")?;
    }
    emit_trace(trace, sink)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTrace {
    pub metadata: Vec<(String, String)>,
    pub records: Vec<IterationRecord>,
}

impl ParsedTrace {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

fn bad(line: usize, message: impl Into<String>) -> HarnessError {
    HarnessError::Trace {
        line,
        message: message.into(),
    }
}

/// Parses the output of [`emit_trace_with_metadata`] (or [`emit_trace`]).
pub fn parse_trace(text: &str) -> Result<ParsedTrace> {
    let mut metadata = Vec::new();
    let mut records = Vec::new();
    let mut header_seen = false;
    for (index, line) in text.lines().enumerate() {
        let number = index + 1;
        if !header_seen {
            if let Some(rest) = line.strip_prefix('#') {
                let (key, value) = rest.split_once('=').ok_or_else(|| bad(number, "metadata without `=`"))?;
                metadata.push((key.trim().to_string(), value.trim().to_string()));
            } else if line == COLUMNS {
                header_seen = true;
            } else {
                return Err(bad(number, "missing column header"));
            }
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(bad(number, format!("expected 5 fields, found {}", fields.len())));
        }
        let iter = fields[0].parse().map_err(|_| bad(number, "bad iteration number"))?;
        let success = match fields[1] {
            "1" => true,
            "0" => false,
            _ => return Err(bad(number, "success flag must be 0 or 1")),
        };
        let f = parse_number(fields[2]).ok_or_else(|| bad(number, "bad f value"))?;
        let delta = parse_number(fields[3]).ok_or_else(|| bad(number, "bad radius"))?;
        let rho = parse_number(fields[4]).ok_or_else(|| bad(number, "bad rho"))?;
        records.push(IterationRecord {
            iter,
            success,
            f,
            delta,
            rho: (!rho.is_nan()).then_some(rho),
        });
    }
    if !header_seen {
        return Err(bad(text.lines().count() + 1, "missing column header"));
    }
    Ok(ParsedTrace { metadata, records })
}

/// `f` as stored in a trace.
pub fn stored_f(f: f64) -> f64 {
    parse_number(&sci(f, 8)).expect("formatted value parses")
}

/// Writes the iterate path: `k x1 … xn f`, tab separated, full precision.
pub fn emit_path(points: &[DVector<f64>], values: &[f64], sink: &mut dyn Write) -> io::Result<()> {
    for (k, (x, f)) in points.iter().zip(values).enumerate() {
        write!(sink, "{k}")?;
        for v in x.iter() {
            write!(sink, "\t{}", sci(*v, 16))?;
        }
        writeln!(sink, "\t{}", sci(*f, 16))?;
    }
    Ok(())
}
