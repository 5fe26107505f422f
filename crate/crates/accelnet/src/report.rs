//! CSV output for run traces.

use std::io::Write;

use accelnet_core::engine::RunTrace;

use crate::FormatError;

pub const TRACE_HEADER: [&str; 6] = ["k", "q", "residual", "gap", "V", "updates"];

/// Shortest round-trip scientific notation, or empty when absent.
pub fn number(value: Option<f64>) -> String {
    value.map(|v| format!("{v:e}")).unwrap_or_default()
}

pub fn write_trace<W: Write>(trace: &RunTrace, out: W) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for row in &trace.rows {
        w.write_record([
            row.k.to_string(),
            number(row.dual_value),
            number(row.residual),
            number(row.gap),
            number(row.lyapunov),
            row.updates().to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn trace_to_string(trace: &RunTrace) -> String {
    let mut buf = Vec::new();
    write_trace(trace, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is utf-8")
}
