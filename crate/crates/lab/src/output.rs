//! CSV and JSON artifacts.

use std::fmt::Write as _;
use std::path::Path;

use idl_core::energy::EnergyTrace;

use crate::error::{LabError, LabResult};
use crate::report::StabilityReport;

pub const CSV_HEADER: &str = "t,E_S,E,delay_integral,interval_index,parity,b1,b2";

/// 17 significant digits.
fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trace_csv(trace: &EnergyTrace) -> String {
    let mut out = String::with_capacity(160 * (trace.rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &trace.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            float(r.t),
            float(r.e_s),
            float(r.e),
            float(r.delay_integral),
            r.interval_index,
            r.parity.as_str(),
            float(r.b1),
            float(r.b2),
        );
    }
    out
}

pub fn report_json(report: &StabilityReport) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    text
}

pub fn write_text(path: &Path, text: &str) -> LabResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| LabError::io(format!("creating {}", dir.display()), e))?;
    }
    std::fs::write(path, text).map_err(|e| LabError::io(format!("writing {}", path.display()), e))
}

pub fn write_trace_csv(trace: &EnergyTrace, path: &Path) -> LabResult<()> {
    write_text(path, &trace_csv(trace))
}

pub fn write_report_json(report: &StabilityReport, path: &Path) -> LabResult<()> {
    write_text(path, &report_json(report))
}
