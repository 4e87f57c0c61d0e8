//! CSV and JSON output with a fixed number format.

use std::io::Write;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::inequality::InequalityReport;

/// 17 significant digits in scientific notation, `.` as decimal separator.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

pub const INEQUALITY_COLUMNS: [&str; 10] =
    ["case", "d", "m", "h", "grid", "lhs", "rhs", "slack", "equality", "coverage"];

fn csv_err(e: csv::Error) -> LabError {
    LabError::Parse(format!("csv: {e}"))
}

/// One row per report, columns as in [`INEQUALITY_COLUMNS`].
pub fn write_inequality_csv<W: Write>(reports: &[InequalityReport], w: W) -> Result<()> {
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.case.clone(),
                r.d.to_string(),
                r.m.map(|m| m.to_string()).unwrap_or_default(),
                r.h.map(fmt_num).unwrap_or_default(),
                r.grid.clone(),
                fmt_num(r.lhs),
                fmt_num(r.rhs),
                fmt_num(r.slack),
                r.equality.to_string(),
                fmt_num(r.coverage),
            ]
        })
        .collect();
    write_table(&INEQUALITY_COLUMNS, &rows, w)
}

/// Header plus rows, already formatted.
pub fn write_table<W: Write, S: AsRef<str>>(header: &[&str], rows: &[Vec<S>], w: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    wtr.write_record(header).map_err(csv_err)?;
    for row in rows {
        wtr.write_record(row.iter().map(|s| s.as_ref())).map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Numeric table: every cell formatted with [`fmt_num`].
pub fn write_numeric_csv<W: Write>(header: &[&str], rows: &[Vec<f64>], w: W) -> Result<()> {
    let rows: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(|x| fmt_num(*x)).collect()).collect();
    write_table(header, &rows, w)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| LabError::Parse(format!("json: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6f64.powf(1.0 / 3.0)] {
            let s = fmt_num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_num(0.25), "2.5000000000000000e-1");
    }

    #[test]
    fn numeric_table_layout() {
        let mut out = Vec::new();
        write_numeric_csv(&["n", "e"], &[vec![1.0, 0.25]], &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "n,e\n1.0000000000000000e0,2.5000000000000000e-1\n"
        );
    }
}
