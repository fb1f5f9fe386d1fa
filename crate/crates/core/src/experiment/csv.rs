//! CSV output: a `#` header block with every model parameter, one column
//! line, then one row per grid point (or time sample).

use std::io::Write;

use super::SweepTable;

/// Twelve significant digits in scientific notation.
pub fn format_value(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.11e}")
    }
}

pub fn write_table<W: Write>(table: &SweepTable, out: &mut W) -> std::io::Result<()> {
    for (k, v) in &table.header {
        writeln!(out, "# {k} = {v}")?;
    }
    writeln!(out, "{},status", table.columns.join(","))?;
    for row in &table.rows {
        let cells: Vec<String> = row.values.iter().map(|&x| format_value(x)).collect();
        let status = match &row.error {
            None => "ok".to_string(),
            Some(e) => format!("\"error: {}\"", e.replace('"', "'")),
        };
        writeln!(out, "{},{status}", cells.join(","))?;
    }
    Ok(())
}
