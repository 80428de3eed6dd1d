//! Synthetic samples for the `generate` command.

use std::io::Write;

use eigenbreak_core::funcspace::CoeffSeries;

use crate::error::{Error, Result};

/// Header `n,a1,…,aT`, one row per curve.
pub fn write_coefficients<W: Write>(series: &CoeffSeries, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["n".to_string()];
    header.extend((1..=series.order()).map(|k| format!("a{k}")));
    w.write_record(&header)?;
    for (n, row) in series.rows().enumerate() {
        let mut rec = vec![(n + 1).to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::Input(e.to_string()))?;
    Ok(())
}

/// A smooth annual cycle, `mean - amplitude·cos(2πx)`.
pub fn seasonal(mean: f64, amplitude: f64) -> impl Fn(f64) -> f64 {
    move |x| mean - amplitude * (2.0 * std::f64::consts::PI * x).cos()
}
