//! CSV export of matrices and vectors: a `state` column followed by one
//! column per value series.

use std::io::Write;

use crate::analysis::chain::TransitionMatrix;
use crate::error::{Error, Result};
use crate::format::fmt_sig;

pub fn write_matrix_csv<W: Write>(t: &TransitionMatrix, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["state".to_string()];
    header.extend(t.labels.iter().cloned());
    w.write_record(&header)?;
    for (i, label) in t.labels.iter().enumerate() {
        let mut row = vec![label.clone()];
        row.extend(t.matrix.row(i).iter().map(|v| fmt_sig(*v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes named vectors side by side, one row per state.
pub fn write_vectors_csv<W: Write>(labels: &[String], series: &[(&str, &[f64])], out: W) -> Result<()> {
    if let Some((name, _)) = series.iter().find(|(_, v)| v.len() != labels.len()) {
        return Err(Error::InvalidConfig(format!("series `{name}` has the wrong length")));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["state"];
    header.extend(series.iter().map(|(n, _)| *n));
    w.write_record(&header)?;
    for (i, label) in labels.iter().enumerate() {
        let mut row = vec![label.clone()];
        row.extend(series.iter().map(|(_, v)| fmt_sig(v[i])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
