//! Deterministic text rendering for reports. Floats are printed with 17
//! significant digits so that every CSV value round-trips to the exact
//! f64 bit pattern, which is what the golden-file and determinism tests
//! rely on.

/// Render a float with 17 significant digits (lossless for f64).
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Render one CSV row from already formatted cells.
pub fn csv_row(cells: &[String]) -> String {
    let mut out = cells.join(",");
    out.push('\n');
    out
}
