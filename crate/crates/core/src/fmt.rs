//! Deterministic float formatting for CSV and report output.

/// Render with 12 significant digits in scientific notation; exact zero
/// prints as `0`. Identical inputs always yield identical bytes.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x:.11e}")
    }
}
