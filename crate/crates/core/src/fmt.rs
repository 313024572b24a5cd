//! Fixed numeric formatting for CSV output.
//!
//! All float columns are written with 6 significant digits so repeated runs
//! produce byte-identical files (golden-file friendly).

/// Format with 6 significant digits, plain decimal notation.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return "nan".to_string();
    }
    if x == 0.0 {
        return "0.00000".to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (5 - exp).max(0) as usize;
    format!("{:.*}", decimals, x)
}
