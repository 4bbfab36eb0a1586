/// Formats `v` with 15 significant digits, the precision used in every CSV
/// the crate writes.
pub fn format_sig(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{v:.14e}");
    // Prefer plain notation for moderate magnitudes so files stay readable.
    let exp = v.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (14 - exp).max(0) as usize;
        let t = format!("{v:.decimals$}");
        if t.contains('.') {
            let t = t.trim_end_matches('0').trim_end_matches('.');
            return t.to_string();
        }
        return t;
    }
    s
}
