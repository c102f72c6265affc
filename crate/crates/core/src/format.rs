/// Formats with 12 significant digits: plain notation for moderate magnitudes,
/// scientific otherwise.
pub fn sig12(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let e = v.abs().log10().floor() as i32;
    if (-5..12).contains(&e) {
        let prec = (11 - e).max(0) as usize;
        let s = format!("{v:.prec$}");
        // a carry can push the rounded value into the next decade
        let digits = s.trim_start_matches('-').replace('.', "").trim_start_matches('0').len();
        if digits > 12 && prec > 0 {
            let prec = prec - 1;
            return format!("{v:.prec$}");
        }
        s
    } else {
        format!("{v:.11e}")
    }
}
