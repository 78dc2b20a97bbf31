/// Scientific notation with 17 significant digits; enough to round-trip any
/// f64 and independent of locale.
pub fn sci17(x: f64) -> String {
    format!("{x:.16e}")
}
