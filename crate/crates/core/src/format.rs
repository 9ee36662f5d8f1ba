//! Shared CSV number formatting.

/// A float at 17 significant digits in scientific notation, enough for the
/// value to round-trip exactly; every CSV emitted by this workspace formats
/// floats through here so reruns are byte-identical.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}
