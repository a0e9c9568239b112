//! Power unit conversions. Everything inside the crate works in watts.

/// `P_dBm = 10 log10(P_W / 1 mW)`.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts / 1e-3).log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}
