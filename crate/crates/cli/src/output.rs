use std::io::Write;

use fibercap::bounds::RateCurve;
use fibercap::units::watts_to_dbm;

use crate::Result;

pub const CSV_HEADER: [&str; 7] = [
    "power_w",
    "power_dbm",
    "rate_bits_per_symbol",
    "std_err",
    "method",
    "memory_n",
    "seed",
];

/// 17 significant digits, enough to round-trip any f64.
fn float(v: f64) -> String {
    format!("{v:.16e}")
}

/// One row per grid point. The seed column is empty for deterministic
/// methods.
pub fn write_curve<W: Write>(curve: &RateCurve, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    let seed = curve.seed.map(|s| s.to_string()).unwrap_or_default();
    let memory = curve.params.memory().to_string();
    for p in &curve.points {
        out.write_record([
            float(p.power),
            float(watts_to_dbm(p.power)),
            float(p.rate),
            float(p.std_err),
            curve.method.to_string(),
            memory.clone(),
            seed.clone(),
        ])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// `power_w,power_dbm` followed by `<label>_rate,<label>_std_err` per curve.
/// All curves must share the same powers.
pub fn write_comparison<W: Write>(labels: &[&str], curves: &[RateCurve], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["power_w".to_string(), "power_dbm".to_string()];
    for label in labels {
        header.push(format!("{label}_rate"));
        header.push(format!("{label}_std_err"));
    }
    out.write_record(&header)?;
    let Some(first) = curves.first() else {
        return Ok(());
    };
    for (i, p) in first.points.iter().enumerate() {
        let mut row = vec![float(p.power), float(watts_to_dbm(p.power))];
        for c in curves {
            row.push(float(c.points[i].rate));
            row.push(float(c.points[i].std_err));
        }
        out.write_record(&row)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}
