//! Closed-form achievable rates for the finite-memory channel.
//!
//! With iid circularly symmetric Gaussian inputs of power `P`, the local
//! power `S_i` is a scaled chi-squared variable with `4N + 2` degrees of
//! freedom, so `E[S_i^3]` has the closed form [`s_bar`]. Scoring the true
//! channel against a memoryless AWGN auxiliary channel whose noise variance
//! is `sigma_a2 + eta * s_bar(P)` gives [`capacity_lower_bound`]. The memoryless
//! GN model ([`gn_capacity`]) is the `N -> infinity` limit.

use rayon::prelude::*;
use std::f64::consts::LOG2_E;
use std::fmt;

use crate::channel::ChannelParams;
use crate::error::{invalid, Error, Result};
use crate::rng::{complex_normal, stream_rng};
use crate::stats::MeanEstimate;
use crate::units::dbm_to_watts;

/// `E[S_i^3]` under iid CN(0, P) inputs: `P^3 (2N+3)(2N+2) / (2N+1)^2`.
pub fn s_bar(power: f64, memory: usize) -> Result<f64> {
    if !(power >= 0.0 && power.is_finite()) {
        return Err(invalid(
            "power",
            format!("must be finite and >= 0, got {power}"),
        ));
    }
    Ok(s_bar_unchecked(power, memory))
}

fn s_bar_unchecked(power: f64, memory: usize) -> f64 {
    let n = memory as f64;
    power.powi(3) * (2.0 * n + 3.0) * (2.0 * n + 2.0) / (2.0 * n + 1.0).powi(2)
}

const ORACLE_CHUNK: usize = 1 << 16;

/// Monte Carlo estimate of `E[S_i^3]` for an interior symbol under iid
/// CN(0, P) inputs. Independent of [`s_bar`]; used to cross-check it.
pub fn s_bar_mc_oracle(
    power: f64,
    memory: usize,
    samples: usize,
    seed: u64,
) -> Result<MeanEstimate> {
    if !(power >= 0.0 && power.is_finite()) {
        return Err(invalid(
            "power",
            format!("must be finite and >= 0, got {power}"),
        ));
    }
    if samples < 2 {
        return Err(invalid("samples", "need at least two samples"));
    }
    let window = 2 * memory + 1;
    let chunks = samples.div_ceil(ORACLE_CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c as u64);
            let count = ORACLE_CHUNK.min(samples - c * ORACLE_CHUNK);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let s = (0..window)
                    .map(|_| complex_normal(&mut rng, power).norm_sqr())
                    .sum::<f64>()
                    / window as f64;
                let cube = s * s * s;
                s1 += cube;
                s2 += cube * cube;
            }
            (s1, s2)
        })
        .collect();
    let (s1, s2) = sums
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let n = samples as f64;
    let mean = s1 / n;
    let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(MeanEstimate {
        mean,
        std_error: (var / n).sqrt(),
    })
}

fn require_nonlinear(params: &ChannelParams) -> Result<()> {
    if params.eta() > 0.0 {
        Ok(())
    } else {
        Err(Error::NoFiniteOptimum)
    }
}

/// Power maximizing the Gaussian-input bound for memory `N`.
pub fn p_star(params: &ChannelParams) -> Result<f64> {
    require_nonlinear(params)?;
    let n = params.memory() as f64;
    let num = params.sigma_a2() * (2.0 * n + 1.0).powi(2);
    let den = 2.0 * params.eta() * (2.0 * n + 3.0) * (2.0 * n + 2.0);
    Ok((num / den).cbrt())
}

/// Power maximizing the GN-model capacity, `(sigma_a2 / (2 eta))^(1/3)`.
pub fn gn_peak_power(params: &ChannelParams) -> Result<f64> {
    require_nonlinear(params)?;
    Ok((params.sigma_a2() / (2.0 * params.eta())).cbrt())
}

fn check_power(power: f64) -> Result<()> {
    if power >= 0.0 && power.is_finite() {
        Ok(())
    } else {
        Err(invalid(
            "power",
            format!("must be finite and >= 0, got {power}"),
        ))
    }
}

/// Gaussian-input lower bound on capacity in bits/symbol.
///
/// The unclamped rate `log2(1 + P / (sigma_a2 + eta * s_bar(P)))` peaks at
/// [`p_star`]; since capacity cannot decrease when the power constraint is
/// relaxed, powers above the peak reuse the peak rate.
pub fn capacity_lower_bound(power: f64, params: &ChannelParams) -> Result<f64> {
    check_power(power)?;
    let p = if params.eta() > 0.0 {
        power.min(p_star(params)?)
    } else {
        power
    };
    Ok(gaussian_rate(p, params))
}

fn gaussian_rate(power: f64, params: &ChannelParams) -> f64 {
    let noise = params.sigma_a2() + params.eta() * s_bar_unchecked(power, params.memory());
    (power / noise).ln_1p() * LOG2_E
}

/// Capacity of the memoryless GN model, `log2(1 + P / (sigma_a2 + eta P^3))`.
pub fn gn_capacity(power: f64, params: &ChannelParams) -> Result<f64> {
    check_power(power)?;
    Ok((power / (params.sigma_a2() + params.eta() * power.powi(3))).ln_1p() * LOG2_E)
}

/// Per-symbol auxiliary-channel rate when the auxiliary noise uses `eta * v`
/// in place of `eta * s_bar(P)`.
///
/// Maximized at `v = s_bar(P)`, where it reduces to the unclamped bound.
pub fn aux_variance_objective(v: f64, power: f64, params: &ChannelParams) -> Result<f64> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(invalid("v", format!("must be finite and >= 0, got {v}")));
    }
    check_power(power)?;
    let s2 = params.sigma_a2();
    let eta = params.eta();
    let true_noise = s2 + eta * s_bar_unchecked(power, params.memory());
    let aux_noise = s2 + eta * v;
    Ok(
        (power / aux_noise).ln_1p() * LOG2_E - true_noise / aux_noise * LOG2_E
            + (power + true_noise) / (power + aux_noise) * LOG2_E,
    )
}

/// Numerically maximizes [`aux_variance_objective`] over `v`.
///
/// Golden-section search on `ln v` followed by bisection on the sign of a
/// central-difference derivative. Needs `eta > 0` (otherwise `v` has no effect).
pub fn maximize_aux_variance(power: f64, params: &ChannelParams) -> Result<f64> {
    require_nonlinear(params)?;
    check_power(power)?;
    if power == 0.0 {
        return Err(invalid("power", "objective is flat at zero power"));
    }
    let f = |u: f64| aux_variance_objective(u.exp(), power, params).unwrap_or(f64::NEG_INFINITY);

    // walk uphill from the scale where eta * v matches the ASE noise
    let step = std::f64::consts::LN_10;
    let mut mid = (params.sigma_a2() / params.eta()).ln();
    let (mut lo, mut hi) = (mid - step, mid + step);
    for _ in 0..200 {
        let (fl, fm, fh) = (f(lo), f(mid), f(hi));
        if fm >= fl && fm >= fh {
            break;
        }
        if fl > fm {
            (lo, mid, hi) = (lo - step, lo, mid);
        } else {
            (lo, mid, hi) = (mid, hi, hi + step);
        }
    }
    let _ = mid;

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > 1e-4 {
        if fc > fd {
            hi = d;
            (d, fd) = (c, fc);
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            (c, fc) = (d, fd);
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }

    let slope = |v: f64| {
        let h = 1e-4 * v;
        let up = aux_variance_objective(v + h, power, params).unwrap_or(f64::NAN);
        let down = aux_variance_objective(v - h, power, params).unwrap_or(f64::NAN);
        up - down
    };
    let (mut a, mut b) = ((lo - 1e-3).exp(), (hi + 1e-3).exp());
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a) <= 1e-14 * m {
            break;
        }
        if slope(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Ordered abscissa of a power sweep, in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerGrid(Vec<f64>);

impl PowerGrid {
    pub fn new(powers: Vec<f64>) -> Result<Self> {
        if powers.is_empty() {
            return Err(invalid("powers", "grid is empty"));
        }
        if powers.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(invalid("powers", "all powers must be finite and > 0"));
        }
        if powers.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("powers", "powers must be strictly increasing"));
        }
        Ok(Self(powers))
    }

    /// Grid from `min_dbm` to `max_dbm` (inclusive) in steps of `step_db`.
    pub fn from_dbm_range(min_dbm: f64, max_dbm: f64, step_db: f64) -> Result<Self> {
        if !(step_db > 0.0 && step_db.is_finite()) {
            return Err(invalid("step", "dBm step must be > 0"));
        }
        if !(min_dbm.is_finite() && max_dbm.is_finite()) || max_dbm < min_dbm {
            return Err(invalid(
                "range",
                format!("bad dBm range [{min_dbm}, {max_dbm}]"),
            ));
        }
        let count = ((max_dbm - min_dbm) / step_db + 1e-9).floor() as usize + 1;
        Self::new(
            (0..count)
                .map(|i| dbm_to_watts(min_dbm + i as f64 * step_db))
                .collect(),
        )
    }

    pub fn powers(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// How a rate curve was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RateMethod {
    ClosedForm,
    Gn,
    MonteCarlo,
    Mixture,
}

impl RateMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            RateMethod::ClosedForm => "closed-form",
            RateMethod::Gn => "gn",
            RateMethod::MonteCarlo => "mc",
            RateMethod::Mixture => "cgm",
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, RateMethod::MonteCarlo | RateMethod::Mixture)
    }
}

impl fmt::Display for RateMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RateMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed-form" => Ok(RateMethod::ClosedForm),
            "gn" => Ok(RateMethod::Gn),
            "mc" => Ok(RateMethod::MonteCarlo),
            "cgm" => Ok(RateMethod::Mixture),
            other => Err(invalid(
                "method",
                format!("unknown method `{other}` (closed-form, gn, mc, cgm)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub power: f64,
    /// bits/symbol
    pub rate: f64,
    pub std_err: f64,
}

/// Rates over a power grid plus what is needed to reproduce them.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCurve {
    pub points: Vec<RatePoint>,
    pub method: RateMethod,
    pub params: ChannelParams,
    pub seed: Option<u64>,
    pub n_samples: Option<usize>,
}

impl RateCurve {
    pub fn rates(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.rate).collect()
    }
}

fn deterministic_curve(
    grid: &PowerGrid,
    params: &ChannelParams,
    method: RateMethod,
    rate: impl Fn(f64, &ChannelParams) -> Result<f64>,
) -> Result<RateCurve> {
    let points = grid
        .powers()
        .iter()
        .map(|&power| {
            Ok(RatePoint {
                power,
                rate: rate(power, params)?,
                std_err: 0.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateCurve {
        points,
        method,
        params: *params,
        seed: None,
        n_samples: None,
    })
}

/// [`capacity_lower_bound`] over a grid.
pub fn closed_form_curve(grid: &PowerGrid, params: &ChannelParams) -> Result<RateCurve> {
    deterministic_curve(grid, params, RateMethod::ClosedForm, capacity_lower_bound)
}

/// [`gn_capacity`] over a grid.
pub fn gn_curve(grid: &PowerGrid, params: &ChannelParams) -> Result<RateCurve> {
    deterministic_curve(grid, params, RateMethod::Gn, gn_capacity)
}
