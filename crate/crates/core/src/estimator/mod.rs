//! Monte Carlo achievable rates for the channel with memory.
//!
//! With iid inputs from a finite-support distribution, the rate is
//! `h(Y^n)/n - h(Y^n | X^{n+N})/n`. The output entropy comes from the
//! forward recursion in [`recursion`]; the conditional entropy reduces to
//! `E[log2(pi e (sigma_a2 + eta S^3))]` for an interior symbol.

pub mod aclb;
pub mod quantize;
pub mod recursion;

use rayon::prelude::*;
use std::f64::consts::{E, LOG2_E, PI};

use crate::bounds::{RateCurve, RatePoint};
use crate::channel::{simulate, ChannelParams, ComplexSequence};
use crate::error::{invalid, Error, Result};
use crate::rng::{derive_seed, stream_rng};
use crate::stats::{batch_means, mean_and_std_error};

pub use aclb::{aclb_discrete, mutual_information, TransitionMatrix};
pub use quantize::{
    quantize_gaussian, quantize_gaussian_with, quantized_complex_gaussian,
    quantized_complex_gaussian_with, QuantizedDistribution, ThresholdRule,
};
pub use recursion::{ForwardRecursion, MessagePassState};

use recursion::PowerClasses;

/// A Monte Carlo rate in bits/symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    /// Raw estimate; may be slightly negative through sampling noise.
    pub rate: f64,
    pub std_error: f64,
    /// Samples or recursion steps behind the estimate; 0 for exact values.
    pub n_samples: usize,
    pub seed: u64,
}

impl RateEstimate {
    /// The estimate clamped below at zero, as reported.
    pub fn clamped(&self) -> f64 {
        self.rate.max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorOptions {
    /// Batches for the batch-means standard error.
    pub batches: usize,
    /// Allow memory other than N = 1.
    pub generalized_memory: bool,
    /// Largest number of distinct window powers handled by exact
    /// enumeration in [`conditional_entropy_rate`].
    pub exact_limit: usize,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            batches: 20,
            generalized_memory: false,
            exact_limit: 1_000_000,
        }
    }
}

/// Estimate of `h(Y^n)/n` in bits from one simulated trajectory of
/// `n_steps` outputs.
pub fn output_entropy_rate(
    p_x: &QuantizedDistribution,
    params: &ChannelParams,
    n_steps: usize,
    seed: u64,
) -> Result<RateEstimate> {
    output_entropy_rate_with(p_x, params, n_steps, seed, &EstimatorOptions::default())
}

pub fn output_entropy_rate_with(
    p_x: &QuantizedDistribution,
    params: &ChannelParams,
    n_steps: usize,
    seed: u64,
    options: &EstimatorOptions,
) -> Result<RateEstimate> {
    if params.memory() != 1 && !options.generalized_memory {
        return Err(Error::UnsupportedMemory(params.memory()));
    }
    if n_steps == 0 {
        return Err(invalid("n_steps", "need at least one step"));
    }
    let mut recursion = ForwardRecursion::new(p_x, params)?;
    let mut rng = stream_rng(seed, 0);
    let x = ComplexSequence::new(p_x.sample(n_steps + params.memory(), &mut rng))?;
    let out = simulate(&x, n_steps, params, derive_seed(seed, 1))?;
    let values = out
        .y
        .iter()
        .map(|&y| recursion.step(y).map(|l| -l * LOG2_E))
        .collect::<Result<Vec<f64>>>()?;
    let est = batch_means(&values, options.batches);
    Ok(RateEstimate {
        rate: est.mean,
        std_error: est.std_error,
        n_samples: n_steps,
        seed,
    })
}

fn conditional_entropy_term(params: &ChannelParams, window_sum: f64) -> f64 {
    let s = window_sum / params.window_len() as f64;
    (PI * E * params.noise_variance(s)).log2()
}

/// Distribution of the total power of `terms` iid symbols, or `None` when
/// it has more than `limit` distinct values.
fn window_power_distribution(
    classes: &PowerClasses,
    terms: usize,
    limit: usize,
) -> Option<Vec<(f64, f64)>> {
    let base: Vec<(f64, f64)> = classes
        .powers
        .iter()
        .zip(&classes.probs)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&w, &p)| (w, p))
        .collect();
    let mut dist = vec![(0.0, 1.0)];
    for _ in 0..terms {
        if dist.len().saturating_mul(base.len()) > limit.saturating_mul(base.len().max(1)) {
            return None;
        }
        let mut next: Vec<(f64, f64)> = dist
            .iter()
            .flat_map(|&(s, p)| base.iter().map(move |&(w, q)| (s + w, p * q)))
            .collect();
        next.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(next.len());
        for (s, p) in next {
            match merged.last_mut() {
                Some(last) if s - last.0 <= 1e-12 * s.abs().max(last.0.abs()) => last.1 += p,
                _ => merged.push((s, p)),
            }
        }
        if merged.len() > limit {
            return None;
        }
        dist = merged;
    }
    Some(dist)
}

/// `h(Y_i | X)` in bits for an interior symbol.
///
/// Evaluated exactly from the distribution of the window power when that
/// has at most `exact_limit` distinct values (standard error 0), otherwise
/// by Monte Carlo over `n_samples` windows.
pub fn conditional_entropy_rate(
    p_x: &QuantizedDistribution,
    params: &ChannelParams,
    n_samples: usize,
    seed: u64,
) -> Result<RateEstimate> {
    conditional_entropy_rate_with(p_x, params, n_samples, seed, &EstimatorOptions::default())
}

pub fn conditional_entropy_rate_with(
    p_x: &QuantizedDistribution,
    params: &ChannelParams,
    n_samples: usize,
    seed: u64,
    options: &EstimatorOptions,
) -> Result<RateEstimate> {
    let classes = PowerClasses::new(p_x);
    if let Some(dist) =
        window_power_distribution(&classes, params.window_len(), options.exact_limit)
    {
        let rate = dist
            .iter()
            .map(|&(s, p)| p * conditional_entropy_term(params, s))
            .sum();
        return Ok(RateEstimate {
            rate,
            std_error: 0.0,
            n_samples: 0,
            seed,
        });
    }
    conditional_entropy_monte_carlo(p_x, params, n_samples, seed)
}

const CHUNK: usize = 1 << 14;

/// Monte Carlo form of [`conditional_entropy_rate`].
pub fn conditional_entropy_monte_carlo(
    p_x: &QuantizedDistribution,
    params: &ChannelParams,
    n_samples: usize,
    seed: u64,
) -> Result<RateEstimate> {
    if n_samples < 2 {
        return Err(invalid("n_samples", "need at least two samples"));
    }
    let window = params.window_len();
    let chunks = n_samples.div_ceil(CHUNK);
    let values: Vec<f64> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = stream_rng(seed, c as u64);
            let count = CHUNK.min(n_samples - c * CHUNK);
            let draws = p_x.sample(count * window, &mut rng);
            draws
                .chunks_exact(window)
                .map(|w| conditional_entropy_term(params, w.iter().map(|z| z.norm_sqr()).sum()))
                .collect::<Vec<_>>()
        })
        .collect();
    let est = mean_and_std_error(&values);
    Ok(RateEstimate {
        rate: est.mean,
        std_error: est.std_error,
        n_samples,
        seed,
    })
}

/// Achievable rate `h(Y)/n - h(Y|X)/n` for iid inputs from `p_x`.
pub fn rate_estimate(
    p_x: &QuantizedDistribution,
    params: &ChannelParams,
    n_steps: usize,
    seed: u64,
) -> Result<RateEstimate> {
    rate_estimate_with(p_x, params, n_steps, seed, &EstimatorOptions::default())
}

pub fn rate_estimate_with(
    p_x: &QuantizedDistribution,
    params: &ChannelParams,
    n_steps: usize,
    seed: u64,
    options: &EstimatorOptions,
) -> Result<RateEstimate> {
    let out = output_entropy_rate_with(p_x, params, n_steps, seed, options)?;
    let cond =
        conditional_entropy_rate_with(p_x, params, n_steps.max(2), derive_seed(seed, 2), options)?;
    Ok(RateEstimate {
        rate: out.rate - cond.rate,
        std_error: out.std_error.hypot(cond.std_error),
        n_samples: n_steps,
        seed,
    })
}

/// Running maximum of a power-sorted curve.
///
/// Capacity is non-decreasing in the power constraint, so any rate achieved
/// at a lower power is also achievable at every higher one.
pub fn monotone_extension(curve: &RateCurve) -> RateCurve {
    let mut best: Option<RatePoint> = None;
    let points = curve
        .points
        .iter()
        .map(|p| {
            let keep = match best {
                Some(b) if b.rate > p.rate => b,
                _ => *p,
            };
            best = Some(keep);
            RatePoint {
                power: p.power,
                rate: keep.rate,
                std_err: keep.std_err,
            }
        })
        .collect();
    RateCurve {
        points,
        ..curve.clone()
    }
}
