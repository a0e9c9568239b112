use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::{CgmNoiseBank, CgmParams};
use crate::channel::ChannelParams;
use crate::error::{invalid, Error, Result};
use crate::estimator::RateEstimate;
use crate::rng::{derive_seed, stream_rng};
use crate::stats::MeanEstimate;

/// Per-component coordinates of the search vector: raw weight, real and
/// imaginary mean in units of `sqrt(P)`, variance in units of `P`.
const COORDS: usize = 4;

/// Maps a search vector of length `4 k` onto a feasible mixture of power
/// `power`.
///
/// Negative weights and variances are clipped to zero and the weights
/// renormalized (uniform if all vanish). Means are recentred on their
/// weighted average, then variances and squared means are scaled together
/// so the power constraint holds. If nothing carries power, every
/// component becomes CN(0, power).
pub fn project_to_feasible(theta: &[f64], k: usize, power: f64) -> Result<CgmParams> {
    if k == 0 {
        return Err(invalid("k", "mixture order must be >= 1"));
    }
    if theta.len() != COORDS * k {
        return Err(invalid(
            "theta",
            format!("expected {} coordinates, got {}", COORDS * k, theta.len()),
        ));
    }
    if !(power >= 0.0 && power.is_finite()) {
        return Err(invalid(
            "power",
            format!("must be finite and >= 0, got {power}"),
        ));
    }
    let comp = |i: usize| &theta[COORDS * i..COORDS * (i + 1)];
    let clip = |v: f64| if v.is_finite() { v.max(0.0) } else { 0.0 };
    let finite = |v: f64| if v.is_finite() { v } else { 0.0 };

    let mut weights: Vec<f64> = (0..k).map(|i| clip(comp(i)[0])).collect();
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        weights.iter_mut().for_each(|w| *w /= total);
    } else {
        weights.fill(1.0 / k as f64);
    }
    let root = power.sqrt();
    let mut means: Vec<Complex64> = (0..k)
        .map(|i| Complex64::new(finite(comp(i)[1]), finite(comp(i)[2])) * root)
        .collect();
    let centre: Complex64 = weights.iter().zip(&means).map(|(w, m)| m * w).sum();
    means.iter_mut().for_each(|m| *m -= centre);
    let mut variances: Vec<f64> = (0..k).map(|i| clip(comp(i)[3]) * power).collect();

    let current: f64 = weights
        .iter()
        .zip(&means)
        .zip(&variances)
        .map(|((w, m), v)| w * (v + m.norm_sqr()))
        .sum();
    if current > 0.0 && current.is_finite() {
        let c = power / current;
        variances.iter_mut().for_each(|v| *v *= c);
        means.iter_mut().for_each(|m| *m *= c.sqrt());
    } else {
        means.fill(Complex64::new(0.0, 0.0));
        variances.fill(power);
    }
    // the weights may not sum to one bit-exactly after division
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    CgmParams::new(weights, means, variances)
}

/// Inverse of [`project_to_feasible`] for a mixture already feasible at
/// `power`.
fn to_theta(params: &CgmParams, power: f64) -> Vec<f64> {
    let root = power.sqrt();
    params
        .weights()
        .iter()
        .zip(params.means())
        .zip(params.variances())
        .flat_map(|((w, m), v)| [*w, m.re / root, m.im / root, v / power])
        .collect()
}

/// Sample sizes and search shape for [`optimize_cgm_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct CgmSearchConfig {
    /// Windows used for each `E[S^3]` estimate.
    pub sbar_windows: usize,
    /// Channel outputs used for each objective evaluation.
    pub objective_samples: usize,
    /// Channel outputs used to re-score the final candidates on fresh noise.
    pub validation_samples: usize,
    /// Number of search starts, the first of which is the Gaussian.
    pub starts: usize,
    /// Simplex convergence threshold on the spread of objective values.
    pub tolerance: f64,
}

impl Default for CgmSearchConfig {
    fn default() -> Self {
        Self {
            sbar_windows: 100_000,
            objective_samples: 10_000,
            validation_samples: 100_000,
            starts: 4,
            tolerance: 1e-7,
        }
    }
}

/// Result of [`optimize_cgm`].
#[derive(Debug, Clone, PartialEq)]
pub struct CgmOptimum {
    pub params: CgmParams,
    /// Rate of `params` on validation noise independent of the search.
    pub rate: RateEstimate,
    /// `E[S^3]` for `params` on the validation noise.
    pub s_bar: MeanEstimate,
    /// Rate of the Gaussian input on the same validation noise.
    pub gaussian_rate: RateEstimate,
    /// Objective evaluations spent by the search.
    pub evaluations: usize,
}

/// Maximizes the mixture rate over order-`k` mixtures with the default
/// [`CgmSearchConfig`]. `budget` caps the number of objective evaluations.
pub fn optimize_cgm(
    k: usize,
    power: f64,
    chan: &ChannelParams,
    budget: usize,
    seed: u64,
) -> Result<CgmOptimum> {
    optimize_cgm_with(k, power, chan, budget, seed, &CgmSearchConfig::default())
}

pub fn optimize_cgm_with(
    k: usize,
    power: f64,
    chan: &ChannelParams,
    budget: usize,
    seed: u64,
    config: &CgmSearchConfig,
) -> Result<CgmOptimum> {
    if k == 0 {
        return Err(invalid("k", "mixture order must be >= 1"));
    }
    if !(power >= 0.0 && power.is_finite()) {
        return Err(invalid(
            "power",
            format!("must be finite and >= 0, got {power}"),
        ));
    }
    if power == 0.0 {
        return Err(Error::Infeasible(
            "zero power admits only the all-zero input".into(),
        ));
    }
    if config.starts == 0 || budget < config.starts {
        return Err(invalid(
            "budget",
            format!("need at least one evaluation per start ({})", config.starts),
        ));
    }
    if config.sbar_windows < 2 || config.objective_samples < 2 || config.validation_samples < 2 {
        return Err(invalid("config", "sample sizes must be >= 2"));
    }

    let bank = CgmNoiseBank::new(
        chan.memory(),
        config.sbar_windows,
        config.objective_samples,
        derive_seed(seed, 0),
    );
    let objective = |theta: &[f64]| -> f64 {
        match project_to_feasible(theta, k, power) {
            Ok(p) => {
                let sb = bank.s_bar(&p).mean;
                -bank.rate(&p, chan, sb).mean
            }
            Err(_) => f64::INFINITY,
        }
    };

    let gaussian = to_theta(
        &project_to_feasible(&[1.0, 0.0, 0.0, 1.0].repeat(k), k, power)?,
        power,
    );
    let per_start = budget / config.starts;
    let results: Vec<(Vec<f64>, f64, usize)> = (0..config.starts)
        .into_par_iter()
        .map(|s| {
            let start = if s == 0 {
                gaussian.clone()
            } else {
                let mut rng = stream_rng(derive_seed(seed, 1), s as u64);
                (0..k)
                    .flat_map(|_| {
                        [
                            rng.random_range(0.2..1.0),
                            rng.random_range(-0.5..0.5),
                            rng.random_range(-0.5..0.5),
                            rng.random_range(0.2..1.0),
                        ]
                    })
                    .collect()
            };
            nelder_mead(&objective, start, per_start, config.tolerance)
        })
        .collect();
    let evaluations = results.iter().map(|r| r.2).sum();
    let (best_theta, _, _) = results
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one start");

    let check = CgmNoiseBank::new(
        chan.memory(),
        config.sbar_windows,
        config.validation_samples,
        derive_seed(seed, 2),
    );
    let score = |p: &CgmParams| {
        let sb = check.s_bar(p);
        let r = check.rate(p, chan, sb.mean);
        let est = RateEstimate {
            rate: r.mean,
            std_error: r.std_error,
            n_samples: config.validation_samples,
            seed: derive_seed(seed, 2),
        };
        (est, sb)
    };
    let gaussian_params = CgmParams::gaussian(power)?;
    let (gaussian_rate, gaussian_sbar) = score(&gaussian_params);
    let best = project_to_feasible(&best_theta, k, power)?.canonical();
    let (rate, s_bar) = score(&best);
    let (params, rate, s_bar) = if rate.rate >= gaussian_rate.rate {
        (best, rate, s_bar)
    } else {
        (
            project_to_feasible(&gaussian, k, power)?,
            gaussian_rate,
            gaussian_sbar,
        )
    };
    Ok(CgmOptimum {
        params,
        rate,
        s_bar,
        gaussian_rate,
        evaluations,
    })
}

/// Nelder-Mead minimization with restarts around the incumbent once the
/// simplex collapses. Returns the best point, its value and the number of
/// evaluations used.
fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &F,
    start: Vec<f64>,
    budget: usize,
    tolerance: f64,
) -> (Vec<f64>, f64, usize) {
    let dim = start.len();
    let mut evals = 0usize;
    let eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        f(x)
    };
    let mut best_x = start.clone();
    let mut best_f = eval(&start, &mut evals);
    let mut step = 0.25;

    while evals + dim < budget {
        let mut simplex: Vec<(Vec<f64>, f64)> = vec![(best_x.clone(), best_f)];
        for i in 0..dim {
            let mut x = best_x.clone();
            x[i] += if x[i].abs() > 1e-3 {
                step * x[i].abs().max(0.1)
            } else {
                step
            };
            let fx = eval(&x, &mut evals);
            simplex.push((x, fx));
        }
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let spread = simplex[dim].1 - simplex[0].1;
            if evals + 2 > budget || spread.abs() <= tolerance * (1.0 + simplex[0].1.abs()) {
                break;
            }
            let centroid: Vec<f64> = (0..dim)
                .map(|j| simplex[..dim].iter().map(|p| p.0[j]).sum::<f64>() / dim as f64)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[dim].0)
                    .map(|(c, w)| c + t * (w - c))
                    .collect()
            };
            let xr = along(-1.0);
            let fr = eval(&xr, &mut evals);
            if fr < simplex[0].1 {
                let xe = along(-2.0);
                let fe = eval(&xe, &mut evals);
                simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[dim - 1].1 {
                simplex[dim] = (xr, fr);
            } else {
                let (xc, fc) = if fr < simplex[dim].1 {
                    let x = along(-0.5);
                    let v = eval(&x, &mut evals);
                    (x, v)
                } else {
                    let x = along(0.5);
                    let v = eval(&x, &mut evals);
                    (x, v)
                };
                if fc < simplex[dim].1.min(fr) {
                    simplex[dim] = (xc, fc);
                } else {
                    if evals + dim > budget {
                        break;
                    }
                    let anchor = simplex[0].0.clone();
                    for p in simplex.iter_mut().skip(1) {
                        p.0 = anchor
                            .iter()
                            .zip(&p.0)
                            .map(|(a, x)| a + 0.5 * (x - a))
                            .collect();
                        p.1 = eval(&p.0, &mut evals);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 < best_f {
            best_x = simplex[0].0.clone();
            best_f = simplex[0].1;
        } else {
            step *= 0.5;
            if step < 1e-4 {
                break;
            }
        }
    }
    (best_x, best_f, evals)
}
