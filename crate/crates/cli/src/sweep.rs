use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use rayon::prelude::*;

use fibercap::bounds::{closed_form_curve, gn_curve, RateCurve, RatePoint};
use fibercap::cgm::optimize_cgm;
use fibercap::estimator::{
    monotone_extension, quantized_complex_gaussian, rate_estimate_with, EstimatorOptions,
};
use fibercap::rng::derive_seed;

use crate::config::{Method, RunConfig};
use crate::output::{write_comparison, write_curve};
use crate::{CliError, Result};

/// Evaluates the configured method over the grid. Stochastic methods use
/// `derive_seed(seed, i)` at grid index `i` and are passed through
/// [`monotone_extension`].
pub fn sweep(cfg: &RunConfig) -> Result<RateCurve> {
    let grid = cfg.grid.power_grid()?;
    let chan = &cfg.chan;
    let estimated =
        |n_samples: usize, point: &(dyn Fn(usize, f64) -> fibercap::Result<RatePoint> + Sync)| {
            let points = grid
                .powers()
                .par_iter()
                .enumerate()
                .map(|(i, &power)| point(i, power))
                .collect::<fibercap::Result<Vec<_>>>()?;
            let curve = RateCurve {
                points,
                method: cfg.method.kind(),
                params: *chan,
                seed: Some(cfg.seed),
                n_samples: Some(n_samples),
            };
            Ok::<_, CliError>(monotone_extension(&curve))
        };
    match cfg.method {
        Method::ClosedForm => Ok(closed_form_curve(&grid, chan)?),
        Method::Gn => Ok(gn_curve(&grid, chan)?),
        Method::MonteCarlo { ns, nq, eps } => {
            // memory is an explicit user choice here, so N != 1 is allowed
            let options = EstimatorOptions {
                generalized_memory: true,
                ..Default::default()
            };
            estimated(ns, &|i, power| {
                let input = quantized_complex_gaussian(power, nq, eps)?;
                let est = rate_estimate_with(
                    &input,
                    chan,
                    ns,
                    derive_seed(cfg.seed, i as u64),
                    &options,
                )?;
                Ok(RatePoint {
                    power,
                    rate: est.clamped(),
                    std_err: est.std_error,
                })
            })
        }
        Method::Mixture { k, budget } => estimated(budget, &|i, power| {
            let opt = optimize_cgm(k, power, chan, budget, derive_seed(cfg.seed, i as u64))?;
            Ok(RatePoint {
                power,
                rate: opt.rate.clamped(),
                std_err: opt.rate.std_error,
            })
        }),
    }
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).map_err(|source| CliError::Io {
            path: p.to_path_buf(),
            source,
        })?),
        None => Box::new(io::stdout().lock()),
    })
}

/// [`sweep`], then CSV to `cfg.out` or standard output.
pub fn run(cfg: &RunConfig) -> Result<RateCurve> {
    let curve = sweep(cfg)?;
    write_curve(&curve, sink(cfg.out.as_deref())?)?;
    Ok(curve)
}

/// Sweeps every config over their shared grid and writes one CSV with a
/// rate and a standard-error column per config.
pub fn compare(configs: &[RunConfig], out: Option<&Path>) -> Result<Vec<RateCurve>> {
    let first = configs.first().ok_or(CliError::NoConfigs)?;
    let grid = first.grid.power_grid()?;
    for (i, cfg) in configs.iter().enumerate().skip(1) {
        if cfg.grid.power_grid()? != grid {
            return Err(CliError::GridMismatch { first: 0, other: i });
        }
    }
    let curves = configs.iter().map(sweep).collect::<Result<Vec<_>>>()?;
    let labels: Vec<&str> = configs.iter().map(|c| c.label.as_str()).collect();
    write_comparison(&labels, &curves, sink(out)?)?;
    Ok(curves)
}
