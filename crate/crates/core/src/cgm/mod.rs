//! Complex Gaussian mixture (CGM) inputs.
//!
//! A CGM of order `K` draws component `k` with probability `alpha_k` and then
//! a proper complex Gaussian with mean `mu_k` and total variance `P_k`
//! (`P_k / 2` per real dimension). Feeding iid CGM symbols through the true
//! channel and scoring the outputs against a memoryless AWGN auxiliary
//! channel of variance `sigma_a2 + eta * S_bar_K`, with
//! `S_bar_K = E[S_i^3]`, gives an achievable rate that can be maximized over
//! the mixture parameters ([`optimize_cgm`]).
//!
//! Random draws are stored once per seed and mapped through the mixture
//! parameters, so for a fixed seed every quantity here is a deterministic
//! function of the parameters. Components are put in a canonical order
//! before use, which makes results invariant to relabeling.

mod optimize;

pub use optimize::{
    optimize_cgm, optimize_cgm_with, project_to_feasible, CgmOptimum, CgmSearchConfig,
};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::{E, LOG2_E, PI};

use crate::channel::{ChannelParams, ComplexSequence};
use crate::error::{invalid, Error, Result};
use crate::estimator::{QuantizedDistribution, RateEstimate};
use crate::rng::{complex_normal, stream_rng, SimRng};
use crate::stats::{mean_and_std_error, MeanEstimate};

/// Weights, means and variances of a complex Gaussian mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct CgmParams {
    weights: Vec<f64>,
    means: Vec<Complex64>,
    variances: Vec<f64>,
}

impl CgmParams {
    pub fn new(weights: Vec<f64>, means: Vec<Complex64>, variances: Vec<f64>) -> Result<Self> {
        let k = weights.len();
        if k == 0 {
            return Err(invalid("weights", "mixture needs at least one component"));
        }
        if means.len() != k || variances.len() != k {
            return Err(invalid(
                "means",
                "weights, means and variances differ in length",
            ));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("weights", "weights must be finite and >= 0"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid("weights", format!("weights sum to {total}")));
        }
        if variances.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("variances", "variances must be finite and >= 0"));
        }
        if means
            .iter()
            .any(|m| !(m.re.is_finite() && m.im.is_finite()))
        {
            return Err(invalid("means", "means must be finite"));
        }
        Ok(Self {
            weights,
            means,
            variances,
        })
    }

    /// Circularly symmetric CN(0, power) as an order-1 mixture.
    pub fn gaussian(power: f64) -> Result<Self> {
        Self::new(vec![1.0], vec![Complex64::new(0.0, 0.0)], vec![power])
    }

    pub fn order(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[Complex64] {
        &self.means
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    /// `sum_k alpha_k mu_k`.
    pub fn mean(&self) -> Complex64 {
        self.weights
            .iter()
            .zip(&self.means)
            .map(|(w, m)| m * w)
            .sum()
    }

    /// `sum_k alpha_k (P_k + |mu_k|^2)`.
    pub fn power(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.variances)
            .map(|((w, m), v)| w * (v + m.norm_sqr()))
            .sum()
    }

    /// Checks the zero-mean and average-power constraints for `power`.
    pub fn check_input_constraints(&self, power: f64) -> Result<()> {
        let scale = power.abs().sqrt().max(f64::MIN_POSITIVE);
        if self.mean().norm() > 1e-9 * scale {
            return Err(Error::Infeasible(format!(
                "mixture mean {} is not zero",
                self.mean()
            )));
        }
        let p = self.power();
        if (p - power).abs() > 1e-9 * power.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::Infeasible(format!(
                "mixture power {p} differs from {power}"
            )));
        }
        Ok(())
    }

    /// Components sorted by (weight, variance, mean).
    pub fn canonical(&self) -> Self {
        let mut idx: Vec<usize> = (0..self.order()).collect();
        idx.sort_by(|&a, &b| {
            self.weights[a]
                .total_cmp(&self.weights[b])
                .then(self.variances[a].total_cmp(&self.variances[b]))
                .then(self.means[a].re.total_cmp(&self.means[b].re))
                .then(self.means[a].im.total_cmp(&self.means[b].im))
        });
        Self {
            weights: idx.iter().map(|&i| self.weights[i]).collect(),
            means: idx.iter().map(|&i| self.means[i]).collect(),
            variances: idx.iter().map(|&i| self.variances[i]).collect(),
        }
    }

    /// Log of the mixture density at `y` after adding independent
    /// CN(0, `extra`) noise to every component.
    fn log_density(&self, y: Complex64, extra: f64) -> f64 {
        let mut terms = [0.0f64; 32];
        let mut heap = Vec::new();
        let buf: &mut [f64] = if self.order() <= terms.len() {
            &mut terms[..self.order()]
        } else {
            heap.resize(self.order(), 0.0);
            &mut heap
        };
        let mut peak = f64::NEG_INFINITY;
        for (slot, ((w, m), v)) in buf
            .iter_mut()
            .zip(self.weights.iter().zip(&self.means).zip(&self.variances))
        {
            let var = v + extra;
            *slot = if *w > 0.0 {
                w.ln() - (y - m).norm_sqr() / var - (PI * var).ln()
            } else {
                f64::NEG_INFINITY
            };
            peak = peak.max(*slot);
        }
        peak + buf.iter().map(|t| (t - peak).exp()).sum::<f64>().ln()
    }
}

/// Stored uniform and Gaussian variates that map to mixture samples.
#[derive(Debug, Clone)]
struct MixtureDraws {
    selectors: Vec<f64>,
    shapes: Vec<Complex64>,
}

impl MixtureDraws {
    fn generate(n: usize, rng: &mut SimRng) -> Self {
        let mut selectors = Vec::with_capacity(n);
        let mut shapes = Vec::with_capacity(n);
        for _ in 0..n {
            selectors.push(rng.random::<f64>());
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            shapes.push(Complex64::new(re, im));
        }
        Self { selectors, shapes }
    }

    fn len(&self) -> usize {
        self.selectors.len()
    }
}

/// Canonical mixture prepared for fast sampling.
struct Sampler {
    cumulative: Vec<f64>,
    means: Vec<Complex64>,
    scales: Vec<f64>,
}

impl Sampler {
    fn new(params: &CgmParams) -> Self {
        let mut acc = 0.0;
        let cumulative = params
            .weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Self {
            cumulative,
            means: params.means.clone(),
            scales: params.variances.iter().map(|v| (0.5 * v).sqrt()).collect(),
        }
    }

    #[inline]
    fn draw(&self, u: f64, shape: Complex64) -> Complex64 {
        let last = self.cumulative.len() - 1;
        let k = self.cumulative[..last]
            .iter()
            .position(|&c| u < c)
            .unwrap_or(last);
        self.means[k] + shape * self.scales[k]
    }
}

/// Common random numbers for the mixture objective: windows of mixture
/// draws for `E[S^3]`, and windows plus channel noise for output samples.
#[derive(Debug, Clone)]
pub struct CgmNoiseBank {
    memory: usize,
    moment_draws: MixtureDraws,
    output_draws: MixtureDraws,
    ase: Vec<Complex64>,
    nonlinear: Vec<Complex64>,
}

impl CgmNoiseBank {
    /// `moment_windows` windows for the `E[S^3]` estimate and
    /// `output_samples` channel outputs, all drawn from `seed`.
    pub fn new(memory: usize, moment_windows: usize, output_samples: usize, seed: u64) -> Self {
        let window = 2 * memory + 1;
        let moment_draws =
            MixtureDraws::generate(moment_windows * window, &mut stream_rng(seed, 0));
        let mut rng = stream_rng(seed, 1);
        let output_draws = MixtureDraws::generate(output_samples * window, &mut rng);
        let ase = (0..output_samples)
            .map(|_| complex_normal(&mut rng, 1.0))
            .collect();
        let nonlinear = (0..output_samples)
            .map(|_| complex_normal(&mut rng, 1.0))
            .collect();
        Self {
            memory,
            moment_draws,
            output_draws,
            ase,
            nonlinear,
        }
    }

    fn window(&self) -> usize {
        2 * self.memory + 1
    }

    pub fn moment_windows(&self) -> usize {
        self.moment_draws.len() / self.window()
    }

    pub fn output_samples(&self) -> usize {
        self.ase.len()
    }

    /// `E[S_i^3]` for an interior symbol under iid draws from `params`.
    pub fn s_bar(&self, params: &CgmParams) -> MeanEstimate {
        let sampler = Sampler::new(&params.canonical());
        let window = self.window();
        let cubes: Vec<f64> = self
            .moment_draws
            .selectors
            .chunks_exact(window)
            .zip(self.moment_draws.shapes.chunks_exact(window))
            .map(|(us, gs)| {
                let s = us
                    .iter()
                    .zip(gs)
                    .map(|(&u, &g)| sampler.draw(u, g).norm_sqr())
                    .sum::<f64>()
                    / window as f64;
                s * s * s
            })
            .collect();
        mean_and_std_error(&cubes)
    }

    /// Auxiliary-channel rate in bits for mixture input, with `s_bar_k` as
    /// the auxiliary nonlinear-noise moment.
    pub fn rate(&self, params: &CgmParams, chan: &ChannelParams, s_bar_k: f64) -> MeanEstimate {
        let canonical = params.canonical();
        let sampler = Sampler::new(&canonical);
        let window = self.window();
        let centre = self.memory;
        let aux_var = chan.sigma_a2() + chan.eta() * s_bar_k;
        let ase_scale = chan.sigma_a2().sqrt();
        let neg_log_q: Vec<f64> = self
            .output_draws
            .selectors
            .chunks_exact(window)
            .zip(self.output_draws.shapes.chunks_exact(window))
            .zip(self.ase.iter().zip(&self.nonlinear))
            .map(|((us, gs), (&a, &z))| {
                let mut s = 0.0;
                let mut x_centre = Complex64::new(0.0, 0.0);
                for (j, (&u, &g)) in us.iter().zip(gs).enumerate() {
                    let x = sampler.draw(u, g);
                    s += x.norm_sqr();
                    if j == centre {
                        x_centre = x;
                    }
                }
                s /= window as f64;
                let y = x_centre + a * ase_scale + z * (chan.eta() * s * s * s).sqrt();
                -canonical.log_density(y, aux_var) * LOG2_E
            })
            .collect();
        let est = mean_and_std_error(&neg_log_q);
        MeanEstimate {
            mean: est.mean - (PI * E * aux_var).log2(),
            std_error: est.std_error,
        }
    }
}

/// Independent draws from the mixture.
pub fn sample_cgm(params: &CgmParams, n: usize, seed: u64) -> Result<ComplexSequence> {
    let draws = MixtureDraws::generate(n, &mut stream_rng(seed, 0));
    let sampler = Sampler::new(&params.canonical());
    ComplexSequence::new(
        draws
            .selectors
            .iter()
            .zip(&draws.shapes)
            .map(|(&u, &g)| sampler.draw(u, g))
            .collect(),
    )
}

/// Monte Carlo `E[S_i^3]` under iid mixture inputs, over `samples` windows.
pub fn s_bar_cgm(
    params: &CgmParams,
    memory: usize,
    samples: usize,
    seed: u64,
) -> Result<MeanEstimate> {
    if samples < 2 {
        return Err(invalid("samples", "need at least two samples"));
    }
    Ok(CgmNoiseBank::new(memory, samples, 0, seed).s_bar(params))
}

/// Auxiliary-channel achievable rate for iid mixture inputs.
///
/// `-E[log2 q(Y)] - log2(pi e (sigma_a2 + eta s_bar_k))`, where `Y` comes
/// from the true channel and `q` is the mixture convolved with
/// CN(0, sigma_a2 + eta s_bar_k), using the complex density normalization
/// `1 / (pi v)`.
pub fn cgm_rate_objective(
    params: &CgmParams,
    chan: &ChannelParams,
    s_bar_k: f64,
    samples: usize,
    seed: u64,
) -> Result<RateEstimate> {
    if samples < 2 {
        return Err(invalid("samples", "need at least two samples"));
    }
    if !(s_bar_k >= 0.0 && s_bar_k.is_finite()) {
        return Err(invalid(
            "s_bar_k",
            format!("must be finite and >= 0, got {s_bar_k}"),
        ));
    }
    let est = CgmNoiseBank::new(chan.memory(), 0, samples, seed).rate(params, chan, s_bar_k);
    Ok(RateEstimate {
        rate: est.mean,
        std_error: est.std_error,
        n_samples: samples,
        seed,
    })
}

/// Mixture with one component per atom of `target`, each with variance
/// `1/m` per real dimension. Converges weakly to `target` as `m` grows.
pub fn cgm_weak_approximation_check(target: &QuantizedDistribution, m: f64) -> Result<CgmParams> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(invalid("m", format!("must be > 0, got {m}")));
    }
    CgmParams::new(
        target.probs().to_vec(),
        target.atoms().to_vec(),
        vec![2.0 / m; target.len()],
    )
}

/// Sum over the real and imaginary axes of the 1-D Wasserstein-1 distance
/// between two equally sized samples (sorted coupling per axis).
pub fn coordinate_w1_distance(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(invalid(
            "samples",
            "need two non-empty samples of equal size",
        ));
    }
    let axis = |f: fn(&Complex64) -> f64| {
        let mut xa: Vec<f64> = a.iter().map(f).collect();
        let mut xb: Vec<f64> = b.iter().map(f).collect();
        xa.sort_by(f64::total_cmp);
        xb.sort_by(f64::total_cmp);
        xa.iter().zip(&xb).map(|(p, q)| (p - q).abs()).sum::<f64>() / a.len() as f64
    };
    Ok(axis(|z| z.re) + axis(|z| z.im))
}
