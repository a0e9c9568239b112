//! The finite-memory optical channel.
//!
//! Each output is `y_i = x_i + a_i + z_i * sqrt(eta * S_i^3)` where `a_i` is
//! ASE noise of variance `sigma_a2`, `z_i` is unit complex Gaussian noise and
//! `S_i` is the average input power over the window `[i - N, i + N]`.
//! Positions outside the input contribute zero power.
//!
//! Indices in this module are zero-based.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::rng::{complex_normal, stream_rng};

/// Nonlinearity coefficient used by the reference fiber, in W⁻².
pub const REFERENCE_ETA: f64 = 7244.0;
/// ASE noise variance of the reference fiber, in W.
pub const REFERENCE_SIGMA_A2: f64 = 4.1e-6;

/// Physical constants of the channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    eta: f64,
    sigma_a2: f64,
    memory: usize,
}

impl ChannelParams {
    /// `eta` in W⁻², `sigma_a2` in W, `memory` is the window half-width N.
    pub fn new(eta: f64, sigma_a2: f64, memory: usize) -> Result<Self> {
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(invalid(
                "eta",
                format!("must be finite and >= 0, got {eta}"),
            ));
        }
        if !(sigma_a2.is_finite() && sigma_a2 > 0.0) {
            return Err(invalid(
                "sigma_a2",
                format!("must be finite and > 0, got {sigma_a2}"),
            ));
        }
        Ok(Self {
            eta,
            sigma_a2,
            memory,
        })
    }

    /// The reference fiber (eta = 7244 W⁻², sigma_A² = 4.1e-6 W).
    pub fn reference(memory: usize) -> Self {
        Self {
            eta: REFERENCE_ETA,
            sigma_a2: REFERENCE_SIGMA_A2,
            memory,
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn sigma_a2(&self) -> f64 {
        self.sigma_a2
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn with_memory(self, memory: usize) -> Self {
        Self { memory, ..self }
    }

    /// Number of symbols in one window, `2N + 1`.
    pub fn window_len(&self) -> usize {
        2 * self.memory + 1
    }

    /// Total noise variance `sigma_a2 + eta * s^3` for local power `s`.
    pub fn noise_variance(&self, local_power: f64) -> f64 {
        self.sigma_a2 + self.eta * local_power.powi(3)
    }
}

/// A finite sequence of complex baseband samples (amplitudes in √W).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComplexSequence(Vec<Complex64>);

impl ComplexSequence {
    pub fn new(samples: Vec<Complex64>) -> Result<Self> {
        if let Some(i) = samples
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(invalid("samples", format!("non-finite entry at index {i}")));
        }
        Ok(Self(samples))
    }

    /// Builds a sequence from real amplitudes.
    pub fn from_real(samples: &[f64]) -> Result<Self> {
        Self::new(samples.iter().map(|&r| Complex64::new(r, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Complex64> {
        self.0.iter()
    }
}

impl std::ops::Index<usize> for ComplexSequence {
    type Output = Complex64;

    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<Complex64>> for ComplexSequence {
    type Error = Error;

    fn try_from(v: Vec<Complex64>) -> Result<Self> {
        Self::new(v)
    }
}

/// Channel outputs together with the local powers that shaped them.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub y: ComplexSequence,
    pub s: Vec<f64>,
}

fn window_power(x: &[Complex64], i: usize, memory: usize) -> f64 {
    let lo = i.saturating_sub(memory);
    let hi = (i + memory).min(x.len() - 1);
    let sum: f64 = x[lo..=hi].iter().map(|z| z.norm_sqr()).sum();
    sum / (2 * memory + 1) as f64
}

/// Local power `S_i = (1 / (2N + 1)) * sum_{k = i-N}^{i+N} |x_k|^2`.
pub fn local_power(x: &ComplexSequence, i: usize, params: &ChannelParams) -> Result<f64> {
    if i >= x.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: x.len(),
        });
    }
    Ok(window_power(x.as_slice(), i, params.memory))
}

fn check_sim_input(x: &ComplexSequence, n: usize) -> Result<()> {
    if x.is_empty() || n == 0 {
        return Err(Error::EmptyInput);
    }
    if n > x.len() {
        return Err(invalid(
            "n",
            format!("{n} outputs requested from {} inputs", x.len()),
        ));
    }
    Ok(())
}

/// Simulates the first `n` outputs of the channel.
///
/// The input should hold `n + N` symbols so that the right edge of every
/// window is populated; shorter inputs are zero-padded on the right.
/// Draws ASE and nonlinear noise separately for each symbol.
pub fn simulate(
    x: &ComplexSequence,
    n: usize,
    params: &ChannelParams,
    seed: u64,
) -> Result<SimOutput> {
    check_sim_input(x, n)?;
    let mut rng = stream_rng(seed, 0);
    let xs = x.as_slice();
    let mut y = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    for i in 0..n {
        let si = window_power(xs, i, params.memory);
        let a = complex_normal(&mut rng, params.sigma_a2);
        let z = complex_normal(&mut rng, 1.0);
        y.push(xs[i] + a + z * (params.eta * si.powi(3)).sqrt());
        s.push(si);
    }
    Ok(SimOutput {
        y: ComplexSequence(y),
        s,
    })
}

/// Simulates the single-noise form `y_i = x_i + z_i * sqrt(sigma_a2 + eta * S_i^3)`.
///
/// Has the same conditional output law as [`simulate`].
pub fn simulate_equivalent(
    x: &ComplexSequence,
    n: usize,
    params: &ChannelParams,
    seed: u64,
) -> Result<SimOutput> {
    check_sim_input(x, n)?;
    let mut rng = stream_rng(seed, 0);
    let xs = x.as_slice();
    let mut y = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    for i in 0..n {
        let si = window_power(xs, i, params.memory);
        let z = complex_normal(&mut rng, params.noise_variance(si));
        y.push(xs[i] + z);
        s.push(si);
    }
    Ok(SimOutput {
        y: ComplexSequence(y),
        s,
    })
}

/// Circularly symmetric complex Gaussian density with mean `mean` and total
/// variance `variance`.
pub fn complex_gaussian_density(y: Complex64, mean: Complex64, variance: f64) -> f64 {
    (-(y - mean).norm_sqr() / variance).exp() / (PI * variance)
}

/// Density of `y_i` given the input window `x_{i-N}..x_{i+N}`.
///
/// `window` must have length `2N + 1`, with zeros in place of symbols that
/// fall outside the input.
pub fn conditional_density(
    y: Complex64,
    window: &[Complex64],
    params: &ChannelParams,
) -> Result<f64> {
    if window.len() != params.window_len() {
        return Err(invalid(
            "window",
            format!(
                "expected {} symbols, got {}",
                params.window_len(),
                window.len()
            ),
        ));
    }
    let s = window.iter().map(|z| z.norm_sqr()).sum::<f64>() / window.len() as f64;
    Ok(complex_gaussian_density(
        y,
        window[params.memory],
        params.noise_variance(s),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::mean_and_std_error;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn params_validation() {
        assert!(ChannelParams::new(-1.0, 1.0, 0).is_err());
        assert!(ChannelParams::new(1.0, 0.0, 0).is_err());
        assert!(ChannelParams::new(f64::NAN, 1.0, 0).is_err());
        assert!(ChannelParams::new(0.0, 1.0, 3).is_ok());
    }

    #[test]
    fn sequence_rejects_non_finite() {
        assert!(ComplexSequence::new(vec![c(1.0, f64::INFINITY)]).is_err());
        assert!(ComplexSequence::new(vec![c(f64::NAN, 0.0)]).is_err());
    }

    #[test]
    fn local_power_examples() {
        let p = ChannelParams::new(1.0, 1.0, 1).unwrap();
        let zeros = ComplexSequence::from_real(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(local_power(&zeros, 1, &p).unwrap(), 0.0);
        let ones = ComplexSequence::from_real(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(local_power(&ones, 1, &p).unwrap(), 1.0);
        let edge = ComplexSequence::from_real(&[2.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(
            local_power(&edge, 0, &p).unwrap(),
            4.0 / 3.0,
            max_relative = 1e-15
        );
        assert!(matches!(
            local_power(&edge, 3, &p),
            Err(Error::IndexOutOfRange { index: 3, len: 3 })
        ));
    }

    #[test]
    fn local_power_is_local() {
        let p = ChannelParams::new(1.0, 1.0, 2).unwrap();
        let mut v: Vec<Complex64> = (0..12).map(|k| c(k as f64 * 0.1, 0.3)).collect();
        let x = ComplexSequence::new(v.clone()).unwrap();
        let before = local_power(&x, 5, &p).unwrap();
        v[0] = c(9.0, 9.0);
        v[11] = c(-4.0, 2.0);
        let x2 = ComplexSequence::new(v).unwrap();
        assert_eq!(before, local_power(&x2, 5, &p).unwrap());
    }

    #[test]
    fn simulate_rejects_bad_lengths() {
        let p = ChannelParams::new(1.0, 1.0, 1).unwrap();
        let empty = ComplexSequence::default();
        assert_eq!(simulate(&empty, 1, &p, 0), Err(Error::EmptyInput));
        let x = ComplexSequence::from_real(&[1.0, 2.0]).unwrap();
        assert!(simulate(&x, 3, &p, 0).is_err());
        assert!(simulate_equivalent(&x, 0, &p, 0).is_err());
    }

    #[test]
    fn simulate_is_deterministic() {
        let p = ChannelParams::reference(1);
        let x = ComplexSequence::from_real(&[0.01, -0.02, 0.015, 0.0, 0.03]).unwrap();
        assert_eq!(
            simulate(&x, 4, &p, 11).unwrap(),
            simulate(&x, 4, &p, 11).unwrap()
        );
        assert_ne!(
            simulate(&x, 4, &p, 11).unwrap(),
            simulate(&x, 4, &p, 12).unwrap()
        );
    }

    #[test]
    fn linear_channel_noise_statistics() {
        let p = ChannelParams::new(0.0, 1.0, 1).unwrap();
        let n = 200_000;
        let x =
            ComplexSequence::new((0..n + 1).map(|k| c((k % 7) as f64, -1.0)).collect()).unwrap();
        let out = simulate(&x, n, &p, 5).unwrap();
        let noise: Vec<Complex64> = out.y.iter().zip(x.iter()).map(|(y, x)| y - x).collect();
        let re: Vec<f64> = noise.iter().map(|z| z.re).collect();
        let pw: Vec<f64> = noise.iter().map(|z| z.norm_sqr()).collect();
        let m = mean_and_std_error(&re);
        assert!(m.mean.abs() < 4.0 * m.std_error);
        let v = mean_and_std_error(&pw);
        assert!((v.mean - 1.0).abs() < 4.0 * v.std_error);
    }

    #[test]
    fn zero_input_gives_ase_only() {
        let p = ChannelParams::new(1e6, 2.0, 2).unwrap();
        let n = 100_000;
        let x = ComplexSequence::new(vec![Complex64::new(0.0, 0.0); n + 2]).unwrap();
        let out = simulate(&x, n, &p, 1).unwrap();
        assert!(out.s.iter().all(|&s| s == 0.0));
        let pw: Vec<f64> = out.y.iter().map(|z| z.norm_sqr()).collect();
        let v = mean_and_std_error(&pw);
        assert!((v.mean - 2.0).abs() < 4.0 * v.std_error);
    }

    #[test]
    fn constant_input_noise_variance() {
        let power: f64 = 0.5;
        let p = ChannelParams::new(3.0, 0.2, 1).unwrap();
        let n = 200_000;
        let amp = power.sqrt();
        let x = ComplexSequence::new(vec![c(amp, 0.0); n + 1]).unwrap();
        let out = simulate(&x, n, &p, 9).unwrap();
        // skip the left boundary symbol
        let pw: Vec<f64> = out
            .y
            .iter()
            .skip(1)
            .map(|y| (y - c(amp, 0.0)).norm_sqr())
            .collect();
        let v = mean_and_std_error(&pw);
        let target = 0.2 + 3.0 * power.powi(3);
        assert!(
            (v.mean - target).abs() < 4.0 * v.std_error,
            "{} vs {}",
            v.mean,
            target
        );
        assert!(out.s.iter().skip(1).all(|&s| (s - power).abs() < 1e-15));
    }

    #[test]
    fn equivalent_form_with_zero_eta_matches_ase() {
        let p = ChannelParams::new(0.0, 1.5, 0).unwrap();
        let n = 100_000;
        let x = ComplexSequence::new(vec![c(0.0, 0.0); n]).unwrap();
        let out = simulate_equivalent(&x, n, &p, 4).unwrap();
        let pw: Vec<f64> = out.y.iter().map(|z| z.norm_sqr()).collect();
        let v = mean_and_std_error(&pw);
        assert!((v.mean - 1.5).abs() < 4.0 * v.std_error);
    }

    #[test]
    fn density_peak_and_locality() {
        let p = ChannelParams::new(0.0, 0.5, 1).unwrap();
        let w = [c(1.0, 0.0), c(0.3, 0.2), c(2.0, 1.0)];
        let d = conditional_density(c(0.3, 0.2), &w, &p).unwrap();
        assert_relative_eq!(d, 1.0 / (PI * 0.5), max_relative = 1e-15);
        assert!(conditional_density(c(0.0, 0.0), &w[..2], &p).is_err());
    }

    #[test]
    fn density_integrates_to_one() {
        let p = ChannelParams::new(2.0, 0.1, 1).unwrap();
        let w = [c(0.5, 0.0), c(-0.2, 0.4), c(0.0, 0.7)];
        let center = w[1];
        let s = w.iter().map(|z| z.norm_sqr()).sum::<f64>() / 3.0;
        let sd = (p.noise_variance(s) / 2.0).sqrt();
        // trapezoid rule on a box of +-10 standard deviations
        let m = 400;
        let half = 10.0 * sd;
        let h = 2.0 * half / m as f64;
        let mut total = 0.0;
        for i in 0..=m {
            for j in 0..=m {
                let wi = if i == 0 || i == m { 0.5 } else { 1.0 };
                let wj = if j == 0 || j == m { 0.5 } else { 1.0 };
                let y = center + c(-half + i as f64 * h, -half + j as f64 * h);
                total += wi * wj * conditional_density(y, &w, &p).unwrap();
            }
        }
        assert_relative_eq!(total * h * h, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn density_matches_simulated_histogram() {
        // Periodic input: every output index 3m + 1 sees the window [x0, x1, x2].
        let p = ChannelParams::new(4.0, 0.05, 1).unwrap();
        let xs = [c(0.4, 0.1), c(-0.3, 0.5), c(0.2, -0.6)];
        let periods = 1_000_000;
        let seq = ComplexSequence::new(xs.iter().copied().cycle().take(3 * periods + 1).collect())
            .unwrap();
        let out = simulate(&seq, 3 * periods, &p, 21).unwrap();
        let bin = 0.05;
        let probe = xs[1] + c(0.1, -0.05);
        let hits = (0..periods)
            .map(|m| out.y[3 * m + 1])
            .filter(|y| (y.re - probe.re).abs() < bin / 2.0 && (y.im - probe.im).abs() < bin / 2.0)
            .count();
        let empirical = hits as f64 / (periods as f64 * bin * bin);
        let exact = conditional_density(probe, &xs, &p).unwrap();
        let se = (hits as f64).sqrt() / (periods as f64 * bin * bin);
        // averaging over the bin adds (bin^2 / 24) * laplacian to the point value
        let v = p.noise_variance(out.s[1]);
        let r2 = (probe - xs[1]).norm_sqr();
        let bias = bin * bin / 24.0 * exact * (4.0 * r2 / (v * v) - 4.0 / v);
        assert!(
            (empirical - exact - bias).abs() < 4.0 * se,
            "{empirical} vs {exact} (se {se})"
        );
    }
}
