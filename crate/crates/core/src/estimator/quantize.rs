//! Finite-support input distributions built by quantizing Gaussians.
//!
//! A real Gaussian sample `g` of variance `V` is mapped onto the grid of
//! `2 n_q - 1` points splitting `[-x_T, x_T]` into `2(n_q - 1)` equal cells.
//! Inside a cell `[a, b)` the output is the endpoint nearer zero (`a` when
//! `g >= 0`, `b` otherwise); samples beyond `+-x_T` are clamped to `+-x_T`.
//! Every output is no larger in magnitude than its input, so the quantized
//! variance is strictly below `V`.

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use statrs::function::erf::{erf, erfc, erfc_inv};
use std::f64::consts::SQRT_2;

use crate::error::{invalid, Result};

/// A complex distribution with finitely many atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedDistribution {
    atoms: Vec<Complex64>,
    probs: Vec<f64>,
}

impl QuantizedDistribution {
    /// Probabilities must be nonnegative and sum to one within 1e-12; atoms
    /// must be finite and distinct.
    pub fn new(atoms: Vec<Complex64>, probs: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(invalid("atoms", "distribution has no atoms"));
        }
        if atoms.len() != probs.len() {
            return Err(invalid(
                "probs",
                format!("{} atoms but {} probabilities", atoms.len(), probs.len()),
            ));
        }
        if atoms
            .iter()
            .any(|a| !(a.re.is_finite() && a.im.is_finite()))
        {
            return Err(invalid("atoms", "atoms must be finite"));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(invalid("probs", "probabilities must be finite and >= 0"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid("probs", format!("probabilities sum to {total}")));
        }
        let mut sorted = atoms.clone();
        sorted.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("atoms", "atoms must be distinct"));
        }
        Ok(Self { atoms, probs })
    }

    /// Point mass at `atom`.
    pub fn single_atom(atom: Complex64) -> Result<Self> {
        Self::new(vec![atom], vec![1.0])
    }

    pub fn atoms(&self) -> &[Complex64] {
        &self.atoms
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mean(&self) -> Complex64 {
        self.iter().map(|(a, p)| a * p).sum()
    }

    /// `E|X|^2`.
    pub fn power(&self) -> f64 {
        self.iter().map(|(a, p)| a.norm_sqr() * p).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Complex64, f64)> + '_ {
        self.atoms.iter().copied().zip(self.probs.iter().copied())
    }

    /// Independent draws of atom values.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Complex64> {
        let index = WeightedIndex::new(&self.probs).expect("validated probabilities");
        (0..n).map(|_| self.atoms[rng.sample(&index)]).collect()
    }
}

/// How the clamp threshold `x_T` scales with the variance `V`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThresholdRule {
    /// `x_T = 2 sqrt(V) Q^{-1}(eps / 2)`: a threshold in amplitude units.
    #[default]
    StdDev,
    /// `x_T = 2 V Q^{-1}(eps / 2)`, taken literally.
    Literal,
}

/// Inverse Gaussian tail function, `Q^{-1}(p)`.
pub fn inverse_q(p: f64) -> f64 {
    SQRT_2 * erfc_inv(2.0 * p)
}

fn upper_tail(t: f64) -> f64 {
    0.5 * erfc(t / SQRT_2)
}

/// Clamp threshold `x_T` for a real Gaussian of variance `variance`.
pub fn threshold(variance: f64, eps: f64, rule: ThresholdRule) -> f64 {
    let q = inverse_q(eps / 2.0);
    match rule {
        ThresholdRule::StdDev => 2.0 * variance.sqrt() * q,
        ThresholdRule::Literal => 2.0 * variance * q,
    }
}

fn check_quantizer_args(variance: f64, n_q: usize, eps: f64) -> Result<()> {
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(invalid("variance", format!("must be > 0, got {variance}")));
    }
    if n_q < 2 {
        return Err(invalid("n_q", format!("must be >= 2, got {n_q}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("eps", format!("must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

/// Real atoms (ascending) and their probabilities.
fn real_quantizer(
    variance: f64,
    n_q: usize,
    eps: f64,
    rule: ThresholdRule,
) -> (Vec<f64>, Vec<f64>) {
    let x_t = threshold(variance, eps, rule);
    let sd = variance.sqrt();
    let last = n_q - 1;
    let point = |j: usize| x_t * j as f64 / last as f64;

    // masses of the nonnegative grid points t_0 = 0 .. t_last = x_T
    let mut half = Vec::with_capacity(n_q);
    half.push(erf(point(1) / (sd * SQRT_2)));
    for j in 1..last {
        half.push(upper_tail(point(j) / sd) - upper_tail(point(j + 1) / sd));
    }
    half.push(upper_tail(x_t / sd));

    let mut atoms = Vec::with_capacity(2 * n_q - 1);
    let mut probs = Vec::with_capacity(2 * n_q - 1);
    for j in (1..=last).rev() {
        atoms.push(-point(j));
        probs.push(half[j]);
    }
    for (j, &p) in half.iter().enumerate() {
        atoms.push(point(j));
        probs.push(p);
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    (atoms, probs)
}

/// Quantized real Gaussian of variance `variance` (atoms on the real axis).
pub fn quantize_gaussian(variance: f64, n_q: usize, eps: f64) -> Result<QuantizedDistribution> {
    quantize_gaussian_with(variance, n_q, eps, ThresholdRule::default())
}

pub fn quantize_gaussian_with(
    variance: f64,
    n_q: usize,
    eps: f64,
    rule: ThresholdRule,
) -> Result<QuantizedDistribution> {
    check_quantizer_args(variance, n_q, eps)?;
    let (atoms, probs) = real_quantizer(variance, n_q, eps, rule);
    QuantizedDistribution::new(
        atoms.into_iter().map(|a| Complex64::new(a, 0.0)).collect(),
        probs,
    )
}

/// `g1 + i g2` with `g1`, `g2` independent quantized Gaussians of variance
/// `power / 2`. The support is the product grid.
pub fn quantized_complex_gaussian(
    power: f64,
    n_q: usize,
    eps: f64,
) -> Result<QuantizedDistribution> {
    quantized_complex_gaussian_with(power, n_q, eps, ThresholdRule::default())
}

pub fn quantized_complex_gaussian_with(
    power: f64,
    n_q: usize,
    eps: f64,
    rule: ThresholdRule,
) -> Result<QuantizedDistribution> {
    check_quantizer_args(power, n_q, eps)?;
    let (atoms, probs) = real_quantizer(power / 2.0, n_q, eps, rule);
    let mut c_atoms = Vec::with_capacity(atoms.len() * atoms.len());
    let mut c_probs = Vec::with_capacity(atoms.len() * atoms.len());
    for (&re, &pr) in atoms.iter().zip(&probs) {
        for (&im, &pi) in atoms.iter().zip(&probs) {
            c_atoms.push(Complex64::new(re, im));
            c_probs.push(pr * pi);
        }
    }
    let total: f64 = c_probs.iter().sum();
    c_probs.iter_mut().for_each(|p| *p /= total);
    QuantizedDistribution::new(c_atoms, c_probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use std::f64::consts::PI;

    fn pdf(x: f64, sd: f64) -> f64 {
        (-0.5 * (x / sd).powi(2)).exp() / (sd * (2.0 * PI).sqrt())
    }

    fn simpson(a: f64, b: f64, sd: f64) -> f64 {
        let m = 2000;
        let h = (b - a) / m as f64;
        let mut s = pdf(a, sd) + pdf(b, sd);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * pdf(a + i as f64 * h, sd);
        }
        s * h / 3.0
    }

    /// Probabilities of the quantizer outputs by direct integration of the
    /// Gaussian density over the cells mapped to each grid point.
    fn quadrature_oracle(
        variance: f64,
        n_q: usize,
        eps: f64,
        rule: ThresholdRule,
    ) -> Vec<(f64, f64)> {
        let sd = variance.sqrt();
        let x_t = threshold(variance, eps, rule);
        let d = x_t / (n_q - 1) as f64;
        let far = x_t + 40.0 * sd;
        let mut out = Vec::new();
        for j in -(n_q as i64 - 1)..=(n_q as i64 - 1) {
            let t = j as f64 * d;
            let mass = match j {
                0 => simpson(-d, d, sd),
                j if j == n_q as i64 - 1 => simpson(x_t, far, sd),
                j if j == -(n_q as i64 - 1) => simpson(-far, -x_t, sd),
                j if j > 0 => simpson(t, t + d, sd),
                _ => simpson(t - d, t, sd),
            };
            out.push((t, mass));
        }
        out
    }

    #[test]
    fn argument_validation() {
        assert!(quantize_gaussian(1.0, 1, 0.1).is_err());
        assert!(quantize_gaussian(1.0, 4, 0.0).is_err());
        assert!(quantize_gaussian(1.0, 4, 1.0).is_err());
        assert!(quantize_gaussian(0.0, 4, 0.1).is_err());
        assert!(quantized_complex_gaussian(-1.0, 4, 0.1).is_err());
    }

    #[test]
    fn distribution_validation() {
        let a = Complex64::new(1.0, 0.0);
        assert!(QuantizedDistribution::new(vec![a, a], vec![0.5, 0.5]).is_err());
        assert!(QuantizedDistribution::new(vec![a], vec![0.9]).is_err());
        assert!(QuantizedDistribution::new(vec![a, -a], vec![1.5, -0.5]).is_err());
        assert!(QuantizedDistribution::new(vec![], vec![]).is_err());
        assert!(QuantizedDistribution::new(vec![a, -a], vec![0.5, 0.5]).is_ok());
    }

    #[test]
    fn matches_quadrature_oracle() {
        for rule in [ThresholdRule::StdDev, ThresholdRule::Literal] {
            let q = quantize_gaussian_with(1.0, 20, 1e-5, rule).unwrap();
            let oracle = quadrature_oracle(1.0, 20, 1e-5, rule);
            assert_eq!(q.len(), oracle.len());
            assert_eq!(q.len(), 39);
            for ((atom, p), (t, m)) in q.iter().zip(oracle) {
                assert!((atom.re - t).abs() < 1e-12);
                assert!((p - m).abs() < 1e-10, "{p} vs {m} at {t}");
            }
        }
    }

    #[test]
    fn symmetric_with_reduced_variance() {
        for v in [0.01, 1.0, 30.0] {
            for n_q in [2, 5, 20] {
                let q = quantize_gaussian(v, n_q, 1e-5).unwrap();
                assert!(q.mean().norm() < 1e-15);
                assert!(q.power() < v);
            }
        }
        let literal = quantize_gaussian_with(3e-4, 20, 1e-5, ThresholdRule::Literal).unwrap();
        assert!(literal.power() < 3e-4);
    }

    #[test]
    fn two_level_quantizer() {
        let q = quantize_gaussian(1.0, 2, 0.01).unwrap();
        let x_t = threshold(1.0, 0.01, ThresholdRule::StdDev);
        let re: Vec<f64> = q.atoms().iter().map(|a| a.re).collect();
        assert_eq!(re, vec![-x_t, 0.0, x_t]);
        assert!((q.probs()[0] - upper_tail(x_t)).abs() < 1e-16);
    }

    #[test]
    fn complex_product_construction() {
        let real = quantize_gaussian(0.5, 20, 1e-5).unwrap();
        let c = quantized_complex_gaussian(1.0, 20, 1e-5).unwrap();
        assert_eq!(c.len(), real.len() * real.len());
        assert!(c.mean().norm() < 1e-15);
        assert!(c.power() < 1.0);
        // E|cg|^2 from the oracle cell masses of each real part
        let oracle = quadrature_oracle(0.5, 20, 1e-5, ThresholdRule::StdDev);
        let total: f64 = oracle.iter().map(|(_, m)| m).sum();
        let second: f64 = oracle.iter().map(|(t, m)| t * t * m).sum::<f64>() / total;
        assert!((c.power() - 2.0 * second).abs() < 1e-10);
    }

    #[test]
    fn sampling_matches_probabilities() {
        let q = quantize_gaussian(1.0, 3, 0.2).unwrap();
        let mut rng = stream_rng(1, 0);
        let n = 200_000;
        let draws = q.sample(n, &mut rng);
        for (atom, p) in q.iter() {
            let f = draws.iter().filter(|&&d| d == atom).count() as f64 / n as f64;
            assert!((f - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt() + 1e-12);
        }
    }
}
