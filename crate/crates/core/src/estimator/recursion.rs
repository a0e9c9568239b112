//! Forward recursion for the output entropy rate `h(Y^n) / n`.
//!
//! The density of `y_k` depends on the centre symbol `x_k` itself but on its
//! `2N` neighbours only through their powers `|x_j|^2`. Grouping atoms into
//! power classes therefore loses nothing: given its class, a symbol that has
//! not yet been observed as a centre is still distributed like the prior
//! restricted to that class. The message after step `k` is the posterior
//! over the classes of `x_{k-N+1} .. x_{k+N}`, a table of `R^{2N}` entries
//! for `R` classes, instead of the `A^{2N}` atom table.
//!
//! Each step multiplies in the prior of the newly entering symbol and the
//! channel density, records the pre-normalization mass `lambda_k` (in log
//! form, since the densities are rescaled by a per-step offset), and
//! renormalizes. `-mean(log2 lambda_k)` estimates the output entropy rate.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::channel::ChannelParams;
use crate::error::{Error, Result};

use super::quantize::QuantizedDistribution;

/// Largest allowed message table.
pub const MAX_TABLE_ENTRIES: u128 = 10_000_000;

const MERGE_TOLERANCE: f64 = 1e-12;

/// Sorts and merges values that agree to within a relative `MERGE_TOLERANCE`.
fn merge_sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(v.len());
    for x in v {
        match out.last() {
            Some(&last) if x - last <= MERGE_TOLERANCE * x.abs().max(last.abs()) => {}
            _ => out.push(x),
        }
    }
    out
}

/// Index of the entry of a sorted list closest to `x`.
fn nearest(sorted: &[f64], x: f64) -> usize {
    let i = sorted.partition_point(|&s| s < x);
    if i == 0 {
        0
    } else if i == sorted.len() || x - sorted[i - 1] <= sorted[i] - x {
        i - 1
    } else {
        i
    }
}

/// All sums of `terms` values drawn (with repetition) from `values`.
fn sumset(values: &[f64], terms: usize) -> Vec<f64> {
    let mut sums = vec![0.0];
    for _ in 0..terms {
        let next: Vec<f64> = sums
            .iter()
            .flat_map(|s| values.iter().map(move |v| s + v))
            .collect();
        sums = merge_sorted(next);
    }
    sums
}

/// Atoms grouped by power `|x|^2`.
#[derive(Debug, Clone)]
pub(crate) struct PowerClasses {
    pub powers: Vec<f64>,
    pub probs: Vec<f64>,
    /// (atom, probability within its class)
    pub members: Vec<Vec<(Complex64, f64)>>,
    /// Class used for the zero-power padding beyond the left edge.
    pub zero: usize,
}

impl PowerClasses {
    pub fn new(dist: &QuantizedDistribution) -> Self {
        let mut atoms: Vec<(f64, Complex64, f64)> = dist
            .iter()
            .filter(|&(_, p)| p > 0.0)
            .map(|(a, p)| (a.norm_sqr(), a, p))
            .collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut powers: Vec<f64> = Vec::new();
        let mut probs: Vec<f64> = Vec::new();
        let mut members: Vec<Vec<(Complex64, f64)>> = Vec::new();
        for (w, a, p) in atoms {
            let same = powers
                .last()
                .is_some_and(|&last| w - last <= MERGE_TOLERANCE * w.max(last));
            if !same {
                powers.push(w);
                probs.push(0.0);
                members.push(Vec::new());
            }
            *probs.last_mut().unwrap() += p;
            members.last_mut().unwrap().push((a, p));
        }
        for (m, &total) in members.iter_mut().zip(&probs) {
            m.iter_mut().for_each(|(_, p)| *p /= total);
        }
        let zero = match powers.first() {
            Some(&0.0) => 0,
            _ => {
                powers.insert(0, 0.0);
                probs.insert(0, 0.0);
                members.insert(0, Vec::new());
                0
            }
        };
        Self {
            powers,
            probs,
            members,
            zero,
        }
    }

    pub fn len(&self) -> usize {
        self.powers.len()
    }
}

/// Normalized message plus the accumulated log-normalizers.
#[derive(Debug, Clone, PartialEq)]
pub struct MessagePassState {
    table: Vec<f64>,
    log_scale_sum: f64,
    step: usize,
}

impl MessagePassState {
    /// Posterior over power-class tuples of the symbols that still affect
    /// future outputs; indexed oldest position first.
    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// `sum_k ln(lambda_k)` over the steps taken so far (nats).
    pub fn log_scale_sum(&self) -> f64 {
        self.log_scale_sum
    }

    pub fn step(&self) -> usize {
        self.step
    }
}

/// Forward recursion over one observed output sequence.
#[derive(Debug, Clone)]
pub struct ForwardRecursion {
    classes: PowerClasses,
    memory: usize,
    radix: usize,
    state: MessagePassState,
    next: Vec<f64>,
    /// distinct neighbour-power sums; `[0.0]` when eta = 0
    neighbor_sums: Vec<f64>,
    /// per class: variances for each neighbour sum (ascending) and `ln(pi v)`
    variances: Vec<Vec<f64>>,
    log_norms: Vec<Vec<f64>>,
    /// per state: index of the partial neighbour sum that excludes the
    /// incoming symbol
    partial_index: Vec<u32>,
    /// `[partial][incoming class]` -> neighbour-sum index
    neighbor_index: Vec<Vec<u32>>,
    centre_of_state: Vec<u32>,
    scaled_density: Vec<Vec<f64>>,
    distance_buf: Vec<(f64, f64)>,
    single_variance: bool,
}

impl ForwardRecursion {
    /// Sets up the recursion for iid inputs drawn from `dist`.
    pub fn new(dist: &QuantizedDistribution, params: &ChannelParams) -> Result<Self> {
        let classes = PowerClasses::new(dist);
        let memory = params.memory();
        let radix = classes.len();
        let digits = 2 * memory;
        let entries = (radix as u128)
            .checked_pow(digits as u32)
            .unwrap_or(u128::MAX);
        if entries > MAX_TABLE_ENTRIES {
            return Err(Error::TableTooLarge {
                entries,
                limit: MAX_TABLE_ENTRIES,
            });
        }
        let size = entries as usize;
        let single_variance = params.eta() == 0.0;
        let window = params.window_len() as f64;

        let (partial_sums, neighbor_sums) = if single_variance || memory == 0 {
            (vec![0.0], vec![0.0])
        } else {
            let partial = sumset(&classes.powers, digits - 1);
            let full = merge_sorted(
                partial
                    .iter()
                    .flat_map(|p| classes.powers.iter().map(move |w| p + w))
                    .collect(),
            );
            (partial, full)
        };

        let variances: Vec<Vec<f64>> = classes
            .powers
            .iter()
            .map(|&w| {
                neighbor_sums
                    .iter()
                    .map(|&o| params.noise_variance((w + o) / window))
                    .collect()
            })
            .collect();
        let log_norms = variances
            .iter()
            .map(|row| row.iter().map(|v| (PI * v).ln()).collect())
            .collect();

        // digit j of a state is the class of position j (oldest first);
        // the centre of the next window is digit N
        let digit = |s: usize, j: usize| (s / radix.pow((digits - 1 - j) as u32)) % radix;
        let (partial_index, centre_of_state) = if memory == 0 {
            (vec![0], vec![0])
        } else {
            let mut pidx = Vec::with_capacity(size);
            let mut centre = Vec::with_capacity(size);
            for s in 0..size {
                let partial: f64 = (0..digits)
                    .filter(|&j| j != memory)
                    .map(|j| classes.powers[digit(s, j)])
                    .sum();
                pidx.push(if single_variance {
                    0
                } else {
                    nearest(&partial_sums, partial) as u32
                });
                centre.push(digit(s, memory) as u32);
            }
            (pidx, centre)
        };
        let neighbor_index = partial_sums
            .iter()
            .map(|p| {
                classes
                    .powers
                    .iter()
                    .map(|w| {
                        if single_variance {
                            0
                        } else {
                            nearest(&neighbor_sums, p + w) as u32
                        }
                    })
                    .collect()
            })
            .collect();

        // positions left of the first symbol are zero padding
        let mut table = vec![0.0; size];
        if memory == 0 {
            table[0] = 1.0;
        } else {
            let tail = radix.pow(memory as u32);
            let head = (0..memory).fold(0, |acc, _| acc * radix + classes.zero);
            for t in 0..tail {
                let mut p = 1.0;
                let mut rest = t;
                for _ in 0..memory {
                    p *= classes.probs[rest % radix];
                    rest /= radix;
                }
                table[head * tail + t] = p;
            }
        }

        let scaled_density = vec![vec![0.0; neighbor_sums.len()]; radix];
        Ok(Self {
            classes,
            memory,
            radix,
            state: MessagePassState {
                table,
                log_scale_sum: 0.0,
                step: 0,
            },
            next: vec![0.0; size],
            neighbor_sums,
            variances,
            log_norms,
            partial_index,
            neighbor_index,
            centre_of_state,
            scaled_density,
            distance_buf: Vec::new(),
            single_variance,
        })
    }

    pub fn state(&self) -> &MessagePassState {
        &self.state
    }

    /// Number of power classes (including the zero-padding class).
    pub fn class_count(&self) -> usize {
        self.radix
    }

    /// Fills `scaled_density[c][o] = exp(-offset) * E[p(y | x, v_{c,o}) | x in c]`
    /// and returns the offset.
    fn densities(&mut self, y: Complex64) -> f64 {
        // the peak of -d/v - ln(pi v) over v is at v = d, so for each atom
        // only the two variances around d can hold its maximum
        let mut offset = f64::NEG_INFINITY;
        for (c, members) in self.classes.members.iter().enumerate() {
            let vars = &self.variances[c];
            let logs = &self.log_norms[c];
            for (a, _) in members {
                let d = (y - a).norm_sqr();
                let i = vars.partition_point(|&v| v < d);
                for j in [i.saturating_sub(1), i.min(vars.len() - 1)] {
                    offset = offset.max(-d / vars[j] - logs[j]);
                }
            }
        }
        let dist = &mut self.distance_buf;
        for (c, members) in self.classes.members.iter().enumerate() {
            let vars = &self.variances[c];
            let logs = &self.log_norms[c];
            let row = &mut self.scaled_density[c];
            dist.clear();
            dist.extend(members.iter().map(|(a, q)| ((y - a).norm_sqr(), *q)));
            for (o, slot) in row.iter_mut().enumerate() {
                let (inv_v, l) = (1.0 / vars[o], logs[o] + offset);
                let mut acc = 0.0;
                for &(d, q) in dist.iter() {
                    let e = -d * inv_v - l;
                    if e > -745.0 {
                        acc += q * e.exp();
                    }
                }
                *slot = acc;
            }
        }
        offset
    }

    /// Absorbs the next output and returns `ln(lambda_k)` in nats.
    pub fn step(&mut self, y: Complex64) -> Result<f64> {
        let offset = self.densities(y);
        let r = self.radix;
        let probs = &self.classes.probs;
        self.next.iter_mut().for_each(|v| *v = 0.0);

        if self.memory == 0 {
            let total: f64 = (0..r).map(|c| probs[c] * self.scaled_density[c][0]).sum();
            return self.finish(total, offset);
        }

        let size = self.state.table.len();
        let drop_oldest = size / r;
        if self.single_variance {
            // the density ignores neighbours: marginalize, then weight
            for s in 0..size {
                let u = self.state.table[s];
                if u != 0.0 {
                    self.next[(s % drop_oldest) * r] += u;
                }
            }
            for kept in 0..drop_oldest {
                let m = self.next[kept * r];
                if m == 0.0 {
                    continue;
                }
                let centre = self.centre_of_state[kept] as usize;
                let h = self.scaled_density[centre][0] * m;
                for (c, &p) in probs.iter().enumerate() {
                    self.next[kept * r + c] = p * h;
                }
            }
        } else {
            for s in 0..size {
                let u = self.state.table[s];
                if u == 0.0 {
                    continue;
                }
                let centre = self.centre_of_state[s] as usize;
                let dens = &self.scaled_density[centre];
                let nb = &self.neighbor_index[self.partial_index[s] as usize];
                let base = (s % drop_oldest) * r;
                let out = &mut self.next[base..base + r];
                for c in 0..r {
                    out[c] += u * probs[c] * dens[nb[c] as usize];
                }
            }
        }
        let total: f64 = self.next.iter().sum();
        self.finish(total, offset)
    }

    fn finish(&mut self, total: f64, offset: f64) -> Result<f64> {
        let step = self.state.step + 1;
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Underflow {
                step,
                detail: format!("message mass {total} after rescaling by exp({offset})"),
            });
        }
        if self.memory > 0 {
            let inv = 1.0 / total;
            for (dst, &src) in self.state.table.iter_mut().zip(&self.next) {
                *dst = src * inv;
            }
        }
        let log_lambda = total.ln() + offset;
        self.state.log_scale_sum += log_lambda;
        self.state.step = step;
        Ok(log_lambda)
    }

    /// Distinct neighbour-power sums used to index the variance table.
    pub fn neighbor_sum_count(&self) -> usize {
        self.neighbor_sums.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{complex_gaussian_density, simulate, ComplexSequence};
    use crate::estimator::quantize::quantized_complex_gaussian;
    use crate::rng::stream_rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// The atom-pair recursion exactly as stated for N = 1: the message is a
    /// table over (x_k, x_{k+1}) and each step sums out x_{k-1}.
    fn literal_pair_recursion(
        dist: &QuantizedDistribution,
        params: &ChannelParams,
        ys: &[Complex64],
    ) -> Vec<f64> {
        let atoms = dist.atoms();
        let p = dist.probs();
        let a = atoms.len();
        let dens = |y: Complex64, w: [Complex64; 3]| {
            let s = w.iter().map(|z| z.norm_sqr()).sum::<f64>() / 3.0;
            complex_gaussian_density(y, w[1], params.noise_variance(s))
        };
        let zero = c(0.0, 0.0);
        let mut mu = vec![0.0; a * a];
        let mut out = Vec::new();
        for i in 0..a {
            for j in 0..a {
                mu[i * a + j] = p[i] * p[j] * dens(ys[0], [zero, atoms[i], atoms[j]]);
            }
        }
        let lam: f64 = mu.iter().sum();
        mu.iter_mut().for_each(|m| *m /= lam);
        out.push(lam.ln());
        for &y in &ys[1..] {
            let mut next = vec![0.0; a * a];
            for k in 0..a {
                for l in 0..a {
                    let mut acc = 0.0;
                    for prev in 0..a {
                        acc += mu[prev * a + k] * dens(y, [atoms[prev], atoms[k], atoms[l]]);
                    }
                    next[k * a + l] = acc * p[l];
                }
            }
            let lam: f64 = next.iter().sum();
            next.iter_mut().for_each(|m| *m /= lam);
            out.push(lam.ln());
            mu = next;
        }
        out
    }

    /// Brute-force `ln p(y_k | y_1..y_{k-1})` by summing over every input
    /// sequence; only usable for tiny alphabets and lengths.
    fn enumerate_log_lambdas(
        dist: &QuantizedDistribution,
        params: &ChannelParams,
        ys: &[Complex64],
    ) -> Vec<f64> {
        let n = params.memory();
        let a = dist.len();
        let mut joint = Vec::new();
        for len in 1..=ys.len() {
            let total_len = len + n;
            let mut sum = 0.0;
            for code in 0..a.pow(total_len as u32) {
                let mut idx = Vec::with_capacity(total_len);
                let mut rest = code;
                for _ in 0..total_len {
                    idx.push(rest % a);
                    rest /= a;
                }
                let xs: Vec<Complex64> = idx.iter().map(|&i| dist.atoms()[i]).collect();
                let mut p: f64 = idx.iter().map(|&i| dist.probs()[i]).product();
                let seq = ComplexSequence::new(xs.clone()).unwrap();
                for (k, y) in ys.iter().enumerate().take(len) {
                    let s = crate::channel::local_power(&seq, k, params).unwrap();
                    p *= complex_gaussian_density(*y, xs[k], params.noise_variance(s));
                }
                sum += p;
            }
            joint.push(sum.ln());
        }
        let mut out = vec![joint[0]];
        for k in 1..joint.len() {
            out.push(joint[k] - joint[k - 1]);
        }
        out
    }

    fn trajectory(
        dist: &QuantizedDistribution,
        params: &ChannelParams,
        steps: usize,
        seed: u64,
    ) -> Vec<Complex64> {
        let mut rng = stream_rng(seed, 0);
        let x = ComplexSequence::new(dist.sample(steps + params.memory(), &mut rng)).unwrap();
        simulate(&x, steps, params, seed + 1)
            .unwrap()
            .y
            .into_inner()
    }

    fn run(dist: &QuantizedDistribution, params: &ChannelParams, ys: &[Complex64]) -> Vec<f64> {
        let mut rec = ForwardRecursion::new(dist, params).unwrap();
        ys.iter().map(|&y| rec.step(y).unwrap()).collect()
    }

    #[test]
    fn class_reduction_matches_literal_pair_recursion() {
        let params = ChannelParams::new(2.0, 0.05, 1).unwrap();
        let dist = quantized_complex_gaussian(0.5, 2, 0.05).unwrap();
        assert_eq!(dist.len(), 9);
        let ys = trajectory(&dist, &params, 60, 3);
        let fast = run(&dist, &params, &ys);
        let slow = literal_pair_recursion(&dist, &params, &ys);
        for (f, s) in fast.iter().zip(&slow) {
            assert!((f - s).abs() < 1e-10, "{f} vs {s}");
        }
    }

    #[test]
    fn linear_fast_path_matches_literal_recursion() {
        let params = ChannelParams::new(0.0, 0.05, 1).unwrap();
        let dist = quantized_complex_gaussian(0.5, 3, 0.05).unwrap();
        let ys = trajectory(&dist, &params, 40, 5);
        let fast = run(&dist, &params, &ys);
        let slow = literal_pair_recursion(&dist, &params, &ys);
        for (f, s) in fast.iter().zip(&slow) {
            assert!((f - s).abs() < 1e-10, "{f} vs {s}");
        }
    }

    #[test]
    fn general_memory_matches_enumeration() {
        let atoms = vec![c(0.0, 0.0), c(0.8, 0.0), c(0.0, -1.1)];
        let dist = QuantizedDistribution::new(atoms, vec![0.5, 0.3, 0.2]).unwrap();
        for memory in [0, 1, 2] {
            let params = ChannelParams::new(1.5, 0.2, memory).unwrap();
            let ys = trajectory(&dist, &params, 5, 17);
            let fast = run(&dist, &params, &ys);
            let brute = enumerate_log_lambdas(&dist, &params, &ys);
            for (f, b) in fast.iter().zip(&brute) {
                assert!((f - b).abs() < 1e-10, "N = {memory}: {f} vs {b}");
            }
        }
    }

    #[test]
    fn messages_stay_normalized() {
        let params = ChannelParams::reference(1);
        let dist = quantized_complex_gaussian(4e-4, 4, 1e-5).unwrap();
        let ys = trajectory(&dist, &params, 200, 8);
        let mut rec = ForwardRecursion::new(&dist, &params).unwrap();
        for &y in &ys {
            rec.step(y).unwrap();
            let total: f64 = rec.state().table().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(rec.state().table().iter().all(|&m| m >= 0.0));
        }
        assert_eq!(rec.state().step(), 200);
    }

    #[test]
    fn far_outputs_do_not_underflow() {
        let params = ChannelParams::new(0.0, 1e-6, 1).unwrap();
        let dist = quantized_complex_gaussian(1e-4, 3, 1e-3).unwrap();
        let mut rec = ForwardRecursion::new(&dist, &params).unwrap();
        // 1 W away from every atom: every density is ~exp(-1e6)
        let l = rec.step(c(1.0, 0.0)).unwrap();
        assert!(l.is_finite() && l < -1e5);
    }

    #[test]
    fn oversized_tables_are_refused() {
        let params = ChannelParams::reference(4);
        let dist = quantized_complex_gaussian(1e-3, 20, 1e-5).unwrap();
        assert!(matches!(
            ForwardRecursion::new(&dist, &params),
            Err(Error::TableTooLarge { .. })
        ));
    }

    #[test]
    fn power_classes_group_equal_magnitudes() {
        let dist = quantized_complex_gaussian(1.0, 20, 1e-5).unwrap();
        let classes = PowerClasses::new(&dist);
        // distinct i^2 + j^2 for 0 <= i, j <= 19
        assert_eq!(classes.len(), 180);
        assert_eq!(classes.powers[classes.zero], 0.0);
        let total: f64 = classes.probs.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
