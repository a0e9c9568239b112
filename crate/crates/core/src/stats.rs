//! Small statistics utilities shared by the Monte Carlo routines.

/// A sample mean together with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Mean and standard error of independent samples.
pub fn mean_and_std_error(samples: &[f64]) -> MeanEstimate {
    let n = samples.len();
    if n == 0 {
        return MeanEstimate {
            mean: f64::NAN,
            std_error: f64::NAN,
        };
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return MeanEstimate {
            mean,
            std_error: 0.0,
        };
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    MeanEstimate {
        mean,
        std_error: (var / n as f64).sqrt(),
    }
}

/// Non-overlapping batch means for a dependent sequence.
///
/// The mean is the plain average of all samples; the standard error comes
/// from the spread of `batches` consecutive batch averages. Trailing samples
/// that do not fill a batch still count towards the mean.
pub fn batch_means(samples: &[f64], batches: usize) -> MeanEstimate {
    let n = samples.len();
    let batches = batches.max(2).min(n.max(1));
    let size = n / batches;
    if size == 0 || batches < 2 {
        return mean_and_std_error(samples);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let avgs: Vec<f64> = samples
        .chunks_exact(size)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let m = avgs.iter().sum::<f64>() / batches as f64;
    let var = avgs.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (batches - 1) as f64;
    MeanEstimate {
        mean,
        std_error: (var / batches as f64).sqrt(),
    }
}

/// Result of a two-sample Kolmogorov-Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsTest {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let sq = ne.sqrt();
    let lambda = (sq + 0.12 + 0.11 / sq) * d;
    KsTest {
        statistic: d,
        p_value: kolmogorov_survival(lambda),
    }
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-17 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
