//! Sample statistics and goodness-of-fit tests used by the Monte Carlo checks.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Sample mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Standard error of the sample mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    (mean_var(xs).1 / xs.len() as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Kolmogorov survival function `Q(lambda) = 2 sum_j (-1)^(j-1) exp(-2 j^2 lambda^2)`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("KS test needs non-empty samples".into()));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok((d, kolmogorov_q(lambda)))
}

/// Anderson-Darling test of normality with estimated mean and variance.
/// Returns the small-sample corrected statistic and its p-value.
pub fn anderson_darling_normal(xs: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len();
    if n < 8 {
        return Err(Error::InvalidArgument("Anderson-Darling needs at least 8 samples".into()));
    }
    let (mean, var) = mean_var(xs);
    if !(var > 0.0) {
        return Err(Error::InvalidArgument("sample has zero variance".into()));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut z: Vec<f64> = xs.iter().map(|x| (x - mean) / var.sqrt()).collect();
    z.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mut s = 0.0;
    for i in 0..n {
        let lo = normal.cdf(z[i]).max(1e-300).ln();
        let hi = normal.sf(z[n - 1 - i]).max(1e-300).ln();
        s += (2 * i + 1) as f64 * (lo + hi);
    }
    let a2 = -nf - s / nf;
    let a2s = a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    let p = if a2s >= 0.6 {
        (1.2937 - 5.709 * a2s + 0.0186 * a2s * a2s).exp()
    } else if a2s >= 0.34 {
        (0.9177 - 4.279 * a2s - 1.38 * a2s * a2s).exp()
    } else if a2s >= 0.2 {
        1.0 - (-8.318 + 42.796 * a2s - 59.938 * a2s * a2s).exp()
    } else {
        1.0 - (-13.436 + 101.14 * a2s - 223.73 * a2s * a2s).exp()
    };
    Ok((a2s, p.clamp(0.0, 1.0)))
}

/// Pearson chi-square goodness of fit. Bins are merged left to right until
/// each expected count is at least `min_expected`. Returns `(statistic,
/// degrees of freedom, p-value)`.
pub fn chi_square_gof(observed: &[u64], probs: &[f64], min_expected: f64) -> Result<(f64, usize, f64)> {
    if observed.len() != probs.len() || observed.is_empty() {
        return Err(Error::ShapeMismatch("observed counts and probabilities differ in length".into()));
    }
    let total: u64 = observed.iter().sum();
    let mass: f64 = probs.iter().sum();
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&c, &p) in observed.iter().zip(probs) {
        o += c as f64;
        e += p / mass * total as f64;
        if e >= min_expected {
            bins.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => bins.push((o, e)),
        }
    }
    if bins.len() < 2 {
        return Err(Error::InvalidArgument("fewer than two bins after merging".into()));
    }
    let stat: f64 = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = bins.len() - 1;
    let p = ChiSquared::new(dof as f64).expect("positive dof").sf(stat);
    Ok((stat, dof, p))
}
