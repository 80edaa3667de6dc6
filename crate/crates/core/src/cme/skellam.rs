use statrs::function::factorial::ln_factorial;

/// Terms below this fraction of the running sum end the convolution.
const CUTOFF: f64 = 1e-18;

fn ln_poisson(n: u64, ln_mu: f64, mu: f64) -> f64 {
    n as f64 * ln_mu - mu - ln_factorial(n)
}

/// `P(Poisson(mu1) - Poisson(mu2) = k)` by direct convolution
/// `sum_j Pois(j + k; mu1) Pois(j; mu2)`, summed outward from the largest
/// term in log space.
pub fn skellam_pmf(k: i64, mu1: f64, mu2: f64) -> f64 {
    debug_assert!(mu1 >= 0.0 && mu2 >= 0.0);
    if mu1 == 0.0 && mu2 == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if mu2 == 0.0 {
        return if k < 0 { 0.0 } else { ln_poisson(k as u64, mu1.ln(), mu1).exp() };
    }
    if mu1 == 0.0 {
        return if k > 0 { 0.0 } else { ln_poisson((-k) as u64, mu2.ln(), mu2).exp() };
    }
    let (l1, l2) = (mu1.ln(), mu2.ln());
    let j_min = (-k).max(0);
    let term = |j: i64| ln_poisson((j + k) as u64, l1, mu1) + ln_poisson(j as u64, l2, mu2);
    // Largest term: (j + k + 1)(j + 1) ~ mu1 mu2.
    let kf = k as f64;
    let disc = (kf * kf + 4.0 * mu1 * mu2).sqrt();
    let mode = (((-kf - 2.0 + disc) / 2.0).ceil() as i64).max(j_min);
    let peak = term(mode);
    let mut sum = 1.0;
    let mut j = mode + 1;
    loop {
        let r = (term(j) - peak).exp();
        sum += r;
        if r < CUTOFF * sum {
            break;
        }
        j += 1;
    }
    let mut j = mode - 1;
    while j >= j_min {
        let r = (term(j) - peak).exp();
        sum += r;
        if r < CUTOFF * sum {
            break;
        }
        j -= 1;
    }
    (peak + sum.ln()).exp()
}

/// Half-width of the support outside which the Skellam tail mass is
/// negligible (below 1e-12).
pub fn skellam_support(mu1: f64, mu2: f64) -> i64 {
    let m = mu1 + mu2;
    (m.ceil() + 12.0 * m.sqrt() + 20.0) as i64
}
