//! Closed-form baselines and confidence intervals.

use statrs::function::erf::erfc;

/// Gaussian tail probability `Q(x) = 0.5 erfc(x / sqrt 2)`.
pub fn qfunc(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Bit error rate of uncoded Gray-labeled `M`-PAM on an ideal AWGN channel,
/// approximated as symbol error rate over `log2 M`.
pub fn theoretical_ber_pam(order: usize, ebn0_db: f64) -> f64 {
    let m = order as f64;
    let bits = m.log2();
    let ebn0 = 10f64.powf(ebn0_db / 10.0);
    let ser = 2.0 * (1.0 - 1.0 / m) * qfunc((6.0 * bits / (m * m - 1.0) * ebn0).sqrt());
    ser / bits
}

/// Standard deviation of the empirical error rate of `n` Bernoulli(`p`) trials.
pub fn binomial_sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Wilson score interval for `errors` out of `n` at normal quantile `z`.
pub fn wilson_interval(errors: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}
