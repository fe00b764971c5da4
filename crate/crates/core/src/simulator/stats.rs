/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.959_964;

/// Half-width of the Wilson score interval for `errors` out of `trials`.
pub fn wilson_half_width(errors: u64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.5;
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z95 * Z95;
    Z95 / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

/// Wilson interval `(low, high)`.
pub fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z95 * Z95;
    let center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let hw = wilson_half_width(errors, trials);
    (center - hw, center + hw)
}

/// Half-width for the difference of two independent estimates.
pub fn combined_half_width(a: f64, b: f64) -> f64 {
    a.hypot(b)
}
