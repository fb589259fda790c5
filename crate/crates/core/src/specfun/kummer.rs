//! Kummer's function on the row `b = 1`, scaled by `e^{-z}`.
//!
//! With all terms of `1F1(m; 1; z)` positive for `z >= 0`, the scaled sum is
//! a Poisson(z)-weighted average of `(m)_k / k!`:
//!
//! ```text
//! e^{-z} 1F1(m; 1; z) = sum_k  [e^{-z} z^k / k!] * (m)_k / k!
//! ```
//!
//! The series is summed outward from its largest term, which starts in log
//! form so neither factor overflows. For `z` large against `m^2` the
//! asymptotic expansion `z^{m-1}/Gamma(m) * sum_s ((1-m)_s)^2 / (s! z^s)` is
//! cheaper and just as accurate.

use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const ASYMPTOTIC_MIN_Z: f64 = 40.0;
const ASYMPTOTIC_M2_FACTOR: f64 = 30.0;

/// `e^{-z} 1F1(m; 1; z)` for `m >= 0.5`, `z >= 0`.
pub fn kummer_1f1_row1_scaled(m: f64, z: f64) -> Result<f64> {
    check(m, z)?;
    Ok(ln_kummer_row1_scaled(m, z).exp())
}

/// Log of [`kummer_1f1_row1_scaled`], for callers assembling exponents.
pub fn log_kummer_1f1_row1_scaled(m: f64, z: f64) -> Result<f64> {
    check(m, z)?;
    Ok(ln_kummer_row1_scaled(m, z))
}

fn check(m: f64, z: f64) -> Result<()> {
    if !z.is_finite() || z < 0.0 {
        return Err(Error::domain("kummer_1f1_row1_scaled", format!("z = {z}")));
    }
    if !m.is_finite() || m < 0.5 {
        return Err(Error::domain("kummer_1f1_row1_scaled", format!("m = {m}")));
    }
    Ok(())
}

/// Unchecked log-scaled evaluation.
pub fn ln_kummer_row1_scaled(m: f64, z: f64) -> f64 {
    if z == 0.0 || m == 1.0 {
        return 0.0;
    }
    if z >= ASYMPTOTIC_MIN_Z && z >= ASYMPTOTIC_M2_FACTOR * m * m {
        if let Some(v) = asymptotic(m, z) {
            return v;
        }
    }
    poisson_series(m, z)
}

fn asymptotic(m: f64, z: f64) -> Option<f64> {
    let mut term: f64 = 1.0;
    let mut sum: f64 = 1.0;
    for s in 0..400 {
        let s = s as f64;
        let c = s + 1.0 - m;
        let next = term * c * c / ((s + 1.0) * z);
        if next == 0.0 || next.abs() < 1e-17 * sum.abs() {
            return Some((m - 1.0) * z.ln() - ln_gamma(m) + (sum + next).ln());
        }
        if next.abs() >= term.abs() {
            return None;
        }
        term = next;
        sum += term;
    }
    None
}

fn poisson_series(m: f64, z: f64) -> f64 {
    // largest term: (m + k) z = (k + 1)^2
    let disc = z * z + 4.0 * z * (m - 1.0);
    let k0 = if disc > 0.0 {
        ((0.5 * (z + disc.sqrt())) - 1.0).max(0.0).floor()
    } else {
        0.0
    };
    let log_t0 = if k0 == 0.0 {
        -z
    } else {
        ln_poisson_pmf(k0, z) + ln_rising_over_factorial(m, k0)
    };

    let mut sum = 1.0;
    let mut t = 1.0;
    let mut k = k0;
    loop {
        t *= (m + k) * z / ((k + 1.0) * (k + 1.0));
        k += 1.0;
        sum += t;
        if t < 1e-17 * sum {
            break;
        }
    }
    t = 1.0;
    k = k0;
    while k > 0.0 {
        t *= k * k / ((m + k - 1.0) * z);
        k -= 1.0;
        sum += t;
        if t < 1e-17 * sum {
            break;
        }
    }
    log_t0 + sum.ln()
}

/// `ln(e^{-z} z^k / k!)` without cancellation between `k ln z` and `ln k!`.
fn ln_poisson_pmf(k: f64, z: f64) -> f64 {
    -stirling_error(k) - deviance(k, z) - 0.5 * (2.0 * PI * k).ln()
}

/// `ln((m)_k / k!) = lnΓ(m+k) - lnΓ(m) - lnΓ(k+1)`.
fn ln_rising_over_factorial(m: f64, k: f64) -> f64 {
    let ratio = if k >= 30.0 {
        // Stirling on both gammas with the leading logs combined through ln_1p
        let corr = |y: f64| {
            let y2 = y * y;
            (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * y2)) / y2) / y2) / y
        };
        (k + 0.5) * ((m - 1.0) / (k + 1.0)).ln_1p() + (m - 1.0) * (k + m).ln() - (m - 1.0)
            + corr(k + m)
            - corr(k + 1.0)
    } else {
        ln_gamma(m + k) - ln_gamma(k + 1.0)
    };
    ratio - ln_gamma(m)
}

/// `lnΓ(k+1) - (k + 1/2) ln k + k - ln(2π)/2`.
fn stirling_error(k: f64) -> f64 {
    if k > 15.0 {
        let k2 = k * k;
        (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * k2)) / k2) / k2) / k
    } else {
        ln_gamma(k + 1.0) - (k + 0.5) * k.ln() + k - 0.5 * (2.0 * PI).ln()
    }
}

/// `k ln(k/z) + z - k`, computed stably near `k = z`.
fn deviance(k: f64, z: f64) -> f64 {
    if (k - z).abs() < 0.1 * (k + z) {
        let v = (k - z) / (k + z);
        let mut s = (k - z) * v;
        let mut ej = 2.0 * k * v;
        let v2 = v * v;
        let mut j = 1.0;
        loop {
            ej *= v2;
            let next = s + ej / (2.0 * j + 1.0);
            if next == s {
                return s;
            }
            s = next;
            j += 1.0;
        }
    }
    k * (k / z).ln() + z - k
}
