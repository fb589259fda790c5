//! Modified Bessel functions of the first kind, kept in scaled or log form.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Below this argument the power series is summed; above it the Hankel
/// asymptotic series reaches its smallest term well under 1e-17.
const SERIES_LIMIT: f64 = 20.0;

/// Natural log of `I0(x)`.
///
/// Accurate to a few ulps relative in `I0` on the whole half-line, and never
/// overflows since the leading `x` is kept outside the exponential.
pub fn log_bessel_i0(x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::domain("log_bessel_i0", format!("x = {x}")));
    }
    Ok(ln_i0(x))
}

/// Unchecked `ln I0(x)` for `x >= 0`; the hot-loop version of [`log_bessel_i0`].
#[inline]
pub fn ln_i0(x: f64) -> f64 {
    if x < SERIES_LIMIT {
        series_tail(x).ln_1p()
    } else {
        x + hankel_sum(x).ln() - 0.5 * (2.0 * PI * x).ln()
    }
}

/// `e^{-x} I0(x)` for `x >= 0`.
#[inline]
pub fn bessel_i0e(x: f64) -> f64 {
    if x < SERIES_LIMIT {
        (1.0 + series_tail(x)) * (-x).exp()
    } else {
        hankel_sum(x) / (2.0 * PI * x).sqrt()
    }
}

/// `sum_{k>=1} (x/2)^{2k} / (k!)^2`, i.e. `I0(x) - 1`.
fn series_tail(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 0.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term <= 1e-17 * (1.0 + sum) {
            return sum;
        }
        k += 1.0;
    }
}

/// `sum_k ((2k-1)!!)^2 / (k! (8x)^k)`, stopped at the smallest term.
fn hankel_sum(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        let next = term * (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * k * x);
        if next >= term {
            return sum;
        }
        if next < 1e-17 * sum {
            return sum + next;
        }
        term = next;
        sum += term;
        k += 1.0;
    }
}

/// `e^{-z} I_k(z)` for `k = 0..=n`, by Miller's backward recurrence
/// normalized against [`bessel_i0e`].
pub fn bessel_ie_orders(z: f64, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    if z == 0.0 {
        out[0] = 1.0;
        return out;
    }
    if z < 1e-8 {
        // leading power-series terms; the next correction is O(z^2) relative
        let e = (-z).exp();
        let half = 0.5 * z;
        let mut t = 1.0;
        for (k, slot) in out.iter_mut().enumerate() {
            if k > 0 {
                t *= half / k as f64;
            }
            *slot = e * t * (1.0 + half * half / (k as f64 + 1.0));
            if t == 0.0 {
                break;
            }
        }
        return out;
    }

    let nf = n as f64;
    let start = (n + 20).max(((nf * nf + 45.0 * z).sqrt() + 10.0).ceil() as usize);
    let mut above = 0.0;
    let mut cur = 1e-30;
    let mut k = start;
    while k > 0 {
        let below = above + (2.0 * k as f64 / z) * cur;
        above = cur;
        cur = below;
        k -= 1;
        if k <= n {
            out[k] = cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            above *= 1e-250;
            for v in out.iter_mut().skip(k) {
                *v *= 1e-250;
            }
        }
    }
    let scale = bessel_i0e(z) / out[0];
    for v in &mut out {
        *v *= scale;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Power series summed without any rearrangement; reference for I0.
    fn i0_series(x: f64) -> f64 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..500 {
            term *= (x / 2.0) * (x / 2.0) / ((k * k) as f64);
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
        }
        sum
    }

    #[test]
    fn origin_is_zero() {
        assert_eq!(log_bessel_i0(0.0).unwrap(), 0.0);
    }

    #[test]
    fn matches_power_series_oracle() {
        for &x in &[
            1e-6, 0.1, 1.0, 5.0, 12.5, 19.99, 20.0, 20.01, 35.0, 60.0, 100.0,
        ] {
            let reference = i0_series(x);
            let got = ln_i0(x).exp();
            assert!(
                ((got - reference) / reference).abs() < 1e-13,
                "x={x} got={got} ref={reference}"
            );
        }
        let one = log_bessel_i0(1.0).unwrap();
        assert!((one - i0_series(1.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn large_argument_tracks_leading_asymptotic() {
        let x: f64 = 500.0;
        let lead = x - 0.5 * (2.0 * PI * x).ln();
        assert!((log_bessel_i0(x).unwrap() - lead).abs() < 1e-3);
        assert!(log_bessel_i0(1e8).unwrap().is_finite());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(log_bessel_i0(-1.0).is_err());
        assert!(log_bessel_i0(f64::NAN).is_err());
        assert!(log_bessel_i0(f64::INFINITY).is_err());
    }

    #[test]
    fn scaled_orders_satisfy_generating_sum() {
        // e^{z} = I0 + 2 sum_{k>=1} I_k
        for &z in &[1e-9f64, 0.3, 2.0, 17.0, 150.0, 2500.0] {
            let n = 40 + (12.0 * z.sqrt()) as usize;
            let ie = bessel_ie_orders(z, n);
            let total = ie[0] + 2.0 * ie[1..].iter().sum::<f64>();
            assert!((total - 1.0).abs() < 1e-13, "z={z} total={total}");
        }
    }

    #[test]
    fn scaled_orders_match_series_for_moderate_z() {
        let z: f64 = 3.0;
        let ie = bessel_ie_orders(z, 6);
        for (k, &v) in ie.iter().enumerate() {
            // I_k(z) = sum_j (z/2)^{2j+k} / (j! (j+k)!)
            let mut sum = 0.0;
            let mut fact_j = 1.0;
            for j in 0..60 {
                if j > 0 {
                    fact_j *= j as f64;
                }
                let fact_jk: f64 = (1..=(j + k)).map(|i| i as f64).product();
                sum += (z / 2.0).powi((2 * j + k) as i32) / (fact_j * fact_jk);
            }
            let reference = sum * (-z).exp();
            assert!(((v - reference) / reference).abs() < 1e-13, "k={k}");
        }
    }
}
