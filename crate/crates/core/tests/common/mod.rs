//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use brs_core::BrsParams;

/// Gauss–Legendre nodes and weights of order `n` on [-1, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = vec![(0.0, 0.0); n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out[i] = (x, 2.0 / ((1.0 - x * x) * dp * dp));
    }
    out
}

/// Composite 16-point rule on [a, b] with `panels` panels.
pub fn composite_nodes(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let rule = gauss_legendre(16);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(16 * panels);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for &(t, w) in &rule {
            out.push((mid + 0.5 * h * t, 0.5 * h * w));
        }
    }
    out
}

pub fn integrate_1d<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    composite_nodes(a, b, panels)
        .into_iter()
        .map(|(x, w)| w * f(x))
        .sum()
}

/// Tensor-product integral of a symmetric `f(r1, r2)` over [0, r]^2.
pub fn integrate_2d_symmetric<F: Fn(f64, f64) -> f64>(f: F, r: f64, panels: usize) -> f64 {
    let nodes = composite_nodes(0.0, r, panels);
    let mut sum = 0.0;
    for (i, &(x, wx)) in nodes.iter().enumerate() {
        sum += wx * wx * f(x, x);
        for &(y, wy) in &nodes[i + 1..] {
            sum += 2.0 * wx * wy * f(x, y);
        }
    }
    sum
}

/// MGF of one power `P = |H|^2`, written from the Rician-given-LOS MGF
/// averaged over the Gamma-distributed LOS power.
pub fn marginal_power_mgf(p: &BrsParams, theta: f64) -> f64 {
    let u = 1.0 - p.sigma2 * theta;
    let omega = p.k_factor * p.sigma2;
    // E_{L ~ Gamma(m, omega/m)} exp(theta L / u) / u
    (1.0 - theta * omega / (p.m * u)).powf(-p.m) / u
}

/// `e^{-z} 1F1(m; 1; z)` by the plain series; fine for moderate `z`.
pub fn kummer_scaled_series(m: f64, z: f64) -> f64 {
    let (mut term, mut sum, mut k) = (1.0, 1.0, 0.0);
    while term > 1e-17 * sum || k < z {
        term *= (m + k) * z / ((k + 1.0) * (k + 1.0));
        sum += term;
        k += 1.0;
    }
    sum * (-z).exp()
}

/// Density of one power `P = |H|^2`.
pub fn marginal_power_pdf(p: &BrsParams, x: f64) -> f64 {
    let (s2, k, m) = (p.sigma2, p.k_factor, p.m);
    let z = k * x / (s2 * (m + k));
    (m / (m + k)).powf(m) / s2 * (-x / s2 + z).exp() * kummer_scaled_series(m, z)
}

/// Radius beyond which each envelope carries less than `eps` of the
/// (optionally `theta`-tilted) mass, by a Chernoff bound on the power.
pub fn tail_radius(p: &BrsParams, theta: f64, eps: f64) -> f64 {
    let mean = p.sigma2 * (1.0 + p.k_factor);
    let mut best = f64::INFINITY;
    for i in 1..400 {
        let t = i as f64 * 0.0025 / p.sigma2;
        let s = theta + t;
        // stay inside the MGF domain
        let u = 1.0 - p.sigma2 * s;
        if u <= 0.0 || 1.0 - s * p.k_factor * p.sigma2 / (p.m * u) <= 0.0 {
            break;
        }
        let x = (marginal_power_mgf(p, s) / eps).ln() / t;
        best = best.min(x);
    }
    best.max(4.0 * mean).sqrt()
}

/// Bivariate Rayleigh density for circular Gaussians of power `s2` and
/// complex correlation `rho`.
pub fn bivariate_rayleigh_pdf(s2: f64, rho: f64, r1: f64, r2: f64) -> f64 {
    let d = s2 * (1.0 - rho * rho);
    let arg = 2.0 * rho * r1 * r2 / d;
    // I0 by its power series, scaled
    let (mut term, mut sum, mut k) = (1.0f64, 1.0f64, 0.0f64);
    let q = arg * arg / 4.0;
    loop {
        k += 1.0;
        term *= q / (k * k);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    4.0 * r1 * r2 / (s2 * d) * (-(r1 * r1 + r2 * r2) / d).exp() * sum
}

/// Central finite differences of `f` at the origin with one Richardson step:
/// `(d1, d11, d12)` for a symmetric function of two variables.
pub fn richardson_derivatives<F: Fn(f64, f64) -> f64>(f: F, h: f64) -> (f64, f64, f64) {
    let fd = |h: f64| {
        let f0 = f(0.0, 0.0);
        let d1 = (f(h, 0.0) - f(-h, 0.0)) / (2.0 * h);
        let d11 = (f(h, 0.0) - 2.0 * f0 + f(-h, 0.0)) / (h * h);
        let d12 = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
        (d1, d11, d12)
    };
    let (a, b) = (fd(h), fd(h / 2.0));
    let r = |x: f64, y: f64| (4.0 * y - x) / 3.0;
    (r(a.0, b.0), r(a.1, b.1), r(a.2, b.2))
}

/// One-sample Kolmogorov–Smirnov statistic of sorted data against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

/// Linear interpolation on an increasing grid.
pub fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let i = xs.partition_point(|&g| g <= x);
    if i >= xs.len() {
        return ys[ys.len() - 1];
    }
    let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    ys[i - 1] + t * (ys[i] - ys[i - 1])
}
