//! Semi-infinite integrals of log-domain integrands.
//!
//! Every integral in this crate has the shape `int_0^inf exp(f(x)) dx` with
//! `f` dominated by `-a x^2` far out. The engine truncates at `x_max`,
//! scans for the live region around the peak, then runs composite
//! Gauss–Legendre panels, doubling the panel count until two successive
//! estimates agree.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Orders of magnitude (natural log) the integrand must fall below its peak
/// at the truncation point.
pub const TAIL_DROP: f64 = 46.0;
const TRUNCATION_SAFETY: f64 = 1.25;
/// Scan points further than this below the peak are dead.
const LIVE_WINDOW: f64 = 60.0;
const GL_ORDER: usize = 16;
const MAX_PANELS: usize = 2048;
const TARGET_REL: f64 = 1e-11;
const ACCEPT_REL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub nodes: usize,
    pub x_max: f64,
    pub decay_rate: f64,
}

impl QuadratureSpec {
    pub const MIN_NODES: usize = 64;

    pub fn new(nodes: usize, x_max: f64, decay_rate: f64) -> Result<Self> {
        let spec = QuadratureSpec {
            nodes,
            x_max,
            decay_rate,
        };
        spec.check()?;
        Ok(spec)
    }

    /// Truncation for an integrand dominated by `exp(-decay_rate x^2)`:
    /// solves `a x^2 = 46 + 2 ln(1 + x)` and applies a 1.25 safety factor.
    pub fn from_decay_rate(decay_rate: f64) -> Self {
        Self::for_envelope(decay_rate, 0.0, 0.0)
    }

    /// Truncation for an integrand bounded by
    /// `exp(-a x^2 + linear x + power ln x)`.
    ///
    /// The bound peaks at `x*`; its curvature is at least `2a`, so it has
    /// fallen by `46 + 2 ln(1+x)` within `sqrt((46 + 2 ln(1+x)) / a)` past it.
    pub fn for_envelope(decay_rate: f64, linear: f64, power: f64) -> Self {
        let a = decay_rate;
        let peak = (linear + (linear * linear + 8.0 * a * power.max(0.0)).sqrt()) / (4.0 * a);
        let mut x = peak + (TAIL_DROP / a).sqrt();
        for _ in 0..8 {
            x = peak + ((TAIL_DROP + 2.0 * (1.0 + x).ln()) / a).sqrt();
        }
        QuadratureSpec {
            nodes: Self::MIN_NODES,
            x_max: TRUNCATION_SAFETY * x,
            decay_rate,
        }
    }

    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes = nodes;
        self
    }

    pub fn with_x_max(mut self, x_max: f64) -> Self {
        self.x_max = x_max;
        self
    }

    fn check(&self) -> Result<()> {
        if self.nodes < Self::MIN_NODES {
            return Err(Error::Contract(format!(
                "quadrature needs at least {} nodes, got {}",
                Self::MIN_NODES,
                self.nodes
            )));
        }
        if !(self.decay_rate > 0.0 && self.decay_rate.is_finite())
            || !(self.x_max > 0.0 && self.x_max.is_finite())
        {
            return Err(Error::Contract(format!("bad truncation {self:?}")));
        }
        if self.x_max * self.x_max * self.decay_rate < TAIL_DROP * (1.0 - 1e-12) {
            return Err(Error::Contract(format!(
                "x_max^2 * decay_rate = {} < {TAIL_DROP}",
                self.x_max * self.x_max * self.decay_rate
            )));
        }
        Ok(())
    }
}

/// `int_0^inf exp(f(x)) dx`.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(f: F, spec: &QuadratureSpec) -> Result<f64> {
    log_integrate_semi_infinite(f, spec).map(f64::exp)
}

/// `ln int_0^inf exp(f(x)) dx`; `-inf` when the integrand vanishes everywhere.
pub fn log_integrate_semi_infinite<F: Fn(f64) -> f64>(f: F, spec: &QuadratureSpec) -> Result<f64> {
    spec.check()?;
    let n = spec.nodes;
    let mut x_max = spec.x_max;

    // coarse scan; push the truncation out until the tail is dead
    let mut scan = Vec::with_capacity(n);
    let (peak, tail) = loop {
        scan.clear();
        let h = x_max / n as f64;
        scan.extend((0..n).map(|i| f((i as f64 + 0.5) * h)));
        let tail = f(x_max);
        let peak = scan.iter().copied().fold(tail, f64::max);
        if !(tail > peak - TAIL_DROP) || x_max > 1e6 * spec.x_max {
            break (peak, tail);
        }
        x_max *= 1.5;
    };
    if peak == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    if peak.is_nan() || tail.is_nan() {
        return Err(Error::Contract("integrand returned NaN".into()));
    }

    let h = x_max / n as f64;
    let live = |v: &f64| *v > peak - LIVE_WINDOW;
    let first = scan.iter().position(live).unwrap_or(0);
    let last = scan.iter().rposition(live).unwrap_or(n - 1);
    let lo = (first as f64 - 1.0).max(0.0) * h;
    let hi = ((last as f64 + 2.0) * h).min(x_max);

    let mut panels = (n / GL_ORDER).max(1);
    let mut previous = composite(&f, lo, hi, panels, peak);
    let mut previous_change = f64::INFINITY;
    loop {
        panels *= 2;
        let current = composite(&f, lo, hi, panels, peak);
        let change = rel_change(previous, current);
        if change < TARGET_REL {
            return Ok(current);
        }
        // stalled on rounding noise
        if change < ACCEPT_REL && change > 0.3 * previous_change {
            return Ok(current);
        }
        if panels >= MAX_PANELS {
            if change < ACCEPT_REL {
                return Ok(current);
            }
            return Err(Error::Accuracy {
                previous: previous.exp(),
                last: current.exp(),
            });
        }
        previous = current;
        previous_change = change;
    }
}

fn rel_change(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY {
        return 0.0;
    }
    (b - a).exp_m1().abs()
}

/// Log of the composite rule, with values shifted by `shift` before exp.
fn composite<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, panels: usize, shift: f64) -> f64 {
    let (nodes, weights) = gauss_legendre();
    let width = (hi - lo) / panels as f64;
    let half = 0.5 * width;
    let mut sum = 0.0;
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * width;
        for (t, w) in nodes.iter().zip(weights) {
            let v = f(mid + half * t);
            if v > f64::NEG_INFINITY {
                sum += w * (v - shift).exp();
            }
        }
    }
    shift + (sum * half).ln()
}

/// Nodes and weights of the `GL_ORDER`-point Gauss–Legendre rule on [-1, 1].
fn gauss_legendre() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre_rule(GL_ORDER))
}

pub(crate) fn gauss_legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre_rule(GL_ORDER);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // degree 30 monomial: int_{-1}^{1} t^30 = 2/31
        let s: f64 = x.iter().zip(&w).map(|(t, w)| w * t.powi(30)).sum();
        assert!((s - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_half_line() {
        let spec = QuadratureSpec::from_decay_rate(1.0);
        let v = integrate_semi_infinite(|x| -x * x, &spec).unwrap();
        assert!((v - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-10);
    }

    #[test]
    fn gamma_two() {
        // x e^{-x}: no quadratic decay, so truncation is pinned at x_max = 60
        let spec = QuadratureSpec::new(64, 60.0, 46.0 / 3600.0).unwrap();
        let v = integrate_semi_infinite(|x| x.ln() - x, &spec).unwrap();
        assert!((v - 1.0).abs() < 1e-10, "{v}");
    }

    #[test]
    fn spec_invariants_enforced() {
        assert!(QuadratureSpec::new(32, 10.0, 1.0).is_err());
        assert!(QuadratureSpec::new(64, 1.0, 1.0).is_err());
        assert!(QuadratureSpec::new(64, 7.0, 1.0).is_ok());
        let s = QuadratureSpec::from_decay_rate(0.3);
        assert!(s.x_max * s.x_max * s.decay_rate >= TAIL_DROP);
    }

    #[test]
    fn zero_integrand() {
        let spec = QuadratureSpec::from_decay_rate(1.0);
        let v = log_integrate_semi_infinite(|_| f64::NEG_INFINITY, &spec).unwrap();
        assert_eq!(v, f64::NEG_INFINITY);
    }

    #[test]
    fn narrow_offset_peak() {
        // exp(-400 (x - 7)^2) integrates to sqrt(pi/400)
        let spec = QuadratureSpec::for_envelope(400.0, 5600.0, 0.0);
        let v = integrate_semi_infinite(|x| -400.0 * (x - 7.0) * (x - 7.0), &spec).unwrap();
        assert!((v / (std::f64::consts::PI / 400.0).sqrt() - 1.0).abs() < 1e-11);
    }

    #[test]
    fn truncation_extends_when_too_short() {
        // declared decay far too fast for the real integrand
        let spec = QuadratureSpec::new(64, 3.0, 46.0 / 9.0).unwrap();
        let v = integrate_semi_infinite(|x| -0.01 * x * x, &spec).unwrap();
        let exact = 0.5 * (std::f64::consts::PI / 0.01).sqrt();
        assert!((v / exact - 1.0).abs() < 1e-10, "{v} vs {exact}");
    }
}
