//! Joint law of the two envelopes: density, distribution function, MGF,
//! power moments and the power correlation coefficient.
//!
//! The joint density and distribution function are single integrals over
//! the magnitude `x` of the shared component `V = sigma sqrt(rho) X_0 + Z`:
//!
//! ```text
//! f(r1, r2) = C_f r1 r2 exp(-(r1^2 + r2^2) / (sigma^2 (1-rho)))
//!             * int_0^inf x exp(-alpha x^2) I0(2 r1 x / (sigma^2 (1-rho)))
//!                        * I0(2 r2 x / (sigma^2 (1-rho))) 1F1(m; 1; beta x^2) dx
//! F(r1, r2) = C_F int_0^inf x exp(-x^2 / (sigma^2 rho))
//!             * [1 - Q1(x/Omega, r1/Omega)] [1 - Q1(x/Omega, r2/Omega)] 1F1(m; 1; beta x^2) dx
//! ```
//!
//! Integrands are assembled in log form with the Kummer factor scaled by
//! `e^{-beta x^2}`, so the Gaussian decay that drives truncation is the net
//! rate from [`DerivedConstants`].
//!
//! Near the ends of the `rho` range the `1/rho` and `1/(1-rho)` prefactors
//! are ill-conditioned. For `rho < 1e-3` the law is evaluated with `rho = 0`
//! by conditioning on `|Z|` directly; for `rho > 0.999` the envelopes are
//! treated as equal and the joint law sits on the diagonal.

use std::f64::consts::LN_2;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::{derive, validate, BrsParams, RhoClass};
use crate::specfun::{
    ln_i0, ln_kummer_row1_scaled, log_integrate_semi_infinite, marcum_pair, QuadratureSpec,
};

/// Densities below this are reported as exactly zero.
pub const DENSITY_FLOOR: f64 = 1e-300;
/// Tolerated excursion of a probability above 1 before it is an error.
pub const PROBABILITY_SLACK: f64 = 1e-9;
/// Largest integer `m` accepted by [`joint_pdf_int_m`].
pub const INT_M_MAX: u32 = 50;

/// Joint density, or the statement that there is none.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JointDensity {
    Finite(f64),
    /// `R1 = R2` almost surely. `marginal_density` is the univariate density
    /// at `r1`; the joint law puts it on the diagonal.
    Diagonal {
        marginal_density: f64,
        on_diagonal: bool,
    },
}

fn check_radius(func: &'static str, r: f64) -> Result<()> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::domain(func, format!("radius {r}")));
    }
    Ok(())
}

fn floor_density(ln: f64) -> f64 {
    let v = ln.exp();
    if v < DENSITY_FLOOR {
        0.0
    } else {
        v
    }
}

fn to_probability(what: &'static str, ln: f64) -> Result<f64> {
    let v = ln.exp();
    if v > 1.0 + PROBABILITY_SLACK {
        return Err(Error::OutOfRange { what, value: v });
    }
    Ok(v.min(1.0))
}

/// Polynomial order of `x * e^{-z} 1F1(m;1;z)` with `z ∝ x^2`, for truncation.
fn kummer_power(m: f64) -> f64 {
    1.0 + 2.0 * (m - 1.0).max(0.0)
}

// ---------------------------------------------------------------------------
// density
// ---------------------------------------------------------------------------

/// Joint density of `(R1, R2)`.
///
/// Dispatches on the `rho` class; for `rho > 0.999` there is no density and
/// [`Error::DiagonalCollapse`] is returned (see [`joint_density`]).
pub fn joint_pdf(params: &BrsParams, r1: f64, r2: f64) -> Result<f64> {
    ln_joint_pdf(params, r1, r2).map(floor_density)
}

/// Natural log of [`joint_pdf`], without the underflow floor.
pub fn ln_joint_pdf(params: &BrsParams, r1: f64, r2: f64) -> Result<f64> {
    check_radius("joint_pdf", r1)?;
    check_radius("joint_pdf", r2)?;
    match validate(params)? {
        RhoClass::Regular => ln_pdf_regular(params, r1, r2),
        RhoClass::DegenerateLow => ln_pdf_rho0(params, r1, r2),
        RhoClass::DegenerateHigh => Err(Error::DiagonalCollapse { rho: params.rho }),
    }
}

/// Joint density over every `rho` class.
pub fn joint_density(params: &BrsParams, r1: f64, r2: f64) -> Result<JointDensity> {
    match validate(params)? {
        RhoClass::DegenerateHigh => joint_pdf_rho1(params, r1, r2),
        _ => joint_pdf(params, r1, r2).map(JointDensity::Finite),
    }
}

fn ln_pdf_regular(params: &BrsParams, r1: f64, r2: f64) -> Result<f64> {
    if r1 == 0.0 || r2 == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let d = derive(params)?;
    let BrsParams {
        sigma2: s2, m, rho, ..
    } = *params;
    let c = s2 * (1.0 - rho);
    let (g1, g2) = (2.0 * r1 / c, 2.0 * r2 / c);
    let ln_pre = pdf_prefactor(params, d.ln_los_weight, r1, r2);
    let (a, beta) = (d.net_decay_pdf, d.beta);
    let integrand = |x: f64| {
        x.ln() - a * x * x + ln_i0(g1 * x) + ln_i0(g2 * x) + ln_kummer_row1_scaled(m, beta * x * x)
    };
    let spec = QuadratureSpec::for_envelope(a, g1 + g2, kummer_power(m));
    Ok(ln_pre + log_integrate_semi_infinite(integrand, &spec)?)
}

fn pdf_prefactor(params: &BrsParams, ln_los_weight: f64, r1: f64, r2: f64) -> f64 {
    let BrsParams {
        sigma2: s2, rho, ..
    } = *params;
    3.0 * LN_2 + ln_los_weight - 3.0 * s2.ln() - rho.ln() - 2.0 * (-rho).ln_1p() + r1.ln() + r2.ln()
        - (r1 * r1 + r2 * r2) / (s2 * (1.0 - rho))
}

/// Integer-`m` route: `1F1(m;1;z) = e^z L_{m-1}(-z)` expands the integral into
/// `m` positive monomial integrals `x^{2l+1} exp(-net x^2) I0 I0`.
pub fn joint_pdf_int_m(params: &BrsParams, r1: f64, r2: f64) -> Result<f64> {
    check_radius("joint_pdf_int_m", r1)?;
    check_radius("joint_pdf_int_m", r2)?;
    let class = validate(params)?;
    let m = params.m;
    if m.fract() != 0.0 || m < 1.0 {
        return Err(Error::Contract(format!(
            "integer-m path needs integer m, got {m}"
        )));
    }
    if m > INT_M_MAX as f64 {
        return Err(Error::Contract(format!(
            "integer-m path refuses m = {m} > {INT_M_MAX}"
        )));
    }
    if class != RhoClass::Regular {
        return Err(Error::DegenerateBranch {
            rho: params.rho,
            class,
        });
    }
    if r1 == 0.0 || r2 == 0.0 {
        return Ok(0.0);
    }
    let d = derive(params)?;
    let c = params.sigma2 * (1.0 - params.rho);
    let (g1, g2) = (2.0 * r1 / c, 2.0 * r2 / c);
    let a = d.net_decay_pdf;
    let n = m as u32 - 1;

    let mut logs = Vec::with_capacity(m as usize);
    let mut ln_binom = 0.0;
    for l in 0..=n {
        if l > 0 {
            if d.beta == 0.0 {
                break;
            }
            ln_binom += ((n - l + 1) as f64 / l as f64).ln();
        }
        let lf = l as f64;
        let coef = ln_binom + lf * d.beta.ln() - ln_gamma(lf + 1.0);
        let power = 2.0 * lf + 1.0;
        let integrand = |x: f64| power * x.ln() - a * x * x + ln_i0(g1 * x) + ln_i0(g2 * x);
        let spec = QuadratureSpec::for_envelope(a, g1 + g2, power);
        logs.push(coef + log_integrate_semi_infinite(integrand, &spec)?);
    }
    let ln_pre = pdf_prefactor(params, d.ln_los_weight, r1, r2);
    Ok(floor_density(ln_pre + log_sum_exp(&logs)))
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Joint density for `rho < 1e-3`, evaluated at `rho = 0`:
/// `int f_Rice(r1 | x) f_Rice(r2 | x) f_Nakagami(x) dx` with diffuse
/// per-component variance `sigma^2 / 2`.
pub fn joint_pdf_rho0(params: &BrsParams, r1: f64, r2: f64) -> Result<f64> {
    check_radius("joint_pdf_rho0", r1)?;
    check_radius("joint_pdf_rho0", r2)?;
    let class = validate(params)?;
    if class != RhoClass::DegenerateLow {
        return Err(Error::Contract(format!(
            "rho = 0 path called with rho = {} ({class:?})",
            params.rho
        )));
    }
    ln_pdf_rho0(params, r1, r2).map(floor_density)
}

fn ln_pdf_rho0(params: &BrsParams, r1: f64, r2: f64) -> Result<f64> {
    if r1 == 0.0 || r2 == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let BrsParams { sigma2: s2, m, .. } = *params;
    let rayleigh = (2.0 * r1 / s2).ln() + (2.0 * r2 / s2).ln() - (r1 * r1 + r2 * r2) / s2;
    if params.k_factor == 0.0 {
        return Ok(rayleigh);
    }
    let omega_n = params.omega_n();
    let ln_pre = rayleigh + nakagami_norm(m, omega_n);
    let a = 2.0 / s2 + m / omega_n;
    let (g1, g2) = (2.0 * r1 / s2, 2.0 * r2 / s2);
    let power = 2.0 * m - 1.0;
    let integrand = |x: f64| power * x.ln() - a * x * x + ln_i0(g1 * x) + ln_i0(g2 * x);
    let spec = QuadratureSpec::for_envelope(a, g1 + g2, power);
    Ok(ln_pre + log_integrate_semi_infinite(integrand, &spec)?)
}

/// `ln(2 m^m / (Gamma(m) Omega^m))`, the constant of the Nakagami density.
fn nakagami_norm(m: f64, omega: f64) -> f64 {
    LN_2 + m * (m / omega).ln() - ln_gamma(m)
}

/// Diagonal-collapse flag for `rho > 0.999`.
pub fn joint_pdf_rho1(params: &BrsParams, r1: f64, r2: f64) -> Result<JointDensity> {
    check_radius("joint_pdf_rho1", r1)?;
    check_radius("joint_pdf_rho1", r2)?;
    let class = validate(params)?;
    if class != RhoClass::DegenerateHigh {
        return Err(Error::Contract(format!(
            "diagonal path called with rho = {} ({class:?})",
            params.rho
        )));
    }
    Ok(JointDensity::Diagonal {
        marginal_density: marginal_pdf(params, r1)?,
        on_diagonal: r1 == r2,
    })
}

/// Univariate Rician shadowed envelope density.
///
/// Closed form from averaging a Rician density over the Nakagami LOS:
/// `f(r) = 2r/sigma^2 (m/(m+K))^m exp(-r^2/sigma^2) 1F1(m; 1; K r^2 / (sigma^2 (m+K)))`.
pub fn marginal_pdf(params: &BrsParams, r: f64) -> Result<f64> {
    check_radius("marginal_pdf", r)?;
    validate(params)?;
    if r == 0.0 {
        return Ok(0.0);
    }
    let BrsParams {
        sigma2: s2,
        k_factor: k,
        m,
        ..
    } = *params;
    let x = r * r;
    let z = k * x / (s2 * (m + k));
    let ln = (2.0 * r / s2).ln() - m * (k / m).ln_1p() - x * m / (s2 * (m + k))
        + ln_kummer_row1_scaled(m, z);
    Ok(floor_density(ln))
}

// ---------------------------------------------------------------------------
// distribution functions
// ---------------------------------------------------------------------------

/// Conditional factor for one envelope given the shared magnitude.
#[derive(Debug, Clone, Copy)]
enum Bracket {
    /// `P(R_k < r | x) = 1 - Q1(x/Omega, r/Omega)`
    Below(f64),
    /// `P(R_k > r | x) = Q1(x/Omega, r/Omega)`
    Above(f64),
    /// no constraint
    Free,
}

impl Bracket {
    #[inline]
    fn ln_value(self, x: f64, inv_omega: f64) -> f64 {
        match self {
            Bracket::Below(r) => marcum_pair(x * inv_omega, r * inv_omega).p.ln(),
            Bracket::Above(r) => marcum_pair(x * inv_omega, r * inv_omega).q.ln(),
            Bracket::Free => 0.0,
        }
    }

    fn is_empty(self) -> bool {
        matches!(self, Bracket::Below(r) if r == 0.0)
    }
}

fn ln_cdf(params: &BrsParams, b1: Bracket, b2: Bracket) -> Result<f64> {
    if b1.is_empty() || b2.is_empty() {
        return Ok(f64::NEG_INFINITY);
    }
    match validate(params)? {
        RhoClass::Regular => ln_cdf_regular(params, b1, b2),
        _ => ln_cdf_rho0(params, b1, b2),
    }
}

fn ln_cdf_regular(params: &BrsParams, b1: Bracket, b2: Bracket) -> Result<f64> {
    let d = derive(params)?;
    let BrsParams {
        sigma2: s2, m, rho, ..
    } = *params;
    let inv_omega = 1.0 / d.omega2.sqrt();
    let ln_pre = LN_2 + d.ln_los_weight - (s2 * rho).ln();
    let (a, beta) = (d.net_decay_cdf, d.beta);
    let integrand = |x: f64| {
        x.ln() - a * x * x
            + ln_kummer_row1_scaled(m, beta * x * x)
            + b1.ln_value(x, inv_omega)
            + b2.ln_value(x, inv_omega)
    };
    let spec = QuadratureSpec::for_envelope(a, 0.0, kummer_power(m));
    Ok(ln_pre + log_integrate_semi_infinite(integrand, &spec)?)
}

/// `rho = 0` form: condition on `|Z|`, each envelope Rician with
/// per-component variance `sigma^2 / 2`.
fn ln_cdf_rho0(params: &BrsParams, b1: Bracket, b2: Bracket) -> Result<f64> {
    let BrsParams { sigma2: s2, m, .. } = *params;
    if params.k_factor == 0.0 {
        let rayleigh = |b: Bracket| match b {
            Bracket::Below(r) => (-(-r * r / s2).exp_m1()).ln(),
            Bracket::Above(r) => -r * r / s2,
            Bracket::Free => 0.0,
        };
        return Ok(rayleigh(b1) + rayleigh(b2));
    }
    let omega_n = params.omega_n();
    let inv_omega = (2.0 / s2).sqrt();
    let a = m / omega_n;
    let power = 2.0 * m - 1.0;
    let integrand =
        |x: f64| power * x.ln() - a * x * x + b1.ln_value(x, inv_omega) + b2.ln_value(x, inv_omega);
    let spec = QuadratureSpec::for_envelope(a, 0.0, power);
    Ok(nakagami_norm(m, omega_n) + log_integrate_semi_infinite(integrand, &spec)?)
}

/// Joint CDF `P(R1 < r1, R2 < r2)`.
pub fn joint_cdf(params: &BrsParams, r1: f64, r2: f64) -> Result<f64> {
    check_radius("joint_cdf", r1)?;
    check_radius("joint_cdf", r2)?;
    if validate(params)? == RhoClass::DegenerateHigh {
        return marginal_cdf(params, r1.min(r2));
    }
    to_probability(
        "joint_cdf",
        ln_cdf(params, Bracket::Below(r1), Bracket::Below(r2))?,
    )
}

/// Natural log of [`joint_cdf`], for deep lower tails.
pub fn ln_joint_cdf(params: &BrsParams, r1: f64, r2: f64) -> Result<f64> {
    check_radius("joint_cdf", r1)?;
    check_radius("joint_cdf", r2)?;
    if validate(params)? == RhoClass::DegenerateHigh {
        return ln_marginal_cdf(params, r1.min(r2));
    }
    ln_cdf(params, Bracket::Below(r1), Bracket::Below(r2))
}

/// Marginal CDF `P(R1 < r)`: the joint CDF with the second constraint
/// removed. The law of one envelope does not depend on `rho`, so the
/// degenerate classes reuse the `rho = 0` form.
pub fn marginal_cdf(params: &BrsParams, r: f64) -> Result<f64> {
    to_probability("marginal_cdf", ln_marginal_cdf(params, r)?)
}

pub fn ln_marginal_cdf(params: &BrsParams, r: f64) -> Result<f64> {
    check_radius("marginal_cdf", r)?;
    match validate(params)? {
        RhoClass::Regular => ln_cdf(params, Bracket::Below(r), Bracket::Free),
        _ => ln_cdf_rho0(params, Bracket::Below(r), Bracket::Free),
    }
}

/// `P(R1 < u, R2 > u)`, the probability of a downward crossing of `u`
/// between consecutive samples.
///
/// Equal to `marginal_cdf(u) - joint_cdf(u, u)` but integrated directly, so
/// no digits are lost when the two nearly coincide.
pub fn crossing_probability(params: &BrsParams, u: f64) -> Result<f64> {
    check_radius("crossing_probability", u)?;
    if validate(params)? == RhoClass::DegenerateHigh || u == 0.0 {
        return Ok(0.0);
    }
    to_probability(
        "crossing_probability",
        ln_cdf(params, Bracket::Below(u), Bracket::Above(u))?,
    )
}

// ---------------------------------------------------------------------------
// MGF and moments
// ---------------------------------------------------------------------------

/// Argument of the joint MGF `E[exp(theta1 P1 + theta2 P2)]`, `P_k = R_k^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgfPoint {
    pub theta1: f64,
    pub theta2: f64,
}

/// Pieces of the MGF at one point:
/// `u_k = 1 - sigma^2 (1-rho) theta_k`, `s = sum theta_k / u_k`,
/// `e = 1 - sigma^2 rho s` (`= sigma^2 rho d1`), `w = m e - K sigma^2 s`.
struct MgfTerms {
    u1: f64,
    u2: f64,
    s: f64,
    e: f64,
    w: f64,
}

impl MgfPoint {
    pub fn new(theta1: f64, theta2: f64) -> Self {
        MgfPoint { theta1, theta2 }
    }

    fn terms(&self, params: &BrsParams) -> Result<MgfTerms> {
        let BrsParams {
            sigma2: s2,
            k_factor: k,
            m,
            rho,
        } = *params;
        if !(self.theta1.is_finite() && self.theta2.is_finite()) {
            return Err(Error::MgfDomain(format!("non-finite theta {self:?}")));
        }
        let c = s2 * (1.0 - rho);
        let u1 = 1.0 - c * self.theta1;
        let u2 = 1.0 - c * self.theta2;
        for (name, u) in [("theta1", u1), ("theta2", u2)] {
            if u <= 0.0 {
                return Err(Error::MgfDomain(format!(
                    "1 - sigma2 (1 - rho) {name} = {u} must be > 0"
                )));
            }
        }
        let s = self.theta1 / u1 + self.theta2 / u2;
        let e = 1.0 - s2 * rho * s;
        let w = m * e - k * s2 * s;
        if !(e > 0.0 && w > 0.0) {
            return Err(Error::MgfDomain(format!(
                "d1 > beta violated at {self:?} (sigma2 rho d1 = {e}, m e - K sigma2 s = {w})"
            )));
        }
        Ok(MgfTerms { u1, u2, s, e, w })
    }

    /// Checks both domain conditions.
    pub fn check(&self, params: &BrsParams) -> Result<()> {
        self.terms(params).map(|_| ())
    }
}

/// Joint MGF of the powers.
///
/// ```text
/// M = (rho m / (rho m + K))^m / (sigma^2 rho d1) * prod_k 1/u_k * (1 - beta/d1)^{-m}
///   = (1/e) * prod_k 1/u_k * (m e / (m e - K sigma^2 s))^m
/// ```
/// The second line is the same expression with `rho` cancelled, and is what
/// is evaluated; it stays finite at `rho = 0` and gives `M(0,0) = 1` exactly.
pub fn mgf(params: &BrsParams, point: MgfPoint) -> Result<f64> {
    ln_mgf(params, point).map(f64::exp)
}

pub fn ln_mgf(params: &BrsParams, point: MgfPoint) -> Result<f64> {
    validate(params)?;
    let t = point.terms(params)?;
    let m = params.m;
    let ratio = params.k_factor * params.sigma2 * t.s / (m * t.e);
    debug_assert!((t.w - m * t.e * (1.0 - ratio)).abs() <= 1e-12 * t.w.abs().max(1.0));
    Ok(-t.e.ln() - t.u1.ln() - t.u2.ln() - m * (-ratio).ln_1p())
}

/// Raw power moments `E[P1^i P2^j]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerMoments {
    pub m10: f64,
    pub m01: f64,
    pub m20: f64,
    pub m02: f64,
    pub m11: f64,
}

impl PowerMoments {
    pub fn variance1(&self) -> f64 {
        self.m20 - self.m10 * self.m10
    }

    pub fn variance2(&self) -> f64 {
        self.m02 - self.m01 * self.m01
    }

    pub fn covariance(&self) -> f64 {
        self.m11 - self.m10 * self.m01
    }
}

/// First and second moments from the MGF by logarithmic differentiation at
/// the origin.
///
/// `ln M = (m-1) ln e - ln u1 - ln u2 - m ln w + m ln m`; each factor is a
/// rational function of `theta` whose first and second partials at 0 are
/// elementary, and `M(0) = 1` turns log-derivatives into moments:
/// `E[P1] = L_1`, `E[P1^2] = L_11 + L_1^2`, `E[P1 P2] = L_12 + L_1 L_2`.
pub fn power_moments(params: &BrsParams) -> Result<PowerMoments> {
    validate(params)?;
    let BrsParams {
        sigma2: s2,
        k_factor: k,
        m,
        rho,
    } = *params;
    let c = s2 * (1.0 - rho);

    // (value, d/dθ1, d²/dθ1², d²/dθ1dθ2) at the origin; e and w are symmetric
    let e = (1.0, -s2 * rho, -2.0 * c * s2 * rho, 0.0);
    let w = (m, -s2 * (m * rho + k), -2.0 * c * s2 * (m * rho + k), 0.0);
    let log_derivs = |(f0, f1, f11, f12): (f64, f64, f64, f64)| {
        let d1 = f1 / f0;
        (d1, f11 / f0 - d1 * d1, f12 / f0 - d1 * d1)
    };
    let (e1, e11, e12) = log_derivs(e);
    let (w1, w11, w12) = log_derivs(w);
    // ln u1 depends on θ1 only: d = -c, d² = -c², cross = 0
    let (u1, u11) = (-c, -c * c);

    let l1 = (m - 1.0) * e1 - u1 - m * w1;
    let l11 = (m - 1.0) * e11 - u11 - m * w11;
    let l12 = (m - 1.0) * e12 - m * w12;

    Ok(PowerMoments {
        m10: l1,
        m01: l1,
        m20: l11 + l1 * l1,
        m02: l11 + l1 * l1,
        m11: l12 + l1 * l1,
    })
}

/// Correlation coefficient of the powers `P1`, `P2`.
pub fn rho_bs(params: &BrsParams) -> Result<f64> {
    let pm = power_moments(params)?;
    let (v1, v2) = (pm.variance1(), pm.variance2());
    if !(v1 > 0.0 && v2 > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let r = pm.covariance() / (v1.sqrt() * v2.sqrt());
    if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&r) {
        return Err(Error::OutOfRange {
            what: "rho_bs",
            value: r,
        });
    }
    Ok(r.clamp(0.0, 1.0))
}
