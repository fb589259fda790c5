//! Model parameters and the constants derived from them.
//!
//! All coefficient algebra used by [`dist`](crate::dist) lives here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, FieldViolation, Result};

/// Below this `rho` the `1/rho` prefactors lose too many digits; the
/// joint law is evaluated as if `rho = 0`.
pub const RHO_LOW: f64 = 1e-3;
/// Above this `rho` the joint law is treated as collapsed onto `r1 = r2`.
pub const RHO_HIGH: f64 = 0.999;

/// Parameters of the bivariate Rician shadowed law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrsParams {
    /// Diffuse power `E|G_k|^2`.
    pub sigma2: f64,
    /// Rician factor: LOS power over diffuse power.
    pub k_factor: f64,
    /// Nakagami shaping of the LOS amplitude.
    pub m: f64,
    /// Correlation of the diffuse components.
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoClass {
    DegenerateLow,
    Regular,
    DegenerateHigh,
}

impl BrsParams {
    pub fn new(sigma2: f64, k_factor: f64, m: f64, rho: f64) -> Result<Self> {
        let p = BrsParams {
            sigma2,
            k_factor,
            m,
            rho,
        };
        validate(&p)?;
        Ok(p)
    }

    /// Parameters for a given mean power `E|H_k|^2 = sigma2 (1 + K)`.
    pub fn from_mean_power(mean_power: f64, k_factor: f64, m: f64, rho: f64) -> Result<Self> {
        Self::new(mean_power / (1.0 + k_factor), k_factor, m, rho)
    }

    pub fn mean_power(&self) -> f64 {
        self.sigma2 * (1.0 + self.k_factor)
    }

    /// LOS power `Omega_N = K sigma^2`.
    pub fn omega_n(&self) -> f64 {
        self.k_factor * self.sigma2
    }

    pub fn rho_class(&self) -> RhoClass {
        if self.rho < RHO_LOW {
            RhoClass::DegenerateLow
        } else if self.rho > RHO_HIGH {
            RhoClass::DegenerateHigh
        } else {
            RhoClass::Regular
        }
    }

    pub fn with_rho(self, rho: f64) -> Self {
        BrsParams { rho, ..self }
    }
}

/// Checks every bound and classifies `rho`. All violations are reported.
pub fn validate(params: &BrsParams) -> Result<RhoClass> {
    let mut bad = Vec::new();
    let mut push = |field, reason: String| bad.push(FieldViolation { field, reason });
    let BrsParams {
        sigma2,
        k_factor,
        m,
        rho,
    } = *params;
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        push("sigma2", format!("must be finite and > 0, got {sigma2}"));
    }
    if !(k_factor.is_finite() && k_factor >= 0.0) {
        push(
            "k_factor",
            format!("must be finite and >= 0, got {k_factor}"),
        );
    }
    if !(m.is_finite() && m >= 0.5) {
        push("m", format!("must be finite and >= 0.5, got {m}"));
    }
    if !(0.0..=1.0).contains(&rho) {
        push("rho", format!("must lie in [0, 1], got {rho}"));
    }
    if bad.is_empty() {
        Ok(params.rho_class())
    } else {
        Err(Error::InvalidParams(bad))
    }
}

/// Constants shared by the joint PDF and CDF integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    /// `Omega^2 = sigma^2 (1 - rho) / 2`, per-component variance of `sqrt(1-rho) sigma X_k`.
    pub omega2: f64,
    /// `Omega'^2 = sigma^2 rho / 2`.
    pub omega_p2: f64,
    /// `Omega_N = K sigma^2`.
    pub omega_n: f64,
    /// Coefficient of `x^2` in the Kummer argument: `K / (sigma^2 rho (rho m + K))`.
    pub beta: f64,
    /// `(1 + rho) / (sigma^2 rho (1 - rho))`.
    pub alpha_pdf: f64,
    /// `alpha_pdf - beta`, in cancellation-free form.
    pub net_decay_pdf: f64,
    /// `1 / (sigma^2 rho) - beta`, in cancellation-free form.
    pub net_decay_cdf: f64,
    /// `m ln(m rho / (m rho + K))`.
    pub ln_los_weight: f64,
}

pub fn derive(params: &BrsParams) -> Result<DerivedConstants> {
    validate(params)?;
    let BrsParams {
        sigma2: s2,
        k_factor: k,
        m,
        rho,
    } = *params;
    if rho == 0.0 || rho == 1.0 {
        let class = if rho == 0.0 {
            RhoClass::DegenerateLow
        } else {
            RhoClass::DegenerateHigh
        };
        return Err(Error::DegenerateBranch { rho, class });
    }
    let rm_k = rho * m + k;
    Ok(DerivedConstants {
        omega2: s2 * (1.0 - rho) / 2.0,
        omega_p2: s2 * rho / 2.0,
        omega_n: k * s2,
        beta: k / (s2 * rho * rm_k),
        alpha_pdf: (1.0 + rho) / (s2 * rho * (1.0 - rho)),
        net_decay_pdf: (m * (1.0 + rho) + 2.0 * k) / (s2 * (1.0 - rho) * rm_k),
        net_decay_cdf: m / (s2 * rm_k),
        ln_los_weight: -m * (k / (m * rho)).ln_1p(),
    })
}
