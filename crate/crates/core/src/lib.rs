//! Bivariate Rician shadowed fading.
//!
//! Two envelopes `R_k = |H_k|`, `H_k = G_k + Z`, share a Nakagami-m faded
//! line-of-sight term `Z` while their diffuse parts `G_k` are correlated
//! complex Gaussians. This crate evaluates the joint law of `(R_1, R_2)`
//! (density, distribution function, moment generating function, power
//! correlation), the dual-branch selection-combining outage probability and
//! the level crossing rate / average fade duration of the sampled envelope,
//! and ships an exact Monte Carlo sampler of the model as an oracle.
//!
//! Modules, bottom-up:
//! - [`specfun`]: Bessel, Marcum Q, Kummer 1F1, Laguerre, quadrature.
//! - [`model`]: the parameter record and every derived constant.
//! - [`dist`]: joint PDF/CDF, marginal CDF, MGF, moments, power correlation.
//! - [`apps`]: outage, LCR, AFD.
//! - [`mc`]: sampler and estimators with standard errors.
//! - [`cli`]: the `brs` command line front end.

pub mod apps;
pub mod cli;
pub mod dist;
pub mod error;
pub mod mc;
pub mod model;
pub mod specfun;

pub use error::{Error, Result};
pub use model::{BrsParams, DerivedConstants, RhoClass};
