//! Scalar special functions and the semi-infinite quadrature engine.
//!
//! Everything here is a pure function of its arguments. Functions prefixed
//! `ln_` are unchecked hot-loop variants of the validated public entry points.

mod bessel;
mod kummer;
mod laguerre;
mod marcum;
mod quadrature;

pub use bessel::{bessel_i0e, bessel_ie_orders, ln_i0, log_bessel_i0};
pub use kummer::{kummer_1f1_row1_scaled, ln_kummer_row1_scaled, log_kummer_1f1_row1_scaled};
pub use laguerre::{laguerre, MAX_DEGREE as LAGUERRE_MAX_DEGREE};
pub use marcum::{marcum_p1, marcum_pair, marcum_q1, MarcumPair};
pub use quadrature::{
    integrate_semi_infinite, log_integrate_semi_infinite, QuadratureSpec, TAIL_DROP,
};
