//! Dual-branch selection-combining outage and the level crossing rate and
//! average fade duration of the sampled envelope.

use crate::dist::{crossing_probability, joint_cdf, marginal_cdf};
use crate::error::{Error, FieldViolation, Result};
use crate::model::BrsParams;

/// Selection combining over two correlated branches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScScenario {
    /// Average SNR per branch, linear.
    pub gamma_bar: f64,
    pub k_factor: f64,
    pub m: f64,
    pub rho: f64,
    /// Outage threshold SNR, linear.
    pub gamma_th: f64,
}

impl ScScenario {
    /// Channel parameters with unit noise power: `sigma2 = gamma_bar / (1 + K)`.
    pub fn params(&self) -> Result<BrsParams> {
        let mut bad = Vec::new();
        if !(self.gamma_bar.is_finite() && self.gamma_bar > 0.0) {
            bad.push(FieldViolation {
                field: "gamma_bar",
                reason: format!("must be finite and > 0, got {}", self.gamma_bar),
            });
        }
        if !(self.gamma_th >= 0.0) || self.gamma_th.is_nan() {
            bad.push(FieldViolation {
                field: "gamma_th",
                reason: format!("must be >= 0, got {}", self.gamma_th),
            });
        }
        if !bad.is_empty() {
            return Err(Error::InvalidParams(bad));
        }
        BrsParams::from_mean_power(self.gamma_bar, self.k_factor, self.m, self.rho)
    }
}

/// `P(max(gamma_1, gamma_2) < gamma_th) = F(sqrt(gamma_th), sqrt(gamma_th))`.
pub fn outage_sc(s: &ScScenario) -> Result<f64> {
    let p = s.params()?;
    if s.gamma_th == f64::INFINITY {
        return Ok(1.0);
    }
    let r = s.gamma_th.sqrt();
    joint_cdf(&p, r, r)
}

/// Envelope sampled every `ts` seconds; `params.rho` correlates consecutive
/// samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledEnvelopeScenario {
    pub params: BrsParams,
    pub ts: f64,
    pub u: f64,
}

impl SampledEnvelopeScenario {
    pub fn new(params: BrsParams, ts: f64, u: f64) -> Result<Self> {
        let s = SampledEnvelopeScenario { params, ts, u };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.ts.is_finite() && self.ts > 0.0) {
            bad.push(FieldViolation {
                field: "ts",
                reason: format!("must be finite and > 0, got {}", self.ts),
            });
        }
        if !(self.u.is_finite() && self.u > 0.0) {
            bad.push(FieldViolation {
                field: "u",
                reason: format!("must be finite and > 0, got {}", self.u),
            });
        }
        if let Err(Error::InvalidParams(v)) = crate::model::validate(&self.params) {
            bad.extend(v);
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(bad))
        }
    }
}

/// Level crossing quantities at one threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelCrossing {
    /// `P(R1 < u)`
    pub marginal_cdf: f64,
    /// `P(R1 < u, R2 > u)`
    pub crossing: f64,
    /// Downward crossings per second.
    pub lcr: f64,
    /// Seconds; `None` when there are no crossings.
    pub afd: Option<f64>,
}

pub fn level_crossing(s: &SampledEnvelopeScenario) -> Result<LevelCrossing> {
    s.validate()?;
    let f = marginal_cdf(&s.params, s.u)?;
    let crossing = crossing_probability(&s.params, s.u)?;
    let afd = (crossing > 0.0).then(|| (s.ts * f / crossing).max(s.ts));
    Ok(LevelCrossing {
        marginal_cdf: f,
        crossing,
        lcr: crossing / s.ts,
        afd,
    })
}

/// `(F_R(u) - F_{R1,R2}(u, u)) / T_S`.
pub fn lcr(s: &SampledEnvelopeScenario) -> Result<f64> {
    s.validate()?;
    Ok(crossing_probability(&s.params, s.u)? / s.ts)
}

/// `P(R1 < u) / LCR(u)`; [`Error::NoCrossings`] when the LCR vanishes.
pub fn afd(s: &SampledEnvelopeScenario) -> Result<f64> {
    level_crossing(s)?.afd.ok_or(Error::NoCrossings)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sc(gamma_bar: f64, m: f64, rho: f64, gamma_th: f64) -> ScScenario {
        ScScenario {
            gamma_bar,
            k_factor: 10.0,
            m,
            rho,
            gamma_th,
        }
    }

    #[test]
    fn outage_limits() {
        assert_eq!(outage_sc(&sc(10.0, 5.0, 0.3, 0.0)).unwrap(), 0.0);
        assert!((outage_sc(&sc(10.0, 5.0, 0.3, 1e5)).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(outage_sc(&sc(10.0, 5.0, 0.3, f64::INFINITY)).unwrap(), 1.0);
    }

    #[test]
    fn outage_is_the_joint_cdf() {
        let s = sc(10f64.powf(1.5), 5.0, 0.3, 10.0);
        let p = BrsParams::new(10f64.powf(1.5) / 11.0, 10.0, 5.0, 0.3).unwrap();
        let direct = joint_cdf(&p, 10f64.sqrt(), 10f64.sqrt()).unwrap();
        assert!((outage_sc(&s).unwrap() - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn outage_grows_with_correlation() {
        for &m in &[1.0, 5.0] {
            for &gb in &[3.0, 30.0, 300.0] {
                let lo = outage_sc(&sc(gb, m, 0.3, 10.0)).unwrap();
                let hi = outage_sc(&sc(gb, m, 0.8, 10.0)).unwrap();
                assert!(hi >= lo, "m={m} gb={gb}");
            }
        }
    }

    #[test]
    fn lcr_afd_identity() {
        let p = BrsParams::new(1.0, 10.0, 5.0, 0.5).unwrap();
        let s = SampledEnvelopeScenario::new(p, 1e-3, 0.7 * 11f64.sqrt()).unwrap();
        let lc = level_crossing(&s).unwrap();
        let prod = lc.lcr * lc.afd.unwrap();
        assert!((prod - lc.marginal_cdf).abs() <= 1e-12 * lc.marginal_cdf);
        assert!(lc.afd.unwrap() >= s.ts);
    }

    #[test]
    fn no_crossings_when_collapsed() {
        let p = BrsParams::new(1.0, 10.0, 5.0, 0.9995).unwrap();
        let s = SampledEnvelopeScenario::new(p, 1e-3, 1.0).unwrap();
        assert_eq!(lcr(&s).unwrap(), 0.0);
        assert!(matches!(afd(&s), Err(Error::NoCrossings)));
    }

    #[test]
    fn scenario_validation_names_fields() {
        let p = BrsParams::new(1.0, 10.0, 5.0, 0.5).unwrap();
        let Err(Error::InvalidParams(v)) = SampledEnvelopeScenario::new(p, 0.0, -1.0) else {
            panic!()
        };
        assert_eq!(v.iter().map(|f| f.field).collect::<Vec<_>>(), ["ts", "u"]);
    }
}
