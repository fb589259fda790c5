//! Exact sampler of the two-envelope model and Monte Carlo estimators.
//!
//! Draws are generated in blocks of [`BLOCK`] pairs. Block `b` uses a
//! ChaCha8 generator seeded with the user seed and switched to stream `b`,
//! so blocks are independent and can be produced by any worker. Per-block
//! partial sums are merged in block order, which makes every estimate a
//! function of `(seed, n)` alone, whatever the thread count.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{validate, BrsParams};

/// Pairs per independent generator stream.
pub const BLOCK: u64 = 4096;
pub const MIN_PROBABILITY_DRAWS: u64 = 10_000;
pub const MIN_MOMENT_DRAWS: u64 = 100_000;
const JACKKNIFE_GROUPS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopePair {
    pub r1: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n: u64,
}

impl McEstimate {
    /// `|value - x|` in units of the standard error.
    pub fn z_score(&self, x: f64) -> f64 {
        let d = (self.value - x).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }

    pub fn brackets(&self, x: f64, k: f64) -> bool {
        self.z_score(x) <= k
    }
}

/// Phase given to the LOS term `Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZPhase {
    #[default]
    Zero,
    /// Uniform on `[0, 2 pi)`; the envelope law is the same.
    Uniform,
}

/// One Nakagami-m envelope with `E[r^2] = omega_n`: the square root of a
/// Gamma(m, omega_n / m) variate.
pub fn sample_nakagami_envelope<R: Rng + ?Sized>(m: f64, omega_n: f64, rng: &mut R) -> Result<f64> {
    let gamma = nakagami_power(m, omega_n)?;
    Ok(gamma.sample(rng).sqrt())
}

fn nakagami_power(m: f64, omega_n: f64) -> Result<Gamma<f64>> {
    if !(m.is_finite() && m >= 0.5 && omega_n.is_finite() && omega_n > 0.0) {
        return Err(Error::domain(
            "sample_nakagami_envelope",
            format!("m = {m}, omega_n = {omega_n}"),
        ));
    }
    Gamma::new(m, omega_n / m).map_err(|e| Error::domain("sample_nakagami_envelope", e.to_string()))
}

/// `H_k = sigma sqrt(1-rho) X_k + sigma sqrt(rho) X_0 + Z`, `k = 1, 2`, with
/// `X_j` circular complex Gaussians of unit total variance.
#[derive(Debug, Clone)]
pub struct PairSampler {
    own: f64,
    shared: f64,
    los: Option<Gamma<f64>>,
    phase: ZPhase,
}

impl PairSampler {
    pub fn new(params: &BrsParams) -> Result<Self> {
        validate(params)?;
        let s = params.sigma2.sqrt();
        let los = if params.k_factor > 0.0 {
            Some(nakagami_power(params.m, params.omega_n())?)
        } else {
            None
        };
        Ok(PairSampler {
            own: s * (1.0 - params.rho).sqrt(),
            shared: s * params.rho.sqrt(),
            los,
            phase: ZPhase::Zero,
        })
    }

    pub fn with_phase(mut self, phase: ZPhase) -> Self {
        self.phase = phase;
        self
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> EnvelopePair {
        let mut cn = || {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            (re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
        };
        let x0 = cn();
        let x1 = cn();
        let x2 = cn();
        let z = match &self.los {
            None => (0.0, 0.0),
            Some(g) => {
                let amp = g.sample(rng).sqrt();
                match self.phase {
                    ZPhase::Zero => (amp, 0.0),
                    ZPhase::Uniform => {
                        let (s, c) = (TAU * rng.random::<f64>()).sin_cos();
                        (amp * c, amp * s)
                    }
                }
            }
        };
        let common = (self.shared * x0.0 + z.0, self.shared * x0.1 + z.1);
        let h1 = (self.own * x1.0 + common.0, self.own * x1.1 + common.1);
        let h2 = (self.own * x2.0 + common.0, self.own * x2.1 + common.1);
        EnvelopePair {
            r1: h1.0.hypot(h1.1),
            r2: h2.0.hypot(h2.1),
        }
    }
}

pub fn sample_pair<R: Rng + ?Sized>(params: &BrsParams, rng: &mut R) -> Result<EnvelopePair> {
    Ok(PairSampler::new(params)?.sample(rng))
}

/// The first `n` pairs of the stream for `seed`, in order.
pub fn sample_pairs(params: &BrsParams, n: u64, seed: u64) -> Result<Vec<EnvelopePair>> {
    let sampler = PairSampler::new(params)?;
    let blocks = fold_blocks(&sampler, n, seed, Vec::new, |v, p| v.push(p));
    Ok(blocks.into_iter().flatten().collect())
}

fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Folds each block of draws into its own accumulator; returns the
/// accumulators in block order.
fn fold_blocks<A, I, F>(sampler: &PairSampler, n: u64, seed: u64, init: I, fold: F) -> Vec<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, EnvelopePair) + Sync,
{
    let blocks = n.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(seed, b);
            let len = BLOCK.min(n - b * BLOCK);
            let mut acc = init();
            for _ in 0..len {
                fold(&mut acc, sampler.sample(&mut rng));
            }
            acc
        })
        .collect()
}

/// Number of draws satisfying each event.
pub fn count_events(
    sampler: &PairSampler,
    n: u64,
    seed: u64,
    events: &[&(dyn Fn(&EnvelopePair) -> bool + Sync)],
) -> Vec<u64> {
    let k = events.len();
    let per_block = fold_blocks(
        sampler,
        n,
        seed,
        || vec![0u64; k],
        |acc, p| {
            for (c, e) in acc.iter_mut().zip(events) {
                *c += e(&p) as u64;
            }
        },
    );
    per_block.into_iter().fold(vec![0u64; k], |mut tot, b| {
        tot.iter_mut().zip(b).for_each(|(t, c)| *t += c);
        tot
    })
}

fn binomial(count: u64, n: u64) -> McEstimate {
    let p = count as f64 / n as f64;
    McEstimate {
        value: p,
        std_error: (p * (1.0 - p) / n as f64).sqrt(),
        n,
    }
}

fn check_draws(n: u64, min: u64) -> Result<()> {
    if n < min {
        return Err(Error::Contract(format!(
            "need at least {min} draws, got {n}"
        )));
    }
    Ok(())
}

/// Probability of `event` under the model, with binomial standard error.
pub fn estimate_probability<E>(
    params: &BrsParams,
    event: E,
    n: u64,
    seed: u64,
) -> Result<McEstimate>
where
    E: Fn(&EnvelopePair) -> bool + Sync,
{
    Ok(estimate_probabilities(params, &[&event], n, seed)?[0])
}

/// Several event probabilities from one shared set of draws.
pub fn estimate_probabilities(
    params: &BrsParams,
    events: &[&(dyn Fn(&EnvelopePair) -> bool + Sync)],
    n: u64,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    check_draws(n, MIN_PROBABILITY_DRAWS)?;
    let sampler = PairSampler::new(params)?;
    Ok(count_events(&sampler, n, seed, events)
        .into_iter()
        .map(|c| binomial(c, n))
        .collect())
}

/// Sample power moments and power correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McMoments {
    pub m10: McEstimate,
    pub m01: McEstimate,
    pub m20: McEstimate,
    pub m02: McEstimate,
    pub m11: McEstimate,
    pub rho_bs: McEstimate,
}

/// Sums of 1, P1, P2, P1^2, P2^2, P1 P2.
type MomentSums = [f64; 6];

fn add_sums(a: &mut MomentSums, b: &MomentSums) {
    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
}

fn sub_sums(a: &MomentSums, b: &MomentSums) -> MomentSums {
    let mut out = *a;
    out.iter_mut().zip(b).for_each(|(x, y)| *x -= y);
    out
}

/// `[m10, m01, m20, m02, m11, rho_bs]` from sums.
fn moment_stats(s: &MomentSums) -> [f64; 6] {
    let n = s[0];
    let (m10, m01, m20, m02, m11) = (s[1] / n, s[2] / n, s[3] / n, s[4] / n, s[5] / n);
    let v1 = m20 - m10 * m10;
    let v2 = m02 - m01 * m01;
    let cov = m11 - m10 * m01;
    [m10, m01, m20, m02, m11, cov / (v1 * v2).sqrt()]
}

/// Moments with delete-one-group jackknife standard errors (64 groups of
/// consecutive blocks).
pub fn estimate_moments(params: &BrsParams, n: u64, seed: u64) -> Result<McMoments> {
    check_draws(n, MIN_MOMENT_DRAWS)?;
    let sampler = PairSampler::new(params)?;
    let blocks = fold_blocks(
        &sampler,
        n,
        seed,
        || [0.0; 6],
        |s: &mut MomentSums, p| {
            let (p1, p2) = (p.r1 * p.r1, p.r2 * p.r2);
            add_sums(s, &[1.0, p1, p2, p1 * p1, p2 * p2, p1 * p2]);
        },
    );
    let g = JACKKNIFE_GROUPS.min(blocks.len());
    let per_group = blocks.len().div_ceil(g);
    let groups: Vec<MomentSums> = blocks
        .chunks(per_group)
        .map(|c| {
            let mut s = [0.0; 6];
            c.iter().for_each(|b| add_sums(&mut s, b));
            s
        })
        .collect();
    let mut total = [0.0; 6];
    groups.iter().for_each(|s| add_sums(&mut total, s));
    let full = moment_stats(&total);

    let g = groups.len() as f64;
    let leave_out: Vec<[f64; 6]> = groups
        .iter()
        .map(|s| moment_stats(&sub_sums(&total, s)))
        .collect();
    let est = |i: usize| {
        let mean = leave_out.iter().map(|t| t[i]).sum::<f64>() / g;
        let ss = leave_out.iter().map(|t| (t[i] - mean).powi(2)).sum::<f64>();
        McEstimate {
            value: full[i],
            std_error: ((g - 1.0) / g * ss).sqrt(),
            n,
        }
    };
    Ok(McMoments {
        m10: est(0),
        m01: est(1),
        m20: est(2),
        m02: est(3),
        m11: est(4),
        rho_bs: est(5),
    })
}

/// Pairwise level crossing statistics at one threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelCrossingEstimate {
    pub u: f64,
    /// `P(R1 < u)`
    pub marginal: McEstimate,
    /// `P(R1 < u, R2 > u)`, the LCR times the sampling period
    pub crossing: McEstimate,
    /// `AFD / T_S = P(R1 < u) / P(R1 < u, R2 > u)`; `None` without crossings
    pub afd_over_ts: Option<McEstimate>,
}

/// Level crossing statistics at every threshold in `us`, all from one set
/// of draws.
pub fn estimate_level_crossings(
    params: &BrsParams,
    us: &[f64],
    n: u64,
    seed: u64,
) -> Result<Vec<LevelCrossingEstimate>> {
    check_draws(n, MIN_PROBABILITY_DRAWS)?;
    let sampler = PairSampler::new(params)?;
    let k = us.len();
    let per_block = fold_blocks(
        &sampler,
        n,
        seed,
        || vec![(0u64, 0u64); k],
        |acc, p| {
            for (c, &u) in acc.iter_mut().zip(us) {
                if p.r1 < u {
                    c.0 += 1;
                    c.1 += (p.r2 > u) as u64;
                }
            }
        },
    );
    let mut totals = vec![(0u64, 0u64); k];
    for b in per_block {
        totals.iter_mut().zip(b).for_each(|(t, c)| {
            t.0 += c.0;
            t.1 += c.1;
        });
    }
    Ok(us
        .iter()
        .zip(totals)
        .map(|(&u, (below, cross))| {
            let marginal = binomial(below, n);
            let crossing = binomial(cross, n);
            let afd_over_ts = (cross > 0).then(|| {
                let (p1, p2) = (marginal.value, crossing.value);
                McEstimate {
                    value: p1 / p2,
                    std_error: (p1 * (p1 - p2) / (n as f64 * p2.powi(3))).sqrt(),
                    n,
                }
            });
            LevelCrossingEstimate {
                u,
                marginal,
                crossing,
                afd_over_ts,
            }
        })
        .collect())
}

/// Writes the first `n` pairs for `seed` as little-endian `f64` pairs,
/// `r1` then `r2`.
pub fn write_pairs_le<W: Write>(params: &BrsParams, n: u64, seed: u64, out: &mut W) -> Result<()> {
    let sampler = PairSampler::new(params)?;
    let io = |e: io::Error| Error::Contract(format!("writing pairs: {e}"));
    let mut buf = Vec::with_capacity(16 * BLOCK as usize);
    for b in 0..n.div_ceil(BLOCK) {
        let mut rng = block_rng(seed, b);
        buf.clear();
        for _ in 0..BLOCK.min(n - b * BLOCK) {
            let p = sampler.sample(&mut rng);
            buf.extend_from_slice(&p.r1.to_le_bytes());
            buf.extend_from_slice(&p.r2.to_le_bytes());
        }
        out.write_all(&buf).map_err(io)?;
    }
    out.flush().map_err(io)
}
