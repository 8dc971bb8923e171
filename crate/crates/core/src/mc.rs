//! Monte-Carlo estimators of hockey-stick and Renyi divergences between
//! samplable one-dimensional distributions. These are the independent
//! referees for the closed forms: they share no code path with the
//! accountants they check.
//!
//! Reproducibility contract: estimates are bit-identical for identical
//! (spec, samples, seed) on one platform. Samples are drawn in fixed blocks
//! of 2^16, each block on its own ChaCha8 stream derived from the seed, and
//! block results are folded left to right. Parallel evaluation of blocks
//! would reproduce the same bits.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{log_add_exp, log_sum_exp, norm_quantile, Neumaier};

const BLOCK: u64 = 1 << 16;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// A samplable distribution with evaluable log-density: a Gaussian with
/// given mean and scale, or a two-component mixture. Mixtures of mixtures
/// are allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SamplerSpec {
    UnitGaussianShift { shift: f64, sigma: f64 },
    Mixture { p: f64, a: Box<SamplerSpec>, b: Box<SamplerSpec> },
}

impl SamplerSpec {
    /// N(shift, sigma^2).
    pub fn gaussian(shift: f64, sigma: f64) -> Self {
        SamplerSpec::UnitGaussianShift { shift, sigma }
    }

    /// p-weighted mixture of two specs.
    pub fn mixture(p: f64, a: SamplerSpec, b: SamplerSpec) -> Self {
        SamplerSpec::Mixture { p, a: Box::new(a), b: Box::new(b) }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SamplerSpec::UnitGaussianShift { shift, sigma } => {
                if !shift.is_finite() {
                    return Err(Error::invalid(format!("shift must be finite, got {shift}")));
                }
                if !(sigma.is_finite() && *sigma > 0.0) {
                    return Err(Error::invalid(format!("sigma must be finite and > 0, got {sigma}")));
                }
                Ok(())
            }
            SamplerSpec::Mixture { p, a, b } => {
                if !(p.is_finite() && (0.0..=1.0).contains(p)) {
                    return Err(Error::invalid(format!("mixture weight must be in [0,1], got {p}")));
                }
                a.validate()?;
                b.validate()
            }
        }
    }

    /// Log-density at y.
    pub fn ln_density(&self, y: f64) -> f64 {
        match self {
            SamplerSpec::UnitGaussianShift { shift, sigma } => {
                let t = (y - shift) / sigma;
                -0.5 * t * t - sigma.ln() - LN_SQRT_2PI
            }
            SamplerSpec::Mixture { p, a, b } => {
                log_add_exp(p.ln() + a.ln_density(y), (-p).ln_1p() + b.ln_density(y))
            }
        }
    }

    /// Draw one value. Consumes a fixed number of uniforms per component so
    /// the stream layout is stable.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            SamplerSpec::UnitGaussianShift { shift, sigma } => {
                shift + sigma * norm_quantile(uniform_open(rng))
            }
            SamplerSpec::Mixture { p, a, b } => {
                if uniform_open(rng) < *p {
                    a.sample(rng)
                } else {
                    b.sample(rng)
                }
            }
        }
    }
}

/// Uniform on (0,1): bin midpoints at 2^-53 resolution, so the endpoints
/// that would break the quantile transform never occur.
#[inline]
pub(crate) fn uniform_open(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// One generator per independent work unit (sample block, attack trial),
/// all derived from a single seed.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A Monte-Carlo estimate with its sampling diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
    /// Effective sample size (sum w)^2 / sum w^2 of the integrand weights;
    /// far below `samples` means a few draws dominate.
    pub ess: f64,
    /// Set when one draw carries more than 10% of the total weight; the
    /// estimate and its standard error are then untrustworthy.
    pub tail_dominated: bool,
}

fn check_mc_args(p_spec: &SamplerSpec, q_spec: &SamplerSpec, samples: u64) -> Result<()> {
    p_spec.validate()?;
    q_spec.validate()?;
    if samples < 1000 {
        return Err(Error::invalid(format!("need at least 1000 samples, got {samples}")));
    }
    Ok(())
}

/// Estimate the hockey-stick divergence delta(eps) = sup_S P(S) - e^eps Q(S)
/// by its primal form: draw Y ~ P and average max(0, 1 - e^eps q(Y)/p(Y)).
/// The integrand lies in [0,1], so the estimator is well behaved at any eps.
pub fn mc_hockey_stick(
    p_spec: &SamplerSpec,
    q_spec: &SamplerSpec,
    eps: f64,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    check_mc_args(p_spec, q_spec, samples)?;
    if !eps.is_finite() {
        return Err(Error::invalid(format!("eps must be finite, got {eps}")));
    }
    bounded_integrand_mean(samples, seed, |rng| {
        let y = p_spec.sample(rng);
        let x = eps + q_spec.ln_density(y) - p_spec.ln_density(y);
        if x < 0.0 {
            -x.exp_m1()
        } else {
            0.0
        }
    })
}

/// The complement form of the same divergence: draw Y ~ Q and average
/// max(0, p(Y)/q(Y) - e^eps). Exposed for variance comparison; unbounded
/// integrand, so the tail diagnostics matter here.
pub fn mc_hockey_stick_complement(
    p_spec: &SamplerSpec,
    q_spec: &SamplerSpec,
    eps: f64,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    check_mc_args(p_spec, q_spec, samples)?;
    if !eps.is_finite() {
        return Err(Error::invalid(format!("eps must be finite, got {eps}")));
    }
    bounded_integrand_mean(samples, seed, |rng| {
        let y = q_spec.sample(rng);
        let r = (p_spec.ln_density(y) - q_spec.ln_density(y)).exp();
        (r - eps.exp()).max(0.0)
    })
}

/// Mean, standard error, and weight diagnostics of a nonnegative integrand,
/// accumulated per block with compensated sums.
fn bounded_integrand_mean(
    samples: u64,
    seed: u64,
    mut integrand: impl FnMut(&mut ChaCha8Rng) -> f64,
) -> Result<McEstimate> {
    let mut sum = Neumaier::new();
    let mut sum_sq = Neumaier::new();
    let mut max_w = 0.0f64;
    let blocks = samples.div_ceil(BLOCK);
    for block in 0..blocks {
        let mut rng = stream_rng(seed, block);
        let in_block = BLOCK.min(samples - block * BLOCK);
        let mut block_sum = Neumaier::new();
        let mut block_sq = Neumaier::new();
        for _ in 0..in_block {
            let w = integrand(&mut rng);
            block_sum.add(w);
            block_sq.add(w * w);
            max_w = max_w.max(w);
        }
        sum.add(block_sum.total());
        sum_sq.add(block_sq.total());
    }
    let n = samples as f64;
    let mean = sum.total() / n;
    let var = ((sum_sq.total() - n * mean * mean) / (n - 1.0)).max(0.0);
    let (ess, tail_dominated) = if sum_sq.total() > 0.0 {
        let ess = sum.total() * sum.total() / sum_sq.total();
        (ess, max_w > 0.1 * sum.total())
    } else {
        (n, false)
    };
    Ok(McEstimate {
        estimate: mean,
        std_error: (var / n).sqrt(),
        samples,
        ess,
        tail_dominated,
    })
}

/// Estimate the Renyi divergence D_alpha(P || Q) by the importance form
/// under Q: (1/(alpha-1)) ln E_Q[(p(Y)/q(Y))^alpha]. Weights are accumulated
/// in log space block by block; the standard error comes from the delta
/// method on the log of the mean.
pub fn mc_renyi(
    p_spec: &SamplerSpec,
    q_spec: &SamplerSpec,
    alpha: f64,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    mc_renyi_impl(p_spec, q_spec, alpha, samples, seed, false)
}

/// The P-expectation alternate of the same divergence,
/// (1/(alpha-1)) ln E_P[(p(Y)/q(Y))^(alpha-1)]. Exposed for variance
/// comparison across the two sampling measures.
pub fn mc_renyi_p_form(
    p_spec: &SamplerSpec,
    q_spec: &SamplerSpec,
    alpha: f64,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    mc_renyi_impl(p_spec, q_spec, alpha, samples, seed, true)
}

fn mc_renyi_impl(
    p_spec: &SamplerSpec,
    q_spec: &SamplerSpec,
    alpha: f64,
    samples: u64,
    seed: u64,
    p_form: bool,
) -> Result<McEstimate> {
    check_mc_args(p_spec, q_spec, samples)?;
    if !(alpha.is_finite() && alpha > 1.0) {
        return Err(Error::invalid(format!("alpha must be finite and > 1, got {alpha}")));
    }
    // Per-block log-sum-exp of w and of 2w, folded in block order.
    let mut lse_w = f64::NEG_INFINITY;
    let mut lse_2w = f64::NEG_INFINITY;
    let mut max_w = f64::NEG_INFINITY;
    let blocks = samples.div_ceil(BLOCK);
    let mut buf_w: Vec<f64> = Vec::with_capacity(BLOCK as usize);
    let mut buf_2w: Vec<f64> = Vec::with_capacity(BLOCK as usize);
    for block in 0..blocks {
        let mut rng = stream_rng(seed, block);
        let in_block = BLOCK.min(samples - block * BLOCK);
        buf_w.clear();
        buf_2w.clear();
        for _ in 0..in_block {
            let (y, power) = if p_form {
                (p_spec.sample(&mut rng), alpha - 1.0)
            } else {
                (q_spec.sample(&mut rng), alpha)
            };
            let w = power * (p_spec.ln_density(y) - q_spec.ln_density(y));
            buf_w.push(w);
            buf_2w.push(2.0 * w);
            max_w = max_w.max(w);
        }
        lse_w = log_add_exp(lse_w, log_sum_exp(&buf_w));
        lse_2w = log_add_exp(lse_2w, log_sum_exp(&buf_2w));
    }
    let ln_n = (samples as f64).ln();
    let ln_mean = lse_w - ln_n;
    let estimate = ln_mean / (alpha - 1.0);
    // Var of the weight mean, then the delta method through ln and the
    // 1/(alpha-1) scale. ln_var can round to -inf when all weights agree.
    let ln_second = lse_2w - ln_n;
    let ln_var = ln_second + (-(2.0 * ln_mean - ln_second).exp()).ln_1p();
    let std_error = if ln_var.is_nan() {
        0.0
    } else {
        (0.5 * (ln_var - ln_n) - ln_mean).exp() / (alpha - 1.0)
    };
    let ess = (2.0 * lse_w - lse_2w).exp();
    Ok(McEstimate {
        estimate,
        std_error,
        samples,
        ess,
        tail_dominated: max_w - lse_w > 0.1f64.ln(),
    })
}
