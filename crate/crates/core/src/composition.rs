//! Named composition theorems over (eps, delta) guarantees: basic summation,
//! the advanced square-root form, and the homogeneous optimal formula.

use crate::error::{Error, Result};
use crate::numeric::{ln_binomial, neumaier_sum, sorted_sum};
use crate::types::EpsDelta;

/// Sum the guarantees: eps and delta both add, delta clamped to 1.
pub fn basic_compose(parts: &[EpsDelta]) -> EpsDelta {
    let eps = neumaier_sum(parts.iter().map(|g| g.eps));
    let delta = neumaier_sum(parts.iter().map(|g| g.delta)).min(1.0);
    EpsDelta::new(eps, delta).expect("sums of valid guarantees stay valid")
}

/// The square-root branch of advanced composition on its own:
/// 1/2 sum eps_j^2 + sqrt(2 ln(1/delta') sum eps_j^2), taking the summed
/// squares directly. Exceeds plain summation when the parts are few.
pub fn advanced_eps_square_root(eps_sq_sum: f64, delta_prime: f64) -> f64 {
    0.5 * eps_sq_sum + (2.0 * (1.0 / delta_prime).ln() * eps_sq_sum).sqrt()
}

/// Advanced composition: the overall guarantee is
/// (min{sum eps_j, 1/2 sum eps_j^2 + sqrt(2 ln(1/delta') sum eps_j^2)},
///  delta' + sum delta_j). The caller spends a fresh failure probability
/// delta' to buy the square-root dependence.
pub fn advanced_compose(parts: &[EpsDelta], delta_prime: f64) -> Result<EpsDelta> {
    if !(delta_prime > 0.0) || delta_prime >= 1.0 {
        return Err(Error::invalid(format!("delta_prime must be in (0,1), got {delta_prime}")));
    }
    let eps_sum = neumaier_sum(parts.iter().map(|g| g.eps));
    let eps_sq = neumaier_sum(parts.iter().map(|g| g.eps * g.eps));
    let high_prob = advanced_eps_square_root(eps_sq, delta_prime);
    let delta = (delta_prime + neumaier_sum(parts.iter().map(|g| g.delta))).min(1.0);
    EpsDelta::new(eps_sum.min(high_prob), delta)
}

fn check_homogeneous(eps0: f64, delta0: f64, k: u32) -> Result<()> {
    if !(eps0.is_finite() && eps0 >= 0.0) {
        return Err(Error::invalid(format!("eps0 must be finite and >= 0, got {eps0}")));
    }
    if !(0.0..1.0).contains(&delta0) {
        return Err(Error::invalid(format!("delta0 must be in [0,1), got {delta0}")));
    }
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    Ok(())
}

/// Smallest delta' such that k-fold composition of an (eps0, delta0)
/// mechanism is (eps_prime, delta')-DP:
///
///   delta' = 1 - (1 - delta0)^k (1 - S),
///   S = sum_l C(k,l) q^l (1-q)^(k-l) max(0, 1 - e^(eps_prime - (2l-k) eps0)),
///
/// with q = e^eps0 / (1 + e^eps0). S is the hockey-stick divergence of the
/// k-fold worst case, a shifted binomial over the per-step privacy loss.
/// Terms are evaluated with log-gamma binomials and summed smallest first so
/// the result holds up to k = 10^4.
pub fn optimal_compose_homogeneous(
    eps0: f64,
    delta0: f64,
    k: u32,
    eps_prime: f64,
) -> Result<f64> {
    check_homogeneous(eps0, delta0, k)?;
    if !(eps_prime.is_finite() && eps_prime >= 0.0) {
        return Err(Error::invalid(format!("eps_prime must be finite and >= 0, got {eps_prime}")));
    }
    // ln q = eps0 - ln(1 + e^eps0) and ln(1-q) = -ln(1 + e^eps0).
    let ln_one_plus = eps0 + (-eps0).exp().ln_1p();
    let mut terms = Vec::new();
    for l in 0..=k {
        let exponent = eps_prime - (2.0 * l as f64 - k as f64) * eps0;
        if exponent >= 0.0 {
            continue;
        }
        let ln_pmf = ln_binomial(k as u64, l as u64) + l as f64 * eps0 - k as f64 * ln_one_plus;
        terms.push((ln_pmf + (-f64::exp_m1(exponent)).ln()).exp());
    }
    let s = sorted_sum(&mut terms).clamp(0.0, 1.0);
    // 1 - (1-d0)^k (1-S) rearranged around expm1 so delta0 = 1e-9 at k = 10
    // does not round away.
    let ln_keep = (k as f64) * f64::ln_1p(-delta0);
    Ok((-f64::exp_m1(ln_keep) + ln_keep.exp() * s).clamp(0.0, 1.0))
}

/// Smallest eps_prime at which the k-fold optimal composition meets a delta
/// target, by bisection on the monotone map eps_prime -> delta'. The answer
/// lies in [0, k eps0]; beyond k eps0 the formula is flat at its floor
/// 1 - (1-delta0)^k, so a target below the floor is unsatisfiable.
pub fn optimal_eps(eps0: f64, delta0: f64, k: u32, delta_target: f64) -> Result<f64> {
    check_homogeneous(eps0, delta0, k)?;
    if !(0.0..1.0).contains(&delta_target) {
        return Err(Error::invalid(format!("delta_target must be in [0,1), got {delta_target}")));
    }
    let delta_at = |e: f64| {
        optimal_compose_homogeneous(eps0, delta0, k, e).expect("bisection stays in domain")
    };
    let hi = k as f64 * eps0;
    if delta_at(hi) > delta_target {
        return Err(Error::unsatisfied(format!(
            "even eps = k*eps0 = {hi} only reaches delta = {}, above the target {delta_target}",
            delta_at(hi)
        )));
    }
    if delta_at(0.0) <= delta_target {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, hi);
    while hi - lo > 1e-11 {
        let mid = 0.5 * (lo + hi);
        if delta_at(mid) <= delta_target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
