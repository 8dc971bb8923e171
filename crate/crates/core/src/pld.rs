//! Privacy-loss-distribution engine.
//!
//! Everything here works on the loss variable Z = log(P(Y)/Q(Y)) for Y ~ P.
//! Composition of mechanisms is convolution of their PLDs; every guarantee
//! functional (delta(eps), TV, KL, Renyi) is an expectation over Z. Analytic
//! Gaussian losses enter through [`discretize`], whose rounding is pessimistic
//! so that downstream delta estimates are upper bounds.

use crate::error::{Error, Result};
use crate::numeric::{neumaier_sum, norm_cdf, norm_quantile, norm_sf, Neumaier};
use crate::types::{DiscreteDist, DiscretePld};

/// Widest dense-grid array the convolution fast path will allocate.
const MAX_DENSE_LEN: usize = 1 << 23;
/// Atom-pair budget for the exact (all-pairs) convolution path.
const MAX_PAIR_PRODUCT: usize = 1 << 25;

// ── analytic Gaussian loss ─────────────────────────────────────────────────

/// The loss distribution of a Gaussian mechanism: exactly N(rho, 2 rho).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPld {
    rho: f64,
}

impl GaussianPld {
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Mean of the loss variable.
    pub fn mean(&self) -> f64 {
        self.rho
    }

    /// Variance of the loss variable.
    pub fn variance(&self) -> f64 {
        2.0 * self.rho
    }
}

/// Loss distribution of N(q, sigma^2) vs N(q', sigma^2) at worst-case
/// |q - q'| = sensitivity: N(rho, 2 rho) with rho = sensitivity^2 / (2 sigma^2).
pub fn gaussian_pld(sensitivity: f64, sigma: f64) -> Result<GaussianPld> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be > 0, got {sigma}")));
    }
    if !(sensitivity.is_finite() && sensitivity >= 0.0) {
        return Err(Error::invalid(format!("sensitivity must be >= 0, got {sensitivity}")));
    }
    let ratio = sensitivity / sigma;
    Ok(GaussianPld { rho: 0.5 * ratio * ratio })
}

// ── canonical randomized response ──────────────────────────────────────────

/// The worst-case (eps, delta) pair on four outcomes
/// [reveal-P, heads, tails, reveal-Q]:
/// P = (delta, (1-delta) e^eps/(1+e^eps), (1-delta)/(1+e^eps), 0) and Q the
/// mirror image. Every (eps, delta)-DP pair is a postprocessing of this one.
pub fn rr_pair(eps: f64, delta: f64) -> Result<(DiscreteDist, DiscreteDist)> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::invalid(format!("eps must be finite and >= 0, got {eps}")));
    }
    if !(delta.is_finite() && (0.0..=1.0).contains(&delta)) {
        return Err(Error::invalid(format!("delta must be in [0,1], got {delta}")));
    }
    let heads = eps.exp() / (1.0 + eps.exp());
    let tails = 1.0 - heads;
    let keep = 1.0 - delta;
    let p = DiscreteDist::new(vec![delta, keep * heads, keep * tails, 0.0])?;
    let q = DiscreteDist::new(vec![0.0, keep * tails, keep * heads, delta])?;
    Ok((p, q))
}

/// PLD of pure randomized response: atoms (eps, e^eps/(1+e^eps)) and
/// (-eps, 1/(1+e^eps)).
pub fn rr_pld(eps: f64) -> Result<DiscretePld> {
    let (p, q) = rr_pair(eps, 0.0)?;
    pld_from_pair(&p, &q)
}

// ── construction from discrete pairs ───────────────────────────────────────

/// PLD of an ordered discrete pair (P || Q): finite atoms
/// (log(P(y)/Q(y)), P(y)); P-mass on outcomes where Q vanishes goes to
/// inf_mass.
pub fn pld_from_pair(p_dist: &DiscreteDist, q_dist: &DiscreteDist) -> Result<DiscretePld> {
    if p_dist.len() != q_dist.len() {
        return Err(Error::invalid(format!(
            "outcome counts differ: {} vs {}",
            p_dist.len(),
            q_dist.len()
        )));
    }
    let mut atoms = Vec::new();
    let mut inf_mass = 0.0;
    for (&p, &q) in p_dist.probs().iter().zip(q_dist.probs()) {
        if p == 0.0 {
            continue;
        }
        if q == 0.0 {
            inf_mass += p;
        } else {
            atoms.push(((p / q).ln(), p));
        }
    }
    DiscretePld::new(atoms, inf_mass)
}

// ── convolution ────────────────────────────────────────────────────────────

/// PLD of the composition of two mechanisms: the convolution
/// {(z_a + z_b, p_a p_b)} with infinite-loss masses combining as
/// 1 - (1 - i_a)(1 - i_b).
///
/// Inputs that live on a shared uniform grid take a dense array path (losses
/// stay exact grid multiples, cost n_a * n_b fused multiply-adds). Otherwise
/// all atom pairs are formed directly; inputs too large for that are first
/// coarsened pessimistically, so the result's delta(eps) remains an upper
/// bound.
pub fn convolve(a: &DiscretePld, b: &DiscretePld) -> DiscretePld {
    let inf_mass = a.inf_mass() + b.inf_mass() - a.inf_mass() * b.inf_mass();
    if a.atoms().is_empty() || b.atoms().is_empty() {
        // All mass of one side is at +inf; only inf_mass survives (plus the
        // other side's atoms when total finite mass remains).
        let (src, src_inf) = if a.atoms().is_empty() { (b, a.inf_mass()) } else { (a, b.inf_mass()) };
        let scale = 1.0 - src_inf;
        let atoms = src.atoms().iter().map(|&(z, p)| (z, p * scale)).collect();
        return DiscretePld::from_parts_unchecked(atoms, inf_mass);
    }

    if let Some(pld) = convolve_on_grid(a, b, inf_mass) {
        return pld;
    }

    let (a, b) = shrink_for_pairing(a, b);
    let mut atoms = Vec::with_capacity(a.atoms().len() * b.atoms().len());
    for &(za, pa) in a.atoms() {
        for &(zb, pb) in b.atoms() {
            atoms.push((za + zb, pa * pb));
        }
    }
    DiscretePld::new(atoms, inf_mass).expect("convolution preserves total mass")
}

/// k-fold convolution of a PLD with itself; k = 0 gives the identity element.
pub fn self_convolve(pld: &DiscretePld, k: u32) -> DiscretePld {
    let mut acc = DiscretePld::point_mass_zero();
    for _ in 0..k {
        acc = convolve(&acc, pld);
    }
    acc
}

/// Pessimistically merge atoms closer than `gap`: each cluster's mass moves
/// to its largest loss, so delta(eps) can only increase.
pub fn coarsen(pld: &DiscretePld, gap: f64) -> DiscretePld {
    if !(gap.is_finite() && gap > 0.0) || pld.atoms().len() < 2 {
        return pld.clone();
    }
    let mut merged: Vec<(f64, f64)> = Vec::new();
    let mut cluster_start = f64::NEG_INFINITY;
    for &(z, p) in pld.atoms() {
        match merged.last_mut() {
            Some(last) if z - cluster_start < gap => {
                // Atoms arrive sorted, so the latest z is the cluster max.
                last.0 = z;
                last.1 += p;
            }
            _ => {
                merged.push((z, p));
                cluster_start = z;
            }
        }
    }
    DiscretePld::from_parts_unchecked(merged, pld.inf_mass())
}

fn shrink_for_pairing(a: &DiscretePld, b: &DiscretePld) -> (DiscretePld, DiscretePld) {
    let mut a = a.clone();
    let mut b = b.clone();
    while a.atoms().len().saturating_mul(b.atoms().len()) > MAX_PAIR_PRODUCT {
        let target = if a.atoms().len() >= b.atoms().len() { &mut a } else { &mut b };
        let (lo, _) = target.atoms()[0];
        let hi = target.max_finite_loss().expect("non-empty");
        let gap = (hi - lo).max(f64::MIN_POSITIVE) / ((MAX_PAIR_PRODUCT as f64).sqrt() * 0.5);
        let coarse = coarsen(target, gap);
        if coarse.atoms().len() == target.atoms().len() {
            break;
        }
        *target = coarse;
    }
    (a, b)
}

/// Index form of a PLD whose losses all sit on multiples of one step.
fn uniform_grid_indices(pld: &DiscretePld, step: f64) -> Option<Vec<i64>> {
    let mut idx = Vec::with_capacity(pld.atoms().len());
    for &(z, _) in pld.atoms() {
        let k = (z / step).round();
        if (z - k * step).abs() > step * 1e-6 || k.abs() > 4.0e15 {
            return None;
        }
        idx.push(k as i64);
    }
    Some(idx)
}

fn detect_step(pld: &DiscretePld) -> Option<f64> {
    let atoms = pld.atoms();
    if atoms.len() < 2 {
        return None;
    }
    let mut step = f64::INFINITY;
    for w in atoms.windows(2) {
        step = step.min(w[1].0 - w[0].0);
    }
    (step.is_finite() && step > 0.0).then_some(step)
}

fn convolve_on_grid(a: &DiscretePld, b: &DiscretePld, inf_mass: f64) -> Option<DiscretePld> {
    let step_a = detect_step(a)?;
    let step_b = detect_step(b)?;
    if (step_a - step_b).abs() > 1e-9 * step_a.max(step_b) {
        return None;
    }
    let step = step_a.min(step_b);
    let ia = uniform_grid_indices(a, step)?;
    let ib = uniform_grid_indices(b, step)?;
    let (a_lo, a_hi) = (ia[0], *ia.last().expect("non-empty"));
    let (b_lo, b_hi) = (ib[0], *ib.last().expect("non-empty"));
    let na = usize::try_from(a_hi - a_lo).ok()? + 1;
    let nb = usize::try_from(b_hi - b_lo).ok()? + 1;
    if na.checked_add(nb)? > MAX_DENSE_LEN {
        return None;
    }

    let mut dense_a = vec![0.0f64; na];
    for (&k, &(_, p)) in ia.iter().zip(a.atoms()) {
        dense_a[(k - a_lo) as usize] += p;
    }
    let mut dense_b = vec![0.0f64; nb];
    for (&k, &(_, p)) in ib.iter().zip(b.atoms()) {
        dense_b[(k - b_lo) as usize] += p;
    }

    let mut dense_c = vec![0.0f64; na + nb - 1];
    for (i, &av) in dense_a.iter().enumerate() {
        if av == 0.0 {
            continue;
        }
        for (cv, &bv) in dense_c[i..i + nb].iter_mut().zip(&dense_b) {
            *cv += av * bv;
        }
    }

    // Accumulation error across ~n_a additions per cell can push the total a
    // few ulps past the mass-closure tolerance. Restore exact closure by
    // placing the residual where it cannot make delta(eps) under-report:
    // excess is removed from the lowest losses (where the hockey-stick
    // integrand vanishes), deficit is added to the highest loss.
    let target_finite = 1.0 - inf_mass;
    let mut residual = target_finite - neumaier_sum(dense_c.iter().copied());
    if residual > 0.0 {
        *dense_c.last_mut().expect("non-empty") += residual;
    } else {
        for cv in dense_c.iter_mut() {
            if residual >= 0.0 {
                break;
            }
            let take = (-residual).min(*cv);
            *cv -= take;
            residual += take;
        }
    }

    let c_lo = a_lo + b_lo;
    let atoms = dense_c
        .iter()
        .enumerate()
        .filter(|&(_, &p)| p > 0.0)
        .map(|(k, &p)| ((c_lo + k as i64) as f64 * step, p))
        .collect();
    Some(DiscretePld::from_parts_unchecked(atoms, inf_mass))
}

// ── Gaussian discretization ────────────────────────────────────────────────

/// Discretize the analytic Gaussian loss N(rho, 2 rho) onto the grid of
/// integer multiples of `grid_step`.
///
/// Rounding is pessimistic throughout: each continuous cell's mass moves UP
/// to the next grid point, the upper tail beyond quantile 1 - tail_mass moves
/// to inf_mass, and the lower tail moves up to the lowest grid point. The
/// result's delta(eps) therefore dominates the exact value. Anchoring at
/// integer multiples makes any two discretizations with the same step share a
/// lattice, so their convolution stays exact.
pub fn discretize(g: &GaussianPld, grid_step: f64, tail_mass: f64) -> Result<DiscretePld> {
    if !(grid_step.is_finite() && grid_step > 0.0) {
        return Err(Error::invalid(format!("grid_step must be > 0, got {grid_step}")));
    }
    if !(tail_mass > 0.0 && tail_mass < 1.0) {
        return Err(Error::invalid(format!("tail_mass must be in (0,1), got {tail_mass}")));
    }
    if g.rho == 0.0 {
        return Ok(DiscretePld::point_mass_zero());
    }
    let sd = g.variance().sqrt();
    let z_lo = g.mean() + sd * norm_quantile(tail_mass);
    let z_hi = g.mean() - sd * norm_quantile(tail_mass);
    let i_hi = (z_hi / grid_step).ceil() as i64;
    let i_lo = ((z_lo / grid_step).ceil() as i64).min(i_hi);

    let standardize = |i: i64| (i as f64 * grid_step - g.mean()) / sd;
    // Upper tail of the cell boundary, computed from whichever side keeps the
    // complementary CDF well-conditioned.
    let upper = |x: f64| if x >= 0.0 { norm_sf(x) } else { 1.0 - norm_cdf(x) };

    let n = (i_hi - i_lo + 1) as usize;
    let mut atoms = Vec::with_capacity(n);
    // Lowest grid point absorbs the entire lower tail.
    let mut prev_upper = 1.0;
    for i in i_lo..i_hi {
        let cur = upper(standardize(i));
        atoms.push((i as f64 * grid_step, prev_upper - cur));
        prev_upper = cur;
    }
    let inf_mass = upper(standardize(i_hi));
    atoms.push((i_hi as f64 * grid_step, prev_upper - inf_mass));
    DiscretePld::new(atoms, inf_mass)
}

// ── guarantee functionals ──────────────────────────────────────────────────

/// Tightest delta at a given eps: inf_mass + E[max(0, 1 - e^(eps - Z))].
/// Nonincreasing in eps; equals the hockey-stick divergence of the pair the
/// PLD came from.
pub fn delta_from_pld(pld: &DiscretePld, eps: f64) -> f64 {
    let mut acc = Neumaier::starting_at(pld.inf_mass());
    // Atoms are sorted; only losses above eps contribute.
    for &(z, p) in pld.atoms().iter().rev() {
        if z <= eps {
            break;
        }
        acc.add(p * -(eps - z).exp_m1());
    }
    acc.total().clamp(0.0, 1.0)
}

/// The same delta via the two-sided tail form
/// Pr[Z > eps] - e^eps Pr[-Z' > eps], where pld_qp is the loss of the
/// reversed pair (Q || P). Agrees with [`delta_from_pld`] on pld_pq.
pub fn delta_two_sided(pld_pq: &DiscretePld, pld_qp: &DiscretePld, eps: f64) -> f64 {
    let mut upper = Neumaier::starting_at(pld_pq.inf_mass());
    for &(z, p) in pld_pq.atoms().iter().rev() {
        if z <= eps {
            break;
        }
        upper.add(p);
    }
    let mut reverse_tail = Neumaier::new();
    for &(z, p) in pld_qp.atoms() {
        if z >= -eps {
            break;
        }
        reverse_tail.add(p);
    }
    (upper.total() - eps.exp() * reverse_tail.total()).clamp(0.0, 1.0)
}

/// Total variation distance and KL divergence of the underlying pair:
/// TV = E[max(0, 1 - e^(-Z))] + inf_mass, KL = E[Z] (+inf when any loss is
/// infinite).
pub fn tv_kl(pld: &DiscretePld) -> (f64, f64) {
    let mut tv = Neumaier::starting_at(pld.inf_mass());
    for &(z, p) in pld.atoms() {
        if z > 0.0 {
            tv.add(p * -(-z).exp_m1());
        }
    }
    let kl = if pld.inf_mass() > 0.0 {
        f64::INFINITY
    } else {
        neumaier_sum(pld.atoms().iter().map(|&(z, p)| p * z)).max(0.0)
    };
    (tv.total().clamp(0.0, 1.0), kl)
}

/// Renyi divergence D_alpha(P || Q) of a discrete pair, +inf when P is not
/// absolutely continuous w.r.t. Q. Nonnegative and nondecreasing in alpha.
pub fn renyi_divergence(p_dist: &DiscreteDist, q_dist: &DiscreteDist, alpha: f64) -> Result<f64> {
    if p_dist.len() != q_dist.len() {
        return Err(Error::invalid(format!(
            "outcome counts differ: {} vs {}",
            p_dist.len(),
            q_dist.len()
        )));
    }
    if !(alpha.is_finite() && alpha > 1.0) {
        return Err(Error::invalid(format!("alpha must be finite and > 1, got {alpha}")));
    }
    let mut log_terms = Vec::with_capacity(p_dist.len());
    for (&p, &q) in p_dist.probs().iter().zip(q_dist.probs()) {
        if p == 0.0 {
            continue;
        }
        if q == 0.0 {
            return Ok(f64::INFINITY);
        }
        log_terms.push(alpha * p.ln() - (alpha - 1.0) * q.ln());
    }
    Ok((crate::numeric::log_sum_exp(&log_terms) / (alpha - 1.0)).max(0.0))
}

/// Hockey-stick divergence sup_S P(S) - e^eps Q(S), computed exactly from the
/// threshold set {y : P(y) > e^eps Q(y)}.
pub fn hockey_stick_divergence(p_dist: &DiscreteDist, q_dist: &DiscreteDist, eps: f64) -> Result<f64> {
    if p_dist.len() != q_dist.len() {
        return Err(Error::invalid(format!(
            "outcome counts differ: {} vs {}",
            p_dist.len(),
            q_dist.len()
        )));
    }
    let scale = eps.exp();
    let mut acc = Neumaier::new();
    for (&p, &q) in p_dist.probs().iter().zip(q_dist.probs()) {
        let gain = p - scale * q;
        if gain > 0.0 {
            acc.add(gain);
        }
    }
    Ok(acc.total().clamp(0.0, 1.0))
}

/// Brute-force hockey-stick divergence over all 2^n outcome subsets. Test
/// oracle only; rejects more than 12 outcomes.
pub fn hockey_stick_brute(p_dist: &DiscreteDist, q_dist: &DiscreteDist, eps: f64) -> Result<f64> {
    if p_dist.len() != q_dist.len() {
        return Err(Error::invalid("outcome counts differ"));
    }
    if p_dist.len() > 12 {
        return Err(Error::invalid("brute-force subset oracle is capped at 12 outcomes"));
    }
    let scale = eps.exp();
    let n = p_dist.len();
    let mut best = 0.0f64;
    for mask in 0u32..(1 << n) {
        let mut gain = 0.0;
        for y in 0..n {
            if mask >> y & 1 == 1 {
                gain += p_dist.probs()[y] - scale * q_dist.probs()[y];
            }
        }
        best = best.max(gain);
    }
    Ok(best.min(1.0))
}

/// Both sides of the change-of-measure identity
/// E_{Y~Q}[g(llr(Y))] = E_Z[g(Z) e^(-Z)], evaluated exactly over a mutually
/// absolutely continuous pair. Exposed for the property suite.
pub fn change_of_measure_check(
    p_dist: &DiscreteDist,
    q_dist: &DiscreteDist,
    g: impl Fn(f64) -> f64,
) -> Result<(f64, f64)> {
    if p_dist.len() != q_dist.len() {
        return Err(Error::invalid("outcome counts differ"));
    }
    for (&p, &q) in p_dist.probs().iter().zip(q_dist.probs()) {
        if (p == 0.0) != (q == 0.0) {
            return Err(Error::invalid(
                "change of measure requires absolute continuity in both directions",
            ));
        }
    }
    let lhs = neumaier_sum(
        p_dist
            .probs()
            .iter()
            .zip(q_dist.probs())
            .filter(|&(_, &q)| q > 0.0)
            .map(|(&p, &q)| q * g((p / q).ln())),
    );
    let pld = pld_from_pair(p_dist, q_dist)?;
    let rhs = neumaier_sum(pld.atoms().iter().map(|&(z, p)| p * g(z) * (-z).exp()));
    Ok((lhs, rhs))
}

// ── approximate-DP decomposition ───────────────────────────────────────────

/// Result of splitting an (eps, delta)-indistinguishable pair into an
/// eps-pointwise-close part and a delta-weighted remainder:
/// P = (1 - w) P' + w P'' and Q = (1 - w) Q' + w Q'' with
/// e^(-eps) <= P'(y)/Q'(y) <= e^(eps) at every outcome, w = min(delta, TV).
#[derive(Debug, Clone)]
pub struct AdpDecomposition {
    pub p_prime: DiscreteDist,
    pub p_dprime: DiscreteDist,
    pub q_prime: DiscreteDist,
    pub q_dprime: DiscreteDist,
    /// Achieved mixing weight, min(delta, TV(P,Q)).
    pub mixing_weight: f64,
    /// Threshold at which the P-side excess mass equals the mixing weight.
    pub eps1: f64,
    /// Threshold at which the Q-side excess mass equals the mixing weight.
    pub eps2: f64,
}

/// Decompose an (eps, delta)-indistinguishable pair per the mixture
/// construction: excess mass above a bisected threshold e^eps1 (resp. e^eps2)
/// becomes P'' (resp. Q''), the remainder renormalizes to P', Q'.
pub fn decompose_adp(
    p_dist: &DiscreteDist,
    q_dist: &DiscreteDist,
    eps: f64,
    delta: f64,
) -> Result<AdpDecomposition> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::invalid(format!("eps must be finite and >= 0, got {eps}")));
    }
    if !(delta.is_finite() && (0.0..=1.0).contains(&delta)) {
        return Err(Error::invalid(format!("delta must be in [0,1], got {delta}")));
    }
    let fwd = hockey_stick_divergence(p_dist, q_dist, eps)?;
    let rev = hockey_stick_divergence(q_dist, p_dist, eps)?;
    if fwd > delta || rev > delta {
        return Err(Error::unsatisfied(format!(
            "pair is not ({eps}, {delta})-indistinguishable: hockey-stick divergences {fwd:.3e} / {rev:.3e}"
        )));
    }

    let tv = hockey_stick_divergence(p_dist, q_dist, 0.0)?;
    let weight = delta.min(tv);
    if weight == 0.0 {
        // Nothing to peel off; the remainder components are unused and set to
        // the originals by convention.
        return Ok(AdpDecomposition {
            p_prime: p_dist.clone(),
            p_dprime: p_dist.clone(),
            q_prime: q_dist.clone(),
            q_dprime: q_dist.clone(),
            mixing_weight: 0.0,
            eps1: eps,
            eps2: eps,
        });
    }
    if weight >= 1.0 {
        // Disjoint supports at delta = 1: the pointwise-close part is empty.
        return Ok(AdpDecomposition {
            p_prime: p_dist.clone(),
            p_dprime: p_dist.clone(),
            q_prime: q_dist.clone(),
            q_dprime: q_dist.clone(),
            mixing_weight: 1.0,
            eps1: 0.0,
            eps2: 0.0,
        });
    }

    let eps1 = solve_threshold(p_dist, q_dist, weight, eps)?;
    let eps2 = solve_threshold(q_dist, p_dist, weight, eps)?;
    let (p_prime, p_dprime) = split_at_threshold(p_dist, q_dist, eps1, weight)?;
    let (q_prime, q_dprime) = split_at_threshold(q_dist, p_dist, eps2, weight)?;
    Ok(AdpDecomposition { p_prime, p_dprime, q_prime, q_dprime, mixing_weight: weight, eps1, eps2 })
}

/// Smallest threshold e in [0, eps_hi] whose excess mass
/// sum_y max(0, A(y) - e^e B(y)) equals `target`. The map is continuous and
/// nonincreasing in e, so plain bisection applies; the returned endpoint sits
/// on the excess >= target side.
fn solve_threshold(
    a: &DiscreteDist,
    b: &DiscreteDist,
    target: f64,
    eps_hi: f64,
) -> Result<f64> {
    let excess = |e: f64| hockey_stick_divergence(a, b, e).expect("lengths already checked");
    if excess(0.0) <= target {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0f64, eps_hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Split A into the excess part above e^eps1 B (normalized to A'') and the
/// complementary part (normalized to A'), sharing the given mixing weight so
/// that (1 - w) A' + w A'' telescopes back to A exactly.
fn split_at_threshold(
    a: &DiscreteDist,
    b: &DiscreteDist,
    eps1: f64,
    weight: f64,
) -> Result<(DiscreteDist, DiscreteDist)> {
    let scale = eps1.exp();
    let excess: Vec<f64> = a
        .probs()
        .iter()
        .zip(b.probs())
        .map(|(&pa, &pb)| (pa - scale * pb).max(0.0))
        .collect();
    let excess_total = neumaier_sum(excess.iter().copied());
    if excess_total <= 0.0 {
        return Err(Error::unsatisfied("threshold produced no excess mass to peel off"));
    }
    let dprime: Vec<f64> = excess.iter().map(|&e| e / excess_total).collect();
    let prime: Vec<f64> = a
        .probs()
        .iter()
        .zip(&dprime)
        .map(|(&pa, &d)| ((pa - weight * d) / (1.0 - weight)).max(0.0))
        .collect();
    Ok((DiscreteDist::new(prime)?, DiscreteDist::new(dprime)?))
}

// ── randomized-response reduction ──────────────────────────────────────────

/// Factoring of an (eps, delta)-indistinguishable pair through the canonical
/// two-point mechanism: P = (1-w)[ e^eps/(1+e^eps) A + 1/(1+e^eps) B ] + w P''
/// and Q the same with A and B swapped.
#[derive(Debug, Clone)]
pub struct RrReduction {
    pub a: DiscreteDist,
    pub b: DiscreteDist,
    pub p_dprime: DiscreteDist,
    pub q_dprime: DiscreteDist,
    pub mixing_weight: f64,
}

/// Express the pair as postprocessed randomized response:
/// A = (e^eps P' - Q')/(e^eps - 1) and B = (e^eps Q' - P')/(e^eps - 1) from
/// the decomposition's pointwise-close parts; at eps = 0 the parts coincide
/// and A = B = P'.
pub fn rr_reduction(
    p_dist: &DiscreteDist,
    q_dist: &DiscreteDist,
    eps: f64,
    delta: f64,
) -> Result<RrReduction> {
    let d = decompose_adp(p_dist, q_dist, eps, delta)?;
    if eps == 0.0 {
        return Ok(RrReduction {
            a: d.p_prime.clone(),
            b: d.p_prime.clone(),
            p_dprime: d.p_dprime,
            q_dprime: d.q_dprime,
            mixing_weight: d.mixing_weight,
        });
    }
    let scale = eps.exp();
    let denom = scale - 1.0;
    let n = p_dist.len();
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for i in 0..n {
        let pp = d.p_prime.probs()[i];
        let qp = d.q_prime.probs()[i];
        // The decomposition guarantees e^-eps <= P'/Q' <= e^eps pointwise, so
        // both numerators are nonnegative up to float dust.
        a.push(((scale * pp - qp) / denom).max(0.0));
        b.push(((scale * qp - pp) / denom).max(0.0));
    }
    let a_total = neumaier_sum(a.iter().copied());
    let b_total = neumaier_sum(b.iter().copied());
    if (a_total - 1.0).abs() > 1e-9 || (b_total - 1.0).abs() > 1e-9 {
        return Err(Error::unsatisfied(
            "postprocessing targets failed to normalize; pair violates the pointwise bounds",
        ));
    }
    let a: Vec<f64> = a.iter().map(|&x| x / a_total).collect();
    let b: Vec<f64> = b.iter().map(|&x| x / b_total).collect();
    Ok(RrReduction {
        a: DiscreteDist::new(a)?,
        b: DiscreteDist::new(b)?,
        p_dprime: d.p_dprime,
        q_dprime: d.q_dprime,
        mixing_weight: d.mixing_weight,
    })
}
