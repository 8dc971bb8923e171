//! zCDP and RDP accountants: representation conversions, additive
//! composition, and conversion to approximate DP with the free parameter
//! optimized numerically.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{bisect_smallest, golden_min};
use crate::types::{RdpCurve, ZcdpBound};

// ── zCDP ───────────────────────────────────────────────────────────────────

/// eps-DP implies (eps^2 / 2)-zCDP.
pub fn pure_to_zcdp(eps: f64) -> Result<ZcdpBound> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::invalid(format!("eps must be finite and >= 0, got {eps}")));
    }
    ZcdpBound::new(0.5 * eps * eps)
}

/// zCDP composes additively; the empty composition is perfectly private.
pub fn compose_zcdp(rhos: &[ZcdpBound]) -> ZcdpBound {
    ZcdpBound { rho: crate::numeric::neumaier_sum(rhos.iter().map(|b| b.rho)) }
}

/// Both delta bounds obtainable from rho-zCDP at a fixed eps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaBounds {
    /// inf over t > 0 of e^(t(t+1) rho - eps t) / (t+1) * (1 - 1/(t+1))^t.
    pub optimized: f64,
    /// Closed form e^(-(eps - rho)^2 / (4 rho)).
    pub loose: f64,
    /// Set when eps < rho; both bounds then degenerate to 1.
    pub vacuous: bool,
}

/// Convert rho-zCDP to a delta at fixed eps. Requires eps >= rho for a
/// nontrivial answer; below that both bounds are reported as 1 with the
/// vacuous flag set.
pub fn zcdp_to_delta(rho: ZcdpBound, eps: f64) -> Result<DeltaBounds> {
    if !eps.is_finite() || eps < 0.0 {
        return Err(Error::invalid(format!("eps must be finite and >= 0, got {eps}")));
    }
    let rho = rho.rho;
    if rho == 0.0 {
        return Ok(DeltaBounds { optimized: 0.0, loose: 0.0, vacuous: false });
    }
    if eps < rho {
        return Ok(DeltaBounds { optimized: 1.0, loose: 1.0, vacuous: true });
    }
    let loose = (-(eps - rho) * (eps - rho) / (4.0 * rho)).exp().min(1.0);
    // Minimize ln delta(t) over ln t. The objective is convex in t, hence
    // unimodal in ln t; golden-section suffices. The optimum tracks the
    // closed-form center t = (eps - rho) / (2 rho), comfortably inside the
    // bracket for every practical (rho, eps).
    let ln_delta = |u: f64| {
        let t = u.exp();
        t * (t + 1.0) * rho - eps * t - (t + 1.0).ln() + t * (t.ln() - (t + 1.0).ln())
    };
    let (_, fx) = golden_min(1e-6_f64.ln(), 1e6_f64.ln(), 1e-10, ln_delta);
    let optimized = fx.exp().min(loose);
    Ok(DeltaBounds { optimized, loose, vacuous: false })
}

/// How zCDP-to-eps conversion trades tightness for transparency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConversionMode {
    /// Closed form eps = rho + 2 sqrt(rho ln(1/delta)).
    Remark,
    /// Smallest eps whose optimized delta bound meets the target, by
    /// bisection; never exceeds the closed form.
    Tight,
}

/// Convert rho-zCDP to the eps achieving a delta target.
pub fn zcdp_to_eps(rho: ZcdpBound, delta: f64, mode: ConversionMode) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must be in (0,1), got {delta}")));
    }
    let r = rho.rho;
    if r == 0.0 {
        return Ok(0.0);
    }
    let remark = r + 2.0 * (r * (1.0 / delta).ln()).sqrt();
    if mode == ConversionMode::Remark {
        return Ok(remark);
    }
    let meets = |eps: f64| {
        zcdp_to_delta(rho, eps).expect("eps from bisection is valid").optimized <= delta
    };
    // The remark eps makes even the loose bound equal delta, so it upper
    // bounds the tight answer.
    Ok(bisect_smallest(0.0, remark, 1e-11, meets))
}

/// Smallest rho-zCDP budget whose closed-form conversion meets (eps, delta):
/// rho = (sqrt(ln(1/delta) + eps) - sqrt(ln(1/delta)))^2, the exact inverse
/// of the remark-mode conversion.
pub fn zcdp_rho_needed(eps: f64, delta: f64) -> Result<f64> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::invalid(format!("eps must be finite and >= 0, got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must be in (0,1), got {delta}")));
    }
    let l = (1.0 / delta).ln();
    let root = (l + eps).sqrt() - l.sqrt();
    Ok(root * root)
}

// ── RDP ────────────────────────────────────────────────────────────────────

/// Default order grid: fine fractional orders near 1 for small-eps regimes,
/// every integer up to 64 (the subsampling series needs integers), then 128
/// and 256 for high-noise regimes.
pub fn default_alpha_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (11..20).map(|i| i as f64 / 10.0).collect();
    grid.extend((2..=64).map(|i| i as f64));
    grid.push(128.0);
    grid.push(256.0);
    grid
}

/// rho-zCDP as the linear RDP curve eps(alpha) = rho * alpha on a grid.
pub fn zcdp_to_rdp(rho: ZcdpBound, orders: &[f64]) -> Result<RdpCurve> {
    RdpCurve::new(orders.to_vec(), orders.iter().map(|&a| rho.rho * a).collect())
}

/// Canonical integer key for order-grid intersection; orders equal after
/// rounding at 1e-12 are treated as the same order.
fn order_key(alpha: f64) -> i64 {
    (alpha * 1e12).round() as i64
}

/// Compose RDP curves: pointwise sum over the orders every curve shares.
/// Orders missing from any curve are dropped; an empty intersection is the
/// caller's error.
pub fn rdp_compose(curves: &[RdpCurve]) -> Result<RdpCurve> {
    let Some((first, rest)) = curves.split_first() else {
        return Err(Error::invalid("rdp_compose requires at least one curve"));
    };
    let mut orders: Vec<f64> = Vec::new();
    let mut eps: Vec<f64> = Vec::new();
    'outer: for (i, &alpha) in first.orders().iter().enumerate() {
        let key = order_key(alpha);
        let mut total = first.eps_values()[i];
        for curve in rest {
            match curve.orders().iter().position(|&o| order_key(o) == key) {
                Some(j) => total += curve.eps_values()[j],
                None => continue 'outer,
            }
        }
        orders.push(alpha);
        eps.push(total);
    }
    if orders.is_empty() {
        return Err(Error::NoCommonOrders);
    }
    RdpCurve::new(orders, eps)
}

/// Compose `times` copies of one curve: the pointwise multiple times * eps.
pub fn rdp_self_compose(curve: &RdpCurve, times: u32) -> Result<RdpCurve> {
    if times == 0 {
        return Err(Error::invalid("composition of zero rounds is not a curve"));
    }
    RdpCurve::new(
        curve.orders().to_vec(),
        curve.eps_values().iter().map(|&e| e * times as f64).collect(),
    )
}

/// Which form of the RDP-to-approximate-DP conversion to apply at each order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdpVariant {
    /// eps(alpha) + [ln(1/delta) - ln alpha]/(alpha - 1) + ln(1 - 1/alpha).
    Sharp,
    /// eps(alpha) + ln(1/delta)/(alpha - 1).
    Simple,
}

/// Result of converting an RDP curve to approximate DP at a delta target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdpConversion {
    pub eps: f64,
    /// Grid order attaining the minimum.
    pub best_order: f64,
}

/// Convert an RDP curve to the best eps achievable at a delta target,
/// minimizing the per-order conversion over the grid. Negative per-order
/// values clamp to 0 (an (0, delta) guarantee is the floor).
pub fn rdp_to_adp(curve: &RdpCurve, delta: f64, variant: AdpVariant) -> Result<AdpConversion> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must be in (0,1), got {delta}")));
    }
    let ln_inv_delta = (1.0 / delta).ln();
    let mut best: Option<AdpConversion> = None;
    for (&alpha, &e) in curve.orders().iter().zip(curve.eps_values()) {
        if !e.is_finite() {
            continue;
        }
        let converted = match variant {
            AdpVariant::Simple => e + ln_inv_delta / (alpha - 1.0),
            AdpVariant::Sharp => {
                e + (ln_inv_delta - alpha.ln()) / (alpha - 1.0) + (1.0 - 1.0 / alpha).ln()
            }
        }
        .max(0.0);
        if best.map_or(true, |b| converted < b.eps) {
            best = Some(AdpConversion { eps: converted, best_order: alpha });
        }
    }
    best.ok_or_else(|| Error::invalid("curve has no finite entries to convert"))
}

// ── group-privacy-style shifting ───────────────────────────────────────────

/// Triangle-like bound: D_alpha(P || R) <=
/// alpha'/(alpha' - 1) * D_{alpha (alpha'-1)/(alpha'-alpha)}(P || Q)
/// + D_{alpha'}(Q || R), with the two divergences read off the given curves.
pub fn rdp_group_shift(
    curve1: &RdpCurve,
    curve2: &RdpCurve,
    alpha: f64,
    alpha_prime: f64,
) -> Result<f64> {
    if !(alpha > 1.0 && alpha.is_finite()) || !(alpha_prime > alpha && alpha_prime.is_finite()) {
        return Err(Error::invalid(format!(
            "orders must satisfy 1 < alpha < alpha_prime, got {alpha}, {alpha_prime}"
        )));
    }
    let shifted = alpha * (alpha_prime - 1.0) / (alpha_prime - alpha);
    let d1 = curve1.bound_at(shifted).ok_or_else(|| {
        Error::invalid(format!("first curve does not cover the shifted order {shifted}"))
    })?;
    let d2 = curve2.bound_at(alpha_prime).ok_or_else(|| {
        Error::invalid(format!("second curve does not cover order {alpha_prime}"))
    })?;
    Ok(alpha_prime / (alpha_prime - 1.0) * d1 + d2)
}

/// Closed form of the triangle-like bound optimized over alpha' when both
/// sides are zCDP lines: (sqrt(rho1) + sqrt(rho2))^2 * alpha.
pub fn zcdp_group_shift(rho1: ZcdpBound, rho2: ZcdpBound, alpha: f64) -> Result<f64> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("alpha must be finite and > 1, got {alpha}")));
    }
    let s = rho1.rho.sqrt() + rho2.rho.sqrt();
    Ok(s * s * alpha)
}
