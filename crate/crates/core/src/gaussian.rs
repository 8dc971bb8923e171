//! Closed-form guarantees for the Gaussian mechanism: tight delta(eps), the
//! zCDP parameter, an interpretable upper bound, and noise calibration.
//!
//! All formulas are driven by rho* = sensitivity^2 / (2 sigma^2), the mean of
//! the mechanism's privacy loss distribution N(rho*, 2 rho*).

use crate::error::{Error, Result};
use crate::numeric::{bisect_smallest, ln_norm_sf, norm_sf};
use crate::types::{EpsDelta, ZcdpBound};

/// Exact delta(eps) of the Gaussian mechanism:
/// Phi_bar((eps - rho*)/sqrt(2 rho*)) - e^eps Phi_bar((eps + rho*)/sqrt(2 rho*)).
///
/// Nonincreasing in eps, nondecreasing in rho*. When both tail terms fall
/// below 1e-14 the difference is formed in log space, keeping the relative
/// error small deep in the tail instead of cancelling to zero.
pub fn gaussian_delta(rho_star: f64, eps: f64) -> Result<f64> {
    if !(rho_star.is_finite() && rho_star >= 0.0) {
        return Err(Error::invalid(format!("rho_star must be finite and >= 0, got {rho_star}")));
    }
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::invalid(format!("eps must be finite and >= 0, got {eps}")));
    }
    if rho_star == 0.0 {
        return Ok(0.0);
    }
    let sd = (2.0 * rho_star).sqrt();
    let a = (eps - rho_star) / sd;
    let b = (eps + rho_star) / sd;
    let term1 = norm_sf(a);
    if term1 >= 1e-14 {
        return Ok((term1 - eps.exp() * norm_sf(b)).clamp(0.0, 1.0));
    }
    // Both terms are tiny; e^eps Phi_bar(b) < Phi_bar(a) always, so factor
    // out the larger one: delta = e^t1 (1 - e^(t2 - t1)).
    let t1 = ln_norm_sf(a);
    let t2 = eps + ln_norm_sf(b);
    Ok((t1.exp() * -(t2 - t1).exp_m1()).clamp(0.0, 1.0))
}

/// Closed-form upper bound exp(-(eps - rho*)^2 / (4 rho*)) /
/// max(2, sqrt(pi/rho*) (eps - rho*)), valid for eps >= rho* > 0; always
/// dominates [`gaussian_delta`].
pub fn gaussian_delta_upper(rho_star: f64, eps: f64) -> Result<f64> {
    if !(rho_star.is_finite() && rho_star > 0.0) {
        return Err(Error::invalid(format!("rho_star must be > 0, got {rho_star}")));
    }
    if !(eps.is_finite() && eps >= rho_star) {
        return Err(Error::invalid(format!(
            "the bound requires eps >= rho_star, got eps {eps} < rho_star {rho_star}"
        )));
    }
    let gap = eps - rho_star;
    let denom = 2.0_f64.max((std::f64::consts::PI / rho_star).sqrt() * gap);
    Ok((-(gap * gap) / (4.0 * rho_star)).exp() / denom)
}

/// zCDP parameter of the Gaussian mechanism: rho = sensitivity^2 / (2 sigma^2).
pub fn gaussian_zcdp(sensitivity: f64, sigma: f64) -> Result<ZcdpBound> {
    ZcdpBound::new(crate::pld::gaussian_pld(sensitivity, sigma)?.rho())
}

/// Smallest eps at which the mechanism with loss parameter rho* meets a delta
/// target; the exact inverse of [`gaussian_delta`] by bisection.
pub fn gaussian_eps(rho_star: f64, delta: f64) -> Result<f64> {
    if !(rho_star.is_finite() && rho_star >= 0.0) {
        return Err(Error::invalid(format!("rho_star must be finite and >= 0, got {rho_star}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must be in (0,1), got {delta}")));
    }
    if rho_star == 0.0 || gaussian_delta(rho_star, 0.0)? <= delta {
        return Ok(0.0);
    }
    // The zCDP-style closed form is a valid upper start; expand if rounding
    // ever leaves it short.
    let mut hi = rho_star + 2.0 * (rho_star * (1.0 / delta).ln()).sqrt() + 1.0;
    while gaussian_delta(rho_star, hi)? > delta {
        hi *= 2.0;
    }
    Ok(bisect_smallest(0.0, hi, 1e-11, |e| {
        gaussian_delta(rho_star, e).expect("domain already validated") <= delta
    }))
}

/// How [`calibrate_sigma`] picks the noise scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibrationMode {
    /// Sufficient closed form sigma^2 = (2 / eps^2)(ln(1/delta) + eps),
    /// scaled by the sensitivity.
    Remark,
    /// Smallest sigma whose exact delta(eps) meets the target, by bisection
    /// to 1e-9 relative; never exceeds the closed form.
    Tight,
}

/// Noise scale for a Gaussian mechanism meeting an (eps, delta) target.
pub fn calibrate_sigma(sensitivity: f64, target: EpsDelta, mode: CalibrationMode) -> Result<f64> {
    if !(sensitivity.is_finite() && sensitivity >= 0.0) {
        return Err(Error::invalid(format!("sensitivity must be >= 0, got {sensitivity}")));
    }
    let (eps, delta) = (target.eps, target.delta);
    if eps <= 0.0 {
        return Err(Error::invalid(format!("calibration requires eps > 0, got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("calibration requires delta in (0,1), got {delta}")));
    }
    if sensitivity == 0.0 {
        return Ok(0.0);
    }
    let remark = sensitivity * (2.0 / (eps * eps) * ((1.0 / delta).ln() + eps)).sqrt();
    if mode == CalibrationMode::Remark {
        return Ok(remark);
    }
    let meets = |sigma: f64| {
        let rho = 0.5 * (sensitivity / sigma) * (sensitivity / sigma);
        gaussian_delta(rho, eps).expect("domain already validated") <= delta
    };
    let mut hi = remark;
    while !meets(hi) {
        hi *= 2.0;
    }
    let mut lo = sensitivity / (eps + (2.0 * (1.0 / delta).ln()).sqrt() + 2.0);
    while lo >= hi {
        lo *= 0.5;
    }
    Ok(bisect_smallest(lo, hi, 1e-11, meets))
}
