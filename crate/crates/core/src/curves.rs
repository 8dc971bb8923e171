//! Assembled comparison datasets behind the CLI `curve` verb: composition
//! bounds as the query count grows, and subsampled divergence bounds across
//! Renyi orders. Kept in the core crate so the acceptance suite exercises
//! exactly the arrays the CLI serializes.

use serde::Serialize;

use crate::accountant::{pure_to_zcdp, zcdp_to_eps, ConversionMode};
use crate::composition::{advanced_eps_square_root, optimal_eps};
use crate::error::{Error, Result};
use crate::subsample::{subsampled_rdp_analytic_log, subsampled_rdp_exact, subsampled_rdp_large_alpha};
use crate::types::ZcdpBound;

/// Five eps-versus-k composition curves for k copies of an eps0-DP step at a
/// shared delta target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionCurves {
    pub eps0: f64,
    pub delta: f64,
    /// Query counts 1..=k_max.
    pub k: Vec<u32>,
    /// Plain summation k * eps0.
    pub basic: Vec<f64>,
    /// Square-root form 0.5 k eps0^2 + sqrt(2 k eps0^2 ln(1/delta)). The
    /// column keeps this branch even where summation is smaller, because the
    /// curve contrasts growth shapes rather than reporting the usable min.
    pub advanced: Vec<f64>,
    /// Exact homogeneous composition inverted at the delta target.
    pub optimal: Vec<f64>,
    /// Route through zCDP: eps0-DP gives (eps0^2/2)-zCDP per step, composed
    /// additively, converted back tightly.
    pub cdp: Vec<f64>,
    /// Gaussian noise sized to the variance a Laplace mechanism would need
    /// for a per-query eps0 budget: sigma^2 = 2/eps0^2, so each query is
    /// (eps0^2/4)-zCDP; composed and converted like the cdp column.
    pub gaussian: Vec<f64>,
}

/// Build the composition comparison for k = 1..=k_max.
pub fn composition_curves(eps0: f64, delta: f64, k_max: u32) -> Result<CompositionCurves> {
    if !(eps0.is_finite() && eps0 > 0.0) {
        return Err(Error::invalid(format!("eps0 must be finite and > 0, got {eps0}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must be in (0,1), got {delta}")));
    }
    if k_max == 0 {
        return Err(Error::invalid("k_max must be at least 1"));
    }
    let rho_pure = pure_to_zcdp(eps0)?.rho;
    let rho_gauss = eps0 * eps0 / 4.0;
    let n = k_max as usize;
    let mut out = CompositionCurves {
        eps0,
        delta,
        k: (1..=k_max).collect(),
        basic: Vec::with_capacity(n),
        advanced: Vec::with_capacity(n),
        optimal: Vec::with_capacity(n),
        cdp: Vec::with_capacity(n),
        gaussian: Vec::with_capacity(n),
    };
    for k in 1..=k_max {
        let kf = k as f64;
        out.basic.push(eps0 * kf);
        out.advanced.push(advanced_eps_square_root(eps0 * eps0 * kf, delta));
        out.optimal.push(optimal_eps(eps0, 0.0, k, delta)?);
        out.cdp.push(zcdp_to_eps(ZcdpBound::new(rho_pure * kf)?, delta, ConversionMode::Tight)?);
        out.gaussian.push(zcdp_to_eps(
            ZcdpBound::new(rho_gauss * kf)?,
            delta,
            ConversionMode::Tight,
        )?);
    }
    Ok(out)
}

/// Four eps-versus-order curves for Poisson subsampling of a rho-zCDP step
/// at rate p, on integer orders.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplificationCurves {
    pub p: f64,
    pub rho: f64,
    /// Orders 2..=alpha_max.
    pub alpha: Vec<u32>,
    /// The unamplified line rho * alpha.
    pub unamplified: Vec<f64>,
    /// Binomial series with the true linear divergences plugged in.
    pub exact: Vec<f64>,
    /// Log-form analytic bound with both moment inputs taken at omega =
    /// alpha. Rows where its preconditions fail carry +inf.
    pub analytic: Vec<f64>,
    /// Large-order bound on the unamplified order-alpha divergence.
    pub limit: Vec<f64>,
}

/// Build the amplification comparison for alpha = 2..=alpha_max.
pub fn amplification_curves(p: f64, rho: f64, alpha_max: u32) -> Result<AmplificationCurves> {
    if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
        return Err(Error::invalid(format!("sampling probability must be in [0,1], got {p}")));
    }
    if !(rho.is_finite() && rho >= 0.0) {
        return Err(Error::invalid(format!("rho must be finite and >= 0, got {rho}")));
    }
    if alpha_max < 2 {
        return Err(Error::invalid("alpha_max must be at least 2"));
    }
    let series = subsampled_rdp_exact(|k| Some(rho * k as f64), p, alpha_max)?;
    let mut out = AmplificationCurves {
        p,
        rho,
        alpha: (2..=alpha_max).collect(),
        unamplified: Vec::with_capacity(series.len()),
        exact: series.eps_values().to_vec(),
        analytic: Vec::with_capacity(series.len()),
        limit: Vec::with_capacity(series.len()),
    };
    for alpha in 2..=alpha_max {
        let a = alpha as f64;
        out.unamplified.push(rho * a);
        out.analytic.push(
            subsampled_rdp_analytic_log(2.0 * rho, rho * a, p, a, a).unwrap_or(f64::INFINITY),
        );
        out.limit.push(subsampled_rdp_large_alpha(rho * a, p, a));
    }
    Ok(out)
}
