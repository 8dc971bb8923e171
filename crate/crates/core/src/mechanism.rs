//! Declarative mechanism descriptions and their versioned JSON wire format.
//!
//! A [`MechanismSpec`] says what a mechanism is, not what it guarantees;
//! accountants derive guarantees from it. Parsing is deliberately permissive:
//! range violations are reported by [`MechanismSpec::validate`] as data, so a
//! front end can show every problem at once instead of failing on the first.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{clamp_tiny, EpsDelta, RdpCurve, ZcdpBound};

/// Version tag expected in enveloped mechanism documents.
pub const SCHEMA_VERSION: u64 = 1;

/// Description of a mechanism as configured, before any accounting.
///
/// Wire format is internally tagged JSON: `{"type": "gaussian",
/// "sensitivity": 1.0, "sigma": 2.0}`. Subsampling nests arbitrarily.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MechanismSpec {
    /// Additive N(0, sigma^2 I) noise on a query with l2 sensitivity.
    Gaussian { sensitivity: f64, sigma: f64 },
    /// Additive Laplace(scale) noise on a query with l1 sensitivity.
    Laplace { sensitivity: f64, scale: f64 },
    /// A mechanism known to satisfy eps-DP, parameters unspecified.
    PureDp { eps: f64 },
    /// A mechanism known to satisfy (eps, delta)-DP.
    ApproxDp { eps: f64, delta: f64 },
    /// A mechanism known to satisfy rho-zCDP.
    Zcdp { rho: f64 },
    /// A mechanism with a known Renyi-DP curve on a grid of orders.
    Rdp { orders: Vec<f64>, eps_at: Vec<f64> },
    /// The worst-case two-point (eps, delta) mechanism.
    RandomizedResponse { eps: f64, delta: f64 },
    /// Poisson subsampling: each record enters with probability p, then the
    /// inner mechanism runs on the subsample.
    PoissonSubsampled { p: f64, inner: Box<MechanismSpec> },
    /// Sequential composition of independent parts.
    Composed { parts: Vec<MechanismSpec> },
}

impl MechanismSpec {
    /// Collect every invariant violation, recursing into nested mechanisms.
    /// Valid specs return an empty list. Never mutates.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.validate_into("", &mut out);
        out
    }

    fn validate_into(&self, path: &str, out: &mut Vec<String>) {
        let mut push = |msg: String| {
            if path.is_empty() {
                out.push(msg);
            } else {
                out.push(format!("{path}: {msg}"));
            }
        };
        match self {
            MechanismSpec::Gaussian { sensitivity, sigma } => {
                if !(sensitivity.is_finite() && *sensitivity >= 0.0) {
                    push(format!("sensitivity must be >= 0, got {sensitivity}"));
                }
                if !(sigma.is_finite() && *sigma > 0.0) {
                    push("sigma must be > 0".to_string());
                }
            }
            MechanismSpec::Laplace { sensitivity, scale } => {
                if !(sensitivity.is_finite() && *sensitivity >= 0.0) {
                    push(format!("sensitivity must be >= 0, got {sensitivity}"));
                }
                if !(scale.is_finite() && *scale > 0.0) {
                    push("scale must be > 0".to_string());
                }
            }
            MechanismSpec::PureDp { eps } => {
                if !(eps.is_finite() && *eps >= 0.0) {
                    push(format!("eps must be finite and >= 0, got {eps}"));
                }
            }
            MechanismSpec::ApproxDp { eps, delta }
            | MechanismSpec::RandomizedResponse { eps, delta } => {
                if !(eps.is_finite() && *eps >= 0.0) {
                    push(format!("eps must be finite and >= 0, got {eps}"));
                }
                if !(delta.is_finite() && (0.0..=1.0).contains(delta)) {
                    push(format!("delta must be in [0,1], got {delta}"));
                }
            }
            MechanismSpec::Zcdp { rho } => {
                if !(rho.is_finite() && *rho >= 0.0) {
                    push(format!("rho must be finite and >= 0, got {rho}"));
                }
            }
            MechanismSpec::Rdp { orders, eps_at } => {
                if let Err(e) = RdpCurve::new(orders.clone(), eps_at.clone()) {
                    push(e.to_string());
                }
            }
            MechanismSpec::PoissonSubsampled { p, inner } => {
                if !(p.is_finite() && (0.0..=1.0).contains(p)) {
                    push("p must be in [0,1]".to_string());
                }
                let child = if path.is_empty() { "inner".to_string() } else { format!("{path}.inner") };
                inner.validate_into(&child, out);
            }
            MechanismSpec::Composed { parts } => {
                if parts.is_empty() {
                    push("composed mechanism must have at least one part".to_string());
                }
                for (i, part) in parts.iter().enumerate() {
                    let child = if path.is_empty() {
                        format!("parts[{i}]")
                    } else {
                        format!("{path}.parts[{i}]")
                    };
                    part.validate_into(&child, out);
                }
            }
        }
    }

    /// The (eps, delta) guarantee a spec carries on its face, with no
    /// conversion: pure/approximate/randomized-response parameters, or
    /// Laplace's eps = sensitivity/scale. Everything else needs an
    /// accountant and is rejected here.
    pub fn intrinsic_eps_delta(&self) -> Result<EpsDelta> {
        match self {
            MechanismSpec::PureDp { eps } => EpsDelta::new(*eps, 0.0),
            MechanismSpec::ApproxDp { eps, delta }
            | MechanismSpec::RandomizedResponse { eps, delta } => EpsDelta::new(*eps, *delta),
            MechanismSpec::Laplace { sensitivity, scale } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(Error::invalid("scale must be > 0"));
                }
                EpsDelta::new(sensitivity / scale, 0.0)
            }
            other => Err(Error::invalid(format!(
                "no face-value (eps, delta) for a {} mechanism; account via zcdp/rdp instead",
                other.kind_name()
            ))),
        }
    }

    /// The zCDP parameter implied by the spec: Gaussian sensitivity^2/(2 sigma^2),
    /// pure eps^2/2, explicit rho, and sums over compositions. Specs whose
    /// guarantee has a delta component or lives on an RDP grid are rejected.
    pub fn zcdp_bound(&self) -> Result<ZcdpBound> {
        match self {
            MechanismSpec::Gaussian { sensitivity, sigma } => {
                crate::gaussian::gaussian_zcdp(*sensitivity, *sigma)
            }
            MechanismSpec::PureDp { eps } => {
                crate::accountant::pure_to_zcdp(*eps)
            }
            MechanismSpec::Laplace { .. } => {
                crate::accountant::pure_to_zcdp(self.intrinsic_eps_delta()?.eps)
            }
            MechanismSpec::ApproxDp { eps, delta }
            | MechanismSpec::RandomizedResponse { eps, delta } => {
                if *delta == 0.0 {
                    crate::accountant::pure_to_zcdp(*eps)
                } else {
                    Err(Error::invalid("a guarantee with delta > 0 has no zCDP parameter"))
                }
            }
            MechanismSpec::Zcdp { rho } => ZcdpBound::new(*rho),
            MechanismSpec::Composed { parts } => {
                if parts.is_empty() {
                    return Err(Error::invalid("composed mechanism must have at least one part"));
                }
                let rhos = parts.iter().map(|p| p.zcdp_bound()).collect::<Result<Vec<_>>>()?;
                Ok(crate::accountant::compose_zcdp(&rhos))
            }
            MechanismSpec::Rdp { .. } => {
                Err(Error::invalid("an RDP grid does not determine a zCDP parameter"))
            }
            MechanismSpec::PoissonSubsampled { .. } => Err(Error::invalid(
                "subsampled mechanisms have no closed-form zCDP parameter; account via rdp",
            )),
        }
    }

    /// The Renyi-DP curve implied by the spec. zCDP-expressible parts become
    /// the line rho*alpha on the default order grid; subsampled parts use the
    /// exact amplification series on integer orders 2..=alpha_max (AddRemove
    /// neighbouring required); compositions sum pointwise over shared orders.
    pub fn rdp_curve(
        &self,
        neighbouring: crate::types::Neighbouring,
        alpha_max: u32,
    ) -> Result<RdpCurve> {
        match self {
            MechanismSpec::Rdp { orders, eps_at } => {
                RdpCurve::new(orders.clone(), eps_at.clone())
            }
            MechanismSpec::PoissonSubsampled { p, inner } => {
                if neighbouring != crate::types::Neighbouring::AddRemove {
                    return Err(Error::invalid(
                        "subsampling amplification requires the add_remove neighbouring relation",
                    ));
                }
                if !(p.is_finite() && (0.0..=1.0).contains(p)) {
                    return Err(Error::invalid("p must be in [0,1]"));
                }
                // Prefer the zCDP line for the inner curve; otherwise fall
                // back to its RDP grid (the series needs bounds at integer
                // orders 2..=alpha_max).
                match inner.zcdp_bound() {
                    Ok(rho) => crate::subsample::subsampled_rdp_exact(
                        |k| Some(rho.rho * k as f64),
                        *p,
                        alpha_max,
                    ),
                    Err(_) => {
                        let inner_curve = inner.rdp_curve(neighbouring, alpha_max)?;
                        crate::subsample::subsampled_rdp_exact(
                            |k| inner_curve.bound_at(k as f64),
                            *p,
                            alpha_max,
                        )
                    }
                }
            }
            MechanismSpec::Composed { parts } => {
                if parts.is_empty() {
                    return Err(Error::invalid("composed mechanism must have at least one part"));
                }
                let curves = parts
                    .iter()
                    .map(|part| part.rdp_curve(neighbouring, alpha_max))
                    .collect::<Result<Vec<_>>>()?;
                crate::accountant::rdp_compose(&curves)
            }
            other => {
                let rho = other.zcdp_bound()?;
                crate::accountant::zcdp_to_rdp(rho, &crate::accountant::default_alpha_grid())
            }
        }
    }

    /// The wire-format tag for this variant, for error messages.
    pub fn kind_name(&self) -> &'static str {
        match self {
            MechanismSpec::Gaussian { .. } => "gaussian",
            MechanismSpec::Laplace { .. } => "laplace",
            MechanismSpec::PureDp { .. } => "pure_dp",
            MechanismSpec::ApproxDp { .. } => "approx_dp",
            MechanismSpec::Zcdp { .. } => "zcdp",
            MechanismSpec::Rdp { .. } => "rdp",
            MechanismSpec::RandomizedResponse { .. } => "randomized_response",
            MechanismSpec::PoissonSubsampled { .. } => "poisson_subsampled",
            MechanismSpec::Composed { .. } => "composed",
        }
    }
}

#[derive(Serialize)]
struct DocumentOut<'a> {
    version: u64,
    mechanism: &'a MechanismSpec,
}

/// Serialize a spec as a versioned document `{"version": 1, "mechanism": ...}`.
pub fn to_json_document(spec: &MechanismSpec) -> String {
    serde_json::to_string(&DocumentOut { version: SCHEMA_VERSION, mechanism: spec })
        .expect("mechanism specs always serialize")
}

/// Parse a mechanism from JSON text. Accepts either the versioned document
/// form or a bare mechanism object. Probability-like fields ("delta", "p",
/// "inf_mass") with magnitude below 1e-300 are clamped to 0; each clamp is
/// reported as a warning rather than silently applied.
pub fn from_json(text: &str) -> Result<(MechanismSpec, Vec<String>)> {
    let mut value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let mut warnings = Vec::new();
    clamp_tiny_fields(&mut value, "", &mut warnings);

    let mech_value = match &value {
        serde_json::Value::Object(map) if map.contains_key("mechanism") => {
            match map.get("version").and_then(|v| v.as_u64()) {
                Some(v) if v == SCHEMA_VERSION => {}
                Some(v) => {
                    return Err(Error::Parse(format!(
                        "unsupported schema version {v}; this build reads version {SCHEMA_VERSION}"
                    )))
                }
                None => {
                    return Err(Error::Parse(
                        "document with a \"mechanism\" key must carry \"version\"".to_string(),
                    ))
                }
            }
            map.get("mechanism").cloned().expect("key presence checked above")
        }
        _ => value,
    };
    let spec: MechanismSpec =
        serde_json::from_value(mech_value).map_err(|e| Error::Parse(e.to_string()))?;
    Ok((spec, warnings))
}

fn clamp_tiny_fields(value: &mut serde_json::Value, path: &str, warnings: &mut Vec<String>) {
    match value {
        serde_json::Value::Object(map) => {
            for (key, child) in map.iter_mut() {
                let child_path =
                    if path.is_empty() { key.clone() } else { format!("{path}.{key}") };
                if matches!(key.as_str(), "delta" | "p" | "inf_mass") {
                    if let Some(x) = child.as_f64() {
                        let (clamped, flagged) = clamp_tiny(x);
                        if flagged {
                            warnings.push(format!(
                                "{child_path}: magnitude {x:e} is below 1e-300, clamped to 0"
                            ));
                            *child = serde_json::Value::from(clamped);
                        }
                    }
                }
                clamp_tiny_fields(child, &child_path, warnings);
            }
        }
        serde_json::Value::Array(items) => {
            for (i, child) in items.iter_mut().enumerate() {
                clamp_tiny_fields(child, &format!("{path}[{i}]"), warnings);
            }
        }
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_reports_violations_as_data() {
        assert!(MechanismSpec::Gaussian { sensitivity: 1.0, sigma: 2.0 }.validate().is_empty());
        let bad = MechanismSpec::Gaussian { sensitivity: 1.0, sigma: 0.0 };
        assert_eq!(bad.validate(), vec!["sigma must be > 0".to_string()]);
        let nested = MechanismSpec::PoissonSubsampled {
            p: 1.5,
            inner: Box::new(MechanismSpec::PureDp { eps: 0.1 }),
        };
        assert_eq!(nested.validate(), vec!["p must be in [0,1]".to_string()]);
    }

    #[test]
    fn validate_recurses_with_paths() {
        let spec = MechanismSpec::Composed {
            parts: vec![
                MechanismSpec::PureDp { eps: -1.0 },
                MechanismSpec::PoissonSubsampled {
                    p: 0.5,
                    inner: Box::new(MechanismSpec::Laplace { sensitivity: 1.0, scale: 0.0 }),
                },
            ],
        };
        let violations = spec.validate();
        assert_eq!(violations.len(), 2);
        assert!(violations[0].starts_with("parts[0]:"));
        assert!(violations[1].starts_with("parts[1].inner:"));
        // Rdp violations surface the curve constructor's message.
        let rdp = MechanismSpec::Rdp { orders: vec![2.0, 3.0], eps_at: vec![0.5, 0.1] };
        assert_eq!(rdp.validate().len(), 1);
    }

    #[test]
    fn wire_format_uses_exact_field_names() {
        let spec = MechanismSpec::Gaussian { sensitivity: 1.0, sigma: 2.0 };
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(s, r#"{"type":"gaussian","sensitivity":1.0,"sigma":2.0}"#);
        let spec = MechanismSpec::PoissonSubsampled {
            p: 0.01,
            inner: Box::new(MechanismSpec::Zcdp { rho: 0.5 }),
        };
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(s, r#"{"type":"poisson_subsampled","p":0.01,"inner":{"type":"zcdp","rho":0.5}}"#);
        let spec = MechanismSpec::Composed {
            parts: vec![MechanismSpec::PureDp { eps: 0.1 }, MechanismSpec::Laplace { sensitivity: 1.0, scale: 10.0 }],
        };
        let s = serde_json::to_string(&spec).unwrap();
        assert!(s.contains(r#""parts":[{"type":"pure_dp","eps":0.1}"#));
        let spec = MechanismSpec::Rdp { orders: vec![2.0], eps_at: vec![1.0] };
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(s, r#"{"type":"rdp","orders":[2.0],"eps_at":[1.0]}"#);
    }

    #[test]
    fn round_trip_all_variants() {
        let specs = vec![
            MechanismSpec::Gaussian { sensitivity: 1.0, sigma: 2.0 },
            MechanismSpec::Laplace { sensitivity: 1.0, scale: 10.0 },
            MechanismSpec::PureDp { eps: 0.1 },
            MechanismSpec::ApproxDp { eps: 1.0, delta: 1e-6 },
            MechanismSpec::Zcdp { rho: 0.5 },
            MechanismSpec::Rdp { orders: vec![2.0, 4.0], eps_at: vec![0.5, 1.0] },
            MechanismSpec::RandomizedResponse { eps: 0.1, delta: 0.0 },
            MechanismSpec::PoissonSubsampled {
                p: 0.01,
                inner: Box::new(MechanismSpec::Gaussian { sensitivity: 1.0, sigma: 1.0 }),
            },
            MechanismSpec::Composed {
                parts: vec![MechanismSpec::PureDp { eps: 0.1 }, MechanismSpec::Zcdp { rho: 0.1 }],
            },
        ];
        for spec in specs {
            let s = serde_json::to_string(&spec).unwrap();
            let back: MechanismSpec = serde_json::from_str(&s).unwrap();
            assert_eq!(back, spec, "round trip changed {s}");
            // The versioned document form round-trips too.
            let (again, warnings) = from_json(&to_json_document(&spec)).unwrap();
            assert_eq!(again, spec);
            assert!(warnings.is_empty());
        }
    }

    #[test]
    fn envelope_rules() {
        let bare = r#"{"type":"pure_dp","eps":0.1}"#;
        assert!(from_json(bare).is_ok());
        let versioned = r#"{"version":1,"mechanism":{"type":"pure_dp","eps":0.1}}"#;
        assert!(from_json(versioned).is_ok());
        let future = r#"{"version":2,"mechanism":{"type":"pure_dp","eps":0.1}}"#;
        let err = from_json(future).unwrap_err();
        assert_eq!(err.kind(), "parse-error");
        let unversioned = r#"{"mechanism":{"type":"pure_dp","eps":0.1}}"#;
        assert!(from_json(unversioned).is_err());
        assert!(from_json("not json").is_err());
    }

    #[test]
    fn tiny_values_clamp_with_warning() {
        let doc = r#"{"type":"approx_dp","eps":1.0,"delta":1e-310}"#;
        let (spec, warnings) = from_json(doc).unwrap();
        assert_eq!(spec, MechanismSpec::ApproxDp { eps: 1.0, delta: 0.0 });
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("delta"));
        // Values at or above the threshold pass through untouched.
        let doc = r#"{"type":"approx_dp","eps":1.0,"delta":1e-300}"#;
        let (spec, warnings) = from_json(doc).unwrap();
        assert_eq!(spec, MechanismSpec::ApproxDp { eps: 1.0, delta: 1e-300 });
        assert!(warnings.is_empty());
    }

    #[test]
    fn intrinsic_guarantees() {
        let g = MechanismSpec::PureDp { eps: 0.3 }.intrinsic_eps_delta().unwrap();
        assert_eq!((g.eps, g.delta), (0.3, 0.0));
        let g = MechanismSpec::Laplace { sensitivity: 2.0, scale: 4.0 }.intrinsic_eps_delta().unwrap();
        assert_eq!((g.eps, g.delta), (0.5, 0.0));
        assert!(MechanismSpec::Zcdp { rho: 0.5 }.intrinsic_eps_delta().is_err());
        assert!(MechanismSpec::Gaussian { sensitivity: 1.0, sigma: 1.0 }
            .intrinsic_eps_delta()
            .is_err());
    }
}
