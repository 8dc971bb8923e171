//! Guarantee records and discrete distribution types shared across modules.
//!
//! All values are plain immutable data; operations elsewhere take and return
//! these types without mutating shared state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::neumaier_sum;

// Centralized tolerances. These are structural invariants of the types, not
// per-test fudge factors; tests pin their own acceptance tolerances.

/// Mass/probability sums must close to 1 within this absolute tolerance.
pub const MASS_SUM_TOL: f64 = 1e-12;
/// E[exp(-Z)] over a PLD may exceed 1 by at most this much (float slack).
pub const EXP_MOMENT_TOL: f64 = 1e-9;
/// Positive magnitudes below this clamp to zero; parsers surface a flag.
pub const TINY_CLAMP: f64 = 1e-300;

/// Clamp a near-subnormal magnitude to zero. Returns the value and whether
/// clamping occurred; parse layers turn the flag into a warning.
pub fn clamp_tiny(x: f64) -> (f64, bool) {
    if x != 0.0 && x.abs() < TINY_CLAMP {
        (0.0, true)
    } else {
        (x, false)
    }
}

/// Neighbouring relation a guarantee is stated under.
///
/// Subsampling amplification is analysed under AddRemove; Replace reaches
/// subsampled guarantees only through the group-privacy reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Neighbouring {
    AddRemove,
    Replace,
}

// ── approximate DP ─────────────────────────────────────────────────────────

/// An approximate-DP guarantee (eps, delta): eps >= 0 finite, delta in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEpsDelta")]
pub struct EpsDelta {
    pub eps: f64,
    pub delta: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEpsDelta {
    eps: f64,
    delta: f64,
}

impl TryFrom<RawEpsDelta> for EpsDelta {
    type Error = Error;
    fn try_from(raw: RawEpsDelta) -> Result<Self> {
        EpsDelta::new(raw.eps, raw.delta)
    }
}

impl EpsDelta {
    pub fn new(eps: f64, delta: f64) -> Result<Self> {
        if !eps.is_finite() || eps < 0.0 {
            return Err(Error::invalid(format!("eps must be finite and >= 0, got {eps}")));
        }
        if !delta.is_finite() || !(0.0..=1.0).contains(&delta) {
            return Err(Error::invalid(format!("delta must be in [0, 1], got {delta}")));
        }
        let (delta, _) = clamp_tiny(delta);
        Ok(Self { eps, delta })
    }

    /// Partial order: a guarantee dominates another when it is at least as
    /// strong in both parameters.
    pub fn dominates(&self, other: &EpsDelta) -> bool {
        self.eps <= other.eps && self.delta <= other.delta
    }
}

// ── zCDP ───────────────────────────────────────────────────────────────────

/// A zero-concentrated DP guarantee with parameter rho >= 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawZcdp")]
pub struct ZcdpBound {
    pub rho: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawZcdp {
    rho: f64,
}

impl TryFrom<RawZcdp> for ZcdpBound {
    type Error = Error;
    fn try_from(raw: RawZcdp) -> Result<Self> {
        ZcdpBound::new(raw.rho)
    }
}

impl ZcdpBound {
    pub fn new(rho: f64) -> Result<Self> {
        if !rho.is_finite() || rho < 0.0 {
            return Err(Error::invalid(format!("rho must be finite and >= 0, got {rho}")));
        }
        Ok(Self { rho })
    }
}

// ── RDP curves ─────────────────────────────────────────────────────────────

/// A Renyi-DP guarantee sampled on a grid of orders.
///
/// Invariants enforced on construction: orders strictly increasing and > 1;
/// one bound per order; bounds nonnegative (+inf allowed) and nondecreasing
/// in the order up to a 1e-12 relative float slack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRdpCurve")]
pub struct RdpCurve {
    orders: Vec<f64>,
    eps_at: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRdpCurve {
    orders: Vec<f64>,
    eps_at: Vec<f64>,
}

impl TryFrom<RawRdpCurve> for RdpCurve {
    type Error = Error;
    fn try_from(raw: RawRdpCurve) -> Result<Self> {
        RdpCurve::new(raw.orders, raw.eps_at)
    }
}

impl RdpCurve {
    pub fn new(orders: Vec<f64>, eps_at: Vec<f64>) -> Result<Self> {
        if orders.is_empty() {
            return Err(Error::invalid("curve must contain at least one order"));
        }
        if orders.len() != eps_at.len() {
            return Err(Error::invalid(format!(
                "orders and eps_at lengths differ: {} vs {}",
                orders.len(),
                eps_at.len()
            )));
        }
        for &a in &orders {
            if !a.is_finite() || a <= 1.0 {
                return Err(Error::invalid(format!("orders must be finite and > 1, got {a}")));
            }
        }
        for w in orders.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::invalid(format!(
                    "orders must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        for &e in &eps_at {
            if e.is_nan() || e < 0.0 {
                return Err(Error::invalid(format!("eps_at entries must be >= 0, got {e}")));
            }
        }
        for w in eps_at.windows(2) {
            // Allow float dust; a genuine decrease means the curve is not a
            // valid Renyi profile.
            let slack = 1e-12 * w[0].abs().max(1.0);
            if w[1] < w[0] - slack {
                return Err(Error::invalid(format!(
                    "eps_at must be nondecreasing in the order, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { orders, eps_at })
    }

    pub fn orders(&self) -> &[f64] {
        &self.orders
    }

    pub fn eps_values(&self) -> &[f64] {
        &self.eps_at
    }

    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    pub fn max_order(&self) -> f64 {
        *self.orders.last().expect("curve is non-empty")
    }

    /// Valid bound at an arbitrary order: the entry at the smallest grid order
    /// >= alpha (monotonicity in the order makes this sound). None when alpha
    /// exceeds the grid.
    pub fn bound_at(&self, alpha: f64) -> Option<f64> {
        if alpha <= 1.0 || alpha.is_nan() {
            return None;
        }
        match self.orders.binary_search_by(|o| o.partial_cmp(&alpha).expect("orders are not NaN")) {
            Ok(i) => Some(self.eps_at[i]),
            Err(i) if i < self.orders.len() => Some(self.eps_at[i]),
            Err(_) => None,
        }
    }
}

// ── discrete distributions ─────────────────────────────────────────────────

/// A probability distribution over indexed outcomes 0..n.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDist {
    probs: Vec<f64>,
}

impl DiscreteDist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("distribution must have at least one outcome"));
        }
        for &p in &probs {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::invalid(format!("probabilities must be finite and >= 0, got {p}")));
            }
        }
        let total = neumaier_sum(probs.iter().copied());
        if (total - 1.0).abs() > MASS_SUM_TOL {
            return Err(Error::invalid(format!("probabilities must sum to 1, got {total}")));
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

// ── privacy loss distributions ─────────────────────────────────────────────

/// A discrete privacy loss distribution: finite atoms (z, p) sorted by z plus
/// an explicit mass at z = +inf.
///
/// Carrying the infinite-loss mass as a separate field is a convention of this
/// engine: it is the P-mass on outcomes where the reference distribution has
/// none, and it feeds straight into every delta(eps) functional.
///
/// Invariants: atom losses finite, masses positive, atoms strictly sorted and
/// deduplicated in z, total mass 1 within [`MASS_SUM_TOL`], and the identity
/// E[exp(-Z)] <= 1 holds within [`EXP_MOMENT_TOL`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPld")]
pub struct DiscretePld {
    atoms: Vec<(f64, f64)>,
    inf_mass: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPld {
    atoms: Vec<(f64, f64)>,
    inf_mass: f64,
}

impl TryFrom<RawPld> for DiscretePld {
    type Error = Error;
    fn try_from(raw: RawPld) -> Result<Self> {
        DiscretePld::new(raw.atoms, raw.inf_mass)
    }
}

impl DiscretePld {
    /// Build a PLD from unsorted atoms. Atoms with equal z are merged, zero
    /// masses dropped.
    pub fn new(mut atoms: Vec<(f64, f64)>, inf_mass: f64) -> Result<Self> {
        if !inf_mass.is_finite() || inf_mass < 0.0 {
            return Err(Error::invalid(format!("inf_mass must be finite and >= 0, got {inf_mass}")));
        }
        for &(z, p) in &atoms {
            if z.is_nan() || z.is_infinite() {
                return Err(Error::invalid("atom losses must be finite (use inf_mass for +inf)"));
            }
            if !p.is_finite() || p < 0.0 {
                return Err(Error::invalid(format!("atom masses must be finite and >= 0, got {p}")));
            }
        }
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("losses are not NaN"));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (z, p) in atoms {
            if p == 0.0 {
                continue;
            }
            match merged.last_mut() {
                Some(last) if last.0 == z => last.1 += p,
                _ => merged.push((z, p)),
            }
        }
        let pld = Self { atoms: merged, inf_mass };
        pld.check_invariants()?;
        Ok(pld)
    }

    /// Construction for internal call sites that already guarantee sortedness
    /// and mass closure; invariants stay debug-checked.
    pub(crate) fn from_parts_unchecked(atoms: Vec<(f64, f64)>, inf_mass: f64) -> Self {
        let pld = Self { atoms, inf_mass };
        debug_assert!(pld.check_invariants().is_ok(), "{:?}", pld.check_invariants());
        pld
    }

    fn check_invariants(&self) -> Result<()> {
        let total = neumaier_sum(self.atoms.iter().map(|&(_, p)| p)) + self.inf_mass;
        if (total - 1.0).abs() > MASS_SUM_TOL {
            return Err(Error::invalid(format!("atom masses plus inf_mass must sum to 1, got {total}")));
        }
        for w in self.atoms.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::invalid("atoms must be strictly sorted in z"));
            }
        }
        let exp_moment = neumaier_sum(self.atoms.iter().map(|&(z, p)| p * (-z).exp()));
        if !(exp_moment <= 1.0 + EXP_MOMENT_TOL) {
            return Err(Error::invalid(format!(
                "E[exp(-Z)] must be <= 1 for a privacy loss distribution, got {exp_moment}"
            )));
        }
        Ok(())
    }

    /// The PLD of identical distributions: a single atom at loss 0.
    pub fn point_mass_zero() -> Self {
        Self { atoms: vec![(0.0, 1.0)], inf_mass: 0.0 }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn inf_mass(&self) -> f64 {
        self.inf_mass
    }

    /// Total finite mass (1 - inf_mass up to rounding).
    pub fn finite_mass(&self) -> f64 {
        neumaier_sum(self.atoms.iter().map(|&(_, p)| p))
    }

    /// E[exp(-Z)] over the finite atoms; equals the mass the reference
    /// distribution puts on the support overlap, so it is 1 exactly when the
    /// pair is mutually absolutely continuous.
    pub fn exp_neg_moment(&self) -> f64 {
        neumaier_sum(self.atoms.iter().map(|&(z, p)| p * (-z).exp()))
    }

    pub fn max_finite_loss(&self) -> Option<f64> {
        self.atoms.last().map(|&(z, _)| z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eps_delta_validates_and_orders() {
        assert!(EpsDelta::new(-0.1, 0.0).is_err());
        assert!(EpsDelta::new(0.1, 1.5).is_err());
        assert!(EpsDelta::new(f64::NAN, 0.0).is_err());
        let strong = EpsDelta::new(0.5, 1e-9).unwrap();
        let weak = EpsDelta::new(1.0, 1e-6).unwrap();
        assert!(strong.dominates(&weak));
        assert!(!weak.dominates(&strong));
        // Incomparable pair: neither dominates.
        let a = EpsDelta::new(0.5, 1e-3).unwrap();
        let b = EpsDelta::new(1.0, 1e-9).unwrap();
        assert!(!a.dominates(&b) && !b.dominates(&a));
    }

    #[test]
    fn eps_delta_clamps_subnormal_delta() {
        let g = EpsDelta::new(1.0, 1e-310).unwrap();
        assert_eq!(g.delta, 0.0);
        let (v, flagged) = clamp_tiny(1e-310);
        assert_eq!(v, 0.0);
        assert!(flagged);
        assert!(!clamp_tiny(1e-299).1);
        assert!(!clamp_tiny(0.0).1);
    }

    #[test]
    fn eps_delta_json_round_trip() {
        let g = EpsDelta::new(1.25, 1e-6).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"eps":1.25,"delta":1e-6}"#);
        let back: EpsDelta = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        assert!(serde_json::from_str::<EpsDelta>(r#"{"eps":-1.0,"delta":0.0}"#).is_err());
    }

    #[test]
    fn rdp_curve_rejects_bad_grids() {
        assert!(RdpCurve::new(vec![], vec![]).is_err());
        assert!(RdpCurve::new(vec![1.0, 2.0], vec![0.1, 0.2]).is_err());
        assert!(RdpCurve::new(vec![2.0, 2.0], vec![0.1, 0.2]).is_err());
        assert!(RdpCurve::new(vec![3.0, 2.0], vec![0.1, 0.2]).is_err());
        assert!(RdpCurve::new(vec![2.0], vec![0.1, 0.2]).is_err());
        assert!(RdpCurve::new(vec![2.0, 3.0], vec![0.2, 0.1]).is_err());
        assert!(RdpCurve::new(vec![2.0, 3.0], vec![-0.1, 0.1]).is_err());
        // +inf entries are allowed, and float dust below 1e-12 is tolerated.
        assert!(RdpCurve::new(vec![2.0, 3.0], vec![0.1, f64::INFINITY]).is_ok());
        assert!(RdpCurve::new(vec![2.0, 3.0], vec![0.1, 0.1 - 1e-16]).is_ok());
    }

    #[test]
    fn rdp_curve_ceiling_lookup() {
        let c = RdpCurve::new(vec![2.0, 4.0, 8.0], vec![0.2, 0.4, 0.8]).unwrap();
        assert_eq!(c.bound_at(4.0), Some(0.4));
        assert_eq!(c.bound_at(3.0), Some(0.4));
        assert_eq!(c.bound_at(1.5), Some(0.2));
        assert_eq!(c.bound_at(8.0), Some(0.8));
        assert_eq!(c.bound_at(8.5), None);
        assert_eq!(c.bound_at(1.0), None);
    }

    #[test]
    fn discrete_dist_checks_mass() {
        assert!(DiscreteDist::new(vec![0.5, 0.5]).is_ok());
        assert!(DiscreteDist::new(vec![0.5, 0.4]).is_err());
        assert!(DiscreteDist::new(vec![1.5, -0.5]).is_err());
        assert!(DiscreteDist::new(vec![]).is_err());
    }

    #[test]
    fn pld_merges_and_validates() {
        // Two atoms at the same z merge; zero masses are dropped. Losses and
        // masses follow the two-outcome mechanism so E[exp(-Z)] stays at one.
        let z = 2.0f64.ln();
        let pld = DiscretePld::new(
            vec![(z, 1.0 / 3.0), (z, 1.0 / 3.0), (-z, 1.0 / 3.0), (9.0, 0.0)],
            0.0,
        )
        .unwrap();
        assert_eq!(pld.atoms().len(), 2);
        assert_eq!(pld.atoms()[1], (z, 2.0 / 3.0));
        // Mass closure is enforced.
        assert!(DiscretePld::new(vec![(0.0, 0.9)], 0.0).is_err());
        assert!(DiscretePld::new(vec![(0.0, 0.9)], 0.1).is_ok());
        // E[exp(-Z)] > 1 rejects: all mass at a negative loss.
        assert!(DiscretePld::new(vec![(-1.0, 1.0)], 0.0).is_err());
        // Non-finite losses are structural errors.
        assert!(DiscretePld::new(vec![(f64::INFINITY, 1.0)], 0.0).is_err());
    }

    #[test]
    fn pld_point_mass_identity() {
        let pld = DiscretePld::point_mass_zero();
        assert_eq!(pld.atoms(), &[(0.0, 1.0)]);
        assert!((pld.exp_neg_moment() - 1.0).abs() < 1e-15);
        assert_eq!(pld.inf_mass(), 0.0);
    }

    #[test]
    fn pld_json_shape_and_round_trip() {
        let pld = DiscretePld::new(vec![(2.0_f64.ln(), 2.0 / 3.0), (-(2.0_f64.ln()), 1.0 / 3.0)], 0.0).unwrap();
        let s = serde_json::to_string(&pld).unwrap();
        assert!(s.starts_with(r#"{"atoms":[["#));
        assert!(s.contains(r#""inf_mass":0.0"#) || s.contains(r#""inf_mass":0"#));
        let back: DiscretePld = serde_json::from_str(&s).unwrap();
        assert_eq!(back, pld);
        // Invalid documents are rejected at parse time.
        assert!(serde_json::from_str::<DiscretePld>(r#"{"atoms":[[0.0,0.5]],"inf_mass":0.0}"#).is_err());
    }
}
