//! Shared numeric primitives: compensated summation, log-space accumulation,
//! normal CDF/quantile wrappers, and 1-d search routines.
//!
//! Everything here is deterministic and branch-stable so that repeated runs
//! produce byte-identical output downstream.

use statrs::function::erf;

// ── compensated summation ──────────────────────────────────────────────────

/// Kahan-Babuska-Neumaier accumulator. The correction term also captures the
/// case where the addend is larger in magnitude than the running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    /// Accumulator seeded with a first term.
    pub fn starting_at(x: f64) -> Self {
        let mut acc = Self::default();
        acc.add(x);
        acc
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of a sequence.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = Neumaier::new();
    for x in xs {
        acc.add(x);
    }
    acc.total()
}

/// Compensated sum taken in ascending order of magnitude, for series whose
/// terms span many scales.
pub fn sorted_sum(terms: &mut Vec<f64>) -> f64 {
    terms.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).expect("no NaN terms"));
    neumaier_sum(terms.iter().copied())
}

// ── log-space accumulation ─────────────────────────────────────────────────

/// log(sum exp(t)) over a slice; tolerates -inf entries, returns -inf when all
/// terms are -inf or the slice is empty.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if m == f64::INFINITY {
        return f64::INFINITY;
    }
    let mut acc = Neumaier::new();
    for &t in terms {
        acc.add((t - m).exp());
    }
    m + acc.total().ln()
}

/// log(exp(a) + exp(b)).
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if lo == f64::NEG_INFINITY || hi - lo > 745.0 {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

// ── normal distribution helpers ────────────────────────────────────────────

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal CDF. erfc comes from libm, accurate to a couple of ulp;
/// the polynomial erfc elsewhere in the dependency tree only reaches ~1e-11
/// relative, short of what the tight delta computations need.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Standard normal survival function, 1 - CDF(x).
#[inline]
pub fn norm_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// log of the standard normal survival function.
///
/// For x <= 8 this is ln(erfc(x/sqrt 2)/2) directly. Beyond that erfc loses
/// headroom long before f64 underflows, so the Mills ratio is evaluated with
/// the Laplace continued fraction sf(x) = pdf(x) / (x + 1/(x + 2/(x + ...))),
/// which keeps relative accuracy ~1e-15 arbitrarily far into the tail.
pub fn ln_norm_sf(x: f64) -> f64 {
    if x <= 8.0 {
        return norm_sf(x).ln();
    }
    // Evaluate the continued fraction bottom-up with fixed depth; depth 64 is
    // far more than needed for x >= 8.
    let mut cf = 0.0_f64;
    for k in (1..=64u32).rev() {
        cf = f64::from(k) / (x + cf);
    }
    let ln_pdf = -0.5 * x * x - LN_SQRT_2PI;
    ln_pdf - (x + cf).ln()
}

/// Standard normal quantile (inverse CDF).
#[inline]
pub fn norm_quantile(q: f64) -> f64 {
    debug_assert!(q > 0.0 && q < 1.0);
    -SQRT_2 * erf::erfc_inv(2.0 * q)
}

/// ln of the binomial coefficient C(n, k).
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    statrs::function::gamma::ln_gamma(n as f64 + 1.0)
        - statrs::function::gamma::ln_gamma(k as f64 + 1.0)
        - statrs::function::gamma::ln_gamma((n - k) as f64 + 1.0)
}

// ── 1-d search ─────────────────────────────────────────────────────────────

/// Golden-section minimization of a unimodal function on [a, b].
/// Returns (argmin, min). `tol` is an absolute tolerance on the argument.
pub fn golden_min(a: f64, b: f64, tol: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    debug_assert!(a < b);
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    // Each iteration shrinks the bracket by 1/phi; cap iterations for safety.
    for _ in 0..400 {
        if hi - lo <= tol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let xm = 0.5 * (lo + hi);
    let fm = f(xm);
    if f1.min(f2) < fm {
        if f1 <= f2 {
            (x1, f1)
        } else {
            (x2, f2)
        }
    } else {
        (xm, fm)
    }
}

/// Smallest x in [lo, hi] where the monotone predicate flips to true.
/// Requires pred(hi) == true; if pred(lo) is already true, returns lo.
pub fn bisect_smallest(lo: f64, hi: f64, rel_tol: f64, pred: impl Fn(f64) -> bool) -> f64 {
    debug_assert!(lo <= hi);
    if pred(lo) {
        return lo;
    }
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..200 {
        if (hi - lo) <= rel_tol * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
