//! Randomized equivalence suite: exhaustive brute-force checks of the
//! divergence identities on small discrete pairs, plus the scalar inequality
//! grids the amplification bounds rest on. Shared by the test suite and the
//! CLI, which exits nonzero when any check fails.

use rand::RngCore;
use serde::Serialize;

use crate::error::Result;
use crate::mc::{stream_rng, uniform_open};
use crate::pld::{
    change_of_measure_check, delta_from_pld, delta_two_sided, hockey_stick_brute,
    hockey_stick_divergence, pld_from_pair, renyi_divergence,
};
use crate::subsample::{flip_bound, subsampled_rdp_exact};
use crate::types::DiscreteDist;

const EPS_GRID: [f64; 3] = [0.0, 0.25, 1.0];
const ALPHA_GRID: [f64; 3] = [2.0, 3.0, 4.0];
const MAX_STORED_FAILURES: usize = 24;

/// Outcome of one suite run. `checks` counts every assertion evaluated;
/// `failed` counts the ones that did not hold; `failures` stores the first
/// few messages verbatim.
#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub pairs: u32,
    pub checks: u64,
    pub failed: u64,
    pub failures: Vec<String>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.failed == 0
    }
}

struct Suite {
    checks: u64,
    failed: u64,
    failures: Vec<String>,
}

impl Suite {
    fn claim(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failed += 1;
            if self.failures.len() < MAX_STORED_FAILURES {
                self.failures.push(msg());
            }
        }
    }
}

fn random_dist(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> DiscreteDist {
    // Exponential weights normalized: every outcome strictly positive, so
    // all divergences stay finite and absolutely continuous both ways.
    let w: Vec<f64> = (0..n).map(|_| -uniform_open(rng).ln()).collect();
    let total: f64 = w.iter().sum();
    DiscreteDist::new(w.into_iter().map(|x| x / total).collect())
        .expect("normalized positive weights")
}

fn mix_dist(a: &DiscreteDist, b: &DiscreteDist, w: f64) -> DiscreteDist {
    let probs = a
        .probs()
        .iter()
        .zip(b.probs())
        .map(|(&x, &y)| w * x + (1.0 - w) * y)
        .collect();
    DiscreteDist::new(probs).expect("convex combination")
}

fn merge_outcomes(d: &DiscreteDist, keep: usize, fold: usize) -> DiscreteDist {
    let mut probs = d.probs().to_vec();
    probs[keep] += probs[fold];
    probs.remove(fold);
    DiscreteDist::new(probs).expect("merged distribution")
}

/// The four routes to the hockey-stick divergence must coincide: threshold
/// set, loss-distribution integrand, two-sided tail form, and the 2^n-subset
/// supremum.
fn check_hockey_forms(
    suite: &mut Suite,
    tag: u64,
    p: &DiscreteDist,
    q: &DiscreteDist,
) -> Result<()> {
    let pld_pq = pld_from_pair(p, q)?;
    let pld_qp = pld_from_pair(q, p)?;
    for eps in EPS_GRID {
        let threshold = hockey_stick_divergence(p, q, eps)?;
        let integrand = delta_from_pld(&pld_pq, eps);
        let tails = delta_two_sided(&pld_pq, &pld_qp, eps);
        let brute = hockey_stick_brute(p, q, eps)?;
        for (name, value) in [("integrand", integrand), ("tails", tails), ("subsets", brute)] {
            suite.claim((value - threshold).abs() <= 1e-10, || {
                format!("pair {tag}: hockey {name} form {value} vs threshold {threshold} at eps {eps}")
            });
        }
    }
    Ok(())
}

fn run_pair(suite: &mut Suite, tag: u64, rng: &mut rand_chacha::ChaCha8Rng) -> Result<()> {
    let n = 2 + (rng.next_u64() % 11) as usize;
    let p = random_dist(rng, n);
    let q = random_dist(rng, n);

    check_hockey_forms(suite, tag, &p, &q)?;

    let d: Vec<f64> = ALPHA_GRID
        .iter()
        .map(|&a| renyi_divergence(&p, &q, a))
        .collect::<Result<_>>()?;
    suite.claim(d[0] <= d[1] + 1e-12 && d[1] <= d[2] + 1e-12, || {
        format!("pair {tag}: divergence not monotone in alpha: {d:?}")
    });

    // Mixture identity: the amplification series with the true integer-order
    // divergences plugged in reproduces D_alpha(wP+(1-w)Q || Q) exactly.
    let w = uniform_open(rng);
    let mix = mix_dist(&p, &q, w);
    let known = d.clone();
    let series = subsampled_rdp_exact(
        move |k| known.get(k as usize - 2).copied(),
        w,
        4,
    )?;
    for (i, &alpha) in ALPHA_GRID.iter().enumerate() {
        let direct = renyi_divergence(&mix, &q, alpha)?;
        let summed = series.eps_values()[i];
        suite.claim((direct - summed).abs() <= 1e-10, || {
            format!("pair {tag}: mixture identity {summed} vs direct {direct} at alpha {alpha}")
        });
        suite.claim(
            summed >= d[i] - (alpha / (alpha - 1.0)) * (1.0 / w).ln() - 1e-10,
            || format!("pair {tag}: series lower bound broken at alpha {alpha}"),
        );
        // Reverse direction through the lambda-mixture bound.
        let flipped_mix = mix_dist(&q, &p, w);
        let d_mix_p = renyi_divergence(&flipped_mix, &p, alpha)?;
        let reverse = renyi_divergence(&q, &mix, alpha)?;
        let bound = flip_bound(direct, d_mix_p, w, alpha);
        suite.claim(reverse <= bound + 1e-10, || {
            format!("pair {tag}: reverse divergence {reverse} above flip bound {bound} at alpha {alpha}")
        });
    }

    // Triangle-like chaining at (alpha, mid, alpha') = (2, 3, 4) through a
    // third distribution.
    let r = random_dist(rng, n);
    let lhs = renyi_divergence(&p, &r, 2.0)?;
    let rhs = (4.0 / 3.0) * renyi_divergence(&p, &q, 3.0)? + renyi_divergence(&q, &r, 4.0)?;
    suite.claim(lhs <= rhs + 1e-10, || {
        format!("pair {tag}: triangle chain broken: {lhs} > {rhs}")
    });

    // Postprocessing: merging two outcomes never increases a divergence.
    if n >= 3 {
        let fold = 1 + (rng.next_u64() % (n as u64 - 1)) as usize;
        let keep = (rng.next_u64() % fold as u64) as usize;
        let p_merged = merge_outcomes(&p, keep, fold);
        let q_merged = merge_outcomes(&q, keep, fold);
        for eps in EPS_GRID {
            let before = hockey_stick_divergence(&p, &q, eps)?;
            let after = hockey_stick_divergence(&p_merged, &q_merged, eps)?;
            suite.claim(after <= before + 1e-12, || {
                format!("pair {tag}: hockey grew under merging at eps {eps}: {after} > {before}")
            });
        }
        for (i, &alpha) in ALPHA_GRID.iter().enumerate() {
            let after = renyi_divergence(&p_merged, &q_merged, alpha)?;
            suite.claim(after <= d[i] + 1e-12, || {
                format!("pair {tag}: divergence grew under merging at alpha {alpha}")
            });
        }
    }

    // Joint convexity of hockey-stick and quasi-convexity of the Renyi
    // family under a second independent pair.
    let p2 = random_dist(rng, n);
    let q2 = random_dist(rng, n);
    let lam = uniform_open(rng);
    let pm = mix_dist(&p, &p2, lam);
    let qm = mix_dist(&q, &q2, lam);
    for eps in EPS_GRID {
        let mixed = hockey_stick_divergence(&pm, &qm, eps)?;
        let split = lam * hockey_stick_divergence(&p, &q, eps)?
            + (1.0 - lam) * hockey_stick_divergence(&p2, &q2, eps)?;
        suite.claim(mixed <= split + 1e-12, || {
            format!("pair {tag}: hockey convexity broken at eps {eps}: {mixed} > {split}")
        });
    }
    for (i, &alpha) in ALPHA_GRID.iter().enumerate() {
        let mixed = renyi_divergence(&pm, &qm, alpha)?;
        let cap = d[i].max(renyi_divergence(&p2, &q2, alpha)?);
        suite.claim(mixed <= cap + 1e-10, || {
            format!("pair {tag}: quasi-convexity broken at alpha {alpha}: {mixed} > {cap}")
        });
    }

    // Change of measure between the pair and its loss distribution.
    let (lhs, rhs) = change_of_measure_check(&p, &q, |z| 1.0 / (1.0 + (-z).exp()))?;
    suite.claim((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0), || {
        format!("pair {tag}: change of measure {lhs} vs {rhs}")
    });
    Ok(())
}

/// Scalar inequality grids: (1-p+px)(1-p+p/x) >= 1, and the cubic-weight
/// variant 3(1-p)(1-p+px)^v + vp((1-p)/x + p)^3 >= 3(1-p) + vp for v >= 1.
fn check_scalar_grids(suite: &mut Suite) {
    let xs: Vec<f64> = (-30..=30).map(|i| 10f64.powf(i as f64 / 10.0)).collect();
    let ps: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    for &p in &ps {
        for &x in &xs {
            let product = (1.0 - p + p * x) * (1.0 - p + p / x);
            suite.claim(product >= 1.0 - 1e-12, || {
                format!("product grid broken at p={p}, x={x}: {product}")
            });
        }
    }
    for v in [1.0, 1.5, 2.0, 3.0, 4.0, 8.0, 16.0, 64.0] {
        for &p in &ps {
            for &x in &xs {
                let cube = (1.0 - p) / x + p;
                let lhs = 3.0 * (1.0 - p) * (1.0 - p + p * x).powf(v) + v * p * cube * cube * cube;
                let rhs = 3.0 * (1.0 - p) + v * p;
                suite.claim(lhs >= rhs - 1e-9, || {
                    format!("cubic-weight grid broken at v={v}, p={p}, x={x}: {lhs} < {rhs}")
                });
            }
        }
    }
}

/// Runs the full randomized suite over `pairs` random discrete pairs with at
/// most 12 outcomes each, plus the fixed scalar grids. Deterministic per
/// seed. Errors only on internal misuse; property violations are reported in
/// the result, not thrown.
pub fn run_selftest(pairs: u32, seed: u64) -> Result<SelftestReport> {
    let mut suite = Suite { checks: 0, failed: 0, failures: Vec::new() };
    for tag in 0..pairs as u64 {
        let mut rng = stream_rng(seed, tag);
        run_pair(&mut suite, tag, &mut rng)?;
    }
    check_scalar_grids(&mut suite);
    Ok(SelftestReport {
        pairs,
        checks: suite.checks,
        failed: suite.failed,
        failures: suite.failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_on_a_small_run() {
        let report = run_selftest(200, 1).unwrap();
        assert!(report.passed(), "failures: {:#?}", report.failures);
        assert_eq!(report.pairs, 200);
        assert!(report.checks > 5000, "only {} checks ran", report.checks);
    }

    #[test]
    fn suite_is_deterministic() {
        let a = run_selftest(50, 9).unwrap();
        let b = run_selftest(50, 9).unwrap();
        assert_eq!(a.checks, b.checks);
        assert_eq!(a.failed, b.failed);
    }
}
