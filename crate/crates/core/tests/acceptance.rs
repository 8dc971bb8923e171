//! End-to-end acceptance gate. Each criterion prints exactly one PASS/FAIL
//! line (with its wall time) and the process exits nonzero if any fail.
//! Criteria carry their own time budgets; exceeding a budget is a failure.

use std::time::{Duration, Instant};

use dpa_core::attack::{error_scaling_slope, fingerprinting_identity_check, run_attack, AttackConfig};
use dpa_core::curves::{amplification_curves, composition_curves};
use dpa_core::gaussian::{calibrate_sigma, gaussian_delta, CalibrationMode};
use dpa_core::mc::{mc_hockey_stick, mc_renyi, SamplerSpec};
use dpa_core::numeric::bisect_smallest;
use dpa_core::pld::{convolve, delta_from_pld, discretize, gaussian_pld, rr_pld, self_convolve};
use dpa_core::selftest::run_selftest;
use dpa_core::subsample::{dpsgd_account, subsampled_rdp_exact};
use dpa_core::{EpsDelta, MechanismSpec};

const SEED: u64 = 7;

struct Outcome {
    failures: Vec<String>,
    info: String,
}

impl Outcome {
    fn new() -> Self {
        Outcome { failures: Vec::new(), info: String::new() }
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(msg());
        }
    }
}

fn composition_bounds_vs_query_count() -> Result<Outcome, String> {
    let mut out = Outcome::new();
    let (eps0, delta) = (0.1f64, 1e-6f64);
    let c = composition_curves(eps0, delta, 500).map_err(|e| e.to_string())?;
    let ln_inv_delta = (1.0 / delta).ln();
    for (i, &k) in c.k.iter().enumerate() {
        let kf = k as f64;
        out.check(c.basic[i] == 0.1 * kf, || {
            format!("basic({k}) = {} differs from 0.1 k", c.basic[i])
        });
        let formula = 0.005 * kf + (0.02 * kf * ln_inv_delta).sqrt();
        out.check((c.advanced[i] - formula).abs() <= 1e-12, || {
            format!("advanced({k}) = {} vs formula {formula}", c.advanced[i])
        });
        out.check(c.cdp[i] <= c.advanced[i] + 1e-12, || {
            format!("cdp({k}) = {} above advanced {}", c.cdp[i], c.advanced[i])
        });
        out.check(c.optimal[i] <= c.basic[i] + 1e-12, || {
            format!("optimal({k}) = {} above basic {}", c.optimal[i], c.basic[i])
        });
        if k <= 30 {
            out.check(c.optimal[i] < c.advanced[i], || {
                format!("optimal({k}) = {} not below advanced {}", c.optimal[i], c.advanced[i])
            });
        }
    }
    // Independent route for small k: invert delta(eps) of the k-fold
    // convolved two-point loss distribution.
    let base = rr_pld(eps0).map_err(|e| e.to_string())?;
    let mut acc = self_convolve(&base, 0);
    for k in 1..=20u32 {
        acc = convolve(&acc, &base);
        let pld = acc.clone();
        let via_pld =
            bisect_smallest(0.0, eps0 * k as f64, 1e-11, |e| delta_from_pld(&pld, e) <= delta);
        let formula = c.optimal[(k - 1) as usize];
        out.check((formula - via_pld).abs() <= 1e-9, || {
            format!("optimal({k}) = {formula} vs convolution inversion {via_pld}")
        });
    }
    out.info = format!("k = 1..=500 at eps0 {eps0}, delta target {delta:e}");
    Ok(out)
}

fn subsampled_divergence_bounds_vs_order() -> Result<Outcome, String> {
    let mut out = Outcome::new();
    let (p, rho) = (0.05f64, 0.5f64);
    let c = amplification_curves(p, rho, 64).map_err(|e| e.to_string())?;
    let order_two = f64::ln_1p(p * p * f64::exp_m1(2.0 * rho));
    out.check((c.exact[0] - order_two).abs() <= 1e-12, || {
        format!("exact(2) = {} vs closed form {order_two}", c.exact[0])
    });
    for (i, &alpha) in c.alpha.iter().enumerate() {
        let a = alpha as f64;
        out.check(c.analytic[i].is_finite(), || {
            format!("analytic bound undefined at alpha {alpha} despite valid preconditions")
        });
        out.check(c.exact[i] <= c.analytic[i] + 1e-12, || {
            format!("exact({alpha}) = {} above analytic {}", c.exact[i], c.analytic[i])
        });
        let floor = a * rho - a / (a - 1.0) * (1.0 / p).ln();
        out.check(c.exact[i] >= floor - 1e-12, || {
            format!("exact({alpha}) = {} below lower-bound line {floor}", c.exact[i])
        });
        out.check(c.unamplified[i] == 0.5 * a, || {
            format!("unamplified({alpha}) = {} differs from 0.5 alpha", c.unamplified[i])
        });
    }
    out.info = format!("alpha = 2..=64 at p {p}, rho {rho}");
    Ok(out)
}

fn gaussian_closed_form_vs_discretized_engine() -> Result<Outcome, String> {
    let mut out = Outcome::new();
    let (step, tail) = (1e-4, 1e-12);
    let rhos = [0.1f64, 0.5f64];
    let mut discretized = Vec::new();
    for &r in &rhos {
        let g = gaussian_pld(1.0, (2.0 * r).sqrt().recip()).map_err(|e| e.to_string())?;
        let d = discretize(&g, step, tail).map_err(|e| e.to_string())?;
        discretized.push((g.rho(), d));
    }
    // delta(eps) of the convolution is symmetric in the pair; compute each
    // unordered combination once and check every ordered one against it.
    let mut max_gap = 0.0f64;
    for i in 0..rhos.len() {
        for j in i..rhos.len() {
            let (r1, d1) = &discretized[i];
            let (r2, d2) = &discretized[j];
            let composed = convolve(d1, d2);
            for eps in [0.0, 0.5, 1.0, 2.0] {
                let engine = delta_from_pld(&composed, eps);
                let closed = gaussian_delta(r1 + r2, eps).map_err(|e| e.to_string())?;
                out.check(engine >= closed - 1e-12, || {
                    format!(
                        "engine delta {engine} optimistic vs closed form {closed} \
                         at rho ({r1}, {r2}), eps {eps}"
                    )
                });
                out.check(engine - closed <= 1e-3, || {
                    format!(
                        "engine delta {engine} more than 1e-3 above closed form {closed} \
                         at rho ({r1}, {r2}), eps {eps}"
                    )
                });
                max_gap = max_gap.max(engine - closed);
            }
        }
    }
    out.info = format!("grid step {step:e}, worst pessimistic gap {max_gap:.2e}");
    Ok(out)
}

fn monte_carlo_oracle_agreement() -> Result<Outcome, String> {
    let mut out = Outcome::new();
    let shifted = SamplerSpec::gaussian(1.0, 1.0);
    let base = SamplerSpec::gaussian(0.0, 1.0);

    let hs = mc_hockey_stick(&shifted, &base, 1.0, 10_000_000, SEED).map_err(|e| e.to_string())?;
    let hs_closed = gaussian_delta(0.5, 1.0).map_err(|e| e.to_string())?;
    out.check((hs.estimate - hs_closed).abs() <= 3.0 * hs.std_error, || {
        format!(
            "hockey-stick estimate {} vs closed form {hs_closed} (3 s.e. = {})",
            hs.estimate,
            3.0 * hs.std_error
        )
    });

    let mix = SamplerSpec::mixture(0.05, shifted.clone(), base.clone());
    let series = subsampled_rdp_exact(|k| Some(0.5 * k as f64), 0.05, 2)
        .map_err(|e| e.to_string())?;
    let mix_target = series.eps_values()[0];
    let ren_mix = mc_renyi(&mix, &base, 2.0, 100_000_000, SEED).map_err(|e| e.to_string())?;
    out.check((ren_mix.estimate - mix_target).abs() <= 3.0 * ren_mix.std_error, || {
        format!(
            "mixture order-2 estimate {} vs series {mix_target} (3 s.e. = {})",
            ren_mix.estimate,
            3.0 * ren_mix.std_error
        )
    });

    let ren_shift = mc_renyi(&shifted, &base, 3.0, 10_000_000, SEED).map_err(|e| e.to_string())?;
    out.check((ren_shift.estimate - 1.5).abs() <= 3.0 * ren_shift.std_error, || {
        format!(
            "unit-shift order-3 estimate {} vs 1.5 (3 s.e. = {})",
            ren_shift.estimate,
            3.0 * ren_shift.std_error
        )
    });
    out.info = format!(
        "hockey {:.6e}±{:.1e}, mixture {:.6e}±{:.1e}, shift {:.4}±{:.1e}",
        hs.estimate,
        hs.std_error,
        ren_mix.estimate,
        ren_mix.std_error,
        ren_shift.estimate,
        ren_shift.std_error
    );
    Ok(out)
}

fn randomized_equivalence_suite() -> Result<Outcome, String> {
    let mut out = Outcome::new();
    let report = run_selftest(1000, SEED).map_err(|e| e.to_string())?;
    out.check(report.failed == 0, || {
        format!(
            "{} of {} checks failed; first: {}",
            report.failed,
            report.checks,
            report.failures.first().cloned().unwrap_or_default()
        )
    });
    out.check(report.checks >= 25_000, || {
        format!("only {} checks ran; the suite is not exercising its cases", report.checks)
    });
    out.info = format!("{} pairs, {} checks", report.pairs, report.checks);
    Ok(out)
}

fn fingerprinting_error_floor() -> Result<Outcome, String> {
    let mut out = Outcome::new();
    let trials = 10_000u32;

    // Correlation identity targets are free of the population size; the
    // tabulated-function route caps at 2^n entries, so it runs at n = 16
    // while the mechanism attack below runs at the full n = 50.
    let bits = 16u32;
    let table_len = 1usize << bits;
    let mean_f: Vec<f64> =
        (0..table_len).map(|i| (i as u32).count_ones() as f64 / bits as f64).collect();
    let (mean_est, mean_se) =
        fingerprinting_identity_check(bits, trials as u64, &mean_f, SEED).map_err(|e| e.to_string())?;
    out.check((mean_est - 1.0 / 6.0).abs() <= 3.0 * mean_se, || {
        format!("identity with f = mean: {mean_est} vs 1/6 (3 s.e. = {})", 3.0 * mean_se)
    });
    let half_f = vec![0.5; table_len];
    let (half_est, half_se) = fingerprinting_identity_check(bits, trials as u64, &half_f, SEED + 1)
        .map_err(|e| e.to_string())?;
    out.check((half_est - 1.0 / 12.0).abs() <= 3.0 * half_se, || {
        format!("identity with f = 1/2: {half_est} vs 1/12 (3 s.e. = {})", 3.0 * half_se)
    });

    let (n, k) = (50u32, 500u32);
    let target = EpsDelta::new(1.0, 1e-6).map_err(|e| e.to_string())?;
    let sensitivity = (k as f64).sqrt() / n as f64;
    let sigma = calibrate_sigma(sensitivity, target, CalibrationMode::Tight)
        .map_err(|e| e.to_string())?;
    let cfg = AttackConfig {
        n,
        k,
        trials,
        mechanism: MechanismSpec::Gaussian { sensitivity, sigma },
        seed: SEED,
    };
    let report = run_attack(&cfg).map_err(|e| e.to_string())?;
    let kf = k as f64;
    let lhs = report.mean_z + kf * report.alpha_sq;
    let slack = 3.0 * (report.se_z + kf * report.se_alpha_sq);
    out.check(lhs >= kf / 12.0 - slack, || {
        format!("E[Z] + k alpha^2 = {lhs} below k/12 = {} (3 s.e. = {slack})", kf / 12.0)
    });

    // The sweep needs a population large enough that the calibrated noise
    // stays inside the unit output range for every swept k; near saturation
    // the clamp flattens the error and no scaling is measurable.
    let slope = error_scaling_slope(1000, &[64, 256, 1024], 400, target, SEED)
        .map_err(|e| e.to_string())?;
    out.check((slope - 0.5).abs() <= 0.1, || {
        format!("error-scaling slope {slope} outside 0.5 +- 0.1")
    });

    // The closed-form constants are reported, never asserted: Monte Carlo at
    // this scale cannot resolve them.
    out.info = format!(
        "slope {slope:.3}; diagnostics: bound_rhs {:?}, k_required {:?}, conditions_met {:?}",
        report.bound_rhs, report.diagnostics.k_required, report.diagnostics.conditions_met
    );
    Ok(out)
}

fn noisy_sgd_pipeline_dominance() -> Result<Outcome, String> {
    let mut out = Outcome::new();
    let report = dpsgd_account(0.01, 1.0, 1.0, 1000, 1e-5).map_err(|e| e.to_string())?;
    out.check(report.eps < report.naive_eps, || {
        format!("pipeline eps {} not below naive eps {}", report.eps, report.naive_eps)
    });
    out.info = format!(
        "eps {:.4} (order {}) vs naive {:.4}",
        report.eps, report.best_order, report.naive_eps
    );
    Ok(out)
}

fn main() {
    let criteria: Vec<(&str, u64, fn() -> Result<Outcome, String>)> = vec![
        ("composition-bounds-vs-query-count", 10, composition_bounds_vs_query_count),
        ("subsampled-divergence-bounds-vs-order", 10, subsampled_divergence_bounds_vs_order),
        ("gaussian-closed-form-vs-discretized-engine", 30, gaussian_closed_form_vs_discretized_engine),
        ("monte-carlo-oracle-agreement", 300, monte_carlo_oracle_agreement),
        ("randomized-equivalence-suite", 60, randomized_equivalence_suite),
        ("fingerprinting-error-floor", 300, fingerprinting_error_floor),
        ("noisy-sgd-pipeline-dominance", 30, noisy_sgd_pipeline_dominance),
    ];
    let mut failed = 0usize;
    for (name, budget_s, run) in criteria {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let mut failures = Vec::new();
        let mut info = String::new();
        match result {
            Ok(outcome) => {
                failures = outcome.failures;
                info = outcome.info;
            }
            Err(e) => failures.push(format!("criterion aborted: {e}")),
        }
        if elapsed > Duration::from_secs(budget_s) {
            failures.push(format!("exceeded the {budget_s} s budget"));
        }
        if failures.is_empty() {
            println!("PASS {name} ({:.2} s) {info}", elapsed.as_secs_f64());
        } else {
            failed += 1;
            let extra = if failures.len() > 1 {
                format!(" (+{} more)", failures.len() - 1)
            } else {
                String::new()
            };
            println!("FAIL {name} ({:.2} s): {}{extra}", elapsed.as_secs_f64(), failures[0]);
        }
    }
    std::process::exit(if failed == 0 { 0 } else { 1 });
}
