//! One handler per verb. Handlers validate flag combinations, call into the
//! library, and render a finished artifact; delivery and exit codes live in
//! [`crate::emit`].

use serde::Serialize;

use dpa_core::accountant::{rdp_to_adp, zcdp_to_delta, zcdp_to_eps, AdpVariant};
use dpa_core::attack::{
    error_scaling_slope, fingerprinting_identity_check, run_attack, AttackConfig,
    AttackDiagnostics,
};
use dpa_core::composition::{advanced_compose, basic_compose, optimal_eps};
use dpa_core::curves::{amplification_curves, composition_curves};
use dpa_core::gaussian::{calibrate_sigma, gaussian_delta, gaussian_zcdp};
use dpa_core::mc::{
    mc_hockey_stick, mc_hockey_stick_complement, mc_renyi, mc_renyi_p_form, McEstimate,
    SamplerSpec,
};
use dpa_core::mechanism::from_json;
use dpa_core::pld::{
    convolve, delta_from_pld, discretize, gaussian_pld, pld_from_pair, rr_pair, rr_pld,
};
use dpa_core::selftest::run_selftest;
use dpa_core::subsample::{amplify_adp, dpsgd_account};
use dpa_core::types::RdpCurve;
use dpa_core::{DiscretePld, EpsDelta, MechanismSpec};

use crate::args::*;
use crate::emit::{csv_table, read_input, to_json, CliError, Column};

/// A rendered artifact plus the process status to report after delivery.
pub struct Outcome {
    pub text: String,
    pub status: u8,
}

impl Outcome {
    fn json<T: Serialize>(value: &T) -> Self {
        Outcome { text: to_json(value), status: 0 }
    }

    fn csv(text: String) -> Self {
        Outcome { text, status: 0 }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.verb {
        Verb::Compose(args) => compose(args),
        Verb::Convert(args) => convert(args),
        Verb::Calibrate(args) => calibrate(args),
        Verb::Amplify(args) => amplify(args),
        Verb::Dpsgd(args) => dpsgd(args),
        Verb::Curve(cmd) => curve(cmd),
        Verb::Attack(cmd) => attack(cmd),
        Verb::Oracle(args) => oracle(args),
        Verb::Selftest(args) => selftest(args),
    }
}

// ── input plumbing ──────────────────────────────────────────────────────────

/// Load, parse, and validate the mechanism named by the source flags.
/// Clamp warnings go to standard error as one JSON object so scripted
/// callers can pick them up without disturbing the artifact.
fn load_mechanism(source: &SourceArgs) -> Result<MechanismSpec, CliError> {
    let text = match (&source.input, &source.inline) {
        (Some(path), None) => read_input(path)?,
        (None, Some(text)) => text.clone(),
        _ => unreachable!("clap enforces exactly one input source"),
    };
    let (spec, warnings) = from_json(&text)?;
    if !warnings.is_empty() {
        eprintln!("{}", serde_json::json!({ "warnings": warnings }));
    }
    let violations = spec.validate();
    if !violations.is_empty() {
        return Err(CliError::Validation {
            kind: "invalid-parameter".to_string(),
            message: "mechanism fails validation".to_string(),
            details: violations,
        });
    }
    Ok(spec)
}

/// Flatten nested compositions into the sequence of leaf mechanisms.
fn leaf_parts(spec: &MechanismSpec) -> Vec<&MechanismSpec> {
    match spec {
        MechanismSpec::Composed { parts } => parts.iter().flat_map(leaf_parts).collect(),
        other => vec![other],
    }
}

fn intrinsic_all(parts: &[&MechanismSpec]) -> Result<Vec<EpsDelta>, CliError> {
    parts.iter().map(|p| p.intrinsic_eps_delta().map_err(CliError::from)).collect()
}

fn require(value: Option<f64>, message: &str) -> Result<f64, CliError> {
    value.ok_or_else(|| CliError::validation(message))
}

// ── compose ─────────────────────────────────────────────────────────────────

#[derive(Serialize)]
struct ComposeOut {
    method: &'static str,
    parts: usize,
    eps: f64,
    delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    best_order: Option<f64>,
}

fn compose(args: &ComposeArgs) -> Result<Outcome, CliError> {
    let spec = load_mechanism(&args.source)?;
    let parts = leaf_parts(&spec);
    let out = match args.method {
        MethodArg::Basic => {
            let g = basic_compose(&intrinsic_all(&parts)?);
            ComposeOut {
                method: "basic",
                parts: parts.len(),
                eps: g.eps,
                delta: g.delta,
                rho: None,
                best_order: None,
            }
        }
        MethodArg::Advanced => {
            let slack =
                require(args.delta_slack, "--delta-slack is required for --method advanced")?;
            let g = advanced_compose(&intrinsic_all(&parts)?, slack)?;
            ComposeOut {
                method: "advanced",
                parts: parts.len(),
                eps: g.eps,
                delta: g.delta,
                rho: None,
                best_order: None,
            }
        }
        MethodArg::Optimal => {
            let target = require(args.delta, "--delta is required for --method optimal")?;
            if parts.iter().any(|p| *p != parts[0]) {
                return Err(CliError::validation(
                    "--method optimal requires identical parts; compose mixed parts via zcdp, \
                     rdp, or basic",
                ));
            }
            let g0 = parts[0].intrinsic_eps_delta()?;
            let eps = optimal_eps(g0.eps, g0.delta, parts.len() as u32, target)?;
            ComposeOut {
                method: "optimal",
                parts: parts.len(),
                eps,
                delta: target,
                rho: None,
                best_order: None,
            }
        }
        MethodArg::Zcdp => {
            let target = require(args.delta, "--delta is required for --method zcdp")?;
            let rho = spec.zcdp_bound()?;
            let eps = zcdp_to_eps(rho, target, args.mode.conversion())?;
            ComposeOut {
                method: "zcdp",
                parts: parts.len(),
                eps,
                delta: target,
                rho: Some(rho.rho),
                best_order: None,
            }
        }
        MethodArg::Rdp => {
            let target = require(args.delta, "--delta is required for --method rdp")?;
            let curve = spec.rdp_curve(args.neighbouring.relation(), args.alpha_max)?;
            let conv = rdp_to_adp(&curve, target, AdpVariant::Sharp)?;
            ComposeOut {
                method: "rdp",
                parts: parts.len(),
                eps: conv.eps,
                delta: target,
                rho: None,
                best_order: Some(conv.best_order),
            }
        }
    };
    Ok(Outcome::json(&out))
}

// ── convert ─────────────────────────────────────────────────────────────────

#[derive(Serialize)]
struct RhoOut {
    to: &'static str,
    rho: f64,
}

#[derive(Serialize)]
struct RdpOut<'a> {
    to: &'static str,
    alpha_max: u32,
    curve: &'a RdpCurve,
}

#[derive(Serialize)]
struct AdpOut {
    to: &'static str,
    route: &'static str,
    eps: f64,
    delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    best_order: Option<f64>,
}

#[derive(Serialize)]
struct DeltaOut {
    to: &'static str,
    route: &'static str,
    eps: f64,
    delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    loose: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vacuous: Option<bool>,
}

fn convert(args: &ConvertArgs) -> Result<Outcome, CliError> {
    let spec = load_mechanism(&args.source)?;
    if args.format == FormatArg::Csv && args.to != TargetArg::Rdp {
        return Err(CliError::validation("--format csv applies only to --to rdp"));
    }
    match args.to {
        TargetArg::Zcdp => {
            Ok(Outcome::json(&RhoOut { to: "zcdp", rho: spec.zcdp_bound()?.rho }))
        }
        TargetArg::Rdp => {
            let curve = spec.rdp_curve(args.neighbouring.relation(), args.alpha_max)?;
            match args.format {
                FormatArg::Json => Ok(Outcome::json(&RdpOut {
                    to: "rdp",
                    alpha_max: args.alpha_max,
                    curve: &curve,
                })),
                FormatArg::Csv => Ok(Outcome::csv(csv_table(
                    &["alpha", "eps"],
                    &[Column::Floats(curve.orders()), Column::Floats(curve.eps_values())],
                ))),
            }
        }
        TargetArg::Adp => {
            let delta = require(args.delta, "--delta is required for --to adp")?;
            let use_zcdp = match args.via {
                RouteArg::Zcdp => true,
                RouteArg::Rdp => false,
                RouteArg::Auto => spec.zcdp_bound().is_ok(),
            };
            let out = if use_zcdp {
                let rho = spec.zcdp_bound()?;
                AdpOut {
                    to: "adp",
                    route: "zcdp",
                    eps: zcdp_to_eps(rho, delta, args.mode.conversion())?,
                    delta,
                    rho: Some(rho.rho),
                    best_order: None,
                }
            } else {
                let curve = spec.rdp_curve(args.neighbouring.relation(), args.alpha_max)?;
                let conv = rdp_to_adp(&curve, delta, AdpVariant::Sharp)?;
                AdpOut {
                    to: "adp",
                    route: "rdp",
                    eps: conv.eps,
                    delta,
                    rho: None,
                    best_order: Some(conv.best_order),
                }
            };
            Ok(Outcome::json(&out))
        }
        TargetArg::Delta => {
            let eps = require(args.eps, "--eps is required for --to delta")?;
            let out = match &spec {
                // The Gaussian pair has an exact delta; report it rather
                // than the generic zCDP bound.
                MechanismSpec::Gaussian { sensitivity, sigma } => DeltaOut {
                    to: "delta",
                    route: "gaussian",
                    eps,
                    delta: gaussian_delta(gaussian_zcdp(*sensitivity, *sigma)?.rho, eps)?,
                    loose: None,
                    vacuous: None,
                },
                other => {
                    let bounds = zcdp_to_delta(other.zcdp_bound()?, eps)?;
                    DeltaOut {
                        to: "delta",
                        route: "zcdp",
                        eps,
                        delta: bounds.optimized,
                        loose: Some(bounds.loose),
                        vacuous: Some(bounds.vacuous),
                    }
                }
            };
            Ok(Outcome::json(&out))
        }
    }
}

// ── calibrate ───────────────────────────────────────────────────────────────

#[derive(Serialize)]
struct CalibrateOut {
    sensitivity: f64,
    eps: f64,
    delta: f64,
    mode: &'static str,
    sigma: f64,
    rho: f64,
}

fn calibrate(args: &CalibrateArgs) -> Result<Outcome, CliError> {
    let target = EpsDelta::new(args.eps, args.delta)?;
    let sigma = calibrate_sigma(args.sensitivity, target, args.mode.calibration())?;
    Ok(Outcome::json(&CalibrateOut {
        sensitivity: args.sensitivity,
        eps: args.eps,
        delta: args.delta,
        mode: args.mode.name(),
        sigma,
        rho: gaussian_zcdp(args.sensitivity, sigma)?.rho,
    }))
}

// ── amplify ─────────────────────────────────────────────────────────────────

#[derive(Serialize)]
struct AmplifyAdpOut {
    method: &'static str,
    p: f64,
    eps: f64,
    delta: f64,
}

#[derive(Serialize)]
struct AmplifyRdpOut<'a> {
    method: &'static str,
    p: f64,
    alpha_max: u32,
    curve: &'a RdpCurve,
    #[serde(skip_serializing_if = "Option::is_none")]
    adp: Option<AdpOut>,
}

fn amplify(args: &AmplifyArgs) -> Result<Outcome, CliError> {
    let spec = load_mechanism(&args.source)?;
    if !(args.p.is_finite() && (0.0..=1.0).contains(&args.p)) {
        return Err(CliError::validation(format!(
            "sampling probability must be in [0,1], got {}",
            args.p
        )));
    }
    let use_adp = match args.method {
        AmplifyMethodArg::Adp => true,
        AmplifyMethodArg::Rdp => false,
        AmplifyMethodArg::Auto => spec.intrinsic_eps_delta().is_ok(),
    };
    if use_adp {
        if args.format == FormatArg::Csv {
            return Err(CliError::validation("--format csv applies only to --method rdp"));
        }
        let g = amplify_adp(spec.intrinsic_eps_delta()?, args.p);
        return Ok(Outcome::json(&AmplifyAdpOut {
            method: "adp",
            p: args.p,
            eps: g.eps,
            delta: g.delta,
        }));
    }
    let inner_rho = spec.zcdp_bound();
    let wrapped =
        MechanismSpec::PoissonSubsampled { p: args.p, inner: Box::new(spec) };
    let curve = wrapped.rdp_curve(dpa_core::types::Neighbouring::AddRemove, args.alpha_max)?;
    let adp = match args.delta {
        Some(delta) => {
            let conv = rdp_to_adp(&curve, delta, AdpVariant::Sharp)?;
            Some(AdpOut {
                to: "adp",
                route: "rdp",
                eps: conv.eps,
                delta,
                rho: None,
                best_order: Some(conv.best_order),
            })
        }
        None => None,
    };
    match args.format {
        FormatArg::Json => Ok(Outcome::json(&AmplifyRdpOut {
            method: "rdp",
            p: args.p,
            alpha_max: args.alpha_max,
            curve: &curve,
            adp,
        })),
        FormatArg::Csv => {
            // The CSV export is the closed-form comparison, and all three
            // columns are functions of the inner zero-concentrated line; a
            // mechanism without one still gets the JSON curve.
            let rho = inner_rho.map_err(|_| {
                CliError::validation(
                    "--format csv compares the closed forms, which need a mechanism \
                     with a zero-concentrated bound; request json for the curve alone",
                )
            })?;
            let data = amplification_curves(args.p, rho.rho, args.alpha_max)?;
            Ok(Outcome::csv(csv_table(
                &["alpha", "eps_exact", "eps_analytic", "eps_large_alpha"],
                &[
                    Column::Ints(&data.alpha),
                    Column::Floats(&data.exact),
                    Column::Floats(&data.analytic),
                    Column::Floats(&data.limit),
                ],
            )))
        }
    }
}

// ── dpsgd ───────────────────────────────────────────────────────────────────

fn dpsgd(args: &DpsgdArgs) -> Result<Outcome, CliError> {
    let report = dpsgd_account(args.p, args.sigma, args.sensitivity, args.steps, args.delta)?;
    match args.format {
        FormatArg::Json => Ok(Outcome::json(&report)),
        FormatArg::Csv => Ok(Outcome::csv(csv_table(
            &["alpha", "eps"],
            &[Column::Floats(report.curve.orders()), Column::Floats(report.curve.eps_values())],
        ))),
    }
}

// ── curve ───────────────────────────────────────────────────────────────────

#[derive(Serialize)]
struct PldCurveOut {
    step: f64,
    tail_mass: f64,
    eps: Vec<f64>,
    delta: Vec<f64>,
}

fn curve(cmd: &CurveCmd) -> Result<Outcome, CliError> {
    match cmd {
        CurveCmd::Fig1(args) => {
            let data = composition_curves(args.eps0, args.delta, args.k_max)?;
            match args.format {
                FormatArg::Json => Ok(Outcome::json(&data)),
                FormatArg::Csv => Ok(Outcome::csv(csv_table(
                    &["k", "basic", "advanced", "optimal", "cdp", "gaussian"],
                    &[
                        Column::Ints(&data.k),
                        Column::Floats(&data.basic),
                        Column::Floats(&data.advanced),
                        Column::Floats(&data.optimal),
                        Column::Floats(&data.cdp),
                        Column::Floats(&data.gaussian),
                    ],
                ))),
            }
        }
        CurveCmd::Fig2(args) => {
            let data = amplification_curves(args.p, args.rho, args.alpha_max)?;
            match args.format {
                FormatArg::Json => Ok(Outcome::json(&data)),
                FormatArg::Csv => Ok(Outcome::csv(csv_table(
                    &["alpha", "unamplified", "exact", "analytic", "limit"],
                    &[
                        Column::Ints(&data.alpha),
                        Column::Floats(&data.unamplified),
                        Column::Floats(&data.exact),
                        Column::Floats(&data.analytic),
                        Column::Floats(&data.limit),
                    ],
                ))),
            }
        }
        CurveCmd::Pld(args) => pld_curve(args),
    }
}

/// Loss distribution of a mechanism, exact where the mechanism is discrete
/// and a pessimistically discretized grid for Gaussian parts. Compositions
/// convolve their parts.
fn mechanism_pld(
    spec: &MechanismSpec,
    step: f64,
    tail_mass: f64,
) -> Result<DiscretePld, CliError> {
    match spec {
        MechanismSpec::Gaussian { sensitivity, sigma } => {
            Ok(discretize(&gaussian_pld(*sensitivity, *sigma)?, step, tail_mass)?)
        }
        MechanismSpec::PureDp { eps } => Ok(rr_pld(*eps)?),
        MechanismSpec::ApproxDp { eps, delta }
        | MechanismSpec::RandomizedResponse { eps, delta } => {
            let (p, q) = rr_pair(*eps, *delta)?;
            Ok(pld_from_pair(&p, &q)?)
        }
        MechanismSpec::Composed { parts } => {
            let mut plds = parts.iter().map(|part| mechanism_pld(part, step, tail_mass));
            let first = plds.next().expect("validation rejects empty compositions")?;
            plds.try_fold(first, |acc, pld| Ok(convolve(&acc, &pld?)))
        }
        other => Err(CliError::Validation {
            kind: "invalid-parameter".to_string(),
            message: format!(
                "no loss-distribution route for a {} mechanism; supported kinds: gaussian, \
                 pure_dp, approx_dp, randomized_response, composed",
                other.kind_name()
            ),
            details: Vec::new(),
        }),
    }
}

fn pld_curve(args: &PldCurveArgs) -> Result<Outcome, CliError> {
    let spec = load_mechanism(&args.source)?;
    if args.points < 2 {
        return Err(CliError::validation("--points must be at least 2"));
    }
    if !(args.eps_max.is_finite() && args.eps_max > args.eps_min) {
        return Err(CliError::validation(format!(
            "--eps-max must exceed --eps-min, got {} vs {}",
            args.eps_max, args.eps_min
        )));
    }
    let pld = mechanism_pld(&spec, args.step, args.tail_mass)?;
    let n = args.points as usize;
    let width = (args.eps_max - args.eps_min) / (n - 1) as f64;
    let eps: Vec<f64> = (0..n).map(|i| args.eps_min + width * i as f64).collect();
    let delta: Vec<f64> = eps.iter().map(|&e| delta_from_pld(&pld, e)).collect();
    match args.format {
        FormatArg::Json => Ok(Outcome::json(&PldCurveOut {
            step: args.step,
            tail_mass: args.tail_mass,
            eps,
            delta,
        })),
        FormatArg::Csv => Ok(Outcome::csv(csv_table(
            &["eps", "delta"],
            &[Column::Floats(&eps), Column::Floats(&delta)],
        ))),
    }
}

// ── attack ──────────────────────────────────────────────────────────────────

#[derive(Serialize)]
struct AttackDemoOut<'a> {
    n: u32,
    k: u32,
    trials: u32,
    seed: u64,
    mean_z: f64,
    se_z: f64,
    alpha_sq: f64,
    se_alpha_sq: f64,
    bound_rhs: Option<f64>,
    diagnostics: &'a AttackDiagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    z_samples: Option<&'a [f64]>,
}

#[derive(Serialize)]
struct IdentityOut {
    check: &'static str,
    table: &'static str,
    bits: u32,
    trials: u64,
    seed: u64,
    estimate: f64,
    std_error: f64,
    /// Value the identity takes in the population, independent of n.
    reference: f64,
}

#[derive(Serialize)]
struct SlopeOut<'a> {
    check: &'static str,
    n: u32,
    ks: &'a [u32],
    trials: u32,
    eps: f64,
    delta: f64,
    seed: u64,
    slope: f64,
    /// Square-root error scaling appears as slope 1/2 on the log-log plot.
    reference: f64,
}

fn attack(cmd: &AttackCmd) -> Result<Outcome, CliError> {
    match cmd {
        AttackCmd::Demo(args) => {
            let mechanism = load_mechanism(&args.source)?;
            let report = run_attack(&AttackConfig {
                n: args.n,
                k: args.k,
                trials: args.trials,
                mechanism,
                seed: args.seed,
            })?;
            Ok(Outcome::json(&AttackDemoOut {
                n: args.n,
                k: args.k,
                trials: args.trials,
                seed: args.seed,
                mean_z: report.mean_z,
                se_z: report.se_z,
                alpha_sq: report.alpha_sq,
                se_alpha_sq: report.se_alpha_sq,
                bound_rhs: report.bound_rhs,
                diagnostics: &report.diagnostics,
                z_samples: args.with_samples.then_some(report.z_samples.as_slice()),
            }))
        }
        AttackCmd::Identity(args) => {
            let size = 1usize
                .checked_shl(args.bits)
                .filter(|_| (1..=20).contains(&args.bits))
                .ok_or_else(|| CliError::validation("--bits must be in 1..=20"))?;
            let (table, reference) = match args.table {
                TableArg::Mean => (
                    (0..size)
                        .map(|i| (i as u32).count_ones() as f64 / args.bits as f64)
                        .collect::<Vec<f64>>(),
                    1.0 / 6.0,
                ),
                TableArg::Half => (vec![0.5; size], 1.0 / 12.0),
            };
            let (estimate, std_error) =
                fingerprinting_identity_check(args.bits, args.trials, &table, args.seed)?;
            Ok(Outcome::json(&IdentityOut {
                check: "identity",
                table: match args.table {
                    TableArg::Mean => "mean",
                    TableArg::Half => "half",
                },
                bits: args.bits,
                trials: args.trials,
                seed: args.seed,
                estimate,
                std_error,
                reference,
            }))
        }
        AttackCmd::Slope(args) => {
            let target = EpsDelta::new(args.eps, args.delta)?;
            let slope =
                error_scaling_slope(args.n, &args.ks, args.trials, target, args.seed)?;
            Ok(Outcome::json(&SlopeOut {
                check: "slope",
                n: args.n,
                ks: &args.ks,
                trials: args.trials,
                eps: args.eps,
                delta: args.delta,
                seed: args.seed,
                slope,
                reference: 0.5,
            }))
        }
    }
}

// ── oracle ──────────────────────────────────────────────────────────────────

#[derive(Serialize)]
struct OracleOut {
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    complement: bool,
    p_form: bool,
    result: McEstimate,
}

fn parse_sampler(label: &str, text: &str) -> Result<SamplerSpec, CliError> {
    let spec: SamplerSpec = serde_json::from_str(text).map_err(|e| CliError::Validation {
        kind: "parse-error".to_string(),
        message: format!("{label}: {e}"),
        details: Vec::new(),
    })?;
    spec.validate()?;
    Ok(spec)
}

fn oracle(args: &OracleArgs) -> Result<Outcome, CliError> {
    let p = parse_sampler("--p-spec", &args.p_spec)?;
    let q = parse_sampler("--q-spec", &args.q_spec)?;
    let out = match args.kind {
        OracleKindArg::Hockey => {
            if args.p_form {
                return Err(CliError::validation("--p-form applies only to --kind renyi"));
            }
            let eps = require(args.eps, "--eps is required for --kind hockey")?;
            if args.alpha.is_some() {
                return Err(CliError::validation("--alpha applies only to --kind renyi"));
            }
            let result = if args.complement {
                mc_hockey_stick_complement(&p, &q, eps, args.samples, args.seed)?
            } else {
                mc_hockey_stick(&p, &q, eps, args.samples, args.seed)?
            };
            OracleOut {
                kind: "hockey",
                eps: Some(eps),
                alpha: None,
                complement: args.complement,
                p_form: false,
                result,
            }
        }
        OracleKindArg::Renyi => {
            if args.complement {
                return Err(CliError::validation("--complement applies only to --kind hockey"));
            }
            let alpha = require(args.alpha, "--alpha is required for --kind renyi")?;
            if args.eps.is_some() {
                return Err(CliError::validation("--eps applies only to --kind hockey"));
            }
            let result = if args.p_form {
                mc_renyi_p_form(&p, &q, alpha, args.samples, args.seed)?
            } else {
                mc_renyi(&p, &q, alpha, args.samples, args.seed)?
            };
            OracleOut {
                kind: "renyi",
                eps: None,
                alpha: Some(alpha),
                complement: false,
                p_form: args.p_form,
                result,
            }
        }
    };
    Ok(Outcome::json(&out))
}

// ── selftest ────────────────────────────────────────────────────────────────

fn selftest(args: &SelftestArgs) -> Result<Outcome, CliError> {
    let report = run_selftest(args.pairs, args.seed)?;
    let status = if report.passed() { 0 } else { 1 };
    Ok(Outcome { text: to_json(&report), status })
}
