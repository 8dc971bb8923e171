//! The command tree. Each verb declares only the flags it understands, so a
//! misapplied flag fails at parse time rather than being silently ignored.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dpa_core::accountant::ConversionMode;
use dpa_core::gaussian::CalibrationMode;
use dpa_core::types::Neighbouring;

#[derive(Debug, Parser)]
#[command(
    name = "dpa",
    version,
    about = "Differential-privacy budget accounting: composition, conversion, \
             calibration, subsampling amplification, and reference datasets",
    color = clap::ColorChoice::Never
)]
pub struct Cli {
    /// Write the artifact to this path instead of standard output. Relative
    /// paths resolve under $DPA_OUT_DIR when that variable is set.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub verb: Verb,
}

#[derive(Debug, Subcommand)]
pub enum Verb {
    /// Compose a mechanism's parts under a chosen theorem.
    Compose(ComposeArgs),
    /// Convert a mechanism's guarantee to another representation.
    Convert(ConvertArgs),
    /// Solve for the Gaussian sigma meeting an (eps, delta) target.
    Calibrate(CalibrateArgs),
    /// Apply Poisson-subsampling amplification to a guarantee.
    Amplify(AmplifyArgs),
    /// Account a noisy-SGD run and compare against the naive pipeline.
    Dpsgd(DpsgdArgs),
    /// Emit comparison datasets (CSV by default).
    #[command(subcommand)]
    Curve(CurveCmd),
    /// Fingerprinting mean-estimation attack and its sanity checks.
    #[command(subcommand)]
    Attack(AttackCmd),
    /// Monte-Carlo estimate of a divergence between samplable distributions.
    Oracle(OracleArgs),
    /// Run the randomized equivalence suite; exits nonzero on any failure.
    Selftest(SelftestArgs),
}

/// Where the mechanism JSON comes from: a file or the command line,
/// exactly one of the two.
#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct SourceArgs {
    /// Mechanism JSON file; "-" reads standard input.
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Mechanism JSON given directly on the command line.
    #[arg(long, value_name = "JSON")]
    pub inline: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Sum eps and delta across parts.
    Basic,
    /// Square-root composition at a spent delta slack.
    Advanced,
    /// Exact worst-case composition (identical parts only).
    Optimal,
    /// Through the zCDP parameter, converted at the delta target.
    Zcdp,
    /// Through the Renyi curve, converted at the delta target.
    Rdp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// Bisected conversion, never looser than the closed form.
    Tight,
    /// Closed-form conversion.
    Remark,
}

impl ModeArg {
    pub fn conversion(self) -> ConversionMode {
        match self {
            ModeArg::Tight => ConversionMode::Tight,
            ModeArg::Remark => ConversionMode::Remark,
        }
    }

    pub fn calibration(self) -> CalibrationMode {
        match self {
            ModeArg::Tight => CalibrationMode::Tight,
            ModeArg::Remark => CalibrationMode::Remark,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModeArg::Tight => "tight",
            ModeArg::Remark => "remark",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NeighbouringArg {
    AddRemove,
    Replace,
}

impl NeighbouringArg {
    pub fn relation(self) -> Neighbouring {
        match self {
            NeighbouringArg::AddRemove => Neighbouring::AddRemove,
            NeighbouringArg::Replace => Neighbouring::Replace,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct ComposeArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Overall delta target (methods optimal, zcdp, rdp).
    #[arg(long, value_name = "DELTA")]
    pub delta: Option<f64>,
    /// Fresh failure probability spent by advanced composition.
    #[arg(long, value_name = "DELTA")]
    pub delta_slack: Option<f64>,
    /// zCDP-to-eps conversion mode (method zcdp).
    #[arg(long, value_enum, default_value_t = ModeArg::Tight)]
    pub mode: ModeArg,
    /// Largest Renyi order considered (method rdp).
    #[arg(long, default_value_t = 64, value_name = "N")]
    pub alpha_max: u32,
    /// Neighbouring relation for subsampled parts (method rdp).
    #[arg(long, value_enum, default_value_t = NeighbouringArg::AddRemove)]
    pub neighbouring: NeighbouringArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    /// The zCDP parameter rho.
    Zcdp,
    /// The Renyi curve on the order grid.
    Rdp,
    /// (eps, delta) at a delta target.
    Adp,
    /// delta at a fixed eps.
    Delta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RouteArg {
    /// zCDP when the mechanism has a rho, otherwise the Renyi curve.
    Auto,
    Zcdp,
    Rdp,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, value_enum)]
    pub to: TargetArg,
    /// Delta target (--to adp).
    #[arg(long, value_name = "DELTA")]
    pub delta: Option<f64>,
    /// Fixed eps (--to delta).
    #[arg(long, value_name = "EPS")]
    pub eps: Option<f64>,
    #[arg(long, value_enum, default_value_t = ModeArg::Tight)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = RouteArg::Auto)]
    pub via: RouteArg,
    #[arg(long, default_value_t = 64, value_name = "N")]
    pub alpha_max: u32,
    #[arg(long, value_enum, default_value_t = NeighbouringArg::AddRemove)]
    pub neighbouring: NeighbouringArg,
    /// csv renders the Renyi curve as alpha,eps rows (--to rdp only).
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long, value_name = "SENS")]
    pub sensitivity: f64,
    #[arg(long, value_name = "EPS")]
    pub eps: f64,
    #[arg(long, value_name = "DELTA")]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Tight)]
    pub mode: ModeArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AmplifyMethodArg {
    /// adp when the mechanism carries a face-value (eps, delta), else rdp.
    Auto,
    /// Closed-form amplification of the (eps, delta) pair.
    Adp,
    /// Exact amplified Renyi series on integer orders.
    Rdp,
}

#[derive(Debug, Args)]
pub struct AmplifyArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Poisson sampling probability.
    #[arg(long, value_name = "P")]
    pub p: f64,
    #[arg(long, value_enum, default_value_t = AmplifyMethodArg::Auto)]
    pub method: AmplifyMethodArg,
    #[arg(long, default_value_t = 64, value_name = "N")]
    pub alpha_max: u32,
    /// Also convert the amplified curve to (eps, delta) at this target
    /// (method rdp).
    #[arg(long, value_name = "DELTA")]
    pub delta: Option<f64>,
    /// csv renders the closed-form comparison (exact series, analytic bound,
    /// large-order bound) per order; needs method rdp and a mechanism with a
    /// zero-concentrated bound.
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct DpsgdArgs {
    /// Poisson sampling probability per step.
    #[arg(long, value_name = "P")]
    pub p: f64,
    /// Noise multiplier.
    #[arg(long, value_name = "SIGMA")]
    pub sigma: f64,
    /// Per-step gradient sensitivity.
    #[arg(long, default_value_t = 1.0, value_name = "SENS")]
    pub sensitivity: f64,
    #[arg(long, value_name = "T")]
    pub steps: u32,
    #[arg(long, value_name = "DELTA")]
    pub delta: f64,
    /// csv renders the composed curve as alpha,eps rows.
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub format: FormatArg,
}

#[derive(Debug, Subcommand)]
pub enum CurveCmd {
    /// Composition bounds against query count: k, basic, advanced, optimal,
    /// cdp, gaussian.
    Fig1(Fig1Args),
    /// Subsampled Renyi bounds against order: alpha, unamplified, exact,
    /// analytic, limit.
    Fig2(Fig2Args),
    /// Delta against eps for a mechanism's discretized loss distribution.
    Pld(PldCurveArgs),
}

#[derive(Debug, Args)]
pub struct Fig1Args {
    /// Per-query pure-DP parameter.
    #[arg(long, default_value_t = 0.1, value_name = "EPS")]
    pub eps0: f64,
    #[arg(long, default_value_t = 1e-6, value_name = "DELTA")]
    pub delta: f64,
    #[arg(long, default_value_t = 500, value_name = "K")]
    pub k_max: u32,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct Fig2Args {
    /// Poisson sampling probability.
    #[arg(long, default_value_t = 0.05, value_name = "P")]
    pub p: f64,
    /// zCDP parameter of the unamplified mechanism.
    #[arg(long, default_value_t = 0.5, value_name = "RHO")]
    pub rho: f64,
    #[arg(long, default_value_t = 64, value_name = "N")]
    pub alpha_max: u32,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct PldCurveArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Grid step for discretizing continuous loss distributions.
    #[arg(long, default_value_t = 1e-4, value_name = "STEP")]
    pub step: f64,
    /// Mass truncated into the tails per side before rounding.
    #[arg(long, default_value_t = 1e-12, value_name = "MASS")]
    pub tail_mass: f64,
    #[arg(long, default_value_t = 0.0, value_name = "EPS")]
    pub eps_min: f64,
    #[arg(long, default_value_t = 5.0, value_name = "EPS")]
    pub eps_max: f64,
    /// Number of evenly spaced eps values, endpoints included.
    #[arg(long, default_value_t = 101, value_name = "N")]
    pub points: u32,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
}

#[derive(Debug, Subcommand)]
pub enum AttackCmd {
    /// Run the attack against a mechanism and report the correlation score
    /// and squared error with their standard errors.
    Demo(AttackDemoArgs),
    /// Exact tabulated identity check on a tiny domain (no mechanism).
    Identity(AttackIdentityArgs),
    /// Log-log slope of the calibrated Gaussian error over several k.
    Slope(AttackSlopeArgs),
}

#[derive(Debug, Args)]
pub struct AttackDemoArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Number of individuals.
    #[arg(long, default_value_t = 50, value_name = "N")]
    pub n: u32,
    /// Number of queries.
    #[arg(long, default_value_t = 500, value_name = "K")]
    pub k: u32,
    #[arg(long, default_value_t = 10_000, value_name = "T")]
    pub trials: u32,
    #[arg(long, default_value_t = 0, value_name = "SEED")]
    pub seed: u64,
    /// Include the per-trial correlation scores in the report.
    #[arg(long)]
    pub with_samples: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableArg {
    /// f = fraction of ones; the identity evaluates to 1/6.
    Mean,
    /// f = 1/2 everywhere; the identity evaluates to 1/12.
    Half,
}

#[derive(Debug, Args)]
pub struct AttackIdentityArgs {
    /// Domain size in bits; the statistic is tabulated over all 2^bits inputs.
    #[arg(long, default_value_t = 12, value_name = "BITS")]
    pub bits: u32,
    #[arg(long, value_enum)]
    pub table: TableArg,
    #[arg(long, default_value_t = 10_000, value_name = "T")]
    pub trials: u64,
    #[arg(long, default_value_t = 0, value_name = "SEED")]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct AttackSlopeArgs {
    #[arg(long, default_value_t = 1000, value_name = "N")]
    pub n: u32,
    /// Query counts to sweep.
    #[arg(long, value_delimiter = ',', default_values_t = [64, 256, 1024], value_name = "K,...")]
    pub ks: Vec<u32>,
    #[arg(long, default_value_t = 400, value_name = "T")]
    pub trials: u32,
    /// Calibration target per k.
    #[arg(long, default_value_t = 1.0, value_name = "EPS")]
    pub eps: f64,
    #[arg(long, default_value_t = 1e-6, value_name = "DELTA")]
    pub delta: f64,
    #[arg(long, default_value_t = 0, value_name = "SEED")]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleKindArg {
    /// Hockey-stick divergence at a fixed eps.
    Hockey,
    /// Renyi divergence at a fixed order.
    Renyi,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, value_enum)]
    pub kind: OracleKindArg,
    /// Sampler JSON for the numerator distribution, e.g.
    /// {"type":"unit_gaussian_shift","shift":1.0,"sigma":1.0}.
    #[arg(long, value_name = "JSON")]
    pub p_spec: String,
    /// Sampler JSON for the reference distribution.
    #[arg(long, value_name = "JSON")]
    pub q_spec: String,
    /// Divergence threshold (kind hockey).
    #[arg(long, value_name = "EPS")]
    pub eps: Option<f64>,
    /// Renyi order (kind renyi).
    #[arg(long, value_name = "ALPHA")]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 1_000_000, value_name = "N")]
    pub samples: u64,
    #[arg(long, default_value_t = 0, value_name = "SEED")]
    pub seed: u64,
    /// Estimate the Q-side divergence instead (kind hockey).
    #[arg(long)]
    pub complement: bool,
    /// Sample from P instead of the Q-form estimator (kind renyi).
    #[arg(long)]
    pub p_form: bool,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Number of random distribution pairs to test.
    #[arg(long, default_value_t = 1000, value_name = "N")]
    pub pairs: u32,
    #[arg(long, default_value_t = 0, value_name = "SEED")]
    pub seed: u64,
}
