//! Command-line front end: JSON experiment configuration, orchestration of
//! the simulation/verification operations, and JSON/CSV/text output.
//!
//! Exit codes: 0 = pass, 1 = statistical assertion failure, 2 = config
//! error, 3 = constant-precondition failure.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use seqdetect_core::detectors::{
    resolve_constants, CalibrationMode, ConstantSet, DetectorConfig, DetectorError, DetectorKind,
};
use seqdetect_core::maxisets::{
    admissible_f, admissible_g, besov_sup_functional, check_embedding_condition, dyadic_cutoffs,
    member_f, member_f_dec, member_g, member_g_dec, mu_from_r, TriggerNorm,
};
use seqdetect_core::model::{
    DesignSchedule, EpsilonGrid, ModelError, OperatorSpectrum, RateSchedule, Signal,
};
use seqdetect_core::montecarlo::{
    compare_ip_dp, estimate_type1, estimate_type2, power_curve, verify_dp_bound, verify_ip_bound,
    verify_sandwich, BoundCase, McError,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

fn default_detector() -> DetectorKind {
    DetectorKind::Ip
}
fn default_spectrum() -> OperatorSpectrum {
    OperatorSpectrum::Identity
}
fn default_alpha() -> f64 {
    0.05
}
fn default_beta() -> f64 {
    0.1
}
fn default_calibration() -> CalibrationMode {
    CalibrationMode::Chebyshev
}
fn default_design() -> DesignSchedule {
    DesignSchedule::Constant { d: 100 }
}
fn default_rate() -> RateSchedule {
    RateSchedule::MinimaxIp { s: 0.5, t: 0.5 }
}
fn default_epsilon() -> f64 {
    0.1
}
fn default_n() -> u64 {
    10_000
}
fn default_margin() -> f64 {
    0.05
}
fn default_smoothness() -> f64 {
    0.5
}
fn default_ill_posedness() -> f64 {
    0.5
}
fn default_k_max() -> u64 {
    1_000_000
}
fn default_format() -> OutputFormat {
    OutputFormat::Text
}

/// The experiment description: everything a run needs, so identical configs
/// give byte-identical outputs. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default = "default_detector")]
    pub detector: DetectorKind,
    #[serde(default = "default_spectrum")]
    pub spectrum: OperatorSpectrum,
    #[serde(default = "Signal::zero")]
    pub signal: Signal,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_calibration")]
    pub calibration: CalibrationMode,
    #[serde(default = "default_design")]
    pub design: DesignSchedule,
    #[serde(default = "default_rate")]
    pub rate: RateSchedule,
    /// Weighted-norm radius schedule; omitted means the design-weighted
    /// rate `b_D * rate`.
    #[serde(default)]
    pub mu: Option<RateSchedule>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Noise grid for grid-quantified operations; omitted means the default
    /// geometric grid.
    #[serde(default)]
    pub grid: Option<EpsilonGrid>,
    #[serde(default = "default_n")]
    pub n: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_margin")]
    pub margin: f64,
    /// Amplitude scales for power curves; omitted means a default doubling
    /// ladder starting at the Type-I point `rho = 0`.
    #[serde(default)]
    pub rho_list: Option<Vec<f64>>,
    /// Smoothness index `s` for the comparison command.
    #[serde(default = "default_smoothness")]
    pub smoothness: f64,
    /// Spectrum decay index `t` for the comparison command.
    #[serde(default = "default_ill_posedness")]
    pub ill_posedness: f64,
    /// Upper index bound for the embedding sweep.
    #[serde(default = "default_k_max")]
    pub k_max: u64,
    #[serde(default = "default_format")]
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            detector: default_detector(),
            spectrum: default_spectrum(),
            signal: Signal::zero(),
            alpha: default_alpha(),
            beta: default_beta(),
            calibration: default_calibration(),
            design: default_design(),
            rate: default_rate(),
            mu: None,
            epsilon: default_epsilon(),
            grid: None,
            n: default_n(),
            master_seed: 0,
            margin: default_margin(),
            rho_list: None,
            smoothness: default_smoothness(),
            ill_posedness: default_ill_posedness(),
            k_max: default_k_max(),
            format: default_format(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), RunError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(RunError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(RunError::Config(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if self.n == 0 {
            return Err(RunError::Config("n must be at least 1".into()));
        }
        if self.margin < 0.0 {
            return Err(RunError::Config(format!(
                "margin must be nonnegative, got {}",
                self.margin
            )));
        }
        if self.k_max == 0 {
            return Err(RunError::Config("k_max must be at least 1".into()));
        }
        Ok(())
    }

    fn grid(&self) -> EpsilonGrid {
        self.grid.clone().unwrap_or_else(EpsilonGrid::default_grid)
    }

    fn mu(&self) -> RateSchedule {
        self.mu
            .clone()
            .unwrap_or_else(|| mu_from_r(&self.rate, &self.design, &self.spectrum))
    }
}

#[derive(Debug)]
pub enum RunError {
    /// Invalid configuration or arguments: exit code 2.
    Config(String),
    /// A detection-constant precondition failed: exit code 3.
    Constant(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Constant(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            RunError::Config(m) | RunError::Constant(m) => m,
        }
    }
}

fn from_detector_error(err: DetectorError) -> RunError {
    match err {
        DetectorError::ConstantTooSmall { .. } => {
            RunError::Constant(format!("constant precondition failed: {err}"))
        }
        other => RunError::Config(other.to_string()),
    }
}

fn from_model_error(err: ModelError) -> RunError {
    RunError::Config(err.to_string())
}

fn from_mc_error(err: McError) -> RunError {
    match err {
        McError::Detector(e) => from_detector_error(e),
        McError::Model(e) => from_model_error(e),
        McError::ConstraintUnsatisfiable(m) => RunError::Config(m),
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "seqdetect",
    about = "Chi-square signal detection in the Gaussian sequence model: \
             simulation, calibration and verification experiments",
    version
)]
pub struct Cli {
    /// Path to a JSON experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override the master seed from the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override the replication count from the configuration.
    #[arg(long, global = true)]
    pub n: Option<u64>,
    /// Output format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// Write the payload to a file instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Estimate the Type-I and Type-II error of the configured detector.
    Simulate,
    /// Print the resolved detection constants.
    Calibrate,
    /// Evaluate set membership and admissibility on the noise grid.
    Maxiset,
    /// Sweep rejection probability over signal amplitude scales.
    Power,
    /// Side-by-side inverse/direct comparison on the dyadic-block signal.
    Compare,
    /// Run a verification experiment; exits nonzero if its assertion fails.
    Verify {
        #[arg(value_enum)]
        target: VerifyTarget,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifyTarget {
    /// Single-spike Type-II bound pair for the inverse detector.
    IpBound,
    /// Single-spike Type-II bound pair for the direct detector.
    DpBound,
    /// Membership-versus-detection coherence on the noise grid.
    Sandwich,
    /// Index-wise threshold comparability condition.
    Embedding,
    /// Tail sup-functional report for the dyadic-block signal.
    TailGrowth,
}

pub struct Outcome {
    pub payload: String,
    pub pass: bool,
}

fn level_constant(kind: DetectorKind, constants: &ConstantSet) -> f64 {
    match kind {
        DetectorKind::Ip => constants.c1,
        DetectorKind::Dp => constants.c2,
    }
}

fn resolve(cfg: &ExperimentConfig) -> Result<ConstantSet, RunError> {
    let dc = DetectorConfig::new(cfg.alpha, cfg.beta, cfg.calibration.clone())
        .map_err(from_detector_error)?;
    let d = cfg
        .design
        .design_size(cfg.epsilon)
        .map_err(from_model_error)?;
    resolve_constants(&dc, &cfg.spectrum, d).map_err(from_detector_error)
}

/// Loads the configuration, applies command-line overrides and runs the
/// requested command.
pub fn execute(cli: &Cli) -> Result<Outcome, RunError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<ExperimentConfig>(&text)
                .map_err(|e| RunError::Config(format!("invalid configuration: {e}")))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    if let Some(n) = cli.n {
        cfg.n = n;
    }
    if let Some(format) = cli.format {
        cfg.format = format;
    }
    cfg.validate()?;
    run_command(&cli.command, &cfg)
}

fn run_command(command: &Command, cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let constants = resolve(cfg)?;
    let (name, result, pass, csv) = match command {
        Command::Simulate => {
            let d = cfg
                .design
                .design_size(cfg.epsilon)
                .map_err(from_model_error)?;
            let constant = level_constant(cfg.detector, &constants);
            let t1 = estimate_type1(
                cfg.detector,
                &cfg.spectrum,
                cfg.epsilon,
                d,
                constant,
                cfg.n,
                cfg.master_seed,
            )
            .map_err(from_detector_error)?;
            let t2 = estimate_type2(
                cfg.detector,
                &cfg.signal,
                &cfg.spectrum,
                cfg.epsilon,
                d,
                constant,
                cfg.n,
                cfg.master_seed,
            )
            .map_err(from_detector_error)?;
            (
                "simulate",
                json!({ "d": d, "type1": t1, "type2": t2 }),
                true,
                None,
            )
        }
        Command::Calibrate => ("calibrate", json!({ "constants": constants }), true, None),
        Command::Maxiset => {
            let grid = cfg.grid();
            let result = match cfg.detector {
                DetectorKind::Ip => {
                    let at = |c| {
                        member_f(&cfg.signal, &cfg.rate, &cfg.design, &cfg.spectrum, c, &grid)
                            .map_err(from_model_error)
                    };
                    let at_dec = |c| {
                        member_f_dec(&cfg.signal, &cfg.rate, &cfg.design, &cfg.spectrum, c, &grid)
                            .map_err(from_model_error)
                    };
                    let adm =
                        admissible_f(&cfg.rate, &cfg.design, &cfg.spectrum, constants.cmax, &grid)
                            .map_err(from_model_error)?;
                    json!({
                        "member_at_upper": at(constants.cmax)?,
                        "member_at_lower": at(constants.cmin)?,
                        "member_dec_at_upper": at_dec(constants.cmax)?,
                        "member_dec_at_lower": at_dec(constants.cmin)?,
                        "admissible": adm,
                    })
                }
                DetectorKind::Dp => {
                    let mu = cfg.mu();
                    let at = |c| {
                        member_g(
                            &cfg.signal,
                            &mu,
                            &cfg.design,
                            &cfg.spectrum,
                            c,
                            &grid,
                            TriggerNorm::Plain,
                        )
                        .map_err(from_model_error)
                    };
                    let at_dec = |c| {
                        member_g_dec(&cfg.signal, &mu, &cfg.design, &cfg.spectrum, c, &grid)
                            .map_err(from_model_error)
                    };
                    let adm = admissible_g(&mu, &cfg.design, constants.cmax_p, &grid)
                        .map_err(from_model_error)?;
                    json!({
                        "member_at_upper": at(constants.cmax_p)?,
                        "member_at_lower": at(constants.cmin_p)?,
                        "member_dec_at_upper": at_dec(constants.cmax_p)?,
                        "member_dec_at_lower": at_dec(constants.cmin_p)?,
                        "admissible": adm,
                    })
                }
            };
            ("maxiset", result, true, None)
        }
        Command::Power => {
            let d = cfg
                .design
                .design_size(cfg.epsilon)
                .map_err(from_model_error)?;
            let rhos = cfg
                .rho_list
                .clone()
                .unwrap_or_else(|| vec![0.0, 0.25, 0.5, 1.0, 2.0, 4.0]);
            let curve = power_curve(
                cfg.detector,
                &cfg.signal,
                &cfg.spectrum,
                cfg.epsilon,
                d,
                level_constant(cfg.detector, &constants),
                &rhos,
                cfg.beta,
                cfg.n,
                cfg.master_seed,
            )
            .map_err(from_mc_error)?;
            let pass = curve.flagged_decreases.is_empty();
            let csv = curve.to_csv();
            ("power", json!({ "curve": curve }), pass, Some(csv))
        }
        Command::Compare => {
            let rep = compare_ip_dp(
                &cfg.spectrum,
                cfg.smoothness,
                cfg.ill_posedness,
                &cfg.grid(),
                &constants,
                cfg.n,
                cfg.master_seed,
            )
            .map_err(from_mc_error)?;
            ("compare", json!({ "comparison": rep }), true, None)
        }
        Command::Verify { target } => {
            let (result, pass) = run_verify(*target, cfg, &constants)?;
            ("verify", result, pass, None)
        }
    };
    let payload = render(cfg, &constants, name, &result, pass, csv)?;
    Ok(Outcome { payload, pass })
}

fn run_verify(
    target: VerifyTarget,
    cfg: &ExperimentConfig,
    constants: &ConstantSet,
) -> Result<(Value, bool), RunError> {
    match target {
        VerifyTarget::IpBound | VerifyTarget::DpBound => {
            let d = cfg
                .design
                .design_size(cfg.epsilon)
                .map_err(from_model_error)?;
            let run = |case| match target {
                VerifyTarget::IpBound => verify_ip_bound(
                    case,
                    &cfg.spectrum,
                    cfg.epsilon,
                    d,
                    constants,
                    cfg.beta,
                    cfg.margin,
                    cfg.n,
                    cfg.master_seed,
                ),
                _ => verify_dp_bound(
                    case,
                    &cfg.spectrum,
                    cfg.epsilon,
                    d,
                    constants,
                    cfg.beta,
                    cfg.margin,
                    cfg.n,
                    cfg.master_seed,
                ),
            };
            let above = run(BoundCase::AboveUpper).map_err(from_mc_error)?;
            let below = run(BoundCase::BelowLower).map_err(from_mc_error)?;
            let pass = above.pass && below.pass;
            Ok((json!({ "above_upper": above, "below_lower": below }), pass))
        }
        VerifyTarget::Sandwich => {
            let (rate, side) = match cfg.detector {
                DetectorKind::Ip => (cfg.rate.clone(), DetectorKind::Ip),
                DetectorKind::Dp => (cfg.mu(), DetectorKind::Dp),
            };
            let rep = verify_sandwich(
                side,
                &cfg.signal,
                &rate,
                &cfg.design,
                &cfg.spectrum,
                constants,
                cfg.beta,
                &cfg.grid(),
                cfg.n,
                cfg.master_seed,
            )
            .map_err(from_mc_error)?;
            let pass = rep.pass;
            Ok((json!({ "sandwich": rep }), pass))
        }
        VerifyTarget::Embedding => {
            let rep = check_embedding_condition(
                &cfg.spectrum,
                constants.cmin,
                constants.cmax_p,
                cfg.k_max,
            )
            .map_err(from_model_error)?;
            let pass = rep.holds;
            Ok((json!({ "embedding": rep }), pass))
        }
        VerifyTarget::TailGrowth => {
            let s = cfg.smoothness;
            let t = cfg.ill_posedness;
            let sig = Signal::dyadic_block(s, 1.0).map_err(from_model_error)?;
            let weighted =
                besov_sup_functional(&sig, 2.0 * (s + t), Some(&cfg.spectrum), &dyadic_cutoffs(20));
            let unweighted = besov_sup_functional(&sig, 2.0 * s, None, &dyadic_cutoffs(20));
            let pass = weighted.rows.iter().all(|&(_, v)| v.is_finite())
                && unweighted.rows.iter().all(|&(_, v)| v.is_finite());
            Ok((
                json!({ "weighted": weighted, "unweighted": unweighted }),
                pass,
            ))
        }
    }
}

fn render(
    cfg: &ExperimentConfig,
    constants: &ConstantSet,
    command: &str,
    result: &Value,
    pass: bool,
    csv: Option<String>,
) -> Result<String, RunError> {
    match cfg.format {
        OutputFormat::Json => {
            let doc = json!({
                "command": command,
                "config": cfg,
                "constants": constants,
                "result": result,
                "pass": pass,
            });
            Ok(serde_json::to_string(&doc).expect("serializable"))
        }
        OutputFormat::Csv => csv.ok_or_else(|| {
            RunError::Config("csv output is only available for the power command".into())
        }),
        OutputFormat::Text => {
            let mut out = String::new();
            let _ = writeln!(out, "command: {command}");
            let _ = writeln!(
                out,
                "detector: {:?}, alpha {}, beta {}, n {}, seed {}",
                cfg.detector, cfg.alpha, cfg.beta, cfg.n, cfg.master_seed
            );
            let _ = writeln!(
                out,
                "constants: C1 {:.6} C2 {:.6} upper {:.6} lower {:.6} upper' {:.6} lower' {:.6}",
                constants.c1,
                constants.c2,
                constants.cmax,
                constants.cmin,
                constants.cmax_p,
                constants.cmin_p
            );
            let grid = cfg.grid();
            let _ = writeln!(
                out,
                "checked ranges: eps grid {:.6}..{:.6} ({} points), k <= {} \
                 (finite stand-ins for the universal quantifiers)",
                grid.points()[0],
                grid.points()[grid.len() - 1],
                grid.len(),
                cfg.k_max
            );
            let _ = writeln!(
                out,
                "result: {}",
                serde_json::to_string_pretty(result).expect("serializable")
            );
            let _ = writeln!(out, "status: {}", if pass { "PASS" } else { "FAIL" });
            Ok(out)
        }
    }
}

/// Full entry point: parses arguments, runs, writes output, returns the
/// process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let benign = matches!(
                err.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = err.print();
            return if benign { 0 } else { 2 };
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            if let Some(path) = &cli.out {
                if let Err(e) = std::fs::write(path, &outcome.payload) {
                    eprintln!("cannot write {}: {e}", path.display());
                    return 2;
                }
            } else {
                print!("{}", outcome.payload);
                if !outcome.payload.ends_with('\n') {
                    println!();
                }
            }
            i32::from(!outcome.pass)
        }
        Err(err) => {
            eprintln!("{}", err.message());
            err.exit_code()
        }
    }
}
