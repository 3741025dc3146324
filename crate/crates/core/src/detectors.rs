//! The IP and DP chi-square test statistics, their thresholds, and the
//! calibration constants controlling Type-I and Type-II errors.
//!
//! The inverse procedure rejects when
//! `T_D = sum b_k^{-2} (y_k^2 - eps^2)` strictly exceeds
//! `C1 eps^2 sqrt(sum b_k^{-4})`; the direct procedure uses the unweighted
//! statistic `S_D = sum (y_k^2 - eps^2)` against `C2 eps^2 sqrt(D)`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelError, OperatorSpectrum};
use crate::seed::replication_rng;

#[derive(Debug, Error)]
pub enum DetectorError {
    #[error("need {needed} observations, got {got}")]
    LengthMismatch { needed: u64, got: usize },
    #[error("alpha must lie in (0, 1/2), got {0}")]
    InvalidAlpha(f64),
    #[error("beta must lie in (0, 1/2), got {0}")]
    InvalidBeta(f64),
    #[error(
        "threshold constant {c1} is too small for the Type-II lower bound: \
         need C >= 4*sqrt(-log(1-beta)) = {required}"
    )]
    ConstantTooSmall { c1: f64, required: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Which chi-square statistic a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    /// Inverse: coefficients reweighted by `b_k^{-2}`.
    Ip,
    /// Direct: raw coefficients.
    Dp,
}

/// How the Type-I constants `C1` (IP) and `C2` (DP) are obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum CalibrationMode {
    /// `sqrt(2/alpha)`, the constant implicit in the Chebyshev bound on the
    /// null variance. Conservative but universally valid.
    Chebyshev,
    /// Empirical `(1-alpha)` quantile of the normalized null statistic over
    /// `n` replications. The statistic is normalized by
    /// `eps^2 sqrt(sum b^{-4})` (resp. `eps^2 sqrt(D)`), so the calibrated
    /// constant is free of `eps` and one calibration serves the whole grid.
    MonteCarlo { n: u64, seed: u64 },
    /// Caller-supplied constants.
    Explicit { c1: f64, c2: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub alpha: f64,
    pub beta: f64,
    pub calibration: CalibrationMode,
}

impl DetectorConfig {
    pub fn new(alpha: f64, beta: f64, calibration: CalibrationMode) -> Result<Self, DetectorError> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(DetectorError::InvalidAlpha(alpha));
        }
        if !(beta > 0.0 && beta < 0.5) {
            return Err(DetectorError::InvalidBeta(beta));
        }
        Ok(DetectorConfig {
            alpha,
            beta,
            calibration,
        })
    }
}

/// The resolved constants of one detector configuration.
///
/// `cmax`/`cmin` bound the IP Type-II behaviour; the primed pair is obtained
/// from the same formulas with `C1` replaced by `C2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantSet {
    pub c1: f64,
    pub c2: f64,
    pub cmax: f64,
    pub cmin: f64,
    pub cmax_p: f64,
    pub cmin_p: f64,
}

/// Outcome of applying a detector to one observation vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestDecision {
    pub reject: bool,
    pub statistic: f64,
    pub threshold: f64,
}

impl TestDecision {
    pub fn from_parts(statistic: f64, threshold: f64) -> Self {
        TestDecision {
            // ties do not reject: the rejection region is a strict inequality
            reject: statistic > threshold,
            statistic,
            threshold,
        }
    }
}

/// `T_D = sum_{k=1}^{D} b_k^{-2} (y_k^2 - eps^2)`.
pub fn statistic_ip(
    y: &[f64],
    spec: &OperatorSpectrum,
    eps: f64,
    d: u64,
) -> Result<f64, DetectorError> {
    if (y.len() as u64) < d {
        return Err(DetectorError::LengthMismatch {
            needed: d,
            got: y.len(),
        });
    }
    let e2 = eps * eps;
    let mut sum = 0.0;
    for k in 1..=d {
        let b = spec.value(k);
        let yk = y[(k - 1) as usize];
        sum += (yk * yk - e2) / (b * b);
    }
    Ok(sum)
}

/// `S_D = sum_{k=1}^{D} (y_k^2 - eps^2)`.
pub fn statistic_dp(y: &[f64], eps: f64, d: u64) -> Result<f64, DetectorError> {
    statistic_ip(y, &OperatorSpectrum::Identity, eps, d)
}

/// `t_{alpha,eps} = C1 eps^2 sqrt(sum_{k<=D} b_k^{-4})`.
pub fn threshold_ip(
    c1: f64,
    eps: f64,
    spec: &OperatorSpectrum,
    d: u64,
) -> Result<f64, DetectorError> {
    Ok(c1 * eps * eps * spec.prefix_sum_inv4(d)?.sqrt())
}

/// `s_{alpha,eps} = C2 eps^2 sqrt(D)`.
pub fn threshold_dp(c2: f64, eps: f64, d: u64) -> f64 {
    c2 * eps * eps * (d as f64).sqrt()
}

pub fn test_ip(
    y: &[f64],
    spec: &OperatorSpectrum,
    eps: f64,
    d: u64,
    c1: f64,
) -> Result<TestDecision, DetectorError> {
    let statistic = statistic_ip(y, spec, eps, d)?;
    let threshold = threshold_ip(c1, eps, spec, d)?;
    Ok(TestDecision::from_parts(statistic, threshold))
}

pub fn test_dp(y: &[f64], eps: f64, d: u64, c2: f64) -> Result<TestDecision, DetectorError> {
    let statistic = statistic_dp(y, eps, d)?;
    let threshold = threshold_dp(c2, eps, d);
    Ok(TestDecision::from_parts(statistic, threshold))
}

fn check_alpha(alpha: f64) -> Result<(), DetectorError> {
    if alpha > 0.0 && alpha < 0.5 {
        Ok(())
    } else {
        Err(DetectorError::InvalidAlpha(alpha))
    }
}

/// Type-I constant for the IP threshold.
///
/// Chebyshev mode returns `sqrt(2/alpha)`: under the null,
/// `Var(T_D) = 2 eps^4 sum b^{-4}`, so Chebyshev gives
/// `P(T > C1 eps^2 sqrt(sum b^{-4})) <= 2/C1^2 = alpha`.
pub fn calibrate_c1(
    mode: &CalibrationMode,
    alpha: f64,
    spec: &OperatorSpectrum,
    d: u64,
) -> Result<f64, DetectorError> {
    check_alpha(alpha)?;
    match mode {
        CalibrationMode::Chebyshev => Ok((2.0 / alpha).sqrt()),
        CalibrationMode::Explicit { c1, .. } => Ok(*c1),
        CalibrationMode::MonteCarlo { n, seed } => {
            mc_null_quantile(alpha, spec, d, *n, *seed).map_err(Into::into)
        }
    }
}

/// Type-I constant for the DP threshold; the DP null statistic is the IP one
/// with `b == 1`.
pub fn calibrate_c2(mode: &CalibrationMode, alpha: f64, d: u64) -> Result<f64, DetectorError> {
    check_alpha(alpha)?;
    match mode {
        CalibrationMode::Chebyshev => Ok((2.0 / alpha).sqrt()),
        CalibrationMode::Explicit { c2, .. } => Ok(*c2),
        CalibrationMode::MonteCarlo { n, seed } => {
            mc_null_quantile(alpha, &OperatorSpectrum::Identity, d, *n, *seed).map_err(Into::into)
        }
    }
}

/// Empirical `(1-alpha)` quantile of the eps-free normalized null statistic
/// `sum b_k^{-2} (xi_k^2 - 1) / sqrt(sum b_k^{-4})`.
///
/// Replications use derived per-index seeds and an index-ordered collect, so
/// the result is identical under any thread count.
fn mc_null_quantile(
    alpha: f64,
    spec: &OperatorSpectrum,
    d: u64,
    n: u64,
    seed: u64,
) -> Result<f64, ModelError> {
    assert!(n >= 1);
    let weights: Vec<f64> = (1..=d).map(|k| spec.value(k).powi(-2)).collect();
    let norm = spec.prefix_sum_inv4(d)?.sqrt();
    let mut stats: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = replication_rng(seed, i);
            let mut sum = 0.0;
            for w in &weights {
                let xi: f64 = rng.sample(StandardNormal);
                sum += w * (xi * xi - 1.0);
            }
            sum / norm
        })
        .collect();
    stats.sort_unstable_by(f64::total_cmp);
    // smallest value with at least ceil((1-alpha) n) samples below or equal
    let idx = (((1.0 - alpha) * n as f64).ceil() as usize).clamp(1, n as usize) - 1;
    Ok(stats[idx])
}

/// `C_max`: the maximum of `C1` and the positive root of
/// `(2 + 4C) / (C - C1)^2 = beta`, i.e. of
/// `beta C^2 - (2 beta C1 + 4) C + (beta C1^2 - 2) = 0`.
pub fn c_max(c1: f64, beta: f64) -> f64 {
    debug_assert!(c1 > 0.0 && beta > 0.0 && beta < 0.5 + 1e-12);
    let b = 2.0 * beta * c1 + 4.0;
    let c = beta * c1 * c1 - 2.0;
    // larger root; b > 0 so adding sqrt(disc) avoids cancellation
    let disc = b * b - 4.0 * beta * c;
    let root = (b + disc.sqrt()) / (2.0 * beta);
    root.max(c1)
}

/// `C_min`, evaluated verbatim as
/// `( sqrt(-2 log(1-beta) + (C1 - 4 sqrt(-log(1-beta)))) - sqrt(-2 log(1-beta)) )^{1/2}`.
///
/// Requires `C1 >= 4 sqrt(-log(1-beta))`; below that the nested square roots
/// leave the real line and the constant is undefined.
pub fn c_min(c1: f64, beta: f64) -> Result<f64, DetectorError> {
    let x = -(1.0 - beta).ln();
    let required = 4.0 * x.sqrt();
    let inner = 2.0 * x + c1 - required;
    if inner < 0.0 || inner < 2.0 * x {
        return Err(DetectorError::ConstantTooSmall { c1, required });
    }
    Ok((inner.sqrt() - (2.0 * x).sqrt()).sqrt())
}

/// Resolves the full constant set: `C1`/`C2` by calibration, `cmax`/`cmin`
/// from `(C1, beta)`, and the primed pair from `(C2, beta)`.
pub fn resolve_constants(
    cfg: &DetectorConfig,
    spec: &OperatorSpectrum,
    d: u64,
) -> Result<ConstantSet, DetectorError> {
    let c1 = calibrate_c1(&cfg.calibration, cfg.alpha, spec, d)?;
    let c2 = calibrate_c2(&cfg.calibration, cfg.alpha, d)?;
    Ok(ConstantSet {
        c1,
        c2,
        cmax: c_max(c1, cfg.beta),
        cmin: c_min(c1, cfg.beta)?,
        cmax_p: c_max(c2, cfg.beta),
        cmin_p: c_min(c2, cfg.beta)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_observations, Signal};

    #[test]
    fn ip_statistic_examples() {
        let id = OperatorSpectrum::Identity;
        assert_eq!(statistic_ip(&[0.0; 3], &id, 1.0, 3).unwrap(), -3.0);
        let y = vec![0.5; 7];
        assert_eq!(statistic_ip(&y, &id, 0.5, 7).unwrap(), 0.0);
        let t1 = OperatorSpectrum::mildly_ill_posed(1.0).unwrap();
        // 1*(4-1) + 16*(1-1) = 3
        assert!((statistic_ip(&[2.0, 1.0], &t1, 1.0, 2).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn dp_statistic_examples() {
        assert_eq!(statistic_dp(&[0.0; 5], 1.0, 5).unwrap(), -5.0);
        assert!((statistic_dp(&[2.0, 1.0], 1.0, 2).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn dp_equals_ip_with_identity_bitwise() {
        let y = sample_observations(
            &Signal::power_decay(1.0, 1.0).unwrap(),
            &OperatorSpectrum::Identity,
            0.3,
            64,
            11,
        );
        let a = statistic_dp(&y, 0.3, 64).unwrap();
        let b = statistic_ip(&y, &OperatorSpectrum::Identity, 0.3, 64).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn short_observation_vector_errors() {
        let id = OperatorSpectrum::Identity;
        assert!(matches!(
            statistic_ip(&[1.0, 2.0], &id, 1.0, 3),
            Err(DetectorError::LengthMismatch { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn threshold_examples() {
        let id = OperatorSpectrum::Identity;
        assert_eq!(threshold_ip(0.0, 0.7, &id, 5).unwrap(), 0.0);
        assert!((threshold_ip(2.0, 0.5, &id, 16).unwrap() - 2.0).abs() < 1e-12);
        let half = OperatorSpectrum::mildly_ill_posed(0.5).unwrap();
        assert!((threshold_ip(1.0, 1.0, &half, 3).unwrap() - 14.0f64.sqrt()).abs() < 1e-12);
        assert_eq!(threshold_dp(0.0, 0.2, 9), 0.0);
        assert_eq!(threshold_dp(1.0, 1.0, 9), 3.0);
        assert!((threshold_dp(1.4, 0.1, 100) - 0.14).abs() < 1e-12);
    }

    #[test]
    fn threshold_scales_as_eps_squared() {
        let spec = OperatorSpectrum::mildly_ill_posed(1.0).unwrap();
        let base = threshold_ip(2.5, 1.0, &spec, 20).unwrap();
        for eps in [0.5, 0.1, 0.01] {
            let t = threshold_ip(2.5, eps, &spec, 20).unwrap();
            assert!((t - base * eps * eps).abs() <= 1e-12 * base);
        }
    }

    #[test]
    fn tie_does_not_reject() {
        // y with y_1^2 = eps^2 + threshold makes the statistic equal the
        // threshold exactly when b == 1 and the rest of y equals eps
        let id = OperatorSpectrum::Identity;
        let eps = 1.0;
        let thr = threshold_ip(1.0, eps, &id, 3).unwrap();
        let mut y = vec![eps; 3];
        y[0] = (eps * eps + thr).sqrt();
        let dec = test_ip(&y, &id, eps, 3, 1.0).unwrap();
        assert!((dec.statistic - dec.threshold).abs() < 1e-12);
        if dec.statistic == dec.threshold {
            assert!(!dec.reject);
        }
    }

    #[test]
    fn constructed_exceedance_rejects() {
        let id = OperatorSpectrum::Identity;
        let eps = 0.5;
        let thr = threshold_ip(2.0, eps, &id, 4).unwrap();
        let mut y = vec![eps; 4];
        y[0] = (eps * eps + 10.0 * thr).sqrt();
        assert!(test_ip(&y, &id, eps, 4, 2.0).unwrap().reject);
        assert!(!test_ip(&[0.0; 4], &id, eps, 4, 2.0).unwrap().reject);
    }

    #[test]
    fn chebyshev_constants() {
        let id = OperatorSpectrum::Identity;
        let c = calibrate_c1(&CalibrationMode::Chebyshev, 0.08, &id, 1).unwrap();
        assert!((c - 5.0).abs() < 1e-12);
        let c = calibrate_c1(&CalibrationMode::Chebyshev, 0.05, &id, 1).unwrap();
        assert!((c - 40.0f64.sqrt()).abs() < 1e-12);
        assert!(matches!(
            calibrate_c1(&CalibrationMode::Chebyshev, 0.5, &id, 1),
            Err(DetectorError::InvalidAlpha(_))
        ));
    }

    #[test]
    fn monte_carlo_quantile_matches_chi_square() {
        // D = 1, Identity: normalized statistic is xi^2 - 1, whose 0.95
        // quantile is the chi-square(1) quantile 3.8415 minus 1
        let mode = CalibrationMode::MonteCarlo {
            n: 1_000_000,
            seed: 31,
        };
        let c = calibrate_c1(&mode, 0.05, &OperatorSpectrum::Identity, 1).unwrap();
        assert!((c - 2.8415).abs() < 0.02, "got {c}");
    }

    #[test]
    fn monte_carlo_quantile_deterministic_across_pools() {
        let mode = CalibrationMode::MonteCarlo { n: 20_000, seed: 5 };
        let spec = OperatorSpectrum::mildly_ill_posed(0.5).unwrap();
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| calibrate_c1(&mode, 0.1, &spec, 10).unwrap())
        };
        assert_eq!(run(1).to_bits(), run(4).to_bits());
    }

    #[test]
    fn c_max_examples() {
        // (2 + 48)/(12 - 2)^2 = 0.5 exactly
        assert!((c_max(2.0, 0.5) - 12.0).abs() < 1e-9);
        // root of C^2 - 42C - 19 = 0
        let expected = (42.0 + (42.0f64 * 42.0 + 4.0 * 19.0).sqrt()) / 2.0;
        assert!((c_max(1.0, 0.1) - expected).abs() < 1e-9);
        assert!((expected - 42.4476).abs() < 1e-3);
        for &(c1, beta) in &[(0.1, 0.49), (5.0, 0.01), (100.0, 0.3)] {
            assert!(c_max(c1, beta) >= c1);
        }
    }

    #[test]
    fn c_max_root_substitutes_back() {
        for &(c1, beta) in &[(2.0, 0.5), (1.0, 0.1), (6.32, 0.1), (10.0, 0.01)] {
            let c = c_max(c1, beta);
            if c > c1 {
                let lhs = (2.0 + 4.0 * c) / ((c - c1) * (c - c1));
                assert!((lhs - beta).abs() < 1e-9, "c1={c1} beta={beta}");
            }
        }
    }

    #[test]
    fn c_min_examples() {
        let c = c_min(10.0, 0.1).unwrap();
        assert!((c - 1.5894).abs() < 5e-4, "got {c}");
        assert!(matches!(
            c_min(1.0, 0.1),
            Err(DetectorError::ConstantTooSmall { .. })
        ));
    }

    #[test]
    fn c_min_below_c_max() {
        for &(c1, beta) in &[(10.0, 0.1), (6.32, 0.05), (20.0, 0.4), (5.0, 0.2)] {
            let lo = c_min(c1, beta).unwrap();
            let hi = c_max(c1, beta);
            assert!(lo < hi, "c1={c1} beta={beta}: {lo} vs {hi}");
        }
    }

    #[test]
    fn resolve_constants_symmetry() {
        let cfg = DetectorConfig::new(
            0.05,
            0.1,
            CalibrationMode::Explicit { c1: 10.0, c2: 10.0 },
        )
        .unwrap();
        let set = resolve_constants(&cfg, &OperatorSpectrum::Identity, 5).unwrap();
        assert_eq!(set.cmin, set.cmin_p);
        assert_eq!(set.cmax, set.cmax_p);
        assert!((set.cmin - 1.5894).abs() < 5e-4);

        let cheb = DetectorConfig::new(0.05, 0.1, CalibrationMode::Chebyshev).unwrap();
        let set = resolve_constants(&cheb, &OperatorSpectrum::Identity, 5).unwrap();
        assert!((set.c1 - 40.0f64.sqrt()).abs() < 1e-12);
        assert_eq!(set.c1, set.c2);
        assert!(set.cmin > 0.0 && set.cmax > set.cmin);
    }
}
