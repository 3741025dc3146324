//! Seeded Monte Carlo estimation of Type-I and Type-II error probabilities,
//! and the verification experiments built on it: the single-spike Type-II
//! bound checks for both detectors, the membership-versus-detection sandwich
//! cross-check, power curves, and the side-by-side IP/DP comparison.
//!
//! Every estimate is a pure function of its inputs and a 64-bit master seed.
//! Replication `i` uses the RNG stream [`replication_rng`]`(master, i)`, and
//! rejections are reduced as integer counts, so results are bit-identical
//! under any thread count.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detectors::{
    threshold_dp, threshold_ip, ConstantSet, DetectorError, DetectorKind, TestDecision,
};
use crate::maxisets::{
    member_f, member_f_dec, member_g, member_g_dec, mu_from_r, MembershipVerdict, TriggerNorm,
};
use crate::model::{
    DesignSchedule, EpsilonGrid, ModelError, OperatorSpectrum, RateSchedule, Signal,
};
use crate::seed::replication_rng;

#[derive(Debug, Error)]
pub enum McError {
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("constraint unsatisfiable: {0}")]
    ConstraintUnsatisfiable(String),
}

/// An empirical probability with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub p_hat: f64,
    /// Number of replications counted into `p_hat`.
    pub count: u64,
    pub n: u64,
    pub se: f64,
    pub master_seed: u64,
}

impl McEstimate {
    fn from_count(count: u64, n: u64, master_seed: u64) -> Self {
        debug_assert!(count <= n && n >= 1);
        let p_hat = count as f64 / n as f64;
        McEstimate {
            p_hat,
            count,
            n,
            se: (p_hat * (1.0 - p_hat) / n as f64).sqrt(),
            master_seed,
        }
    }
}

/// Precomputed per-coordinate state for one detector at fixed
/// `(signal, spectrum, eps, D, constant)`.
///
/// A single replication reproduces, bit for bit, the pipeline
/// `sample_observations` -> `statistic_*` -> `test_*` for the replication's
/// derived seed.
struct DetectorSim {
    means: Vec<f64>,
    bsq: Vec<f64>,
    eps: f64,
    threshold: f64,
}

impl DetectorSim {
    fn new(
        kind: DetectorKind,
        sig: &Signal,
        spec: &OperatorSpectrum,
        eps: f64,
        d: u64,
        constant: f64,
    ) -> Result<Self, DetectorError> {
        assert!(d >= 1);
        assert!(eps > 0.0 && eps <= 1.0, "noise level must be in (0, 1]");
        let means: Vec<f64> = (1..=d).map(|k| spec.value(k) * sig.coordinate(k)).collect();
        let bsq: Vec<f64> = match kind {
            DetectorKind::Ip => (1..=d)
                .map(|k| {
                    let b = spec.value(k);
                    b * b
                })
                .collect(),
            DetectorKind::Dp => vec![1.0; d as usize],
        };
        let threshold = match kind {
            DetectorKind::Ip => threshold_ip(constant, eps, spec, d)?,
            DetectorKind::Dp => threshold_dp(constant, eps, d),
        };
        Ok(DetectorSim {
            means,
            bsq,
            eps,
            threshold,
        })
    }

    fn statistic(&self, rng: &mut impl Rng) -> f64 {
        let e2 = self.eps * self.eps;
        let mut sum = 0.0;
        for (m, bsq) in self.means.iter().zip(&self.bsq) {
            let xi: f64 = rng.sample(StandardNormal);
            let y = m + self.eps * xi;
            sum += (y * y - e2) / bsq;
        }
        sum
    }

    fn rejects(&self, rng: &mut impl Rng) -> bool {
        TestDecision::from_parts(self.statistic(rng), self.threshold).reject
    }
}

fn count_rejections(sim: &DetectorSim, n: u64, seed: u64) -> u64 {
    assert!(n >= 1);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = replication_rng(seed, i);
            u64::from(sim.rejects(&mut rng))
        })
        .sum()
}

/// Counts rejections for both detectors on shared observation draws: each
/// replication samples one `y` and evaluates both statistics on it.
fn count_rejections_both(ip: &DetectorSim, dp: &DetectorSim, n: u64, seed: u64) -> (u64, u64) {
    assert!(n >= 1);
    assert_eq!(ip.means.len(), dp.means.len());
    assert_eq!(ip.eps, dp.eps);
    let e2 = ip.eps * ip.eps;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = replication_rng(seed, i);
            let mut t_ip = 0.0;
            let mut t_dp = 0.0;
            for ((m, bsq), bsq_dp) in ip.means.iter().zip(&ip.bsq).zip(&dp.bsq) {
                let xi: f64 = rng.sample(StandardNormal);
                let y = m + ip.eps * xi;
                let centered = y * y - e2;
                t_ip += centered / bsq;
                t_dp += centered / bsq_dp;
            }
            let r_ip = u64::from(TestDecision::from_parts(t_ip, ip.threshold).reject);
            let r_dp = u64::from(TestDecision::from_parts(t_dp, dp.threshold).reject);
            (r_ip, r_dp)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
}

/// Empirical Type-I error: rejection rate over `n` zero-signal replications.
pub fn estimate_type1(
    kind: DetectorKind,
    spec: &OperatorSpectrum,
    eps: f64,
    d: u64,
    constant: f64,
    n: u64,
    seed: u64,
) -> Result<McEstimate, DetectorError> {
    let sim = DetectorSim::new(kind, &Signal::zero(), spec, eps, d, constant)?;
    Ok(McEstimate::from_count(
        count_rejections(&sim, n, seed),
        n,
        seed,
    ))
}

/// Empirical Type-II error: acceptance rate over `n` replications under
/// `sig`. On the zero signal with the same seed this is exactly the
/// complement of [`estimate_type1`] (same replication set).
pub fn estimate_type2(
    kind: DetectorKind,
    sig: &Signal,
    spec: &OperatorSpectrum,
    eps: f64,
    d: u64,
    constant: f64,
    n: u64,
    seed: u64,
) -> Result<McEstimate, DetectorError> {
    let sim = DetectorSim::new(kind, sig, spec, eps, d, constant)?;
    let rejections = count_rejections(&sim, n, seed);
    Ok(McEstimate::from_count(n - rejections, n, seed))
}

/// Which side of the detection-constant pair a verification witness sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundCase {
    /// Energy `(1 + margin)` times the upper-constant bound; the detector
    /// must reject with Type-II at most `beta` (plus buffer).
    AboveUpper,
    /// Energy `(1 - margin)` times the lower-constant bound; the detector
    /// must miss with Type-II above `beta` (minus buffer).
    BelowLower,
}

/// Outcome of one single-spike Type-II bound check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub detector: DetectorKind,
    pub case: BoundCase,
    pub beta: f64,
    pub margin: f64,
    /// The upper or lower detection constant the witness is scaled against.
    pub bound_constant: f64,
    /// Spike energy in the norm the bound is stated in (plain for IP,
    /// `b^2`-weighted for DP).
    pub target_energy: f64,
    pub spike_index: u64,
    pub type2: McEstimate,
    pub pass: bool,
}

fn bound_pass(case: BoundCase, type2: &McEstimate, beta: f64) -> bool {
    match case {
        BoundCase::AboveUpper => type2.p_hat <= beta + 3.0 * type2.se,
        BoundCase::BelowLower => type2.p_hat > beta - 3.0 * type2.se,
    }
}

fn case_factor(case: BoundCase, margin: f64) -> Result<f64, McError> {
    if margin < 0.0 {
        return Err(McError::ConstraintUnsatisfiable(format!(
            "margin must be nonnegative, got {margin}"
        )));
    }
    Ok(match case {
        BoundCase::AboveUpper => 1.0 + margin,
        BoundCase::BelowLower => 1.0 - margin,
    })
}

/// Checks the IP Type-II bound pair with a single-spike witness at `k = D`:
/// prefix energy `(1 ± margin)` times `C eps^2 sqrt(sum b^{-4})` with `C` the
/// upper (reject) or lower (miss) constant.
///
/// The spike position is the stress case: it carries the largest noise
/// amplification `b_D^{-2}` of any in-window coordinate, and the bound is
/// position-free.
pub fn verify_ip_bound(
    case: BoundCase,
    spec: &OperatorSpectrum,
    eps: f64,
    d: u64,
    constants: &ConstantSet,
    beta: f64,
    margin: f64,
    n: u64,
    seed: u64,
) -> Result<BoundReport, McError> {
    let factor = case_factor(case, margin)?;
    let bound_constant = match case {
        BoundCase::AboveUpper => constants.cmax,
        BoundCase::BelowLower => constants.cmin,
    };
    let target_energy = factor * bound_constant * eps * eps * spec.prefix_sum_inv4(d)?.sqrt();
    let sig = Signal::spike(d, target_energy);
    let type2 = estimate_type2(DetectorKind::Ip, &sig, spec, eps, d, constants.c1, n, seed)?;
    Ok(BoundReport {
        detector: DetectorKind::Ip,
        case,
        beta,
        margin,
        bound_constant,
        target_energy,
        spike_index: d,
        type2,
        pass: bound_pass(case, &type2, beta),
    })
}

/// DP counterpart of [`verify_ip_bound`]: the witness spike carries
/// `b^2`-weighted energy `(1 ± margin)` times `C' eps^2 sqrt(D)`.
pub fn verify_dp_bound(
    case: BoundCase,
    spec: &OperatorSpectrum,
    eps: f64,
    d: u64,
    constants: &ConstantSet,
    beta: f64,
    margin: f64,
    n: u64,
    seed: u64,
) -> Result<BoundReport, McError> {
    let factor = case_factor(case, margin)?;
    let bound_constant = match case {
        BoundCase::AboveUpper => constants.cmax_p,
        BoundCase::BelowLower => constants.cmin_p,
    };
    let weighted_energy = factor * bound_constant * eps * eps * (d as f64).sqrt();
    let b = spec.value(d);
    let sig = Signal::spike(d, weighted_energy / (b * b));
    let type2 = estimate_type2(DetectorKind::Dp, &sig, spec, eps, d, constants.c2, n, seed)?;
    Ok(BoundReport {
        detector: DetectorKind::Dp,
        case,
        beta,
        margin,
        bound_constant,
        target_energy: weighted_energy,
        spike_index: d,
        type2,
        pass: bound_pass(case, &type2, beta),
    })
}

/// One grid point of a sandwich cross-check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichRow {
    pub epsilon: f64,
    pub d: u64,
    /// Whether the energy condition `||theta||^2 >= rate(eps)^2` fires here.
    pub triggered: bool,
    /// Empirical Type-II error; only simulated at triggered grid points.
    pub type2: Option<McEstimate>,
}

/// Cross-tabulation of membership verdicts against empirical detection.
///
/// Coherence demands: a member at the upper constant is detected (Type-II at
/// most `beta` plus buffer) at every triggered grid point, and a lower-
/// constant violation coincides with a miss (Type-II above `beta` minus
/// buffer) at the violating point. `pass` is the conjunction of both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub side: DetectorKind,
    pub beta: f64,
    pub member_at_upper: MembershipVerdict,
    pub member_at_lower: MembershipVerdict,
    pub member_dec_at_upper: MembershipVerdict,
    pub member_dec_at_lower: MembershipVerdict,
    pub rows: Vec<SandwichRow>,
    pub pass: bool,
}

/// Runs the sandwich cross-check for one signal. For the IP side `rate` is
/// the energy radius schedule `r`; for the DP side it is the weighted radius
/// schedule `mu`.
#[allow(clippy::too_many_arguments)]
pub fn verify_sandwich(
    side: DetectorKind,
    sig: &Signal,
    rate: &RateSchedule,
    design: &DesignSchedule,
    spec: &OperatorSpectrum,
    constants: &ConstantSet,
    beta: f64,
    grid: &EpsilonGrid,
    n: u64,
    seed: u64,
) -> Result<SandwichReport, McError> {
    let (upper_c, lower_c, level_c) = match side {
        DetectorKind::Ip => (constants.cmax, constants.cmin, constants.c1),
        DetectorKind::Dp => (constants.cmax_p, constants.cmin_p, constants.c2),
    };
    let member = |c: f64| -> Result<MembershipVerdict, ModelError> {
        match side {
            DetectorKind::Ip => member_f(sig, rate, design, spec, c, grid),
            DetectorKind::Dp => member_g(sig, rate, design, spec, c, grid, TriggerNorm::Plain),
        }
    };
    let member_dec = |c: f64| -> Result<MembershipVerdict, ModelError> {
        match side {
            DetectorKind::Ip => member_f_dec(sig, rate, design, spec, c, grid),
            DetectorKind::Dp => member_g_dec(sig, rate, design, spec, c, grid),
        }
    };
    let member_at_upper = member(upper_c)?;
    let member_at_lower = member(lower_c)?;
    let member_dec_at_upper = member_dec(upper_c)?;
    let member_dec_at_lower = member_dec(lower_c)?;

    let total = sig.total_energy();
    let mut rows = Vec::with_capacity(grid.len());
    for (i, &eps) in grid.points().iter().enumerate() {
        let r = rate.rate(eps)?;
        let d = design.design_size(eps)?;
        let triggered = total >= r * r;
        let type2 = if triggered {
            let eps_seed = crate::seed::derive_seed(seed, i as u64);
            Some(estimate_type2(
                side, sig, spec, eps, d, level_c, n, eps_seed,
            )?)
        } else {
            None
        };
        rows.push(SandwichRow {
            epsilon: eps,
            d,
            triggered,
            type2,
        });
    }

    let upper_ok = !member_at_upper.member
        || rows.iter().all(|row| match &row.type2 {
            Some(t2) => t2.p_hat <= beta + 3.0 * t2.se,
            None => true,
        });
    let lower_ok = member_at_lower.violations.iter().all(|v| {
        rows.iter()
            .find(|row| row.epsilon == v.epsilon)
            .and_then(|row| row.type2.as_ref())
            .map_or(true, |t2| t2.p_hat > beta - 3.0 * t2.se)
    });
    Ok(SandwichReport {
        side,
        beta,
        member_at_upper,
        member_at_lower,
        member_dec_at_upper,
        member_dec_at_lower,
        rows,
        pass: upper_ok && lower_ok,
    })
}

/// The lower-inclusion counterexample: all energy pushed past the design
/// window at `eps`. A spike at `D_eps + 1` with energy `2 r_eps^2` triggers
/// the energy condition there while the statistic is blind to it.
pub fn decimation_witness(
    rate: &RateSchedule,
    design: &DesignSchedule,
    eps: f64,
) -> Result<Signal, ModelError> {
    let d = design.design_size(eps)?;
    let r = rate.rate(eps)?;
    Ok(Signal::spike(d + 1, 2.0 * r * r))
}

/// One row of a power curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub rho: f64,
    pub estimate: McEstimate,
}

/// Rejection probability as a function of the amplitude scale `rho` applied
/// to a fixed signal shape (signal `rho * theta`, energy `rho^2 ||theta||^2`).
///
/// All rows share one master seed (common random numbers), so differences
/// between rows reflect the scale, not independent noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    pub detector: DetectorKind,
    pub beta: f64,
    pub rows: Vec<PowerRow>,
    /// Smallest grid `rho` with estimated power at least `1 - beta`.
    pub separation_rho: Option<f64>,
    /// Indices `i` where power drops from row `i` to `i+1` by more than
    /// five combined standard errors.
    pub flagged_decreases: Vec<usize>,
}

impl PowerCurve {
    /// CSV payload, header `rho,p_reject,se,n,seed`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rho,p_reject,se,n,seed\n");
        for row in &self.rows {
            let e = &row.estimate;
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.rho, e.p_hat, e.se, e.n, e.master_seed
            ));
        }
        out
    }
}

/// Sweeps the rejection probability over amplitude scales. `rho = 0`
/// reproduces the Type-I rate.
#[allow(clippy::too_many_arguments)]
pub fn power_curve(
    kind: DetectorKind,
    shape: &Signal,
    spec: &OperatorSpectrum,
    eps: f64,
    d: u64,
    constant: f64,
    rho_list: &[f64],
    beta: f64,
    n: u64,
    seed: u64,
) -> Result<PowerCurve, McError> {
    assert!(!rho_list.is_empty());
    assert!(rho_list.iter().all(|&r| r.is_finite() && r >= 0.0));
    let mut rhos = rho_list.to_vec();
    rhos.sort_unstable_by(f64::total_cmp);
    let mut rows = Vec::with_capacity(rhos.len());
    for &rho in &rhos {
        let sim = DetectorSim::new(kind, &shape.scaled(rho), spec, eps, d, constant)?;
        let count = count_rejections(&sim, n, seed);
        rows.push(PowerRow {
            rho,
            estimate: McEstimate::from_count(count, n, seed),
        });
    }
    let separation_rho = rows
        .iter()
        .find(|row| row.estimate.p_hat >= 1.0 - beta)
        .map(|row| row.rho);
    let flagged_decreases = rows
        .windows(2)
        .enumerate()
        .filter(|(_, w)| {
            let (a, b) = (&w[0].estimate, &w[1].estimate);
            b.p_hat < a.p_hat - 5.0 * (a.se + b.se)
        })
        .map(|(i, _)| i)
        .collect();
    Ok(PowerCurve {
        detector: kind,
        beta,
        rows,
        separation_rho,
        flagged_decreases,
    })
}

/// One grid point of the IP/DP comparison; both Type-II estimates are
/// computed on the same observation draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub epsilon: f64,
    pub d: u64,
    pub ip_type2: McEstimate,
    pub dp_type2: McEstimate,
}

/// Side-by-side table of decimation-robust membership verdicts and empirical
/// detection for the dyadic-block signal under the smoothness-calibrated
/// schedules `D_eps`, `r_eps`, `mu_eps = b_{D_eps} r_eps`.
///
/// No ground truth is asserted: the report is the deliverable, and the
/// interesting regime is the one where the DP verdict and the IP verdict
/// disagree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub s: f64,
    pub t: f64,
    pub ip_dec_at_upper: MembershipVerdict,
    pub ip_dec_at_lower: MembershipVerdict,
    pub dp_dec_at_upper: MembershipVerdict,
    pub dp_dec_at_lower: MembershipVerdict,
    pub rows: Vec<CompareRow>,
}

/// Runs the comparison at smoothness `s` for the spectrum `b_k = k^{-t}`
/// (pass the matching `spec`; the Identity spectrum with `t = 0` is the
/// degenerate sanity case where both columns coincide).
pub fn compare_ip_dp(
    spec: &OperatorSpectrum,
    s: f64,
    t: f64,
    grid: &EpsilonGrid,
    constants: &ConstantSet,
    n: u64,
    seed: u64,
) -> Result<CompareReport, McError> {
    let design = DesignSchedule::MinimaxMip { s, t };
    let rate = RateSchedule::MinimaxIp { s, t };
    let mu = mu_from_r(&rate, &design, spec);
    let sig = Signal::dyadic_block(s, 1.0)?;
    let ip_dec_at_upper = member_f_dec(&sig, &mu, &design, spec, constants.cmax, grid)?;
    let ip_dec_at_lower = member_f_dec(&sig, &mu, &design, spec, constants.cmin, grid)?;
    let dp_dec_at_upper = member_g_dec(&sig, &mu, &design, spec, constants.cmax_p, grid)?;
    let dp_dec_at_lower = member_g_dec(&sig, &mu, &design, spec, constants.cmin_p, grid)?;
    let mut rows = Vec::with_capacity(grid.len());
    for (i, &eps) in grid.points().iter().enumerate() {
        let d = design.design_size(eps)?;
        let ip = DetectorSim::new(DetectorKind::Ip, &sig, spec, eps, d, constants.c1)?;
        let dp = DetectorSim::new(DetectorKind::Dp, &sig, spec, eps, d, constants.c2)?;
        let eps_seed = crate::seed::derive_seed(seed, i as u64);
        let (rej_ip, rej_dp) = count_rejections_both(&ip, &dp, n, eps_seed);
        rows.push(CompareRow {
            epsilon: eps,
            d,
            ip_type2: McEstimate::from_count(n - rej_ip, n, eps_seed),
            dp_type2: McEstimate::from_count(n - rej_dp, n, eps_seed),
        });
    }
    Ok(CompareReport {
        s,
        t,
        ip_dec_at_upper,
        ip_dec_at_lower,
        dp_dec_at_upper,
        dp_dec_at_lower,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detectors::{resolve_constants, test_ip, CalibrationMode, DetectorConfig};
    use crate::model::sample_observations;
    use crate::seed::derive_seed;

    fn chebyshev_constants(
        alpha: f64,
        beta: f64,
        spec: &OperatorSpectrum,
        d: u64,
    ) -> ConstantSet {
        let cfg = DetectorConfig::new(alpha, beta, CalibrationMode::Chebyshev).unwrap();
        resolve_constants(&cfg, spec, d).unwrap()
    }

    #[test]
    fn engine_matches_sampler_statistic_pipeline() {
        let sig = Signal::power_decay(0.8, 1.0).unwrap();
        let spec = OperatorSpectrum::mildly_ill_posed(0.5).unwrap();
        let (eps, d, c1, master) = (0.2, 30, 3.0, 4242u64);
        let sim = DetectorSim::new(DetectorKind::Ip, &sig, &spec, eps, d, c1).unwrap();
        let direct: u64 = (0..200)
            .map(|i| {
                let y = sample_observations(&sig, &spec, eps, d, derive_seed(master, i));
                u64::from(test_ip(&y, &spec, eps, d, c1).unwrap().reject)
            })
            .sum();
        assert_eq!(count_rejections(&sim, 200, master), direct);
    }

    #[test]
    fn astronomical_constant_never_rejects() {
        let e = estimate_type1(
            DetectorKind::Ip,
            &OperatorSpectrum::Identity,
            0.1,
            20,
            1e300,
            2_000,
            1,
        )
        .unwrap();
        assert_eq!(e.p_hat, 0.0);
        assert_eq!(e.se, 0.0);
    }

    #[test]
    fn chebyshev_type1_is_conservative() {
        let alpha = 0.05;
        let c1 = (2.0f64 / alpha).sqrt();
        let e = estimate_type1(
            DetectorKind::Ip,
            &OperatorSpectrum::Identity,
            0.1,
            50,
            c1,
            20_000,
            7,
        )
        .unwrap();
        assert!(e.p_hat <= alpha, "type-1 {} above {alpha}", e.p_hat);
    }

    #[test]
    fn calibrated_type1_matches_level() {
        let alpha = 0.05;
        let spec = OperatorSpectrum::Identity;
        let cfg = DetectorConfig::new(
            alpha,
            0.1,
            CalibrationMode::MonteCarlo {
                n: 200_000,
                seed: 11,
            },
        )
        .unwrap();
        let c = resolve_constants(&cfg, &spec, 40).unwrap();
        let e = estimate_type1(DetectorKind::Ip, &spec, 0.1, 40, c.c1, 20_000, 999).unwrap();
        assert!(
            (e.p_hat - alpha).abs() <= 3.0 * e.se,
            "p_hat {} se {}",
            e.p_hat,
            e.se
        );
    }

    #[test]
    fn complementarity_on_zero_signal() {
        let spec = OperatorSpectrum::mildly_ill_posed(1.0).unwrap();
        let t1 = estimate_type1(DetectorKind::Dp, &spec, 0.3, 15, 2.0, 5_000, 31).unwrap();
        let t2 = estimate_type2(
            DetectorKind::Dp,
            &Signal::zero(),
            &spec,
            0.3,
            15,
            2.0,
            5_000,
            31,
        )
        .unwrap();
        assert_eq!(t1.count + t2.count, 5_000);
        assert!((t1.p_hat + t2.p_hat - 1.0).abs() < 1e-12);
    }

    #[test]
    fn signal_beyond_window_is_invisible() {
        let spec = OperatorSpectrum::Identity;
        let null = estimate_type2(
            DetectorKind::Ip,
            &Signal::zero(),
            &spec,
            0.1,
            10,
            3.0,
            5_000,
            5,
        )
        .unwrap();
        let hidden = estimate_type2(
            DetectorKind::Ip,
            &Signal::spike(11, 1e6),
            &spec,
            0.1,
            10,
            3.0,
            5_000,
            5,
        )
        .unwrap();
        assert_eq!(null.p_hat, hidden.p_hat);
    }

    #[test]
    fn thread_count_does_not_change_counts() {
        let spec = OperatorSpectrum::mildly_ill_posed(0.5).unwrap();
        let sig = Signal::spike(5, 0.02);
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                estimate_type2(DetectorKind::Ip, &sig, &spec, 0.1, 10, 2.5, 10_000, 77).unwrap()
            })
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a, b);
    }

    #[test]
    fn ip_bound_cases_pass_small_scale() {
        let spec = OperatorSpectrum::Identity;
        let (eps, d, beta) = (0.1, 100, 0.1);
        let c = chebyshev_constants(0.05, beta, &spec, d);
        let detect =
            verify_ip_bound(BoundCase::AboveUpper, &spec, eps, d, &c, beta, 0.05, 20_000, 13)
                .unwrap();
        assert!(detect.pass, "type2 {}", detect.type2.p_hat);
        let miss =
            verify_ip_bound(BoundCase::BelowLower, &spec, eps, d, &c, beta, 0.05, 20_000, 14)
                .unwrap();
        assert!(miss.pass, "type2 {}", miss.type2.p_hat);
        assert!(miss.type2.p_hat > detect.type2.p_hat);
    }

    #[test]
    fn overwhelming_margin_gives_zero_type2() {
        let spec = OperatorSpectrum::mildly_ill_posed(1.0).unwrap();
        let c = chebyshev_constants(0.05, 0.1, &spec, 20);
        let rep =
            verify_ip_bound(BoundCase::AboveUpper, &spec, 0.1, 20, &c, 0.1, 10.0, 2_000, 3)
                .unwrap();
        assert_eq!(rep.type2.p_hat, 0.0);
        assert!(rep.pass);
    }

    #[test]
    fn dp_bound_cases_pass_small_scale() {
        let spec = OperatorSpectrum::mildly_ill_posed(1.0).unwrap();
        let (eps, d, beta) = (0.1, 50, 0.1);
        let c = chebyshev_constants(0.05, beta, &spec, d);
        let detect =
            verify_dp_bound(BoundCase::AboveUpper, &spec, eps, d, &c, beta, 0.05, 20_000, 23)
                .unwrap();
        assert!(detect.pass, "type2 {}", detect.type2.p_hat);
        let miss =
            verify_dp_bound(BoundCase::BelowLower, &spec, eps, d, &c, beta, 0.05, 20_000, 24)
                .unwrap();
        assert!(miss.pass, "type2 {}", miss.type2.p_hat);
    }

    #[test]
    fn negative_margin_is_rejected() {
        let spec = OperatorSpectrum::Identity;
        let c = chebyshev_constants(0.05, 0.1, &spec, 10);
        let err = verify_ip_bound(BoundCase::AboveUpper, &spec, 0.1, 10, &c, 0.1, -0.5, 100, 0);
        assert!(matches!(err, Err(McError::ConstraintUnsatisfiable(_))));
    }

    #[test]
    fn sandwich_zero_signal_is_vacuous() {
        let spec = OperatorSpectrum::Identity;
        let c = chebyshev_constants(0.05, 0.1, &spec, 10);
        let grid = EpsilonGrid::new(vec![0.3, 0.2, 0.1]).unwrap();
        let rep = verify_sandwich(
            DetectorKind::Ip,
            &Signal::zero(),
            &RateSchedule::PowerLaw { c: 1.0, e: 1.0 },
            &DesignSchedule::Constant { d: 10 },
            &spec,
            &c,
            0.1,
            &grid,
            1_000,
            9,
        )
        .unwrap();
        assert!(rep.pass);
        assert!(rep.rows.iter().all(|r| !r.triggered));
    }

    #[test]
    fn sandwich_member_spike_is_detected() {
        let spec = OperatorSpectrum::Identity;
        let d = 20u64;
        let c = chebyshev_constants(0.05, 0.1, &spec, d);
        let grid = EpsilonGrid::new(vec![0.2, 0.15, 0.1]).unwrap();
        // spike energy double the upper-constant bound at the largest eps
        let energy = 2.0 * c.cmax * 0.2 * 0.2 * (d as f64).sqrt();
        let sig = Signal::spike(1, energy);
        let rate = RateSchedule::PowerLaw {
            c: energy.sqrt() / 2.0,
            e: 0.0,
        };
        let rep = verify_sandwich(
            DetectorKind::Ip,
            &sig,
            &rate,
            &DesignSchedule::Constant { d },
            &spec,
            &c,
            0.1,
            &grid,
            20_000,
            17,
        )
        .unwrap();
        assert!(rep.member_at_upper.member);
        assert!(rep.rows.iter().all(|r| r.triggered));
        assert!(rep.pass);
    }

    #[test]
    fn decimation_witness_is_missed() {
        let spec = OperatorSpectrum::Identity;
        let rate = RateSchedule::PowerLaw { c: 1.0, e: 0.5 };
        let design = DesignSchedule::Constant { d: 10 };
        let grid = EpsilonGrid::new(vec![0.2]).unwrap();
        let d = 10u64;
        let c = chebyshev_constants(0.05, 0.1, &spec, d);
        let sig = decimation_witness(&rate, &design, 0.2).unwrap();
        assert_eq!(sig.prefix_energy(10), 0.0);
        assert!(sig.total_energy() > rate.rate(0.2).unwrap().powi(2));
        let rep = verify_sandwich(
            DetectorKind::Ip,
            &sig,
            &rate,
            &design,
            &spec,
            &c,
            0.1,
            &grid,
            5_000,
            21,
        )
        .unwrap();
        assert!(!rep.member_at_lower.member);
        let t2 = rep.rows[0].type2.as_ref().unwrap();
        assert!(t2.p_hat > 0.9, "witness was detected: {}", t2.p_hat);
        assert!(rep.pass);
    }

    #[test]
    fn power_curve_endpoints() {
        let spec = OperatorSpectrum::Identity;
        let (eps, d, c1) = (0.1, 20u64, (2.0f64 / 0.05).sqrt());
        let shape = Signal::spike(1, 1.0);
        let curve = power_curve(
            DetectorKind::Ip,
            &shape,
            &spec,
            eps,
            d,
            c1,
            &[0.0, 0.1, 0.2, 0.4, 0.8, 1.2],
            0.1,
            10_000,
            29,
        )
        .unwrap();
        let t1 = estimate_type1(DetectorKind::Ip, &spec, eps, d, c1, 10_000, 29).unwrap();
        assert_eq!(curve.rows[0].estimate.p_hat, t1.p_hat);
        let last = curve.rows.last().unwrap().estimate.p_hat;
        assert!(last > 0.999, "power at rho=1.2: {last}");
        assert_eq!(curve.separation_rho, Some(0.8));
        assert!(curve.flagged_decreases.is_empty());
    }

    #[test]
    fn dp_beats_ip_on_low_frequency_spike() {
        // spike at k = 1 under b_k = k^{-1}: both statistics see mean
        // theta_1^2, but the IP threshold carries sqrt(sum b^{-4}) ~ D^{2}
        // sqrt(D) against the DP one's sqrt(D)
        let spec = OperatorSpectrum::mildly_ill_posed(1.0).unwrap();
        let (eps, d, beta, n) = (0.1, 30u64, 0.1, 4_000u64);
        let c = chebyshev_constants(0.05, beta, &spec, d);
        let shape = Signal::spike(1, 1.0);
        let rhos: Vec<f64> = (0..16).map(|i| 0.1 * 1.5f64.powi(i)).collect();
        let ip = power_curve(
            DetectorKind::Ip,
            &shape,
            &spec,
            eps,
            d,
            c.c1,
            &rhos,
            beta,
            n,
            31,
        )
        .unwrap();
        let dp = power_curve(
            DetectorKind::Dp,
            &shape,
            &spec,
            eps,
            d,
            c.c2,
            &rhos,
            beta,
            n,
            31,
        )
        .unwrap();
        let (ip_sep, dp_sep) = (ip.separation_rho.unwrap(), dp.separation_rho.unwrap());
        assert!(
            dp_sep < ip_sep,
            "dp separation {dp_sep} not below ip separation {ip_sep}"
        );
    }

    #[test]
    fn compare_identity_columns_coincide() {
        let spec = OperatorSpectrum::Identity;
        let grid = EpsilonGrid::new(vec![0.3, 0.2]).unwrap();
        let cfg = DetectorConfig::new(0.05, 0.1, CalibrationMode::Chebyshev).unwrap();
        let c = resolve_constants(&cfg, &spec, 64).unwrap();
        let rep = compare_ip_dp(&spec, 0.5, 0.0, &grid, &c, 2_000, 41).unwrap();
        for row in &rep.rows {
            assert_eq!(row.ip_type2, row.dp_type2);
        }
        assert_eq!(rep.ip_dec_at_upper.member, rep.dp_dec_at_upper.member);
        assert_eq!(rep.ip_dec_at_lower.member, rep.dp_dec_at_lower.member);
    }

    #[test]
    fn compare_report_is_deterministic() {
        let spec = OperatorSpectrum::mildly_ill_posed(1.0).unwrap();
        let grid = EpsilonGrid::new(vec![0.3, 0.2]).unwrap();
        let c = chebyshev_constants(0.05, 0.1, &spec, 64);
        let a = compare_ip_dp(&spec, 0.5, 1.0, &grid, &c, 2_000, 43).unwrap();
        let b = compare_ip_dp(&spec, 0.5, 1.0, &grid, &c, 2_000, 43).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn power_csv_shape() {
        let spec = OperatorSpectrum::Identity;
        let curve = power_curve(
            DetectorKind::Dp,
            &Signal::spike(1, 1.0),
            &spec,
            0.2,
            5,
            3.0,
            &[0.1, 0.2],
            0.1,
            500,
            51,
        )
        .unwrap();
        let csv = curve.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("rho,p_reject,se,n,seed"));
        assert_eq!(lines.count(), 2);
    }
}
