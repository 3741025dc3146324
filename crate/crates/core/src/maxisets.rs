//! Finite-grid membership predicates for the sequence sets that
//! characterize what the IP and DP detectors can reliably detect, the
//! decimation-robust variants, admissibility, and the IP-to-DP embedding
//! condition.
//!
//! All universal quantifiers ("for all eps", "for all k") are checked on
//! finite, caller-supplied ranges; every verdict records the range it
//! checked. Inequalities are evaluated with exact IEEE comparisons and both
//! sides of any violated inequality are reported, so borderline cases stay
//! auditable.

use serde::{Deserialize, Serialize};

use crate::model::{
    DesignSchedule, EpsilonGrid, ModelError, OperatorSpectrum, RateSchedule, Signal,
};

/// One failed grid inequality, with both sides as evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub epsilon: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// Outcome of a membership predicate over an epsilon grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipVerdict {
    pub member: bool,
    pub grid: EpsilonGrid,
    pub violations: Vec<Violation>,
}

impl MembershipVerdict {
    fn from_violations(grid: &EpsilonGrid, violations: Vec<Violation>) -> Self {
        MembershipVerdict {
            member: violations.is_empty(),
            grid: grid.clone(),
            violations,
        }
    }

    /// The violation at the smallest grid index (largest eps), if any.
    pub fn first_violation(&self) -> Option<&Violation> {
        self.violations.first()
    }
}

/// Which norm triggers the energy condition of the direct-side predicate.
///
/// The testing problem on the direct side states the energy condition in the
/// transformed coordinates `||b.theta||^2 >= mu^2`, while the displayed set
/// definition writes the plain norm. The default follows the displayed
/// definition; `Weighted` switches to the transformed norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerNorm {
    #[default]
    Plain,
    Weighted,
}

/// Zeroes the first `n` coordinates of the signal.
pub fn decimate(sig: &Signal, n: u64) -> Signal {
    sig.decimate(n)
}

/// Membership in the inverse-side set: at every grid eps where
/// `||theta||^2 >= r_eps^2`, require
/// `sum_{k<=D_eps} theta_k^2 > C eps^2 sqrt(sum_{k<=D_eps} b_k^{-4})`.
pub fn member_f(
    sig: &Signal,
    rate: &RateSchedule,
    design: &DesignSchedule,
    spec: &OperatorSpectrum,
    c: f64,
    grid: &EpsilonGrid,
) -> Result<MembershipVerdict, ModelError> {
    let total = sig.total_energy();
    let mut violations = Vec::new();
    for &eps in grid.points() {
        let r = rate.rate(eps)?;
        if total < r * r {
            continue;
        }
        let d = design.design_size(eps)?;
        let lhs = sig.prefix_energy(d);
        let rhs = c * eps * eps * spec.prefix_sum_inv4(d)?.sqrt();
        if !(lhs > rhs) {
            violations.push(Violation {
                epsilon: eps,
                lhs,
                rhs,
            });
        }
    }
    Ok(MembershipVerdict::from_violations(grid, violations))
}

/// Membership in the direct-side set: at every triggered grid eps, require
/// `sum_{k<=D_eps} b_k^2 theta_k^2 > C eps^2 sqrt(D_eps)`.
pub fn member_g(
    sig: &Signal,
    mu: &RateSchedule,
    design: &DesignSchedule,
    spec: &OperatorSpectrum,
    c: f64,
    grid: &EpsilonGrid,
    trigger: TriggerNorm,
) -> Result<MembershipVerdict, ModelError> {
    let trigger_energy = match trigger {
        TriggerNorm::Plain => sig.total_energy(),
        TriggerNorm::Weighted => sig.total_energy_weighted(spec),
    };
    let mut violations = Vec::new();
    for &eps in grid.points() {
        let m = mu.rate(eps)?;
        if trigger_energy < m * m {
            continue;
        }
        let d = design.design_size(eps)?;
        let lhs = sig.prefix_energy_weighted(d, spec);
        let rhs = c * eps * eps * (d as f64).sqrt();
        if !(lhs > rhs) {
            violations.push(Violation {
                epsilon: eps,
                lhs,
                rhs,
            });
        }
    }
    Ok(MembershipVerdict::from_violations(grid, violations))
}

/// Decimation-robust inverse-side set: unconditionally at every grid eps,
/// `sum_{k>D_eps} theta_k^2 < r_eps^2 - C eps^2 sqrt(sum_{k<=D_eps} b_k^{-4})`.
pub fn member_f_dec(
    sig: &Signal,
    rate: &RateSchedule,
    design: &DesignSchedule,
    spec: &OperatorSpectrum,
    c: f64,
    grid: &EpsilonGrid,
) -> Result<MembershipVerdict, ModelError> {
    let mut violations = Vec::new();
    for &eps in grid.points() {
        let r = rate.rate(eps)?;
        let d = design.design_size(eps)?;
        let lhs = sig.tail_energy(d, None);
        let rhs = r * r - c * eps * eps * spec.prefix_sum_inv4(d)?.sqrt();
        if !(lhs < rhs) {
            violations.push(Violation {
                epsilon: eps,
                lhs,
                rhs,
            });
        }
    }
    Ok(MembershipVerdict::from_violations(grid, violations))
}

/// Decimation-robust direct-side set: unconditionally at every grid eps,
/// `sum_{k>D_eps} b_k^2 theta_k^2 < mu_eps^2 - C eps^2 sqrt(D_eps)`.
pub fn member_g_dec(
    sig: &Signal,
    mu: &RateSchedule,
    design: &DesignSchedule,
    spec: &OperatorSpectrum,
    c: f64,
    grid: &EpsilonGrid,
) -> Result<MembershipVerdict, ModelError> {
    let mut violations = Vec::new();
    for &eps in grid.points() {
        let m = mu.rate(eps)?;
        let d = design.design_size(eps)?;
        let lhs = sig.tail_energy(d, Some(spec));
        let rhs = m * m - c * eps * eps * (d as f64).sqrt();
        if !(lhs < rhs) {
            violations.push(Violation {
                epsilon: eps,
                lhs,
                rhs,
            });
        }
    }
    Ok(MembershipVerdict::from_violations(grid, violations))
}

/// Admissibility of a `(rate, design, C)` triple: the slack
/// `r_eps^2 - C eps^2 sqrt(...)` at every grid point, and whether it is
/// everywhere strictly positive (equivalently, whether the zero signal is a
/// member, equivalently non-emptiness of the set).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityVerdict {
    pub admissible: bool,
    /// Rows `(eps, slack)`.
    pub slack: Vec<(f64, f64)>,
}

pub fn admissible_f(
    rate: &RateSchedule,
    design: &DesignSchedule,
    spec: &OperatorSpectrum,
    c: f64,
    grid: &EpsilonGrid,
) -> Result<AdmissibilityVerdict, ModelError> {
    let slack: Vec<(f64, f64)> = grid
        .points()
        .iter()
        .map(|&eps| {
            let r = rate.rate(eps)?;
            let d = design.design_size(eps)?;
            Ok((eps, r * r - c * eps * eps * spec.prefix_sum_inv4(d)?.sqrt()))
        })
        .collect::<Result<_, ModelError>>()?;
    Ok(AdmissibilityVerdict {
        admissible: slack.iter().all(|&(_, s)| s > 0.0),
        slack,
    })
}

pub fn admissible_g(
    mu: &RateSchedule,
    design: &DesignSchedule,
    c: f64,
    grid: &EpsilonGrid,
) -> Result<AdmissibilityVerdict, ModelError> {
    let slack: Vec<(f64, f64)> = grid
        .points()
        .iter()
        .map(|&eps| {
            let m = mu.rate(eps)?;
            let d = design.design_size(eps)?;
            Ok((eps, m * m - c * eps * eps * (d as f64).sqrt()))
        })
        .collect::<Result<_, ModelError>>()?;
    Ok(AdmissibilityVerdict {
        admissible: slack.iter().all(|&(_, s)| s > 0.0),
        slack,
    })
}

/// The direct-side rate induced by an inverse-side rate:
/// `mu_eps = b_{D_eps} r_eps`.
pub fn mu_from_r(
    rate: &RateSchedule,
    design: &DesignSchedule,
    spec: &OperatorSpectrum,
) -> RateSchedule {
    RateSchedule::DesignWeighted {
        base: Box::new(rate.clone()),
        design: design.clone(),
        spectrum: spec.clone(),
    }
}

/// Result of sweeping the embedding condition
/// `C'_max sqrt(k) <= C_min b_k^2 sqrt(sum_{j<=k} b_j^{-4})` over `k <= k_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub holds: bool,
    pub first_violating_k: Option<u64>,
    pub k_max: u64,
}

pub fn check_embedding_condition(
    spec: &OperatorSpectrum,
    cmin: f64,
    cmax_p: f64,
    k_max: u64,
) -> Result<EmbeddingReport, ModelError> {
    assert!(k_max >= 1);
    let mut sum_inv4 = 0.0f64;
    for k in 1..=k_max {
        let b = spec.value(k);
        sum_inv4 += b.powi(-4);
        if !sum_inv4.is_finite() {
            return Err(ModelError::Overflow);
        }
        let lhs = cmax_p * (k as f64).sqrt();
        let rhs = cmin * b * b * sum_inv4.sqrt();
        if lhs > rhs {
            return Ok(EmbeddingReport {
                holds: false,
                first_violating_k: Some(k),
                k_max,
            });
        }
    }
    Ok(EmbeddingReport {
        holds: true,
        first_violating_k: None,
        k_max,
    })
}

/// Per-cutoff table of `K^exponent * sum_{k>K} (w_k theta_k)^2` and its
/// supremum over the supplied cutoffs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BesovReport {
    pub sup: f64,
    /// Rows `(K, K^exponent * tail)`.
    pub rows: Vec<(u64, f64)>,
    pub exponent: f64,
    pub weighted: bool,
}

/// Evaluates the tail sup-functional on the supplied cutoffs (dyadic
/// `K = 2^j`, `j <= 20` is the conventional choice).
pub fn besov_sup_functional(
    sig: &Signal,
    exponent: f64,
    weighted_by: Option<&OperatorSpectrum>,
    k_list: &[u64],
) -> BesovReport {
    assert!(exponent > 0.0);
    let rows: Vec<(u64, f64)> = k_list
        .iter()
        .map(|&k| {
            assert!(k >= 1);
            (k, (k as f64).powf(exponent) * sig.tail_energy(k, weighted_by))
        })
        .collect();
    let sup = rows.iter().map(|&(_, v)| v).fold(0.0f64, f64::max);
    BesovReport {
        sup,
        rows,
        exponent,
        weighted: weighted_by.is_some(),
    }
}

/// The default dyadic cutoff list `K = 2^j`, `j = 0..=j_max`.
pub fn dyadic_cutoffs(j_max: u32) -> Vec<u64> {
    (0..=j_max).map(|j| 1u64 << j).collect()
}

/// The dyadic-block candidate signal `theta_k = 2^{-js} k^{-gamma}`;
/// `gamma = 1` is the sequence used to separate the direct and inverse
/// decimation-robust sets, `gamma` a knob for probing variants.
pub fn dyadic_block_signal(s: f64, gamma: f64) -> Result<Signal, ModelError> {
    Signal::dyadic_block(s, gamma)
}
