//! Brute-force reference evaluation of tail energies.
//!
//! This module is the independent side of the dual-route check on the
//! closed-form/Euler-Maclaurin tail sums in [`crate::model`]: it sums
//! coordinates term by term up to a large cutoff and brackets the remainder
//! with elementary integral bounds. It deliberately shares no code with the
//! expansion-based path.

use crate::model::{OperatorSpectrum, Signal, SignalFamily};

/// How far the term-by-term summation goes.
pub const BRUTE_FORCE_TERMS: u64 = 10_000_000;

/// A bracketed reference value: the true sum lies within
/// `value ± uncertainty`.
#[derive(Debug, Clone, Copy)]
pub struct BracketedSum {
    pub value: f64,
    pub uncertainty: f64,
}

impl BracketedSum {
    /// Whether `candidate` agrees with this reference to `rel_tol` relative
    /// error, once the bracket uncertainty is accounted for.
    pub fn matches(&self, candidate: f64, rel_tol: f64) -> bool {
        (candidate - self.value).abs() <= rel_tol * self.value.abs().max(1e-300) + self.uncertainty
    }
}

/// Plain truncated sum `sum_{k=D+1}^{up_to} (w_k theta_k)^2`.
pub fn truncated_tail_energy(
    sig: &Signal,
    d: u64,
    weight: Option<&OperatorSpectrum>,
    up_to: u64,
) -> f64 {
    (d + 1..=up_to)
        .map(|k| {
            let w = weight.map_or(1.0, |s| s.value(k));
            let v = w * sig.coordinate(k);
            v * v
        })
        .sum()
}

/// Reference tail energy: brute force to [`BRUTE_FORCE_TERMS`] plus an
/// integral-bracketed remainder.
pub fn tail_energy_reference(
    sig: &Signal,
    d: u64,
    weight: Option<&OperatorSpectrum>,
) -> BracketedSum {
    let cutoff = BRUTE_FORCE_TERMS.max(d);
    let head = truncated_tail_energy(sig, d, weight, cutoff);
    let (rem_lo, rem_hi) = remainder_bracket(sig, weight, cutoff);
    BracketedSum {
        value: head + 0.5 * (rem_lo + rem_hi),
        uncertainty: 0.5 * (rem_hi - rem_lo),
    }
}

/// Brackets `sum_{k > cutoff} (w_k theta_k)^2` from below and above.
fn remainder_bracket(sig: &Signal, weight: Option<&OperatorSpectrum>, cutoff: u64) -> (f64, f64) {
    let identity = OperatorSpectrum::Identity;
    let spec = weight.unwrap_or(&identity);
    let (w_from, w_coeff, w_exp) = spectrum_power_law(spec);
    assert!(
        w_from <= cutoff + 1,
        "cutoff must be past the explicit spectrum prefix"
    );
    let sq_scale = sig.scale * sig.scale;
    match &sig.family {
        SignalFamily::FiniteSupport { .. } => (0.0, 0.0),
        SignalFamily::PowerDecay { c, a } => {
            let p = 2.0 * a + 2.0 * w_exp;
            let coeff = sq_scale * (c * w_coeff).powi(2);
            // integral bracket for a decreasing summand:
            //   int_{M+1}^inf f <= sum_{k>M} f(k) <= f(M+1) + int_{M+1}^inf f
            let m1 = (cutoff + 1) as f64;
            let integral = coeff * m1.powf(1.0 - p) / (p - 1.0);
            (integral, integral + coeff * m1.powf(-p))
        }
        SignalFamily::DyadicBlock { s, gamma } => {
            let p = 2.0 * gamma + 2.0 * w_exp;
            let coeff = sq_scale * w_coeff * w_coeff;
            let (mut lo, mut hi) = (0.0f64, 0.0f64);
            let mut j = 63 - (cutoff + 1).leading_zeros() as u64;
            loop {
                let block_lo = (2.0f64).powi(j as i32);
                let block_hi = 2.0 * block_lo - 1.0;
                let a = block_lo.max((cutoff + 1) as f64);
                if a > block_hi {
                    j += 1;
                    continue;
                }
                let wj = coeff * (2.0f64).powf(-2.0 * s * j as f64);
                // bracket the inner block sum of k^{-p} over [a, block_hi]
                let (int_lo, int_hi) = block_integral_bracket(p, a, block_hi);
                lo += wj * int_lo;
                hi += wj * int_hi;
                // stop once further blocks cannot move the bracket
                let next_bound = wj * int_hi * (2.0f64).powf(1.0 - p - 2.0 * s)
                    / (1.0 - (2.0f64).powf(1.0 - p - 2.0 * s));
                if next_bound <= 1e-18 * hi.max(1e-300) || wj == 0.0 {
                    hi += next_bound;
                    break;
                }
                j += 1;
            }
            (lo, hi)
        }
    }
}

/// Power-law description `b_k = coeff * k^{-exp}` valid for `k >= from`.
fn spectrum_power_law(spec: &OperatorSpectrum) -> (u64, f64, f64) {
    match spec {
        OperatorSpectrum::Identity => (1, 1.0, 0.0),
        OperatorSpectrum::MildlyIllPosed { t } => (1, 1.0, *t),
        OperatorSpectrum::Explicit {
            prefix,
            tail_exponent,
        } => {
            let len = prefix.len() as u64;
            let coeff = prefix[prefix.len() - 1] * (len as f64).powf(*tail_exponent);
            (len + 1, coeff, *tail_exponent)
        }
    }
}

/// `(lo, hi)` with `lo <= sum_{k=a}^{b} k^{-p} <= hi`, integer `a <= b`
/// carried as `f64`.
fn block_integral_bracket(p: f64, a: f64, b: f64) -> (f64, f64) {
    let integral = |x0: f64, x1: f64| {
        if (p - 1.0).abs() < 1e-12 {
            (x1 / x0).ln()
        } else {
            (x0.powf(1.0 - p) - x1.powf(1.0 - p)) / (p - 1.0)
        }
    };
    let lo = integral(a, b + 1.0);
    let hi = a.powf(-p) + integral(a, b);
    (lo, hi)
}
