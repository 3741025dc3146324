//! Operator eigenvalue sequences `(b_k)`.

use serde::{Deserialize, Serialize};

use super::ModelError;

/// The eigenvalue sequence of the (diagonalized) operator.
///
/// All families are positive and non-increasing in `k`. `MildlyIllPosed`
/// with `t = 0` evaluates identically to `Identity`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpectrum {
    /// `b_k = 1` (the direct, well-posed problem).
    Identity,
    /// `b_k = k^{-t}` for some `t >= 0`.
    MildlyIllPosed { t: f64 },
    /// Finite prefix of explicit values, extended past the prefix by the
    /// power law `b_k = b_L (k/L)^{-tail_exponent}` with `L` the prefix length.
    Explicit {
        prefix: Vec<f64>,
        tail_exponent: f64,
    },
}

impl OperatorSpectrum {
    pub fn identity() -> Self {
        OperatorSpectrum::Identity
    }

    pub fn mildly_ill_posed(t: f64) -> Result<Self, ModelError> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(ModelError::InvalidParameter(format!(
                "ill-posedness degree t must be finite and >= 0, got {t}"
            )));
        }
        Ok(OperatorSpectrum::MildlyIllPosed { t })
    }

    pub fn explicit(prefix: Vec<f64>, tail_exponent: f64) -> Result<Self, ModelError> {
        if prefix.is_empty() {
            return Err(ModelError::InvalidParameter(
                "explicit spectrum needs a non-empty prefix".into(),
            ));
        }
        if prefix.iter().any(|&b| !(b > 0.0) || !b.is_finite()) {
            return Err(ModelError::InvalidParameter(
                "explicit spectrum values must be positive and finite".into(),
            ));
        }
        if prefix.windows(2).any(|w| w[1] > w[0]) {
            return Err(ModelError::InvalidParameter(
                "explicit spectrum values must be non-increasing".into(),
            ));
        }
        if !(tail_exponent >= 0.0) || !tail_exponent.is_finite() {
            return Err(ModelError::InvalidParameter(
                "explicit spectrum tail exponent must be >= 0".into(),
            ));
        }
        Ok(OperatorSpectrum::Explicit {
            prefix,
            tail_exponent,
        })
    }

    /// `b_k`, `k >= 1`.
    pub fn value(&self, k: u64) -> f64 {
        assert!(k >= 1, "spectrum index starts at 1");
        match self {
            OperatorSpectrum::Identity => 1.0,
            OperatorSpectrum::MildlyIllPosed { t } => (k as f64).powf(-t),
            OperatorSpectrum::Explicit {
                prefix,
                tail_exponent,
            } => {
                let len = prefix.len() as u64;
                if k <= len {
                    prefix[(k - 1) as usize]
                } else {
                    prefix[prefix.len() - 1] * (k as f64 / len as f64).powf(-tail_exponent)
                }
            }
        }
    }

    /// Power-law description of the spectrum from some index on:
    /// `b_k = coeff * k^{-exponent}` for all `k >= from`.
    pub(crate) fn tail_power_law(&self) -> (u64, f64, f64) {
        match self {
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

    /// `sum_{k=1}^{D} b_k^{-4}`, with an overflow guard.
    pub fn prefix_sum_inv4(&self, d: u64) -> Result<f64, ModelError> {
        self.prefix_sum_inv_pow(d, 4)
    }

    /// `sum_{k=1}^{D} b_k^{-2}`.
    pub fn prefix_sum_inv2(&self, d: u64) -> Result<f64, ModelError> {
        self.prefix_sum_inv_pow(d, 2)
    }

    fn prefix_sum_inv_pow(&self, d: u64, pow: i32) -> Result<f64, ModelError> {
        assert!(d >= 1, "prefix sums need D >= 1");
        let mut sum = 0.0;
        for k in 1..=d {
            sum += self.value(k).powi(-pow);
            if !sum.is_finite() {
                return Err(ModelError::Overflow);
            }
        }
        Ok(sum)
    }
}

/// Prefix sums of `b_k^{-4}` and `b_k^{-2}` cached up to a maximum index,
/// for O(1) repeated queries inside grid sweeps and Monte Carlo loops.
#[derive(Debug, Clone)]
pub struct SpectrumPrefix {
    inv4: Vec<f64>,
    inv2: Vec<f64>,
}

impl SpectrumPrefix {
    pub fn build(spec: &OperatorSpectrum, d_max: u64) -> Result<Self, ModelError> {
        let mut inv4 = Vec::with_capacity(d_max as usize + 1);
        let mut inv2 = Vec::with_capacity(d_max as usize + 1);
        inv4.push(0.0);
        inv2.push(0.0);
        let (mut s4, mut s2) = (0.0f64, 0.0f64);
        for k in 1..=d_max {
            let b = spec.value(k);
            s4 += b.powi(-4);
            s2 += b.powi(-2);
            if !s4.is_finite() || !s2.is_finite() {
                return Err(ModelError::Overflow);
            }
            inv4.push(s4);
            inv2.push(s2);
        }
        Ok(SpectrumPrefix { inv4, inv2 })
    }

    pub fn inv4(&self, d: u64) -> f64 {
        self.inv4[d as usize]
    }

    pub fn inv2(&self, d: u64) -> f64 {
        self.inv2[d as usize]
    }

    pub fn d_max(&self) -> u64 {
        (self.inv4.len() - 1) as u64
    }
}
