//! Noise-level-indexed schedules: the design size `D_eps` and the
//! separation rate `r_eps` (or `mu_eps` on the direct side).

use serde::{Deserialize, Serialize};

use super::grid::EpsilonGrid;
use super::spectrum::OperatorSpectrum;
use super::ModelError;

/// `eps -> D_eps`, the number of frequencies the detector looks at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DesignSchedule {
    Constant { d: u64 },
    /// `D_eps = ceil(eps^{-4/(1+4(s+t))})`, the minimax calibration for the
    /// moderately ill-posed problem.
    MinimaxMip { s: f64, t: f64 },
    Table { entries: Vec<(f64, u64)> },
}

impl DesignSchedule {
    /// `D_eps`, clamped to >= 1.
    pub fn design_size(&self, eps: f64) -> Result<u64, ModelError> {
        match self {
            DesignSchedule::Constant { d } => Ok((*d).max(1)),
            DesignSchedule::MinimaxMip { s, t } => {
                let exponent = -4.0 / (1.0 + 4.0 * (s + t));
                let d = eps.powf(exponent).ceil();
                if !d.is_finite() || d > u64::MAX as f64 {
                    return Err(ModelError::Overflow);
                }
                Ok((d as u64).max(1))
            }
            DesignSchedule::Table { entries } => entries
                .iter()
                .find(|(e, _)| (e - eps).abs() <= 1e-12 * e.abs().max(1.0))
                .map(|&(_, d)| d.max(1))
                .ok_or(ModelError::EpsilonNotTabulated(eps)),
        }
    }
}

/// `eps -> r_eps` (or `mu_eps`), the energy radius of the alternative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum RateSchedule {
    PowerLaw {
        c: f64,
        e: f64,
    },
    /// `r_eps = eps^{4s/(1+4(s+t))}`, the minimax rate for the inverse
    /// problem over the moderately ill-posed calibration.
    MinimaxIp {
        s: f64,
        t: f64,
    },
    Table {
        entries: Vec<(f64, f64)>,
    },
    /// `eps -> b_{D_eps} * base_eps`: the direct-side rate induced by an
    /// inverse-side rate through the operator (see `maxisets::mu_from_r`).
    DesignWeighted {
        base: Box<RateSchedule>,
        design: DesignSchedule,
        spectrum: OperatorSpectrum,
    },
}

impl RateSchedule {
    pub fn rate(&self, eps: f64) -> Result<f64, ModelError> {
        match self {
            RateSchedule::PowerLaw { c, e } => Ok(c * eps.powf(*e)),
            RateSchedule::MinimaxIp { s, t } => {
                Ok(eps.powf(4.0 * s / (1.0 + 4.0 * (s + t))))
            }
            RateSchedule::Table { entries } => entries
                .iter()
                .find(|(e, _)| (e - eps).abs() <= 1e-12 * e.abs().max(1.0))
                .map(|&(_, r)| r)
                .ok_or(ModelError::EpsilonNotTabulated(eps)),
            RateSchedule::DesignWeighted {
                base,
                design,
                spectrum,
            } => {
                let d = design.design_size(eps)?;
                Ok(spectrum.value(d) * base.rate(eps)?)
            }
        }
    }
}

/// Tabulates both schedules over the grid as rows `(eps, D_eps, r_eps)`.
pub fn evaluate_schedules(
    design: &DesignSchedule,
    rate: &RateSchedule,
    grid: &EpsilonGrid,
) -> Result<Vec<(f64, u64, f64)>, ModelError> {
    grid.points()
        .iter()
        .map(|&eps| Ok((eps, design.design_size(eps)?, rate.rate(eps)?)))
        .collect()
}
