//! Finite noise-level grids standing in for the "for all eps in (0,1)"
//! quantifier. Every verdict produced on a grid records the grid itself so
//! the checked range is always visible in outputs.

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Strictly decreasing noise levels in the open interval (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EpsilonGrid {
    points: Vec<f64>,
}

impl EpsilonGrid {
    pub fn new(points: Vec<f64>) -> Result<Self, ModelError> {
        if points.is_empty() {
            return Err(ModelError::InvalidParameter(
                "epsilon grid must be non-empty".into(),
            ));
        }
        if points.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(ModelError::InvalidParameter(
                "epsilon grid points must lie in (0, 1)".into(),
            ));
        }
        if points.windows(2).any(|w| w[1] >= w[0]) {
            return Err(ModelError::InvalidParameter(
                "epsilon grid must be strictly decreasing".into(),
            ));
        }
        Ok(EpsilonGrid { points })
    }

    /// `eps_i = start * ratio^i`, `i = 0..n`.
    pub fn geometric(start: f64, ratio: f64, n: usize) -> Result<Self, ModelError> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(ModelError::InvalidParameter(
                "geometric grid needs ratio in (0, 1)".into(),
            ));
        }
        let points = (0..n).map(|i| start * ratio.powi(i as i32)).collect();
        EpsilonGrid::new(points)
    }

    /// The default grid: `0.5 * 0.8^i`, 20 points.
    pub fn default_grid() -> Self {
        EpsilonGrid::geometric(0.5, 0.8, 20).expect("default grid is valid")
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl TryFrom<Vec<f64>> for EpsilonGrid {
    type Error = ModelError;

    fn try_from(points: Vec<f64>) -> Result<Self, Self::Error> {
        EpsilonGrid::new(points)
    }
}

impl From<EpsilonGrid> for Vec<f64> {
    fn from(grid: EpsilonGrid) -> Vec<f64> {
        grid.points
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_is_valid() {
        let grid = EpsilonGrid::default_grid();
        assert_eq!(grid.len(), 20);
        assert!((grid.points()[0] - 0.5).abs() < 1e-15);
        assert!((grid.points()[1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(EpsilonGrid::new(vec![]).is_err());
        assert!(EpsilonGrid::new(vec![0.5, 0.5]).is_err());
        assert!(EpsilonGrid::new(vec![0.2, 0.5]).is_err());
        assert!(EpsilonGrid::new(vec![1.0, 0.5]).is_err());
        assert!(EpsilonGrid::new(vec![0.5, 0.0]).is_err());
    }

    #[test]
    fn serde_round_trip_validates() {
        let grid = EpsilonGrid::default_grid();
        let json = serde_json::to_string(&grid).unwrap();
        let back: EpsilonGrid = serde_json::from_str(&json).unwrap();
        assert_eq!(grid, back);
        assert!(serde_json::from_str::<EpsilonGrid>("[0.1, 0.5]").is_err());
    }
}
