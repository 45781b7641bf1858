//! Discrete saddle-problem builders for each solver experiment, with their
//! default data sets and analytic oracles.

pub mod eikonal;
pub mod gradient;
pub mod intersection;
pub mod multiphase;
pub mod obstacle;
pub mod qvi;

pub use eikonal::{build_eikonal, eikonal_config, EikonalProblem};
pub use gradient::{build_gradient_constraint, gradient_paper_config, GradientData, GradientProblem};
pub use intersection::{build_intersection, intersection_config, IntersectionData, IntersectionProblem};
pub use multiphase::{
    build_multiphase_step, multiphase_step_config, run_multiphase_flow, MultiphaseData,
    MultiphaseFlow, MultiphaseStepProblem,
};
pub use obstacle::{
    build_obstacle, obstacle_benchmark_config, obstacle_config, ObstacleBackend, ObstacleData,
    ObstacleProblem,
};
pub use qvi::{build_qvi_thermoforming, qvi_paper_config, QviData, QviProblem};

use crate::error::{Error, Result};

/// Exact Euclidean distance from a point to the boundary of a box domain:
/// the oracle for the eikonal viscosity solution.
pub fn distance_to_boundary(bbox: [f64; 4], p: [f64; 2]) -> Result<f64> {
    let [x_min, x_max, y_min, y_max] = bbox;
    let [x, y] = p;
    let tol = 1e-12 * (1.0 + (x_max - x_min).abs() + (y_max - y_min).abs());
    if x < x_min - tol || x > x_max + tol || y < y_min - tol || y > y_max + tol {
        return Err(Error::invalid(format!(
            "point {p:?} lies outside the domain {bbox:?}"
        )));
    }
    let dx = (x - x_min).min(x_max - x).max(0.0);
    let dy = (y - y_min).min(y_max - y).max(0.0);
    Ok(dx.min(dy))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_oracle_unit_square() {
        let unit = [0.0, 1.0, 0.0, 1.0];
        assert_eq!(distance_to_boundary(unit, [0.5, 0.5]).unwrap(), 0.5);
        assert_eq!(distance_to_boundary(unit, [0.25, 0.5]).unwrap(), 0.25);
        assert_eq!(distance_to_boundary(unit, [0.0, 0.7]).unwrap(), 0.0);
        assert!(distance_to_boundary(unit, [1.5, 0.5]).is_err());
    }
}
