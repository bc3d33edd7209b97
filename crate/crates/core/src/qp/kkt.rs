use nalgebra::DVector;
use serde::Serialize;

use super::{QpProblem, QpSolution};

/// Infinity-norm KKT residuals recomputed from problem data.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KktReport {
    /// `‖H x + f + A_eqᵀ y + A_inᵀ z‖∞`
    pub stationarity: f64,
    /// `‖A_eq x − b_eq‖∞`
    pub equality: f64,
    /// `max(0, max(A_in x − b_in))`
    pub inequality: f64,
    /// `max |zᵢ (b_in − A_in x)ᵢ|`
    pub complementarity: f64,
    /// Smallest inequality multiplier (`+∞` without inequalities).
    pub min_dual: f64,
}

pub const DUAL_SIGN_TOLERANCE: f64 = 1e-8;

impl KktReport {
    pub fn primal(&self) -> f64 {
        self.equality.max(self.inequality)
    }

    /// All residuals within `tol` and multipliers nonnegative up to
    /// [`DUAL_SIGN_TOLERANCE`].
    pub fn passes(&self, tol: f64) -> bool {
        self.stationarity <= tol
            && self.primal() <= tol
            && self.complementarity <= tol
            && self.min_dual >= -DUAL_SIGN_TOLERANCE
    }

    pub fn max_residual(&self) -> f64 {
        self.stationarity
            .max(self.primal())
            .max(self.complementarity)
    }
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

pub fn check_kkt(p: &QpProblem, s: &QpSolution) -> KktReport {
    let x = &s.x;
    let grad = &p.h * x + &p.f + p.a_eq.transpose() * &s.y + p.a_in.transpose() * &s.z;
    let slack = &p.b_in - &p.a_in * x;
    KktReport {
        stationarity: inf_norm(&grad),
        equality: inf_norm(&(&p.a_eq * x - &p.b_eq)),
        inequality: slack.iter().fold(0.0_f64, |a, v| a.max(-v)),
        complementarity: s
            .z
            .iter()
            .zip(slack.iter())
            .fold(0.0_f64, |a, (z, r)| a.max((z * r).abs())),
        min_dual: s.z.iter().copied().fold(f64::INFINITY, f64::min),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qp::QpStatus;
    use nalgebra::DMatrix;

    #[test]
    fn perturbing_an_active_constraint_shows_in_the_residual() {
        // min x² s.t. x ≥ 1, optimum x = 1 with multiplier 2.
        let p = QpProblem::new(DMatrix::from_element(1, 1, 2.0), DVector::zeros(1)).with_ineq(
            DMatrix::from_element(1, 1, -1.0),
            DVector::from_element(1, -1.0),
        );
        let mut s = QpSolution {
            x: DVector::from_element(1, 1.0),
            y: DVector::zeros(0),
            z: DVector::from_element(1, 2.0),
            status: QpStatus::Optimal,
            objective: 1.0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            iterations: 0,
        };
        assert!(check_kkt(&p, &s).passes(1e-12));
        s.x[0] = 1.0 - 1e-3;
        let r = check_kkt(&p, &s);
        assert!((r.inequality - 1e-3).abs() < 1e-12);
        s.x[0] = 1.0;
        s.z[0] = -1e-6;
        assert!(!check_kkt(&p, &s).passes(1.0));
    }
}
