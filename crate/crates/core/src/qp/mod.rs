//! Dense convex quadratic programming.
//!
//! ```text
//! minimize    ½ xᵀ H x + fᵀ x
//! subject to  A_eq x = b_eq,   A_in x ≤ b_in
//! ```
//!
//! [`solve`] runs a primal-dual interior point method with Mehrotra
//! correction, then polishes on the detected active set. Every returned
//! [`QpStatus::Optimal`] solution has been re-checked with [`check_kkt`].

mod kkt;
mod solver;

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use kkt::{check_kkt, KktReport};
pub use solver::solve;

/// Tolerance on `max |H − Hᵀ|` and on negative eigenvalues of `H`.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QpStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

#[derive(Clone, Debug)]
pub struct QpOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Starting primal point; only used if its dimension matches.
    pub initial_guess: Option<DVector<f64>>,
    pub polish: bool,
}

impl Default for QpOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-8,
            rel_tol: 1e-9,
            max_iter: 20_000,
            initial_guess: None,
            polish: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QpProblem {
    pub h: DMatrix<f64>,
    pub f: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
    pub a_in: DMatrix<f64>,
    pub b_in: DVector<f64>,
    /// Optional variable names, used only in dumps and diagnostics.
    pub names: Vec<String>,
}

impl QpProblem {
    /// A problem with `d` variables and no constraints.
    pub fn new(h: DMatrix<f64>, f: DVector<f64>) -> Self {
        let d = f.len();
        Self {
            h,
            f,
            a_eq: DMatrix::zeros(0, d),
            b_eq: DVector::zeros(0),
            a_in: DMatrix::zeros(0, d),
            b_in: DVector::zeros(0),
            names: Vec::new(),
        }
    }

    pub fn with_eq(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Self {
        self.a_eq = a;
        self.b_eq = b;
        self
    }

    pub fn with_ineq(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Self {
        self.a_in = a;
        self.b_in = b;
        self
    }

    pub fn dim(&self) -> usize {
        self.f.len()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.h * x)) + self.f.dot(x)
    }

    /// Checks shapes, finiteness, symmetry and positive semidefiniteness.
    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        let bad = |msg: String| Err(Error::InvalidProblem(msg));
        if self.h.shape() != (d, d) {
            return bad(format!("H is {:?}, expected {d}x{d}", self.h.shape()));
        }
        if self.a_eq.ncols() != d || self.a_eq.nrows() != self.b_eq.len() {
            return bad("equality block has inconsistent dimensions".into());
        }
        if self.a_in.ncols() != d || self.a_in.nrows() != self.b_in.len() {
            return bad("inequality block has inconsistent dimensions".into());
        }
        if !self.names.is_empty() && self.names.len() != d {
            return bad(format!("{} names for {d} variables", self.names.len()));
        }
        let all_finite = self
            .h
            .iter()
            .chain(self.f.iter())
            .chain(self.a_eq.iter())
            .chain(self.b_eq.iter())
            .chain(self.a_in.iter())
            .chain(self.b_in.iter())
            .all(|v| v.is_finite());
        if !all_finite {
            return bad("non-finite entry in problem data".into());
        }
        let asym = (&self.h - self.h.transpose()).amax();
        if asym > SYMMETRY_TOLERANCE {
            return bad(format!("H is not symmetric (max asymmetry {asym:.3e})"));
        }
        if d > 0 {
            let sym = (&self.h + self.h.transpose()) * 0.5;
            let min_eig = sym.symmetric_eigenvalues().min();
            let scale = self.h.amax().max(1.0);
            if min_eig < -SYMMETRY_TOLERANCE * scale {
                return bad(format!(
                    "H is not positive semidefinite (eigenvalue {min_eig:.3e})"
                ));
            }
        }
        Ok(())
    }

    /// Plain-text dump: one `name rows cols` header per block followed by
    /// whitespace-separated rows.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let mut block = |name: &str, m: &DMatrix<f64>| {
            let _ = writeln!(out, "{name} {} {}", m.nrows(), m.ncols());
            for r in m.row_iter() {
                let line: Vec<String> = r.iter().map(|v| format!("{v:e}")).collect();
                let _ = writeln!(out, "{}", line.join(" "));
            }
        };
        let col = |v: &DVector<f64>| DMatrix::from_column_slice(v.len(), 1, v.as_slice());
        block("H", &self.h);
        block("f", &col(&self.f));
        block("Aeq", &self.a_eq);
        block("beq", &col(&self.b_eq));
        block("Aineq", &self.a_in);
        block("bineq", &col(&self.b_in));
        if !self.names.is_empty() {
            let _ = writeln!(out, "names {}", self.names.len());
            for n in &self.names {
                let _ = writeln!(out, "{n}");
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// Multipliers of the equality rows.
    pub y: DVector<f64>,
    /// Multipliers of the inequality rows, nonnegative at optimality.
    pub z: DVector<f64>,
    pub status: QpStatus,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

impl QpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == QpStatus::Optimal
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_indefinite_and_asymmetric_h() {
        let p = QpProblem::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
            DVector::zeros(2),
        );
        assert!(matches!(p.validate(), Err(Error::InvalidProblem(_))));
        let p = QpProblem::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
            DVector::zeros(2),
        );
        assert!(matches!(p.validate(), Err(Error::InvalidProblem(_))));
        let p = QpProblem::new(DMatrix::zeros(2, 2), DVector::zeros(2));
        assert!(p.validate().is_ok());
    }

    #[test]
    fn dump_lists_every_block() {
        let p = QpProblem::new(DMatrix::identity(1, 1), DVector::from_element(1, 2.0)).with_ineq(
            DMatrix::from_element(1, 1, -1.0),
            DVector::from_element(1, -1.0),
        );
        let text = p.dump();
        for header in [
            "H 1 1",
            "f 1 1",
            "Aeq 0 1",
            "beq 0 1",
            "Aineq 1 1",
            "bineq 1 1",
        ] {
            assert!(text.contains(header), "{header} missing in\n{text}");
        }
    }
}
