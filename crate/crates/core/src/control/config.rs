use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::rows;
use crate::reach::CoefficientBound;
use crate::setalg::IntervalVector;
use crate::{Error, Result};

/// Reference sequences. Entry `t` of `ry` is `r_y(t)`, entry `t` of `ru` is
/// `r_u(t)`; past the end the last entry is held.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub ry: Vec<Vec<f64>>,
    pub ru: Vec<Vec<f64>>,
}

impl Reference {
    pub fn constant(ry: DVector<f64>, ru: DVector<f64>) -> Self {
        Self {
            ry: vec![ry.as_slice().to_vec()],
            ru: vec![ru.as_slice().to_vec()],
        }
    }

    fn at(seq: &[Vec<f64>], t: usize) -> DVector<f64> {
        let i = t.min(seq.len() - 1);
        DVector::from_column_slice(&seq[i])
    }

    pub fn ry(&self, t: usize) -> DVector<f64> {
        Self::at(&self.ry, t)
    }

    pub fn ru(&self, t: usize) -> DVector<f64> {
        Self::at(&self.ru, t)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub horizon: usize,
    #[serde(with = "rows")]
    pub q: DMatrix<f64>,
    #[serde(with = "rows")]
    pub r: DMatrix<f64>,
    pub input_bounds: IntervalVector,
    pub output_bounds: IntervalVector,
    pub reference: Reference,
    /// How `‖P z‖₁` is bounded inside the program.
    #[serde(default)]
    pub coefficient_bound: CoefficientBound,
}

impl ControllerConfig {
    /// `N = 5`, `Q = I`, `R = I`, no output constraints, unbounded inputs and a
    /// zero reference.
    pub fn defaults(n: usize, m: usize) -> Self {
        Self {
            horizon: 5,
            q: DMatrix::identity(n, n),
            r: DMatrix::identity(m, m),
            input_bounds: IntervalVector::unbounded(m),
            output_bounds: IntervalVector::unbounded(n),
            reference: Reference::constant(DVector::zeros(n), DVector::zeros(m)),
            coefficient_bound: CoefficientBound::default(),
        }
    }

    pub fn output_dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.r.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.output_dim(), self.input_dim());
        let cfg = |msg: String| Err(Error::Config(msg));
        if self.horizon == 0 {
            return cfg("horizon must be at least 1".into());
        }
        if self.q.shape() != (n, n) || self.r.shape() != (m, m) {
            return cfg("Q and R must be square".into());
        }
        let sym = |w: &DMatrix<f64>| (w - w.transpose()).amax() <= 1e-12;
        if !sym(&self.q) || !sym(&self.r) {
            return cfg("Q and R must be symmetric".into());
        }
        if n > 0 && self.q.clone().symmetric_eigenvalues().min() < -1e-12 {
            return cfg("Q must be positive semidefinite".into());
        }
        if m > 0 && self.r.clone().symmetric_eigenvalues().min() <= 0.0 {
            return cfg("R must be positive definite".into());
        }
        if self.input_bounds.dim() != m || self.output_bounds.dim() != n {
            return cfg(format!(
                "bounds have dimensions {} and {}, expected {m} and {n}",
                self.input_bounds.dim(),
                self.output_bounds.dim()
            ));
        }
        let refs = &self.reference;
        if refs.ry.is_empty() || refs.ru.is_empty() {
            return cfg("reference sequences must be nonempty".into());
        }
        if refs.ry.iter().any(|r| r.len() != n) || refs.ru.iter().any(|r| r.len() != m) {
            return cfg("reference entries have the wrong dimension".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        assert!(ControllerConfig::defaults(3, 2).validate().is_ok());
    }

    #[test]
    fn rejects_singular_r() {
        let mut c = ControllerConfig::defaults(2, 1);
        c.r = DMatrix::zeros(1, 1);
        assert!(c.validate().is_err());
    }

    #[test]
    fn reference_holds_last_value() {
        let r = Reference {
            ry: vec![vec![1.0], vec![2.0]],
            ru: vec![vec![0.0]],
        };
        assert_eq!(r.ry(0)[0], 1.0);
        assert_eq!(r.ry(7)[0], 2.0);
        assert_eq!(r.ru(3)[0], 0.0);
    }

    #[test]
    fn json_round_trip() {
        let c = ControllerConfig::defaults(2, 1);
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<ControllerConfig>(&s).unwrap(), c);
    }
}
