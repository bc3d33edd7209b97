use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Axis-aligned box `[lower, upper]`. Infinite bounds are allowed and are
/// written as `null` in JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IntervalRepr", into = "IntervalRepr")]
pub struct IntervalVector {
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl IntervalVector {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::dim("IntervalVector::new", lower.len(), upper.len()));
        }
        if let Some(i) = (0..lower.len()).find(|&i| !(lower[i] <= upper[i])) {
            return Err(Error::InvalidArgument(format!(
                "interval lower bound exceeds upper bound in dimension {i}: {} > {}",
                lower[i], upper[i]
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn point(p: DVector<f64>) -> Self {
        Self {
            lower: p.clone(),
            upper: p,
        }
    }

    /// The whole space in `n` dimensions.
    pub fn unbounded(n: usize) -> Self {
        Self {
            lower: DVector::from_element(n, f64::NEG_INFINITY),
            upper: DVector::from_element(n, f64::INFINITY),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    pub fn width(&self) -> DVector<f64> {
        &self.upper - &self.lower
    }

    pub fn midpoint(&self) -> DVector<f64> {
        (&self.upper + &self.lower) * 0.5
    }

    pub fn contains(&self, p: &DVector<f64>, tol: f64) -> bool {
        p.len() == self.dim()
            && (0..p.len()).all(|i| p[i] >= self.lower[i] - tol && p[i] <= self.upper[i] + tol)
    }

    /// `self ⊆ other`, elementwise with tolerance.
    pub fn is_subset_of(&self, other: &IntervalVector, tol: f64) -> bool {
        self.dim() == other.dim()
            && (0..self.dim()).all(|i| {
                self.lower[i] >= other.lower[i] - tol && self.upper[i] <= other.upper[i] + tol
            })
    }

    pub fn is_bounded(&self) -> bool {
        self.lower
            .iter()
            .chain(self.upper.iter())
            .all(|v| v.is_finite())
    }
}

#[derive(Serialize, Deserialize)]
struct IntervalRepr {
    lower: Vec<Option<f64>>,
    upper: Vec<Option<f64>>,
}

impl TryFrom<IntervalRepr> for IntervalVector {
    type Error = Error;

    fn try_from(r: IntervalRepr) -> Result<Self> {
        let lower = r.lower.iter().map(|v| v.unwrap_or(f64::NEG_INFINITY));
        let upper = r.upper.iter().map(|v| v.unwrap_or(f64::INFINITY));
        IntervalVector::new(
            DVector::from_iterator(r.lower.len(), lower),
            DVector::from_iterator(r.upper.len(), upper),
        )
    }
}

impl From<IntervalVector> for IntervalRepr {
    fn from(iv: IntervalVector) -> Self {
        let finite = |v: &f64| v.is_finite().then_some(*v);
        IntervalRepr {
            lower: iv.lower.iter().map(finite).collect(),
            upper: iv.upper.iter().map(finite).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_inverted_bounds() {
        let r = IntervalVector::new(DVector::from_vec(vec![1.0]), DVector::from_vec(vec![0.0]));
        assert!(r.is_err());
    }

    #[test]
    fn json_uses_null_for_infinite_bounds() {
        let iv = IntervalVector::new(
            DVector::from_vec(vec![f64::NEG_INFINITY, 1.9]),
            DVector::from_vec(vec![f64::INFINITY, 10.0]),
        )
        .unwrap();
        let s = serde_json::to_string(&iv).unwrap();
        assert_eq!(s, r#"{"lower":[null,1.9],"upper":[null,10.0]}"#);
        let back: IntervalVector = serde_json::from_str(&s).unwrap();
        assert_eq!(back, iv);
    }
}
