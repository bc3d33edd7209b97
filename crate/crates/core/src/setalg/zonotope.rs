use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{box_combination, IntervalVector, MEMBERSHIP_TOLERANCE};
use crate::linalg::{abs_row_sums, hcat, rows};
use crate::{Error, Result};

/// A zonotope `⟨c, G⟩ = { c + G β : β ∈ [-1, 1]^γ }`.
///
/// `γ = 0` is allowed and denotes the singleton `{c}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ZonotopeRepr", into = "ZonotopeRepr")]
pub struct Zonotope {
    center: DVector<f64>,
    generators: DMatrix<f64>,
}

impl Zonotope {
    pub fn new(center: DVector<f64>, generators: DMatrix<f64>) -> Result<Self> {
        if generators.nrows() != center.len() {
            return Err(Error::dim(
                "Zonotope::new",
                center.len(),
                generators.nrows(),
            ));
        }
        Ok(Self { center, generators })
    }

    pub fn singleton(center: DVector<f64>) -> Self {
        let n = center.len();
        Self {
            center,
            generators: DMatrix::zeros(n, 0),
        }
    }

    pub fn origin(n: usize) -> Self {
        Self::singleton(DVector::zeros(n))
    }

    /// The box `[lower, upper]` as a zonotope with one axis-aligned generator per
    /// dimension (zero-width dimensions keep a zero column).
    pub fn from_interval(iv: &IntervalVector) -> Result<Self> {
        if !iv.is_bounded() {
            return Err(Error::InvalidArgument(
                "cannot represent an unbounded interval as a zonotope".into(),
            ));
        }
        let radius = iv.width() * 0.5;
        Ok(Self {
            center: iv.midpoint(),
            generators: DMatrix::from_diagonal(&radius),
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn num_generators(&self) -> usize {
        self.generators.ncols()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn generators(&self) -> &DMatrix<f64> {
        &self.generators
    }

    pub fn into_parts(self) -> (DVector<f64>, DMatrix<f64>) {
        (self.center, self.generators)
    }

    /// `L Z = ⟨L c, L G⟩`.
    pub fn linear_map(&self, l: &DMatrix<f64>) -> Result<Zonotope> {
        if l.ncols() != self.dim() {
            return Err(Error::dim("linear_map", self.dim(), l.ncols()));
        }
        Ok(Zonotope {
            center: l * &self.center,
            generators: l * &self.generators,
        })
    }

    /// Exact Minkowski sum `⟨c₁ + c₂, [G₁, G₂]⟩`.
    pub fn minkowski_sum(&self, other: &Zonotope) -> Result<Zonotope> {
        if other.dim() != self.dim() {
            return Err(Error::dim("minkowski_sum", self.dim(), other.dim()));
        }
        Ok(Zonotope {
            center: &self.center + &other.center,
            generators: hcat(self.dim(), &[&self.generators, &other.generators]),
        })
    }

    /// `Z₁ − Z₂ := Z₁ ⊕ (−1) Z₂`. This is Minkowski addition of the negated
    /// set, not the geometric (Pontryagin) difference.
    pub fn minus(&self, other: &Zonotope) -> Result<Zonotope> {
        self.minkowski_sum(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Zonotope {
        Zonotope {
            center: &self.center * s,
            generators: &self.generators * s,
        }
    }

    pub fn translate(&self, offset: &DVector<f64>) -> Result<Zonotope> {
        if offset.len() != self.dim() {
            return Err(Error::dim("translate", self.dim(), offset.len()));
        }
        Ok(Zonotope {
            center: &self.center + offset,
            generators: self.generators.clone(),
        })
    }

    /// `Z₁ × Z₂` with block-diagonal generators `[G₁ 0; 0 G₂]`.
    pub fn cartesian_product(&self, other: &Zonotope) -> Zonotope {
        let (n1, n2) = (self.dim(), other.dim());
        let (g1, g2) = (self.num_generators(), other.num_generators());
        let mut center = DVector::zeros(n1 + n2);
        center.rows_mut(0, n1).copy_from(&self.center);
        center.rows_mut(n1, n2).copy_from(&other.center);
        let mut generators = DMatrix::zeros(n1 + n2, g1 + g2);
        generators
            .view_mut((0, 0), (n1, g1))
            .copy_from(&self.generators);
        generators
            .view_mut((n1, g1), (n2, g2))
            .copy_from(&other.generators);
        Zonotope { center, generators }
    }

    /// Interval over-approximation `c ± Σᵢ |gᵢ|`.
    pub fn interval_hull(&self) -> IntervalVector {
        let radius = abs_row_sums(&self.generators);
        IntervalVector::new(&self.center - &radius, &self.center + &radius)
            .expect("radius is nonnegative")
    }

    /// `c + G β`.
    pub fn point(&self, beta: &DVector<f64>) -> DVector<f64> {
        &self.center + &self.generators * beta
    }

    /// Decides `p ∈ Z` by linear feasibility of `G β = p − c`, `β ∈ [-1, 1]^γ`,
    /// to an absolute residual of [`MEMBERSHIP_TOLERANCE`].
    pub fn contains(&self, p: &DVector<f64>) -> bool {
        self.membership_witness(p).is_some()
    }

    pub fn membership_witness(&self, p: &DVector<f64>) -> Option<DVector<f64>> {
        if p.len() != self.dim() {
            return None;
        }
        box_combination(&self.generators, &(p - &self.center), MEMBERSHIP_TOLERANCE)
    }

    /// Draws `β` uniformly from the coefficient box and returns `c + G β`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let beta = DVector::from_fn(self.num_generators(), |_, _| rng.random_range(-1.0..=1.0));
        self.point(&beta)
    }

    /// Drops generator columns that are exactly zero.
    pub fn compact(&self) -> Zonotope {
        let keep: Vec<usize> = (0..self.num_generators())
            .filter(|&j| self.generators.column(j).iter().any(|v| *v != 0.0))
            .collect();
        Zonotope {
            center: self.center.clone(),
            generators: self.generators.select_columns(&keep),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ZonotopeRepr {
    center: Vec<f64>,
    generators: Vec<Vec<f64>>,
}

impl TryFrom<ZonotopeRepr> for Zonotope {
    type Error = Error;

    fn try_from(r: ZonotopeRepr) -> Result<Self> {
        let n = r.center.len();
        let generators = if r.generators.is_empty() {
            DMatrix::zeros(n, 0)
        } else {
            rows::from_rows(&r.generators).map_err(Error::InvalidArgument)?
        };
        Zonotope::new(DVector::from_vec(r.center), generators)
    }
}

impl From<Zonotope> for ZonotopeRepr {
    fn from(z: Zonotope) -> Self {
        ZonotopeRepr {
            center: z.center.as_slice().to_vec(),
            generators: rows::to_rows(&z.generators),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    #[test]
    fn identity_and_scaling_maps() {
        let z = Zonotope::new(dv(&[1.0, 0.0]), DMatrix::identity(2, 2)).unwrap();
        assert_eq!(z.linear_map(&DMatrix::identity(2, 2)).unwrap(), z);
        let s = z.linear_map(&(DMatrix::identity(2, 2) * 2.0)).unwrap();
        assert_eq!(s.center(), &dv(&[2.0, 0.0]));
        assert_eq!(s.generators(), &(DMatrix::identity(2, 2) * 2.0));
    }

    #[test]
    fn linear_map_dimension_mismatch() {
        let z = Zonotope::origin(3);
        assert!(matches!(
            z.linear_map(&DMatrix::identity(2, 2)),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn minkowski_sum_of_segments() {
        let a = Zonotope::new(dv(&[1.0]), DMatrix::from_element(1, 1, 1.0)).unwrap();
        let b = Zonotope::new(dv(&[2.0]), DMatrix::from_element(1, 1, 3.0)).unwrap();
        let s = a.minkowski_sum(&b).unwrap();
        assert_eq!(s.center(), &dv(&[3.0]));
        assert_eq!(s.generators(), &DMatrix::from_row_slice(1, 2, &[1.0, 3.0]));
        let hull = s.interval_hull();
        assert_eq!(hull.lower()[0], -1.0);
        assert_eq!(hull.upper()[0], 7.0);
        // zero singleton is the identity
        assert_eq!(a.minkowski_sum(&Zonotope::origin(1)).unwrap(), a);
    }

    #[test]
    fn minus_negates_second_operand() {
        let a = Zonotope::new(dv(&[1.0]), DMatrix::from_element(1, 1, 1.0)).unwrap();
        let b = Zonotope::new(dv(&[2.0]), DMatrix::from_element(1, 1, 3.0)).unwrap();
        let d = a.minus(&b).unwrap();
        assert_eq!(d.center(), &dv(&[-1.0]));
        assert_eq!(d.generators(), &DMatrix::from_row_slice(1, 2, &[1.0, -3.0]));
    }

    #[test]
    fn cartesian_product_is_block_diagonal() {
        let a = Zonotope::new(dv(&[1.0]), DMatrix::from_element(1, 1, 1.0)).unwrap();
        let b = Zonotope::new(dv(&[2.0]), DMatrix::from_element(1, 1, 3.0)).unwrap();
        let p = a.cartesian_product(&b);
        assert_eq!(p.center(), &dv(&[1.0, 2.0]));
        assert_eq!(
            p.generators(),
            &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0])
        );

        let s = a.cartesian_product(&Zonotope::singleton(dv(&[5.0])));
        assert_eq!(s.generators(), &DMatrix::from_row_slice(2, 1, &[1.0, 0.0]));
    }

    #[test]
    fn interval_hull_sums_absolute_columns() {
        let z = Zonotope::new(
            dv(&[0.0, 0.0]),
            DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 2.0, 1.0]),
        )
        .unwrap();
        let h = z.interval_hull();
        assert_eq!(h.lower(), &dv(&[-2.0, -3.0]));
        assert_eq!(h.upper(), &dv(&[2.0, 3.0]));
        let s = Zonotope::singleton(dv(&[4.0, -1.0])).interval_hull();
        assert_eq!(s.lower(), s.upper());
    }

    #[test]
    fn membership_basics() {
        let z = Zonotope::new(dv(&[0.0]), DMatrix::from_element(1, 1, 1.0)).unwrap();
        assert!(z.contains(&dv(&[0.0])));
        assert!(!z.contains(&dv(&[1.5])));
        assert!(Zonotope::singleton(dv(&[2.0])).contains(&dv(&[2.0])));
        assert!(!Zonotope::singleton(dv(&[2.0])).contains(&dv(&[2.1])));
    }

    #[test]
    fn compact_drops_only_zero_columns() {
        let z = Zonotope::new(
            dv(&[0.0, 0.0]),
            DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 1e-300]),
        )
        .unwrap();
        assert_eq!(z.compact().num_generators(), 2);
        assert_eq!(z.num_generators(), 3);
    }

    #[test]
    fn json_layout_is_row_major() {
        let z = Zonotope::new(
            dv(&[1.0, 2.0]),
            DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]),
        )
        .unwrap();
        let s = serde_json::to_string(&z).unwrap();
        assert_eq!(
            s,
            r#"{"center":[1.0,2.0],"generators":[[1.0,2.0],[3.0,4.0]]}"#
        );
        let back: Zonotope = serde_json::from_str(&s).unwrap();
        assert_eq!(back, z);
        let single: Zonotope =
            serde_json::from_str(r#"{"center":[1.0,2.0],"generators":[]}"#).unwrap();
        assert_eq!(single.num_generators(), 0);
        assert_eq!(single.dim(), 2);
    }
}
