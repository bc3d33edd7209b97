use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{box_combination, Zonotope, MEMBERSHIP_TOLERANCE};
use crate::linalg::rows;
use crate::{Error, Result};

/// A matrix zonotope `{ C + Σᵢ βᵢ Gᵢ : β ∈ [-1, 1]^γ }` over `r × c` matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixZonotope {
    #[serde(with = "rows")]
    center: DMatrix<f64>,
    #[serde(with = "rows::list")]
    generators: Vec<DMatrix<f64>>,
}

impl MatrixZonotope {
    pub fn new(center: DMatrix<f64>, generators: Vec<DMatrix<f64>>) -> Result<Self> {
        if let Some(g) = generators.iter().find(|g| g.shape() != center.shape()) {
            return Err(Error::InvalidArgument(format!(
                "matrix zonotope generator is {}x{}, center is {}x{}",
                g.nrows(),
                g.ncols(),
                center.nrows(),
                center.ncols()
            )));
        }
        Ok(Self { center, generators })
    }

    pub fn singleton(center: DMatrix<f64>) -> Self {
        Self {
            center,
            generators: Vec::new(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.center.shape()
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn center(&self) -> &DMatrix<f64> {
        &self.center
    }

    pub fn generators(&self) -> &[DMatrix<f64>] {
        &self.generators
    }

    /// `C + Σ βᵢ Gᵢ`.
    pub fn point(&self, beta: &DVector<f64>) -> DMatrix<f64> {
        assert_eq!(beta.len(), self.generators.len(), "MatrixZonotope::point");
        let mut x = self.center.clone();
        for (g, b) in self.generators.iter().zip(beta.iter()) {
            x += g * *b;
        }
        x
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DMatrix<f64> {
        let beta = DVector::from_fn(self.generators.len(), |_, _| rng.random_range(-1.0..=1.0));
        self.point(&beta)
    }

    /// `M · K` for a constant matrix `K`, applied to center and every generator.
    pub fn right_multiply(&self, k: &DMatrix<f64>) -> Result<MatrixZonotope> {
        if k.nrows() != self.center.ncols() {
            return Err(Error::dim("right_multiply", self.center.ncols(), k.nrows()));
        }
        Ok(MatrixZonotope {
            center: &self.center * k,
            generators: self.generators.iter().map(|g| g * k).collect(),
        })
    }

    /// Elementwise `M₁ ⊕ M₂` by generator concatenation.
    pub fn minkowski_sum(&self, other: &MatrixZonotope) -> Result<MatrixZonotope> {
        if other.shape() != self.shape() {
            return Err(Error::InvalidArgument(
                "matrix zonotope shapes differ in minkowski_sum".into(),
            ));
        }
        let mut generators = self.generators.clone();
        generators.extend(other.generators.iter().cloned());
        Ok(MatrixZonotope {
            center: &self.center + &other.center,
            generators,
        })
    }

    pub fn scale(&self, s: f64) -> MatrixZonotope {
        MatrixZonotope {
            center: &self.center * s,
            generators: self.generators.iter().map(|g| g * s).collect(),
        }
    }

    /// Over-approximates `{ X z : X ∈ M, z ∈ Z }`.
    ///
    /// Generator columns are emitted in a fixed order: `C · G_Z`, then
    /// `Gᵢ · c_Z` for each matrix generator, then the blocks `Gᵢ · G_Z`.
    pub fn times_zonotope(&self, z: &Zonotope) -> Result<Zonotope> {
        let (r, c) = self.shape();
        if z.dim() != c {
            return Err(Error::dim("matzono_times_zono", c, z.dim()));
        }
        let gz = z.generators();
        let nz = gz.ncols();
        let gamma = self.generators.len();
        let mut out = DMatrix::zeros(r, nz + gamma + gamma * nz);
        out.view_mut((0, 0), (r, nz))
            .copy_from(&(&self.center * gz));
        for (i, g) in self.generators.iter().enumerate() {
            out.column_mut(nz + i).copy_from(&(g * z.center()));
        }
        let mut at = nz + gamma;
        for g in &self.generators {
            out.view_mut((0, at), (r, nz)).copy_from(&(g * gz));
            at += nz;
        }
        Zonotope::new(&self.center * z.center(), out)
    }

    /// Decides `X ∈ M` by linear feasibility on the vectorized generators.
    pub fn contains(&self, x: &DMatrix<f64>) -> bool {
        if x.shape() != self.shape() {
            return false;
        }
        let len = self.center.len();
        let mut g = DMatrix::zeros(len, self.generators.len());
        for (i, gi) in self.generators.iter().enumerate() {
            g.column_mut(i).copy_from_slice(gi.as_slice());
        }
        let d = DVector::from_column_slice((x - &self.center).as_slice());
        box_combination(&g, &d, MEMBERSHIP_TOLERANCE).is_some()
    }

    /// Vectorizes the matrix zonotope into a zonotope over column-major `vec(X)`.
    pub fn to_vectorized(&self) -> Zonotope {
        let len = self.center.len();
        let mut g = DMatrix::zeros(len, self.generators.len());
        for (i, gi) in self.generators.iter().enumerate() {
            g.column_mut(i).copy_from_slice(gi.as_slice());
        }
        Zonotope::new(DVector::from_column_slice(self.center.as_slice()), g)
            .expect("consistent by construction")
    }
}
