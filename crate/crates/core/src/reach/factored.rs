use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::AffineVector;
use crate::datadriven::{ModelSet, NoiseSpec};
use crate::linalg::{abs_row_sums, hcat};
use crate::setalg::{IntervalVector, Zonotope};
use crate::{Error, Result};

/// How the coefficient norms `σⱼ = ‖P zⱼ‖₁` are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientBound {
    /// `‖P z‖₁` itself, with one row per data sample. Controllers enforce it
    /// through cutting planes.
    #[default]
    Exact,
    /// `‖H z‖₁` with the `n + m` row bound of [`ModelSet::svd_coefficient_bound`].
    Svd,
}

impl CoefficientBound {
    /// Matrix `H` such that `σ(z) ≤ ‖H z‖₁`, with equality for [`Self::Exact`].
    pub fn matrix(self, model: &ModelSet) -> DMatrix<f64> {
        match self {
            CoefficientBound::Exact => model.right_inverse().clone(),
            CoefficientBound::Svd => model.svd_coefficient_bound(),
        }
    }
}

/// Generator block `matrix · s`, where the scalar `s = scaleᵀ [1; σ₀; …; σ_{N−1}]`
/// has nonnegative coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub matrix: DMatrix<f64>,
    pub scale: DVector<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactoredStep {
    pub center: AffineVector,
    pub blocks: Vec<Block>,
    /// Length of every scale vector, `N + 1`.
    pub terms: usize,
}

impl FactoredStep {
    /// `n × (N+1)` nonnegative matrix `W` with half-widths `W [1; σ]`.
    pub fn radius_coefficients(&self) -> DMatrix<f64> {
        let n = self.center.dim();
        let mut w = DMatrix::zeros(n, self.terms);
        for b in &self.blocks {
            w += abs_row_sums(&b.matrix) * b.scale.transpose();
        }
        w
    }
}

/// The reachable sets of the recursion in factored form, symbolic in the
/// stacked input `u` and in the coefficient norms `σ`.
///
/// For a concrete `u` and `σⱼ = ‖P zⱼ(u)‖₁`, step `k` equals the set produced by
/// [`super::reach_horizon`]; with any larger `σ` it encloses it.
#[derive(Clone, Debug, PartialEq)]
pub struct FactoredReach {
    horizon: usize,
    n: usize,
    m: usize,
    /// `R̂₁ … R̂_N`.
    pub steps: Vec<FactoredStep>,
    /// `zⱼ(u) = [cⱼ(u); uⱼ]` for `j = 0 … N−1`.
    pub regressors: Vec<AffineVector>,
    /// False when the model set is a singleton: no `σ` enters any step.
    pub uncertain: bool,
}

fn unit(len: usize, i: usize) -> DVector<f64> {
    DVector::from_fn(len, |r, _| if r == i { 1.0 } else { 0.0 })
}

/// Drops all-zero columns.
fn nonzero_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let keep: Vec<usize> = (0..m.ncols())
        .filter(|&j| m.column(j).iter().any(|v| *v != 0.0))
        .collect();
    m.select_columns(&keep)
}

impl FactoredReach {
    pub fn new(
        y0: &DVector<f64>,
        horizon: usize,
        model: &ModelSet,
        noise: &NoiseSpec,
    ) -> Result<Self> {
        let (n, m) = (model.state_dim(), model.input_dim());
        if horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        if y0.len() != n {
            return Err(Error::dim("FactoredReach (initial output)", n, y0.len()));
        }
        if noise.dim() != n {
            return Err(Error::dim("FactoredReach (noise)", n, noise.dim()));
        }
        let q = horizon * m;
        let basis = horizon + 1;
        let (cx, cu) = model.center_blocks();
        let px = model.right_inverse().columns(0, n).into_owned();
        let kappa = |mat: &DMatrix<f64>| -> f64 { (&px * mat).abs().sum() };

        let additive = noise.additive();
        let noise_block = nonzero_columns(additive.generators());
        let directions = if model.right_inverse().iter().any(|v| *v != 0.0) {
            nonzero_columns(model.directions())
        } else {
            DMatrix::zeros(n, 0)
        };
        let uncertain = directions.ncols() > 0;
        let kappa_d = kappa(&directions);

        let mut center = AffineVector::constant(y0.clone(), q);
        let mut blocks: Vec<(Block, f64)> = Vec::new();
        let mut steps = Vec::with_capacity(horizon);
        let mut regressors = Vec::with_capacity(horizon);
        for j in 0..horizon {
            let mut sel = DMatrix::zeros(m, q);
            for i in 0..m {
                sel[(i, j * m + i)] = 1.0;
            }
            let mut z = AffineVector {
                offset: DVector::zeros(n + m),
                linear: DMatrix::zeros(n + m, q),
            };
            z.offset.rows_mut(0, n).copy_from(&center.offset);
            z.linear.view_mut((0, 0), (n, q)).copy_from(&center.linear);
            z.linear.view_mut((n, 0), (m, q)).copy_from(&sel);
            regressors.push(z);

            let mut next_center = center.map(&cx);
            next_center.linear += &cu * &sel;
            next_center.offset += additive.center();

            let mut next: Vec<(Block, f64)> = Vec::with_capacity(blocks.len() + 2);
            if uncertain {
                let mut s = unit(basis, 1 + j);
                for (b, k) in &blocks {
                    s.axpy(*k, &b.scale, 1.0);
                }
                next.push((
                    Block {
                        matrix: directions.clone(),
                        scale: s,
                    },
                    kappa_d,
                ));
            }
            for (b, _) in &blocks {
                let mat = &cx * &b.matrix;
                let k = kappa(&mat);
                next.push((
                    Block {
                        matrix: mat,
                        scale: b.scale.clone(),
                    },
                    k,
                ));
            }
            if noise_block.ncols() > 0 {
                next.push((
                    Block {
                        matrix: noise_block.clone(),
                        scale: unit(basis, 0),
                    },
                    kappa(&noise_block),
                ));
            }
            center = next_center;
            blocks = next;
            steps.push(FactoredStep {
                center: center.clone(),
                blocks: blocks.iter().map(|(b, _)| b.clone()).collect(),
                terms: horizon + 1,
            });
        }
        Ok(Self {
            horizon,
            n,
            m,
            steps,
            regressors,
            uncertain,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn output_dim(&self) -> usize {
        self.n
    }

    pub fn input_dim(&self) -> usize {
        self.m
    }

    /// `σⱼ = ‖H zⱼ(u)‖₁`.
    pub fn sigma(&self, u: &DVector<f64>, h: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.horizon,
            self.regressors.iter().map(|z| (h * z.eval(u)).lp_norm(1)),
        )
    }

    fn basis(sigma: &DVector<f64>) -> DVector<f64> {
        let mut b = DVector::zeros(sigma.len() + 1);
        b[0] = 1.0;
        b.rows_mut(1, sigma.len()).copy_from(sigma);
        b
    }

    /// Concrete zonotopes `R̂₁ … R̂_N` for input `u` and norms `σ`.
    pub fn eval(&self, u: &DVector<f64>, sigma: &DVector<f64>) -> Vec<Zonotope> {
        let basis = Self::basis(sigma);
        self.steps
            .iter()
            .map(|s| {
                let scaled: Vec<DMatrix<f64>> = s
                    .blocks
                    .iter()
                    .map(|b| &b.matrix * b.scale.dot(&basis))
                    .collect();
                let refs: Vec<&DMatrix<f64>> = scaled.iter().collect();
                Zonotope::new(s.center.eval(u), hcat(self.n, &refs)).expect("consistent")
            })
            .collect()
    }

    /// Interval hulls of [`Self::eval`] without forming the generators.
    pub fn hulls(&self, u: &DVector<f64>, sigma: &DVector<f64>) -> Vec<IntervalVector> {
        let basis = Self::basis(sigma);
        self.steps
            .iter()
            .map(|s| {
                let c = s.center.eval(u);
                let r = s.radius_coefficients() * &basis;
                IntervalVector::new(&c - &r, &c + &r).expect("nonnegative radius")
            })
            .collect()
    }
}
