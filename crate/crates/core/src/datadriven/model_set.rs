use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{DataMatrices, NoiseSpec};
use crate::linalg::{hcat, right_inverse, rows};
use crate::setalg::{MatrixZonotope, Zonotope};
use crate::{Error, Result};

/// The set `M_Σ` of models `[A' | B']` consistent with the data.
///
/// Every generator of `M_Σ` has the rank-one form `d pₜᵀ`, where `d` is a
/// (signed) noise generator and `pₜ` is row `t` of the right inverse `P` of
/// `[Y₋; U₋]`. The set is therefore stored in factored form and only
/// expanded into an explicit [`MatrixZonotope`] on request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSet {
    n: usize,
    m: usize,
    #[serde(with = "rows")]
    center: DMatrix<f64>,
    /// `[−G_w, −G_v, G_Av]`, `n × γ_D`.
    #[serde(with = "rows")]
    directions: DMatrix<f64>,
    /// Right inverse of `[Y₋; U₋]`, `T × (n+m)`.
    #[serde(with = "rows")]
    right_inverse: DMatrix<f64>,
}

/// `M_Σ = (Y₊ − M_w − M_v + M_Av) · [Y₋; U₋]†`.
///
/// Fails if `[Y₋; U₋]` lacks full row rank or the noise dimension differs
/// from the output dimension.
pub fn build_model_set(dm: &DataMatrices, noise: &NoiseSpec) -> Result<ModelSet> {
    let (n, m, t) = (dm.output_dim(), dm.input_dim(), dm.samples());
    if noise.dim() != n {
        return Err(Error::dim(
            "build_model_set (noise dimension)",
            n,
            noise.dim(),
        ));
    }
    let p = right_inverse(&dm.regressor(), "[Y-; U-]")?;
    let offset = noise.zav.center() - noise.zw.center() - noise.zv.center();
    let mut shifted = dm.y_plus.clone();
    for mut c in shifted.column_iter_mut() {
        c += &offset;
    }
    debug_assert_eq!(p.nrows(), t);
    let directions = hcat(
        n,
        &[
            &(-noise.zw.generators()),
            &(-noise.zv.generators()),
            noise.zav.generators(),
        ],
    );
    Ok(ModelSet {
        n,
        m,
        center: shifted * &p,
        directions,
        right_inverse: p,
    })
}

impl ModelSet {
    /// The singleton `⟨[A | B], ∅⟩`.
    pub fn singleton(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n {
            return Err(Error::dim("ModelSet::singleton", n, b.nrows()));
        }
        let m = b.ncols();
        Ok(Self {
            n,
            m,
            center: hcat(n, &[a, b]),
            directions: DMatrix::zeros(n, 0),
            right_inverse: DMatrix::zeros(0, n + m),
        })
    }

    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn input_dim(&self) -> usize {
        self.m
    }

    pub fn center(&self) -> &DMatrix<f64> {
        &self.center
    }

    /// `(A', B')` blocks of the center.
    pub fn center_blocks(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        (
            self.center.columns(0, self.n).into_owned(),
            self.center.columns(self.n, self.m).into_owned(),
        )
    }

    pub fn directions(&self) -> &DMatrix<f64> {
        &self.directions
    }

    pub fn right_inverse(&self) -> &DMatrix<f64> {
        &self.right_inverse
    }

    pub fn samples(&self) -> usize {
        self.right_inverse.nrows()
    }

    /// Number of generator matrices of the explicit form.
    pub fn num_generators(&self) -> usize {
        self.directions.ncols() * self.samples()
    }

    /// True when every generator of the explicit form is zero.
    pub fn is_singleton(&self) -> bool {
        self.directions.iter().all(|v| *v == 0.0) || self.right_inverse.iter().all(|v| *v == 0.0)
    }

    /// Explicit matrix zonotope; generator `j·T + t` is `dⱼ pₜᵀ`.
    pub fn msigma(&self) -> MatrixZonotope {
        let t = self.samples();
        let mut gens = Vec::with_capacity(self.num_generators());
        for d in self.directions.column_iter() {
            for r in 0..t {
                gens.push(&d * self.right_inverse.row(r));
            }
        }
        MatrixZonotope::new(self.center.clone(), gens).expect("shapes agree")
    }

    /// `‖P z‖₁`: the exact half-width multiplier of `{ Σ βᵢ Gᵢ z }` along the
    /// directions, i.e. `{ Σ βᵢ Gᵢ z } = ‖P z‖₁ · ⟨0, D⟩`.
    pub fn coefficient_norm(&self, z: &DVector<f64>) -> f64 {
        (&self.right_inverse * z).lp_norm(1)
    }

    /// `M_Σ Z` with the generator columns of
    /// [`MatrixZonotope::times_zonotope`] applied to [`ModelSet::msigma`],
    /// computed without expanding the generator matrices.
    pub fn times_zonotope(&self, z: &Zonotope) -> Result<Zonotope> {
        let k = self.n + self.m;
        if z.dim() != k {
            return Err(Error::dim("ModelSet::times_zonotope", k, z.dim()));
        }
        let gz = z.generators();
        let nz = gz.ncols();
        let gamma = self.num_generators();
        let t = self.samples();
        let pc = &self.right_inverse * z.center();
        let pg = &self.right_inverse * gz;
        let mut out = DMatrix::zeros(self.n, nz + gamma + gamma * nz);
        out.view_mut((0, 0), (self.n, nz))
            .copy_from(&(&self.center * gz));
        let mut at = nz;
        for d in self.directions.column_iter() {
            for r in 0..t {
                out.column_mut(at).axpy(pc[r], &d, 0.0);
                at += 1;
            }
        }
        for d in self.directions.column_iter() {
            for r in 0..t {
                for c in 0..nz {
                    out.column_mut(at).axpy(pg[(r, c)], &d, 0.0);
                    at += 1;
                }
            }
        }
        Zonotope::new(&self.center * z.center(), out)
    }

    /// Matrix `H` with `‖P z‖₁ ≤ ‖H z‖₁` for all `z`.
    ///
    /// From the thin SVD `P = Σₖ sₖ uₖ vₖᵀ`, row `k` of `H` is `sₖ ‖uₖ‖₁ vₖᵀ`.
    /// It has only `n + m` rows, against `T` rows for `P` itself.
    pub fn svd_coefficient_bound(&self) -> DMatrix<f64> {
        let k = self.n + self.m;
        if self.samples() == 0 {
            return DMatrix::zeros(0, k);
        }
        let svd = self.right_inverse.clone().svd(true, true);
        let u = svd.u.as_ref().expect("u requested");
        let vt = svd.v_t.as_ref().expect("v_t requested");
        let mut h = vt.clone();
        for (i, s) in svd.singular_values.iter().enumerate() {
            let w = s * u.column(i).lp_norm(1);
            h.row_mut(i).scale_mut(w);
        }
        h
    }

    pub fn contains(&self, x: &DMatrix<f64>) -> bool {
        self.msigma().contains(x)
    }
}
