use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::datadriven::{ModelSet, NoiseSpec};
use crate::linalg::{rows, vector};
use crate::setalg::Zonotope;
use crate::{Error, Result};

/// `v(u) = offset + linear · u`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineVector {
    #[serde(with = "vector")]
    pub offset: DVector<f64>,
    #[serde(with = "rows")]
    pub linear: DMatrix<f64>,
}

impl AffineVector {
    pub fn constant(offset: DVector<f64>, vars: usize) -> Self {
        let n = offset.len();
        Self {
            offset,
            linear: DMatrix::zeros(n, vars),
        }
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn eval(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.offset + &self.linear * u
    }

    pub fn map(&self, l: &DMatrix<f64>) -> AffineVector {
        AffineVector {
            offset: l * &self.offset,
            linear: l * &self.linear,
        }
    }

    /// `d · (wᵀ v(u))` for a constant vector `d` and weights `w`.
    fn rank_one(d: &DVector<f64>, w: &DVector<f64>, v: &AffineVector) -> AffineVector {
        let s0 = w.dot(&v.offset);
        let s1 = w.transpose() * &v.linear;
        AffineVector {
            offset: d * s0,
            linear: d * s1,
        }
    }
}

/// A zonotope whose center and generator columns are affine in the stacked
/// decision vector `u = (u₀, …, u_{N−1})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParametricZonotope {
    pub center: AffineVector,
    pub generators: Vec<AffineVector>,
}

impl ParametricZonotope {
    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn eval(&self, u: &DVector<f64>) -> Zonotope {
        let n = self.center.dim();
        let mut g = DMatrix::zeros(n, self.generators.len());
        for (j, gen) in self.generators.iter().enumerate() {
            g.column_mut(j).copy_from(&gen.eval(u));
        }
        Zonotope::new(self.center.eval(u), g).expect("consistent by construction")
    }
}

/// Symbolic unrolling of [`super::reach_horizon`] over `N` singleton inputs.
///
/// Entry `k` describes `R̂ₖ₊₁`; evaluation at any stacked input reproduces the
/// concrete recursion column for column. The generator count grows like
/// `(1 + γ_M)^N`, so this is meant for small model sets.
pub fn reach_parametric(
    y0: &DVector<f64>,
    horizon: usize,
    model: &ModelSet,
    noise: &NoiseSpec,
) -> Result<Vec<ParametricZonotope>> {
    let (n, m) = (model.state_dim(), model.input_dim());
    if horizon == 0 {
        return Err(Error::InvalidArgument(
            "reach_parametric needs N ≥ 1".into(),
        ));
    }
    if y0.len() != n || noise.dim() != n {
        return Err(Error::dim("reach_parametric", n, y0.len()));
    }
    let q = horizon * m;
    let c = model.center();
    let (cx, cu) = (c.columns(0, n).into_owned(), c.columns(n, m).into_owned());
    let p = model.right_inverse();
    let px = p.columns(0, n).into_owned();
    let pu = p.columns(n, m).into_owned();
    let additive = noise.additive();

    let mut center = AffineVector::constant(y0.clone(), q);
    let mut gens: Vec<AffineVector> = Vec::new();
    let mut out = Vec::with_capacity(horizon);
    for k in 0..horizon {
        // u_k as an affine function: selector rows k·m .. k·m+m
        let mut sel = DMatrix::zeros(m, q);
        for i in 0..m {
            sel[(i, k * m + i)] = 1.0;
        }
        // z = [c; u_k]; M_Σ z center C z = Cx c + Cu u_k
        let mut next_center = center.map(&cx);
        next_center.linear += &cu * &sel;
        // P z = Px c + Pu u_k, one affine scalar per data column
        let mut pz = center.map(&px);
        pz.linear += &pu * &sel;

        let mut next: Vec<AffineVector> = gens.iter().map(|g| g.map(&cx)).collect();
        let t = model.samples();
        for d in model.directions().column_iter() {
            let d = d.into_owned();
            for r in 0..t {
                let e = DVector::from_fn(t, |i, _| if i == r { 1.0 } else { 0.0 });
                next.push(AffineVector::rank_one(&d, &e, &pz));
            }
        }
        let pg: Vec<AffineVector> = gens.iter().map(|g| g.map(&px)).collect();
        for d in model.directions().column_iter() {
            let d = d.into_owned();
            for r in 0..t {
                let e = DVector::from_fn(t, |i, _| if i == r { 1.0 } else { 0.0 });
                for g in &pg {
                    next.push(AffineVector::rank_one(&d, &e, g));
                }
            }
        }
        next_center.offset += additive.center();
        for col in additive.generators().column_iter() {
            next.push(AffineVector::constant(col.into_owned(), q));
        }
        center = next_center;
        gens = next;
        out.push(ParametricZonotope {
            center: center.clone(),
            generators: gens.clone(),
        });
    }
    Ok(out)
}
