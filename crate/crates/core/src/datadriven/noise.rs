use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::setalg::{MatrixZonotope, Zonotope};
use crate::{Error, Result};

/// Bounds on process noise `w`, measurement noise `v` and the propagated
/// measurement noise `A v`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub zw: Zonotope,
    pub zv: Zonotope,
    pub zav: Zonotope,
}

impl NoiseSpec {
    pub fn new(zw: Zonotope, zv: Zonotope, zav: Zonotope) -> Result<Self> {
        let n = zw.dim();
        if zv.dim() != n || zav.dim() != n {
            return Err(Error::InvalidArgument(format!(
                "noise zonotopes have dimensions {}, {}, {}",
                n,
                zv.dim(),
                zav.dim()
            )));
        }
        Ok(Self { zw, zv, zav })
    }

    /// All three bounds are the singleton at the origin.
    pub fn zero(n: usize) -> Self {
        Self {
            zw: Zonotope::origin(n),
            zv: Zonotope::origin(n),
            zav: Zonotope::origin(n),
        }
    }

    /// Uses the interval hull of `A Z_v` as the bound on `A v`. Only sensible
    /// where the true `A` is known, e.g. when generating benchmark data.
    pub fn with_derived_zav(zw: Zonotope, zv: Zonotope, a: &DMatrix<f64>) -> Result<Self> {
        let image = zv.linear_map(a)?.interval_hull();
        let zav = Zonotope::from_interval(&image)?;
        Self::new(zw, zv, zav)
    }

    /// A zonotope with a single generator `magnitude·𝟙` and center zero.
    pub fn uniform_generator(n: usize, magnitude: f64) -> Zonotope {
        Zonotope::new(DVector::zeros(n), DMatrix::from_element(n, 1, magnitude))
            .expect("shapes agree")
    }

    pub fn dim(&self) -> usize {
        self.zw.dim()
    }

    /// `Z_w ⊕ Z_v ⊕ (−1) Z_Av`, the per-step additive term of the reachability recursion.
    pub fn additive(&self) -> Zonotope {
        self.zw
            .minkowski_sum(&self.zv)
            .and_then(|s| s.minus(&self.zav))
            .expect("dimensions validated at construction")
    }

    pub fn is_zero(&self) -> bool {
        [&self.zw, &self.zv, &self.zav].iter().all(|z| {
            z.center().iter().all(|v| *v == 0.0) && z.generators().iter().all(|v| *v == 0.0)
        })
    }
}

/// The matrix zonotope of `T` column-wise independent samples of `z`.
///
/// Generator `i·T + t` carries the `i`-th generator of `z` in column `t`.
pub fn stacked_noise_matzono(z: &Zonotope, t: usize) -> Result<MatrixZonotope> {
    if t == 0 {
        return Err(Error::InvalidArgument("stacked noise needs T ≥ 1".into()));
    }
    let n = z.dim();
    let mut center = DMatrix::zeros(n, t);
    for c in 0..t {
        center.column_mut(c).copy_from(z.center());
    }
    let mut generators = Vec::with_capacity(z.num_generators() * t);
    for g in z.generators().column_iter() {
        for c in 0..t {
            let mut m = DMatrix::zeros(n, t);
            m.column_mut(c).copy_from(&g);
            generators.push(m);
        }
    }
    MatrixZonotope::new(center, generators)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generator_count_and_layout() {
        let z = NoiseSpec::uniform_generator(5, 0.01);
        let m = stacked_noise_matzono(&z, 400).unwrap();
        assert_eq!(m.num_generators(), 400);
        assert_eq!(m.shape(), (5, 400));
        let g7 = &m.generators()[7];
        assert_eq!(g7.column(7).sum(), 0.05);
        assert_eq!(g7.abs().sum(), 0.05);
    }

    #[test]
    fn single_column_matches_the_zonotope() {
        let z = Zonotope::new(
            DVector::from_vec(vec![1.0, 2.0]),
            DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.1, 0.3]),
        )
        .unwrap();
        let m = stacked_noise_matzono(&z, 1).unwrap();
        assert_eq!(m.to_vectorized(), z);
    }

    #[test]
    fn independent_column_samples_are_members() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let z = Zonotope::new(
            DVector::from_vec(vec![0.1, -0.2]),
            DMatrix::from_row_slice(2, 3, &[0.5, 0.0, 0.2, 0.1, 0.3, -0.2]),
        )
        .unwrap();
        let m = stacked_noise_matzono(&z, 12).unwrap();
        for _ in 0..20 {
            let x = DMatrix::from_columns(&(0..12).map(|_| z.sample(&mut rng)).collect::<Vec<_>>());
            assert!(m.contains(&x));
        }
    }

    #[test]
    fn derived_zav_is_a_box() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 2.0]);
        let zv = NoiseSpec::uniform_generator(2, 0.1);
        let spec = NoiseSpec::with_derived_zav(zv.clone(), zv, &a).unwrap();
        let h = spec.zav.interval_hull();
        assert!((h.upper()[0] - 0.2).abs() < 1e-15 && (h.upper()[1] - 0.2).abs() < 1e-15);
        assert_eq!(spec.zav.num_generators(), 2);
    }
}
