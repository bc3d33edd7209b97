//! Box-constrained linear feasibility: find `beta ∈ [-1, 1]^k` with `G beta = d`.
//!
//! Solved with a dense bounded-variable primal simplex on the phase-one
//! problem (minimize the sum of artificial residuals). The returned witness is
//! re-checked against the original data, so the acceptance decision never
//! depends on accumulated tableau round-off.

use nalgebra::{DMatrix, DVector};

/// Absolute tolerance on `‖G beta − d‖∞` for membership decisions.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-8;

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-12;
const DEGENERATE_STREAK: usize = 50;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Bound {
    Lower,
    Upper,
}

/// Returns a coefficient vector `beta ∈ [-1, 1]^k` with `‖G beta − d‖∞ ≤ tol`,
/// or `None` when no such vector exists.
pub fn box_combination(g: &DMatrix<f64>, d: &DVector<f64>, tol: f64) -> Option<DVector<f64>> {
    let (m, k) = g.shape();
    assert_eq!(m, d.len(), "box_combination: rhs length");
    if k == 0 || m == 0 {
        return (d.amax() <= tol).then(|| DVector::zeros(k));
    }

    // Row scaling keeps pivots comparable when generators are tiny.
    let scale: Vec<f64> = (0..m)
        .map(|i| {
            let s = g.row(i).amax().max(d[i].abs());
            if s > 0.0 {
                1.0 / s
            } else {
                1.0
            }
        })
        .collect();
    let gs = DMatrix::from_fn(m, k, |i, j| g[(i, j)] * scale[i]);
    let ds = DVector::from_fn(m, |i, _| d[i] * scale[i]);

    let beta = Phase1::new(&gs, &ds).run()?;
    let residual = (g * &beta - d).amax();
    (residual <= tol).then_some(beta)
}

struct Phase1 {
    m: usize,
    k: usize,
    /// B⁻¹ [G | diag(sign)], m × (k + m).
    tableau: DMatrix<f64>,
    basis: Vec<usize>,
    basic_value: Vec<f64>,
    status: Vec<Bound>,
    in_basis: Vec<bool>,
    /// original columns, needed for the final basic solve.
    columns: DMatrix<f64>,
    rhs: DVector<f64>,
}

impl Phase1 {
    fn new(g: &DMatrix<f64>, d: &DVector<f64>) -> Self {
        let (m, k) = g.shape();
        // Structural variables start at their lower bound -1.
        let r = d + g * DVector::from_element(k, 1.0);
        let sign: Vec<f64> = r
            .iter()
            .map(|v| if *v >= 0.0 { 1.0 } else { -1.0 })
            .collect();

        let mut columns = DMatrix::zeros(m, k + m);
        columns.view_mut((0, 0), (m, k)).copy_from(g);
        for i in 0..m {
            columns[(i, k + i)] = sign[i];
        }
        let mut tableau = columns.clone();
        for i in 0..m {
            tableau.row_mut(i).scale_mut(sign[i]);
        }
        let mut in_basis = vec![false; k + m];
        for flag in in_basis.iter_mut().skip(k) {
            *flag = true;
        }
        Self {
            m,
            k,
            tableau,
            basis: (k..k + m).collect(),
            basic_value: r.iter().map(|v| v.abs()).collect(),
            status: vec![Bound::Lower; k + m],
            in_basis,
            columns,
            rhs: d.clone(),
        }
    }

    fn bounds(&self, j: usize) -> (f64, f64) {
        if j < self.k {
            (-1.0, 1.0)
        } else {
            (0.0, f64::INFINITY)
        }
    }

    fn reduced_cost(&self, j: usize) -> f64 {
        let c = if j < self.k { 0.0 } else { 1.0 };
        let mut cb = 0.0;
        for (i, &b) in self.basis.iter().enumerate() {
            if b >= self.k {
                cb += self.tableau[(i, j)];
            }
        }
        c - cb
    }

    fn entering(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        // Artificial variables never re-enter once they leave.
        for j in 0..self.k {
            if self.in_basis[j] {
                continue;
            }
            let dj = self.reduced_cost(j);
            let dir = match self.status[j] {
                Bound::Lower if dj < -COST_TOL => 1.0,
                Bound::Upper if dj > COST_TOL => -1.0,
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            if best.is_none_or(|(b, _)| dj.abs() > self.reduced_cost(b).abs()) {
                best = Some((j, dir));
            }
        }
        best
    }

    fn run(mut self) -> Option<DVector<f64>> {
        let max_iter = 50 * (self.m + self.k) + 1000;
        let mut degenerate = 0usize;
        for _ in 0..max_iter {
            if self.artificial_sum() <= 1e-15 {
                break;
            }
            let Some((j, dir)) = self.entering(degenerate > DEGENERATE_STREAK) else {
                break;
            };
            let (lo_j, hi_j) = self.bounds(j);
            let mut theta = hi_j - lo_j;
            let mut leave: Option<(usize, Bound)> = None;
            for i in 0..self.m {
                let a = dir * self.tableau[(i, j)];
                let b = self.basis[i];
                let (lo, hi) = self.bounds(b);
                let (limit, hit) = if a > PIVOT_TOL {
                    ((self.basic_value[i] - lo).max(0.0) / a, Bound::Lower)
                } else if a < -PIVOT_TOL && hi.is_finite() {
                    ((hi - self.basic_value[i]).max(0.0) / -a, Bound::Upper)
                } else {
                    continue;
                };
                let better = match leave {
                    _ if limit < theta - 1e-15 => true,
                    Some((r, _)) if limit <= theta + 1e-15 => b < self.basis[r],
                    None if limit <= theta + 1e-15 => true,
                    _ => false,
                };
                if better {
                    theta = limit;
                    leave = Some((i, hit));
                }
            }
            degenerate = if theta <= 1e-14 { degenerate + 1 } else { 0 };

            for i in 0..self.m {
                self.basic_value[i] -= dir * theta * self.tableau[(i, j)];
            }
            let entering_value = if dir > 0.0 {
                lo_j + theta
            } else {
                hi_j - theta
            };

            match leave {
                None => {
                    self.status[j] = if dir > 0.0 {
                        Bound::Upper
                    } else {
                        Bound::Lower
                    };
                }
                Some((r, hit)) => {
                    let out = self.basis[r];
                    self.status[out] = hit;
                    self.in_basis[out] = false;
                    self.in_basis[j] = true;
                    self.pivot(r, j);
                    self.basis[r] = j;
                    self.basic_value[r] = entering_value;
                }
            }
        }
        self.solution()
    }

    fn artificial_sum(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.basic_value)
            .filter(|(b, _)| **b >= self.k)
            .map(|(_, v)| v.max(0.0))
            .sum()
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let p = self.tableau[(r, j)];
        self.tableau.row_mut(r).scale_mut(1.0 / p);
        let pivot_row = self.tableau.row(r).transpose();
        let mut col = self.tableau.column(j).clone_owned();
        col[r] = 0.0;
        self.tableau.ger(-1.0, &col, &pivot_row, 1.0);
    }

    /// Rebuilds basic values from the original columns and extracts `beta`.
    fn solution(&self) -> Option<DVector<f64>> {
        let n_all = self.k + self.m;
        let mut x = DVector::zeros(n_all);
        for j in 0..n_all {
            if !self.in_basis[j] {
                let (lo, hi) = self.bounds(j);
                x[j] = match self.status[j] {
                    Bound::Lower => lo,
                    Bound::Upper => hi,
                };
            }
        }
        let mut rhs = self.rhs.clone();
        for j in 0..n_all {
            if !self.in_basis[j] && x[j] != 0.0 {
                rhs.axpy(-x[j], &self.columns.column(j), 1.0);
            }
        }
        let basis_matrix =
            DMatrix::from_fn(self.m, self.m, |i, c| self.columns[(i, self.basis[c])]);
        let xb = basis_matrix
            .lu()
            .solve(&rhs)
            .unwrap_or_else(|| DVector::from_vec(self.basic_value.clone()));
        for (c, &b) in self.basis.iter().enumerate() {
            x[b] = xb[c];
        }
        let beta = DVector::from_fn(self.k, |j, _| x[j].clamp(-1.0, 1.0));
        Some(beta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn finds_witness_for_constructed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let m = rng.random_range(1..6);
            let k = rng.random_range(1..20);
            let g = DMatrix::from_fn(m, k, |_, _| rng.random_range(-2.0..2.0));
            let beta = DVector::from_fn(k, |_, _| rng.random_range(-1.0..=1.0));
            let d = &g * &beta;
            let w = box_combination(&g, &d, MEMBERSHIP_TOLERANCE).expect("witness");
            assert!(w.iter().all(|b| b.abs() <= 1.0));
            assert!((&g * &w - &d).amax() <= MEMBERSHIP_TOLERANCE);
        }
    }

    #[test]
    fn rejects_points_outside_the_box_image() {
        let g = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert!(box_combination(&g, &DVector::from_vec(vec![1.5]), MEMBERSHIP_TOLERANCE).is_none());
        assert!(
            box_combination(&g, &DVector::from_vec(vec![-1.0]), MEMBERSHIP_TOLERANCE).is_some()
        );
    }

    #[test]
    fn rejects_points_off_the_generator_span() {
        let g = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let d = DVector::from_vec(vec![0.5, -0.5]);
        assert!(box_combination(&g, &d, MEMBERSHIP_TOLERANCE).is_none());
    }

    #[test]
    fn wide_problem_with_many_generators() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (m, k) = (30, 1500);
        let g = DMatrix::from_fn(m, k, |_, _| rng.random_range(-1e-3..1e-3));
        let beta = DVector::from_fn(k, |_, _| rng.random_range(-1.0..=1.0));
        let d = &g * &beta;
        assert!(box_combination(&g, &d, MEMBERSHIP_TOLERANCE).is_some());
    }
}
