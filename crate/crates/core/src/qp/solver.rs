use nalgebra::{DMatrix, DVector};

use super::{check_kkt, QpOptions, QpProblem, QpSolution, QpStatus};
use crate::Result;

const PRIMAL_REG: f64 = 1e-9;
const DUAL_REG: f64 = 1e-10;
const STEP_FRACTION: f64 = 0.99;
const REFINE_STEPS: usize = 3;
const STALL_WINDOW: usize = 200;
/// A Farkas certificate is accepted once it excludes every feasible point
/// with `‖x‖₁` below this radius.
const CERTIFICATE_RADIUS: f64 = 1e9;
const CERTIFY_TOL: f64 = 1e-6;

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

/// Solves a convex QP. Errors only for invalid problem data; infeasibility and
/// iteration exhaustion are reported through [`QpSolution::status`].
pub fn solve(p: &QpProblem, opts: &QpOptions) -> Result<QpSolution> {
    p.validate()?;
    let mut ipm = Ipm::new(p, opts);
    let status = ipm.run();
    let mut sol = ipm.into_solution(status);
    if sol.status == QpStatus::Optimal {
        if opts.polish {
            if let Some(polished) = polish(p, &sol) {
                sol = polished;
            }
        }
        let report = check_kkt(p, &sol);
        sol.primal_residual = report.primal();
        sol.dual_residual = report.stationarity;
        if !report.passes(1e-6) {
            sol.status = QpStatus::MaxIter;
        }
    }
    sol.objective = p.objective(&sol.x);
    Ok(sol)
}

struct Ipm<'a> {
    p: &'a QpProblem,
    opts: &'a QpOptions,
    x: DVector<f64>,
    y: DVector<f64>,
    z: DVector<f64>,
    s: DVector<f64>,
    iterations: usize,
    primal_residual: f64,
    dual_residual: f64,
}

struct Residuals {
    dual: DVector<f64>,
    eq: DVector<f64>,
    ineq: DVector<f64>,
}

impl<'a> Ipm<'a> {
    fn new(p: &'a QpProblem, opts: &'a QpOptions) -> Self {
        let d = p.dim();
        let x = match &opts.initial_guess {
            Some(g) if g.len() == d => g.clone(),
            _ => DVector::zeros(d),
        };
        let gap = &p.b_in - &p.a_in * &x;
        let s = gap.map(|v| v.max(1.0));
        let z = DVector::from_element(p.b_in.len(), 1.0);
        Self {
            p,
            opts,
            x,
            y: DVector::zeros(p.b_eq.len()),
            z,
            s,
            iterations: 0,
            primal_residual: f64::INFINITY,
            dual_residual: f64::INFINITY,
        }
    }

    fn residuals(&self) -> Residuals {
        let p = self.p;
        Residuals {
            dual: &p.h * &self.x
                + &p.f
                + p.a_eq.transpose() * &self.y
                + p.a_in.transpose() * &self.z,
            eq: &p.a_eq * &self.x - &p.b_eq,
            ineq: &p.a_in * &self.x + &self.s - &p.b_in,
        }
    }

    fn mu(&self) -> f64 {
        let m = self.s.len();
        if m == 0 {
            0.0
        } else {
            self.s.dot(&self.z) / m as f64
        }
    }

    fn converged(&self, r: &Residuals) -> bool {
        let p = self.p;
        let (abs, rel) = (self.opts.abs_tol, self.opts.rel_tol);
        let primal_scale = 1.0_f64
            .max(inf_norm(&p.b_eq))
            .max(inf_norm(&p.b_in))
            .max(inf_norm(&(&p.a_in * &self.x)))
            .max(inf_norm(&(&p.a_eq * &self.x)));
        let dual_scale = 1.0_f64
            .max(inf_norm(&(&p.h * &self.x)))
            .max(inf_norm(&p.f))
            .max(inf_norm(&(p.a_eq.transpose() * &self.y)))
            .max(inf_norm(&(p.a_in.transpose() * &self.z)));
        let pres = inf_norm(&r.eq).max(inf_norm(&r.ineq));
        let dres = inf_norm(&r.dual);
        pres <= abs + rel * primal_scale && dres <= abs + rel * dual_scale && self.mu() <= abs
    }

    /// Normalized multipliers form an approximate Farkas certificate
    /// `A_eqᵀ y + A_inᵀ z ≈ 0`, `b_eqᵀ y + b_inᵀ z < 0`, `z ≥ 0`.
    fn certifies_infeasibility(&self) -> bool {
        let p = self.p;
        let nrm = inf_norm(&self.y).max(inf_norm(&self.z));
        if nrm <= 1.0 {
            return false;
        }
        let y = &self.y / nrm;
        let z = &self.z / nrm;
        let value = p.b_eq.dot(&y) + p.b_in.dot(&z);
        if value >= -CERTIFY_TOL {
            return false;
        }
        let r = inf_norm(&(p.a_eq.transpose() * &y + p.a_in.transpose() * &z));
        r * CERTIFICATE_RADIUS <= -value
    }

    fn run(&mut self) -> QpStatus {
        let (d, me) = (self.p.dim(), self.p.b_eq.len());
        let mut best_merit = f64::INFINITY;
        let mut since_best = 0usize;
        while self.iterations < self.opts.max_iter {
            let r = self.residuals();
            self.primal_residual = inf_norm(&r.eq).max(inf_norm(&r.ineq));
            self.dual_residual = inf_norm(&r.dual);
            if self.converged(&r) {
                return QpStatus::Optimal;
            }
            if self.certifies_infeasibility() {
                return QpStatus::Infeasible;
            }
            let merit = self.primal_residual.max(self.dual_residual).max(self.mu());
            if merit < 0.9 * best_merit {
                best_merit = merit;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best > STALL_WINDOW {
                    return QpStatus::MaxIter;
                }
            }
            self.iterations += 1;

            let w = self.z.component_div(&self.s);
            let Some(kkt) = KktSystem::new(self.p, &w) else {
                return QpStatus::MaxIter;
            };
            let mu = self.mu();

            // Predictor.
            let rc_aff = self.s.component_mul(&self.z);
            let (_, _, dz_a, ds_a) = self.direction(&kkt, &r, &rc_aff, d, me);
            let alpha_aff = self.max_step(&ds_a, &dz_a);
            let mu_aff = if self.s.is_empty() {
                0.0
            } else {
                (&self.s + &ds_a * alpha_aff).dot(&(&self.z + &dz_a * alpha_aff))
                    / self.s.len() as f64
            };
            let sigma = if mu > 0.0 {
                (mu_aff / mu).clamp(0.0, 1.0).powi(3)
            } else {
                0.0
            };

            // Corrector.
            let rc = &rc_aff + ds_a.component_mul(&dz_a)
                - DVector::from_element(self.s.len(), sigma * mu);
            let (dx, dy, dz, ds) = self.direction(&kkt, &r, &rc, d, me);
            let alpha = (STEP_FRACTION * self.max_step(&ds, &dz)).min(1.0);
            self.x += &dx * alpha;
            self.y += &dy * alpha;
            self.z += &dz * alpha;
            self.s += &ds * alpha;
            // Guard against exact zeros from round-off.
            for v in self.s.iter_mut().chain(self.z.iter_mut()) {
                if *v < 1e-300 {
                    *v = 1e-300;
                }
            }
        }
        QpStatus::MaxIter
    }

    fn direction(
        &self,
        kkt: &KktSystem,
        r: &Residuals,
        rc: &DVector<f64>,
        d: usize,
        me: usize,
    ) -> (DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>) {
        let p = self.p;
        // Δz = S⁻¹(−r_c + Z r_i + Z G Δx), Δs = −r_i − G Δx
        let t = (-rc + self.z.component_mul(&r.ineq)).component_div(&self.s);
        let mut rhs = DVector::zeros(d + me);
        rhs.rows_mut(0, d)
            .copy_from(&(-&r.dual - p.a_in.transpose() * &t));
        rhs.rows_mut(d, me).copy_from(&(-&r.eq));
        let sol = kkt.solve(&rhs);
        let dx = sol.rows(0, d).into_owned();
        let dy = sol.rows(d, me).into_owned();
        let gdx = &p.a_in * &dx;
        let dz = &t + self.z.component_mul(&gdx).component_div(&self.s);
        let ds = -&r.ineq - gdx;
        (dx, dy, dz, ds)
    }

    fn max_step(&self, ds: &DVector<f64>, dz: &DVector<f64>) -> f64 {
        let mut alpha = 1.0_f64 / STEP_FRACTION;
        for (v, dv) in self
            .s
            .iter()
            .zip(ds.iter())
            .chain(self.z.iter().zip(dz.iter()))
        {
            if *dv < 0.0 {
                alpha = alpha.min(-v / dv);
            }
        }
        alpha
    }

    fn into_solution(self, status: QpStatus) -> QpSolution {
        QpSolution {
            objective: 0.0,
            x: self.x,
            y: self.y,
            z: self.z,
            status,
            primal_residual: self.primal_residual,
            dual_residual: self.dual_residual,
            iterations: self.iterations,
        }
    }
}

/// Reduced Newton system `[H + Gᵀ W G + ρI, Aᵀ; A, −δI]`, factored once per
/// iteration and refined against the unregularized matrix.
struct KktSystem {
    exact: DMatrix<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl KktSystem {
    fn new(p: &QpProblem, w: &DVector<f64>) -> Option<Self> {
        let (d, me) = (p.dim(), p.b_eq.len());
        let mut exact = DMatrix::zeros(d + me, d + me);
        let mut gw = p.a_in.clone();
        for (i, wi) in w.iter().enumerate() {
            gw.row_mut(i).scale_mut(*wi);
        }
        let top = &p.h + p.a_in.transpose() * gw;
        exact.view_mut((0, 0), (d, d)).copy_from(&top);
        exact.view_mut((d, 0), (me, d)).copy_from(&p.a_eq);
        exact
            .view_mut((0, d), (d, me))
            .copy_from(&p.a_eq.transpose());
        let mut reg = exact.clone();
        for i in 0..d {
            reg[(i, i)] += PRIMAL_REG;
        }
        for i in d..d + me {
            reg[(i, i)] -= DUAL_REG;
        }
        let lu = reg.lu();
        if !lu.is_invertible() {
            return None;
        }
        Some(Self { exact, lu })
    }

    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut x = self
            .lu
            .solve(rhs)
            .unwrap_or_else(|| DVector::zeros(rhs.len()));
        for _ in 0..REFINE_STEPS {
            let r = rhs - &self.exact * &x;
            match self.lu.solve(&r) {
                Some(dx) if dx.iter().all(|v| v.is_finite()) => x += dx,
                _ => break,
            }
        }
        x
    }
}

/// Re-solves the equality-constrained problem on the active set guessed from
/// the interior-point iterate. Returns `None` unless the result is at least as
/// good a KKT point.
fn polish(p: &QpProblem, sol: &QpSolution) -> Option<QpSolution> {
    let (d, me) = (p.dim(), p.b_eq.len());
    let slack = &p.b_in - &p.a_in * &sol.x;
    let active: Vec<usize> = (0..p.b_in.len()).filter(|&i| sol.z[i] > slack[i]).collect();
    let na = active.len();
    let n = d + me + na;
    let mut k = DMatrix::zeros(n, n);
    k.view_mut((0, 0), (d, d)).copy_from(&p.h);
    k.view_mut((d, 0), (me, d)).copy_from(&p.a_eq);
    k.view_mut((0, d), (d, me)).copy_from(&p.a_eq.transpose());
    let mut rhs = DVector::zeros(n);
    rhs.rows_mut(0, d).copy_from(&(-&p.f));
    rhs.rows_mut(d, me).copy_from(&p.b_eq);
    for (r, &i) in active.iter().enumerate() {
        let row = p.a_in.row(i);
        k.view_mut((d + me + r, 0), (1, d)).copy_from(&row);
        k.view_mut((0, d + me + r), (d, 1))
            .copy_from(&row.transpose());
        rhs[d + me + r] = p.b_in[i];
    }
    let exact = k.clone();
    for i in 0..d {
        k[(i, i)] += PRIMAL_REG;
    }
    for i in d..n {
        k[(i, i)] -= DUAL_REG;
    }
    let lu = k.lu();
    let mut v = lu.solve(&rhs)?;
    for _ in 0..REFINE_STEPS {
        let r = &rhs - &exact * &v;
        v += lu.solve(&r)?;
    }
    if v.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let mut z = DVector::zeros(p.b_in.len());
    for (r, &i) in active.iter().enumerate() {
        z[i] = v[d + me + r];
    }
    let candidate = QpSolution {
        x: v.rows(0, d).into_owned(),
        y: v.rows(d, me).into_owned(),
        z,
        ..sol.clone()
    };
    let before = check_kkt(p, sol);
    let after = check_kkt(p, &candidate);
    let ok = after.min_dual >= 0.0
        && after.inequality <= before.inequality.max(1e-12)
        && after.max_residual() <= before.max_residual().max(1e-12);
    ok.then_some(candidate)
}
