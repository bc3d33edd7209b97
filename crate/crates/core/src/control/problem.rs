use std::ops::AddAssign;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ControllerConfig;
use crate::datadriven::{ModelSet, NoiseSpec};
use crate::qp::{self, QpOptions, QpProblem, QpSolution, QpStatus};
use crate::reach::{AffineVector, CoefficientBound, FactoredReach};
use crate::setalg::IntervalVector;
use crate::{Error, Result};

/// Decoded optimal control problem solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OcpSolution {
    pub u_seq: Vec<Vec<f64>>,
    /// `y_{t+1|t} … y_{t+N|t}`.
    pub y_seq: Vec<Vec<f64>>,
    pub slack_u: Vec<Vec<f64>>,
    pub slack_l: Vec<Vec<f64>>,
    /// Interval bounds of the predicted reachable sets, as enforced.
    pub reach_bounds: Vec<IntervalVector>,
    pub cost: f64,
    pub status: QpStatus,
    pub iterations: usize,
}

/// How `σⱼ` is represented by epigraph variables.
#[derive(Clone, Debug)]
enum Epigraph {
    /// `τⱼᵣ ≥ ±(H zⱼ)ᵣ`, one `τ` per row of `H`, so `σⱼ ≤ Σᵣ τⱼᵣ`.
    Rows,
    /// A single `τⱼ ≥ cᵀ zⱼ` for every collected cut `c = Pᵀ s`, `s ∈ {−1, 1}^T`.
    Cuts(Vec<Vec<DVector<f64>>>),
}

/// A condensed receding-horizon program over `x = (u, τ)`.
///
/// The predicted outputs are the reachable-set centers `cₖ(u)`, so
/// `s_u = s_l` equal the half-widths `Wₖ [1; σ]`. Each `σⱼ` that matters for a
/// bounded output is replaced by epigraph variables: either the `n + m` row
/// bound `‖H zⱼ(u)‖₁ ≤ Σᵣ τⱼᵣ`, or the exact `‖P zⱼ(u)‖₁ = max_s sᵀ P zⱼ(u)`
/// through cuts added in [`Self::solve`] until `τⱼ ≥ ‖P zⱼ(u*)‖₁`.
#[derive(Clone, Debug)]
pub struct ControlProblem {
    pub qp: QpProblem,
    t: usize,
    horizon: usize,
    n: usize,
    m: usize,
    centers: Vec<AffineVector>,
    radius: Vec<DMatrix<f64>>,
    regressors: Vec<AffineVector>,
    bound: DMatrix<f64>,
    epigraph: Epigraph,
    /// Start of the `τ` block for `σⱼ`, when present.
    tau: Vec<Option<usize>>,
    tau_width: usize,
    cfg: ControllerConfig,
}

const WIDTH_SLACK: f64 = 1e-12;
/// Relative amount by which `‖P zⱼ(u*)‖₁` may exceed `τⱼ*` at acceptance.
const CUT_TOLERANCE: f64 = 1e-9;
const MAX_CUT_ROUNDS: usize = 200;

impl ControlProblem {
    fn assemble(
        t: usize,
        centers: Vec<AffineVector>,
        radius: Vec<DMatrix<f64>>,
        regressors: Vec<AffineVector>,
        bound: DMatrix<f64>,
        epigraph: Epigraph,
        cfg: &ControllerConfig,
    ) -> Result<Self> {
        let (horizon, n, m) = (cfg.horizon, cfg.output_dim(), cfg.input_dim());
        let q = horizon * m;
        let (ylo, yhi) = (cfg.output_bounds.lower(), cfg.output_bounds.upper());
        let bounded: Vec<bool> = (0..n)
            .map(|d| ylo[d].is_finite() || yhi[d].is_finite())
            .collect();

        for (k, w) in radius.iter().enumerate() {
            for d in 0..n {
                let width = yhi[d] - ylo[d];
                if width.is_finite() && 2.0 * w[(d, 0)] > width + WIDTH_SLACK {
                    return Err(Error::InfeasibleByConstruction(format!(
                        "predicted step {} output {}: reachable-set width {:.6} exceeds constraint width {:.6}",
                        k + 1,
                        d + 1,
                        2.0 * w[(d, 0)],
                        width
                    )));
                }
            }
        }

        let h_rows = bound.nrows();
        let width = match epigraph {
            Epigraph::Rows => h_rows,
            Epigraph::Cuts(_) => 1,
        };
        let mut tau = vec![None; horizon];
        let mut dvar = q;
        for (j, slot) in tau.iter_mut().enumerate() {
            let needed = radius
                .iter()
                .any(|w| (0..n).any(|d| bounded[d] && w[(d, 1 + j)] > 0.0));
            if needed && h_rows > 0 {
                *slot = Some(dvar);
                dvar += width;
            }
        }

        // cost
        let mut h = DMatrix::zeros(dvar, dvar);
        let mut f = DVector::zeros(dvar);
        for (k, c) in centers.iter().enumerate() {
            let ql = &cfg.q * &c.linear;
            let e = &c.offset - cfg.reference.ry(t + k + 1);
            h.view_mut((0, 0), (q, q))
                .add_assign(&(c.linear.transpose() * &ql * 2.0));
            f.rows_mut(0, q).add_assign(&(ql.transpose() * e * 2.0));
        }
        for k in 0..horizon {
            let at = k * m;
            h.view_mut((at, at), (m, m)).add_assign(&(&cfg.r * 2.0));
            f.rows_mut(at, m)
                .add_assign(&(&cfg.r * cfg.reference.ru(t + k) * -2.0));
        }
        // exact symmetry for the solver's check
        let h = (&h + h.transpose()) * 0.5;

        let mut rows: Vec<(DVector<f64>, f64)> = Vec::new();
        let (ulo, uhi) = (cfg.input_bounds.lower(), cfg.input_bounds.upper());
        for k in 0..horizon {
            for i in 0..m {
                let v = k * m + i;
                if uhi[i].is_finite() {
                    let mut a = DVector::zeros(dvar);
                    a[v] = 1.0;
                    rows.push((a, uhi[i]));
                }
                if ulo[i].is_finite() {
                    let mut a = DVector::zeros(dvar);
                    a[v] = -1.0;
                    rows.push((a, -ulo[i]));
                }
            }
        }
        for (j, slot) in tau.iter().enumerate() {
            let Some(start) = *slot else { continue };
            match &epigraph {
                Epigraph::Rows => {
                    let hz = regressors[j].map(&bound);
                    for r in 0..h_rows {
                        for sign in [1.0, -1.0] {
                            let mut a = DVector::zeros(dvar);
                            for v in 0..q {
                                a[v] = sign * hz.linear[(r, v)];
                            }
                            a[start + r] = -1.0;
                            rows.push((a, -sign * hz.offset[r]));
                        }
                    }
                }
                Epigraph::Cuts(cuts) => {
                    // τⱼ ≥ 0 bounds the relaxation before any cut binds
                    let mut a = DVector::zeros(dvar);
                    a[start] = -1.0;
                    rows.push((a, 0.0));
                    for c in &cuts[j] {
                        let lin = regressors[j].linear.transpose() * c;
                        let mut a = DVector::zeros(dvar);
                        a.rows_mut(0, q).copy_from(&lin);
                        a[start] = -1.0;
                        rows.push((a, -regressors[j].offset.dot(c)));
                    }
                }
            }
        }
        for (c, w) in centers.iter().zip(&radius) {
            for d in 0..n {
                for (sign, limit) in [(1.0, yhi[d]), (-1.0, -ylo[d])] {
                    if !limit.is_finite() {
                        continue;
                    }
                    let mut a = DVector::zeros(dvar);
                    for v in 0..q {
                        a[v] = sign * c.linear[(d, v)];
                    }
                    for (j, slot) in tau.iter().enumerate() {
                        if let Some(start) = slot {
                            for r in 0..width {
                                a[start + r] += w[(d, 1 + j)];
                            }
                        }
                    }
                    rows.push((a, limit - sign * c.offset[d] - w[(d, 0)]));
                }
            }
        }
        let a_in = DMatrix::from_fn(rows.len(), dvar, |i, j| rows[i].0[j]);
        let b_in = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));

        let mut names: Vec<String> = Vec::with_capacity(dvar);
        for k in 0..horizon {
            for i in 0..m {
                names.push(format!("u[{k}][{i}]"));
            }
        }
        for (j, slot) in tau.iter().enumerate() {
            if slot.is_some() {
                for r in 0..width {
                    names.push(format!("tau[{j}][{r}]"));
                }
            }
        }
        let mut qp = QpProblem::new(h, f).with_ineq(a_in, b_in);
        qp.names = names;

        Ok(Self {
            qp,
            t,
            horizon,
            n,
            m,
            centers,
            radius,
            regressors,
            bound,
            epigraph,
            tau,
            tau_width: width,
            cfg: cfg.clone(),
        })
    }

    /// Adds the cut `Pᵀ sign(P zⱼ(u))` for every `σⱼ` that `x` underestimates.
    /// `None` when there is nothing to add.
    fn refine(&self, x: &DVector<f64>) -> Result<Option<Self>> {
        let Epigraph::Cuts(cuts) = &self.epigraph else {
            return Ok(None);
        };
        let u = self.inputs(x);
        let mut cuts = cuts.clone();
        let mut added = false;
        for (j, slot) in self.tau.iter().enumerate() {
            let Some(start) = *slot else { continue };
            let pz = &self.bound * self.regressors[j].eval(&u);
            let sigma = pz.lp_norm(1);
            if sigma > x[start] + CUT_TOLERANCE * (1.0 + sigma) {
                cuts[j].push(self.bound.transpose() * pz.map(f64::signum));
                added = true;
            }
        }
        if !added {
            return Ok(None);
        }
        Self::assemble(
            self.t,
            self.centers.clone(),
            self.radius.clone(),
            self.regressors.clone(),
            self.bound.clone(),
            Epigraph::Cuts(cuts),
            &self.cfg,
        )
        .map(Some)
    }

    /// Number of cuts currently in the program.
    pub fn num_cuts(&self) -> usize {
        match &self.epigraph {
            Epigraph::Rows => 0,
            Epigraph::Cuts(c) => c.iter().map(Vec::len).sum(),
        }
    }

    pub fn num_tau(&self) -> usize {
        self.qp.dim() - self.horizon * self.m
    }

    pub fn inputs(&self, x: &DVector<f64>) -> DVector<f64> {
        x.rows(0, self.horizon * self.m).into_owned()
    }

    /// `σ̄ⱼ` as enforced: `Σᵣ τⱼᵣ` where the program carries `τ` (but never
    /// below `‖H zⱼ(u)‖₁`), else `‖H zⱼ(u)‖₁`.
    pub fn sigma_bound(&self, x: &DVector<f64>) -> DVector<f64> {
        let u = self.inputs(x);
        DVector::from_fn(self.horizon, |j, _| {
            let direct = (&self.bound * self.regressors[j].eval(&u)).lp_norm(1);
            match self.tau[j] {
                Some(start) => x.rows(start, self.tau_width).sum().max(direct),
                None => direct,
            }
        })
    }

    /// `σⱼ` recomputed with an arbitrary matrix, e.g. the exact `P`.
    pub fn sigma_with(&self, u: &DVector<f64>, h: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_fn(self.horizon, |j, _| {
            (h * self.regressors[j].eval(u)).lp_norm(1)
        })
    }

    pub fn centers(&self, u: &DVector<f64>) -> Vec<DVector<f64>> {
        self.centers.iter().map(|c| c.eval(u)).collect()
    }

    pub fn radii(&self, sigma: &DVector<f64>) -> Vec<DVector<f64>> {
        let mut basis = DVector::zeros(self.horizon + 1);
        basis[0] = 1.0;
        basis.rows_mut(1, self.horizon).copy_from(sigma);
        self.radius.iter().map(|w| w * &basis).collect()
    }

    pub fn cost(&self, u: &DVector<f64>) -> f64 {
        let mut cost = 0.0;
        for (k, c) in self.centers(u).iter().enumerate() {
            let e = c - self.cfg.reference.ry(self.t + k + 1);
            cost += e.dot(&(&self.cfg.q * &e));
            let du = u.rows(k * self.m, self.m) - self.cfg.reference.ru(self.t + k);
            cost += du.dot(&(&self.cfg.r * &du));
        }
        cost
    }

    pub fn interpret(&self, sol: &QpSolution) -> OcpSolution {
        let u = self.inputs(&sol.x);
        let centers = self.centers(&u);
        let radii = self.radii(&self.sigma_bound(&sol.x));
        let vec = |v: &DVector<f64>| v.as_slice().to_vec();
        OcpSolution {
            u_seq: (0..self.horizon)
                .map(|k| u.as_slice()[k * self.m..(k + 1) * self.m].to_vec())
                .collect(),
            y_seq: centers.iter().map(vec).collect(),
            slack_u: radii.iter().map(vec).collect(),
            slack_l: radii.iter().map(vec).collect(),
            reach_bounds: centers
                .iter()
                .zip(&radii)
                .map(|(c, r)| IntervalVector::new(c - r, c + r).expect("nonnegative radius"))
                .collect(),
            cost: self.cost(&u),
            status: sol.status,
            iterations: sol.iterations,
        }
    }

    pub fn output_dim(&self) -> usize {
        self.n
    }

    /// Solves the program, adding cuts until every `σⱼ` is covered; `self`
    /// ends up holding the final QP. A non-optimal status becomes
    /// [`Error::Infeasible`]. Cuts only tighten, so an infeasible relaxation
    /// proves the full program infeasible.
    pub fn solve(&mut self) -> Result<(DVector<f64>, OcpSolution, QpSolution)> {
        let mut iterations = 0;
        for _ in 0..MAX_CUT_ROUNDS {
            let sol = qp::solve(&self.qp, &QpOptions::default())?;
            iterations += sol.iterations;
            if sol.status != QpStatus::Optimal {
                return Err(Error::Infeasible {
                    step: self.t,
                    status: sol.status,
                    iterations,
                    primal_residual: sol.primal_residual,
                    dual_residual: sol.dual_residual,
                });
            }
            match self.refine(&sol.x)? {
                Some(next) => *self = next,
                None => {
                    let mut ocp = self.interpret(&sol);
                    ocp.iterations = iterations;
                    let u0 = DVector::from_column_slice(&ocp.u_seq[0]);
                    return Ok((u0, ocp, sol));
                }
            }
        }
        Err(Error::Infeasible {
            step: self.t,
            status: QpStatus::MaxIter,
            iterations,
            primal_residual: f64::NAN,
            dual_residual: f64::NAN,
        })
    }
}

fn check_output(y_t: &DVector<f64>, cfg: &ControllerConfig) -> Result<()> {
    cfg.validate()?;
    if y_t.len() != cfg.output_dim() {
        return Err(Error::dim(
            "controller (measured output)",
            cfg.output_dim(),
            y_t.len(),
        ));
    }
    Ok(())
}

/// The data-driven program for measured output `y_t` at time `t`.
pub fn build_zpc_qp(
    y_t: &DVector<f64>,
    t: usize,
    model: &ModelSet,
    noise: &NoiseSpec,
    cfg: &ControllerConfig,
) -> Result<ControlProblem> {
    check_output(y_t, cfg)?;
    if model.state_dim() != cfg.output_dim() || model.input_dim() != cfg.input_dim() {
        return Err(Error::dim(
            "build_zpc_qp (model)",
            cfg.output_dim(),
            model.state_dim(),
        ));
    }
    let reach = FactoredReach::new(y_t, cfg.horizon, model, noise)?;
    let bound = if reach.uncertain {
        cfg.coefficient_bound.matrix(model)
    } else {
        DMatrix::zeros(0, cfg.output_dim() + cfg.input_dim())
    };
    let epigraph = match cfg.coefficient_bound {
        CoefficientBound::Svd => Epigraph::Rows,
        CoefficientBound::Exact => {
            // seed each σⱼ with the cut active at the input reference
            let (m, lo, hi) = (
                cfg.input_dim(),
                cfg.input_bounds.lower(),
                cfg.input_bounds.upper(),
            );
            let u0 = DVector::from_iterator(
                cfg.horizon * m,
                (0..cfg.horizon).flat_map(|k| {
                    let r = cfg.reference.ru(t + k);
                    (0..m)
                        .map(move |i| r[i].clamp(lo[i], hi[i]))
                        .collect::<Vec<_>>()
                }),
            );
            let cuts = reach
                .regressors
                .iter()
                .map(|z| {
                    let pz = &bound * z.eval(&u0);
                    vec![bound.transpose() * pz.map(f64::signum)]
                })
                .collect();
            Epigraph::Cuts(cuts)
        }
    };
    let radius = reach
        .steps
        .iter()
        .map(|s| s.radius_coefficients())
        .collect();
    let centers = reach.steps.iter().map(|s| s.center.clone()).collect();
    ControlProblem::assemble(t, centers, radius, reach.regressors, bound, epigraph, cfg)
}

/// Nominal MPC with known `(A, B)`: `y_{k+1} = A y_k + B u_k`, no noise.
pub fn build_nominal_qp(
    y_t: &DVector<f64>,
    t: usize,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    cfg: &ControllerConfig,
) -> Result<ControlProblem> {
    check_output(y_t, cfg)?;
    let (n, m, horizon) = (cfg.output_dim(), cfg.input_dim(), cfg.horizon);
    if a.shape() != (n, n) || b.shape() != (n, m) {
        return Err(Error::dim("build_nominal_qp", n, a.nrows()));
    }
    let q = horizon * m;
    let mut centers = Vec::with_capacity(horizon);
    let mut c = AffineVector::constant(y_t.clone(), q);
    for k in 0..horizon {
        let mut next = c.map(a);
        next.linear.view_mut((0, k * m), (n, m)).add_assign(b);
        centers.push(next.clone());
        c = next;
    }
    let radius = vec![DMatrix::zeros(n, horizon + 1); horizon];
    let regressors = vec![AffineVector::constant(DVector::zeros(n + m), q); horizon];
    ControlProblem::assemble(
        t,
        centers,
        radius,
        regressors,
        DMatrix::zeros(0, n + m),
        Epigraph::Rows,
        cfg,
    )
}

/// One step of the data-driven controller: solve and return the first input.
pub fn zpc_step(
    y_t: &DVector<f64>,
    t: usize,
    model: &ModelSet,
    noise: &NoiseSpec,
    cfg: &ControllerConfig,
) -> Result<(DVector<f64>, OcpSolution)> {
    let (u, sol, _) = build_zpc_qp(y_t, t, model, noise, cfg)?.solve()?;
    Ok((u, sol))
}

pub fn nominal_mpc_step(
    y_t: &DVector<f64>,
    t: usize,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    cfg: &ControllerConfig,
) -> Result<(DVector<f64>, OcpSolution)> {
    let (u, sol, _) = build_nominal_qp(y_t, t, a, b, cfg)?.solve()?;
    Ok((u, sol))
}

/// The data-driven pipeline with the singleton model set `⟨[A | B], ∅⟩`.
pub fn rmpc_zono_step(
    y_t: &DVector<f64>,
    t: usize,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    noise: &NoiseSpec,
    cfg: &ControllerConfig,
) -> Result<(DVector<f64>, OcpSolution)> {
    zpc_step(y_t, t, &ModelSet::singleton(a, b)?, noise, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::Reference;
    use crate::qp::check_kkt;
    use crate::setalg::Zonotope;

    fn scalar_cfg() -> ControllerConfig {
        let mut cfg = ControllerConfig::defaults(1, 1);
        cfg.horizon = 1;
        cfg.reference = Reference::constant(DVector::from_element(1, 2.0), DVector::zeros(1));
        cfg
    }

    #[test]
    fn one_step_closed_form() {
        // min (a y + b u − r)² + ρ u² → u = b (r − a y) / (b² + ρ)
        let (a, b, y, r) = (0.9, 0.5, 1.0, 2.0);
        let cfg = scalar_cfg();
        let (u, sol) = nominal_mpc_step(
            &DVector::from_element(1, y),
            0,
            &DMatrix::from_element(1, 1, a),
            &DMatrix::from_element(1, 1, b),
            &cfg,
        )
        .unwrap();
        let expect = b * (r - a * y) / (b * b + 1.0);
        assert!((u[0] - expect).abs() < 1e-9);
        assert!((sol.y_seq[0][0] - (a * y + b * expect)).abs() < 1e-9);
    }

    #[test]
    fn output_constraint_is_respected() {
        let mut cfg = scalar_cfg();
        cfg.horizon = 3;
        cfg.output_bounds = IntervalVector::new(
            DVector::from_element(1, -10.0),
            DVector::from_element(1, 1.5),
        )
        .unwrap();
        let a = DMatrix::from_element(1, 1, 0.9);
        let b = DMatrix::from_element(1, 1, 0.5);
        let noise = NoiseSpec::new(
            NoiseSpec::uniform_generator(1, 0.05),
            NoiseSpec::uniform_generator(1, 0.01),
            NoiseSpec::uniform_generator(1, 0.009),
        )
        .unwrap();
        let (_, sol) =
            rmpc_zono_step(&DVector::from_element(1, 1.0), 0, &a, &b, &noise, &cfg).unwrap();
        for rb in &sol.reach_bounds {
            assert!(rb.upper()[0] <= 1.5 + 1e-8);
        }
        assert!(sol.slack_u.iter().all(|s| s[0] >= 0.0));
    }

    #[test]
    fn width_beyond_constraint_fails_before_solving() {
        let mut cfg = scalar_cfg();
        cfg.output_bounds =
            IntervalVector::new(DVector::from_element(1, 0.0), DVector::from_element(1, 0.1))
                .unwrap();
        let noise = NoiseSpec::new(
            NoiseSpec::uniform_generator(1, 0.2),
            Zonotope::origin(1),
            Zonotope::origin(1),
        )
        .unwrap();
        let a = DMatrix::from_element(1, 1, 0.9);
        let err = rmpc_zono_step(&DVector::zeros(1), 0, &a, &a, &noise, &cfg).unwrap_err();
        assert!(matches!(err, Error::InfeasibleByConstruction(_)));
        assert!(err.is_infeasible());
    }

    #[test]
    fn infeasible_program_is_reported() {
        let mut cfg = scalar_cfg();
        cfg.input_bounds = IntervalVector::new(
            DVector::from_element(1, -0.1),
            DVector::from_element(1, 0.1),
        )
        .unwrap();
        cfg.output_bounds =
            IntervalVector::new(DVector::from_element(1, 5.0), DVector::from_element(1, 6.0))
                .unwrap();
        let a = DMatrix::from_element(1, 1, 0.5);
        let err = nominal_mpc_step(&DVector::zeros(1), 3, &a, &a, &cfg).unwrap_err();
        assert!(matches!(err, Error::Infeasible { step: 3, .. }), "{err:?}");
    }

    #[test]
    fn solutions_pass_kkt() {
        let mut cfg = scalar_cfg();
        cfg.horizon = 4;
        cfg.input_bounds = IntervalVector::new(
            DVector::from_element(1, -1.0),
            DVector::from_element(1, 1.0),
        )
        .unwrap();
        let a = DMatrix::from_element(1, 1, 0.9);
        let mut prob = build_nominal_qp(&DVector::zeros(1), 0, &a, &a, &cfg).unwrap();
        let (_, _, sol) = prob.solve().unwrap();
        assert!(check_kkt(&prob.qp, &sol).passes(1e-6));
    }
}
