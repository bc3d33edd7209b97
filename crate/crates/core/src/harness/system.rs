use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::control::Plant;
use crate::datadriven::{
    is_persistently_exciting, stack_data, NoiseSpec, Trajectory, TrajectoryData,
};
use crate::linalg::rows;
use crate::setalg::Zonotope;
use crate::{Error, Result};

/// `x(t+1) = A x(t) + B u(t) + w(t)`, `y(t) = x(t) + v(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemModel {
    #[serde(with = "rows")]
    pub a: DMatrix<f64>,
    #[serde(with = "rows")]
    pub b: DMatrix<f64>,
}

impl SystemModel {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let s = Self { a, b };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.a.nrows();
        if self.a.ncols() != n {
            return Err(Error::dim("SystemModel", n, self.a.ncols()));
        }
        if self.b.nrows() != n {
            return Err(Error::dim("SystemModel", n, self.b.nrows()));
        }
        Ok(())
    }

    /// The five-state, single-input benchmark.
    pub fn benchmark() -> Self {
        #[rustfmt::skip]
        let a = DMatrix::from_row_slice(5, 5, &[
            0.9323, -0.1890, 0.0, 0.0, 0.0,
            0.1890, 0.9323, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.8596, 0.0430, 0.0,
            0.0, 0.0, -0.0430, 0.8596, 0.0,
            0.0, 0.0, 0.0, 0.0, 0.9048,
        ]);
        let b = DMatrix::from_column_slice(5, 1, &[0.0436, 0.0533, 0.0475, 0.0453, 0.0476]);
        Self { a, b }
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    /// `(I − A)⁻¹ B u`, or `None` when `I − A` is singular.
    pub fn steady_state(&self, u: &DVector<f64>) -> Option<DVector<f64>> {
        let n = self.state_dim();
        (DMatrix::identity(n, n) - &self.a)
            .lu()
            .solve(&(&self.b * u))
    }
}

/// Realized process noise `w(0..T−1)` and measurement noise `v(0..T)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseRealization {
    pub w: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl NoiseRealization {
    /// Draws, for `t = 0..steps`, `w(t)` then `v(t)`, and finally `v(steps)`.
    pub fn sample<R: rand::Rng + ?Sized>(
        zw: &Zonotope,
        zv: &Zonotope,
        steps: usize,
        rng: &mut R,
    ) -> Self {
        let mut w = Vec::with_capacity(steps);
        let mut v = Vec::with_capacity(steps + 1);
        for _ in 0..steps {
            w.push(zw.sample(rng).as_slice().to_vec());
            v.push(zv.sample(rng).as_slice().to_vec());
        }
        v.push(zv.sample(rng).as_slice().to_vec());
        Self { w, v }
    }

    pub fn steps(&self) -> usize {
        self.w.len()
    }

    pub fn w(&self, t: usize) -> DVector<f64> {
        DVector::from_column_slice(&self.w[t])
    }

    pub fn v(&self, t: usize) -> DVector<f64> {
        DVector::from_column_slice(&self.v[t])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Simulation {
    /// `n × (T+1)`.
    pub states: DMatrix<f64>,
    /// `n × (T+1)`.
    pub outputs: DMatrix<f64>,
    /// `m × T`.
    pub inputs: DMatrix<f64>,
    pub noise: NoiseRealization,
}

impl Simulation {
    pub fn trajectory(&self) -> Trajectory {
        Trajectory::new(self.inputs.clone(), self.outputs.clone()).expect("T inputs, T+1 outputs")
    }
}

fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// RNG for data collection.
pub fn collection_rng(seed: u64) -> ChaCha8Rng {
    stream(seed, 0)
}

/// RNG for the closed-loop noise realization, independent of the data.
pub fn closed_loop_rng(seed: u64) -> ChaCha8Rng {
    stream(seed, 1)
}

/// Runs the plant over a known realization.
pub fn simulate_with(
    model: &SystemModel,
    x0: &DVector<f64>,
    u_seq: &[DVector<f64>],
    noise: &NoiseRealization,
) -> Result<Simulation> {
    let (n, m, t) = (model.state_dim(), model.input_dim(), u_seq.len());
    if x0.len() != n {
        return Err(Error::dim("simulate_plant", n, x0.len()));
    }
    if noise.steps() < t {
        return Err(Error::InsufficientData {
            what: "noise realization",
            required: t,
            available: noise.steps(),
        });
    }
    let mut states = DMatrix::zeros(n, t + 1);
    let mut outputs = DMatrix::zeros(n, t + 1);
    let mut inputs = DMatrix::zeros(m, t);
    let mut x = x0.clone();
    for (k, u) in u_seq.iter().enumerate() {
        if u.len() != m {
            return Err(Error::dim("simulate_plant", m, u.len()));
        }
        states.set_column(k, &x);
        outputs.set_column(k, &(&x + noise.v(k)));
        inputs.set_column(k, u);
        x = &model.a * &x + &model.b * u + noise.w(k);
    }
    states.set_column(t, &x);
    outputs.set_column(t, &(&x + noise.v(t)));
    let mut used = noise.clone();
    used.w.truncate(t);
    used.v.truncate(t + 1);
    Ok(Simulation {
        states,
        outputs,
        inputs,
        noise: used,
    })
}

/// Simulates `u_seq` with `w`, `v` drawn uniformly from `Z_w`, `Z_v` under `seed`.
pub fn simulate_plant(
    model: &SystemModel,
    x0: &DVector<f64>,
    u_seq: &[DVector<f64>],
    noise: &NoiseSpec,
    seed: u64,
) -> Result<Simulation> {
    let mut rng = collection_rng(seed);
    let real = NoiseRealization::sample(&noise.zw, &noise.zv, u_seq.len(), &mut rng);
    simulate_with(model, x0, u_seq, &real)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CollectedData {
    pub data: TrajectoryData,
    /// Order `n + 1` excitation of the recorded inputs.
    pub persistently_exciting: bool,
    pub simulation: Simulation,
}

/// One trajectory of length `t` from `x(0) = 0` with inputs drawn uniformly
/// from `input_zono`.
pub fn collect_data(
    model: &SystemModel,
    noise: &NoiseSpec,
    t: usize,
    input_zono: &Zonotope,
    seed: u64,
) -> Result<CollectedData> {
    if t == 0 {
        return Err(Error::InvalidArgument("data collection needs T ≥ 1".into()));
    }
    if input_zono.dim() != model.input_dim() {
        return Err(Error::dim(
            "collect_data",
            model.input_dim(),
            input_zono.dim(),
        ));
    }
    let mut rng = collection_rng(seed);
    let inputs: Vec<DVector<f64>> = (0..t).map(|_| input_zono.sample(&mut rng)).collect();
    let real = NoiseRealization::sample(&noise.zw, &noise.zv, t, &mut rng);
    let sim = simulate_with(model, &DVector::zeros(model.state_dim()), &inputs, &real)?;
    let data = TrajectoryData::single(sim.trajectory());
    let dm = stack_data(&data)?;
    let pe = is_persistently_exciting(&dm.u_minus, model.state_dim() + 1).unwrap_or(false);
    Ok(CollectedData {
        data,
        persistently_exciting: pe,
        simulation: sim,
    })
}

/// The true plant driven by a fixed noise realization; `measure` at step `t`
/// returns `x(t) + v(t)`.
#[derive(Clone, Debug)]
pub struct SimulatedPlant {
    pub model: SystemModel,
    pub x: DVector<f64>,
    pub noise: NoiseRealization,
    pub t: usize,
}

impl SimulatedPlant {
    pub fn new(model: SystemModel, x0: DVector<f64>, noise: NoiseRealization) -> Self {
        Self {
            model,
            x: x0,
            noise,
            t: 0,
        }
    }
}

impl Plant for SimulatedPlant {
    fn measure(&self) -> DVector<f64> {
        &self.x + self.noise.v(self.t)
    }

    fn apply(&mut self, u: &DVector<f64>) {
        self.x = &self.model.a * &self.x + &self.model.b * u + self.noise.w(self.t);
        self.t += 1;
    }
}
