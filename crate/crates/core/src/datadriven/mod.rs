//! From recorded input-output trajectories to the learned model set.

mod io;
mod model_set;
mod noise;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{numerical_rank, right_inverse, rows};
use crate::{Error, Result};

pub use io::{load_manifest, read_trajectory_csv, save_manifest, write_trajectory_csv, Manifest};
pub use model_set::{build_model_set, ModelSet};
pub use noise::{stacked_noise_matzono, NoiseSpec};

/// One recorded run: inputs `u(0..T-1)` as columns of an `m × T` matrix and
/// outputs `y(0..T)` as columns of an `n × (T+1)` matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    #[serde(with = "rows")]
    pub inputs: DMatrix<f64>,
    #[serde(with = "rows")]
    pub outputs: DMatrix<f64>,
}

impl Trajectory {
    pub fn new(inputs: DMatrix<f64>, outputs: DMatrix<f64>) -> Result<Self> {
        if outputs.ncols() != inputs.ncols() + 1 {
            return Err(Error::InvalidArgument(format!(
                "trajectory has {} inputs and {} outputs; expected exactly one more output",
                inputs.ncols(),
                outputs.ncols()
            )));
        }
        Ok(Self { inputs, outputs })
    }

    pub fn len(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.ncols() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.outputs.nrows()
    }
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct TrajectoryData {
    pub trajectories: Vec<Trajectory>,
}

impl TrajectoryData {
    pub fn new(trajectories: Vec<Trajectory>) -> Result<Self> {
        if let Some(first) = trajectories.first() {
            let (m, n) = (first.input_dim(), first.output_dim());
            if trajectories
                .iter()
                .any(|t| t.input_dim() != m || t.output_dim() != n)
            {
                return Err(Error::InvalidArgument(
                    "trajectories disagree on input or output dimension".into(),
                ));
            }
        }
        Ok(Self { trajectories })
    }

    pub fn single(t: Trajectory) -> Self {
        Self {
            trajectories: vec![t],
        }
    }

    /// Total number of input samples `T = Σ Tᵢ`.
    pub fn total_len(&self) -> usize {
        self.trajectories.iter().map(Trajectory::len).sum()
    }
}

/// Stacked data `U₋ (m × T)`, `Y₋ (n × T)` and `Y₊ (n × T)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataMatrices {
    #[serde(with = "rows")]
    pub u_minus: DMatrix<f64>,
    #[serde(with = "rows")]
    pub y_minus: DMatrix<f64>,
    #[serde(with = "rows")]
    pub y_plus: DMatrix<f64>,
}

impl DataMatrices {
    pub fn samples(&self) -> usize {
        self.u_minus.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.y_minus.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.u_minus.nrows()
    }

    /// `[Y₋; U₋]`.
    pub fn regressor(&self) -> DMatrix<f64> {
        let (n, m, t) = (self.output_dim(), self.input_dim(), self.samples());
        let mut out = DMatrix::zeros(n + m, t);
        out.view_mut((0, 0), (n, t)).copy_from(&self.y_minus);
        out.view_mut((n, 0), (m, t)).copy_from(&self.u_minus);
        out
    }

    pub fn regressor_rank(&self) -> usize {
        numerical_rank(&self.regressor())
    }
}

/// Stacks trajectories column-wise, trajectory by trajectory. Successor pairs
/// never straddle two trajectories.
pub fn stack_data(data: &TrajectoryData) -> Result<DataMatrices> {
    let first = data
        .trajectories
        .first()
        .ok_or_else(|| Error::InvalidArgument("cannot stack an empty trajectory list".into()))?;
    if let Some(i) = data.trajectories.iter().position(Trajectory::is_empty) {
        return Err(Error::InvalidArgument(format!(
            "trajectory {i} has no input samples"
        )));
    }
    let (m, n, t) = (first.input_dim(), first.output_dim(), data.total_len());
    let mut dm = DataMatrices {
        u_minus: DMatrix::zeros(m, t),
        y_minus: DMatrix::zeros(n, t),
        y_plus: DMatrix::zeros(n, t),
    };
    let mut at = 0;
    for tr in &data.trajectories {
        if tr.input_dim() != m || tr.output_dim() != n {
            return Err(Error::dim(
                "stack_data",
                m + n,
                tr.input_dim() + tr.output_dim(),
            ));
        }
        let ti = tr.len();
        dm.u_minus.view_mut((0, at), (m, ti)).copy_from(&tr.inputs);
        dm.y_minus
            .view_mut((0, at), (n, ti))
            .copy_from(&tr.outputs.columns(0, ti));
        dm.y_plus
            .view_mut((0, at), (n, ti))
            .copy_from(&tr.outputs.columns(1, ti));
        at += ti;
    }
    Ok(dm)
}

/// Block Hankel matrix with `j` block rows and `cols` columns whose block
/// `(r, c)` is `z(i + r + c)`.
pub fn build_hankel(z: &[DVector<f64>], i: usize, j: usize, cols: usize) -> Result<DMatrix<f64>> {
    if j == 0 || cols == 0 {
        return Err(Error::InvalidArgument(
            "Hankel matrix needs j ≥ 1 and at least one column".into(),
        ));
    }
    let last = i + j + cols - 2;
    if last >= z.len() {
        return Err(Error::OutOfRange {
            index: last,
            len: z.len(),
        });
    }
    let q = z[0].len();
    if z.iter().any(|v| v.len() != q) {
        return Err(Error::InvalidArgument(
            "Hankel sequence has mixed vector lengths".into(),
        ));
    }
    let mut h = DMatrix::zeros(q * j, cols);
    for r in 0..j {
        for c in 0..cols {
            h.view_mut((r * q, c), (q, 1)).copy_from(&z[i + r + c]);
        }
    }
    Ok(h)
}

/// Whether `H_{0,L,T−L+1}(u)` has full row rank `m·L`.
///
/// Errors with [`Error::InsufficientData`] when `T < (m+1)L − 1`, since the
/// Hankel matrix then cannot have full row rank at all.
pub fn is_persistently_exciting(u_minus: &DMatrix<f64>, order: usize) -> Result<bool> {
    let (m, t) = u_minus.shape();
    if order == 0 {
        return Err(Error::InvalidArgument(
            "excitation order must be at least 1".into(),
        ));
    }
    let required = (m + 1) * order - 1;
    if t < required {
        return Err(Error::InsufficientData {
            what: "persistency of excitation",
            required,
            available: t,
        });
    }
    let seq: Vec<DVector<f64>> = u_minus.column_iter().map(|c| c.into_owned()).collect();
    let h = build_hankel(&seq, 0, order, t - order + 1)?;
    Ok(numerical_rank(&h) == m * order)
}

/// `G(Y, U₋) = Y₊ [Y₋; U₋]†` with `†` the right inverse.
pub fn one_step_predictor(dm: &DataMatrices) -> Result<DMatrix<f64>> {
    let p = right_inverse(&dm.regressor(), "[Y-; U-]")?;
    Ok(&dm.y_plus * p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(x)
    }

    #[test]
    fn stack_single_trajectory() {
        let tr = Trajectory::new(
            DMatrix::from_row_slice(1, 2, &[10.0, 11.0]),
            DMatrix::from_row_slice(1, 3, &[0.0, 1.0, 2.0]),
        )
        .unwrap();
        let dm = stack_data(&TrajectoryData::single(tr)).unwrap();
        assert_eq!(dm.u_minus, DMatrix::from_row_slice(1, 2, &[10.0, 11.0]));
        assert_eq!(dm.y_minus, DMatrix::from_row_slice(1, 2, &[0.0, 1.0]));
        assert_eq!(dm.y_plus, DMatrix::from_row_slice(1, 2, &[1.0, 2.0]));
    }

    #[test]
    fn stack_respects_trajectory_boundaries() {
        let a = Trajectory::new(
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_row_slice(1, 2, &[0.0, 5.0]),
        )
        .unwrap();
        let b = Trajectory::new(
            DMatrix::from_element(1, 1, 2.0),
            DMatrix::from_row_slice(1, 2, &[7.0, 9.0]),
        )
        .unwrap();
        let dm = stack_data(&TrajectoryData::new(vec![a, b]).unwrap()).unwrap();
        assert_eq!(dm.samples(), 2);
        assert_eq!(dm.y_minus, DMatrix::from_row_slice(1, 2, &[0.0, 7.0]));
        assert_eq!(dm.y_plus, DMatrix::from_row_slice(1, 2, &[5.0, 9.0]));
    }

    #[test]
    fn stack_rejects_empty() {
        assert!(stack_data(&TrajectoryData::default()).is_err());
    }

    #[test]
    fn trajectory_needs_one_extra_output() {
        assert!(Trajectory::new(DMatrix::zeros(1, 2), DMatrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn hankel_layouts() {
        let z = vec![v(&[0.0]), v(&[1.0]), v(&[2.0])];
        assert_eq!(
            build_hankel(&z, 0, 2, 2).unwrap(),
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 2.0])
        );
        assert_eq!(
            build_hankel(&z, 0, 1, 3).unwrap(),
            DMatrix::from_row_slice(1, 3, &[0.0, 1.0, 2.0])
        );
        let t: Vec<_> = (0..5).map(|i| v(&[i as f64])).collect();
        assert_eq!(
            build_hankel(&t, 1, 2, 3).unwrap(),
            DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 3.0, 4.0])
        );
        assert!(matches!(
            build_hankel(&t, 2, 2, 3),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn hankel_of_vector_sequence_stacks_blocks() {
        let z = vec![v(&[1.0, 2.0]), v(&[3.0, 4.0]), v(&[5.0, 6.0])];
        let h = build_hankel(&z, 0, 2, 2).unwrap();
        assert_eq!(
            h,
            DMatrix::from_row_slice(4, 2, &[1.0, 3.0, 2.0, 4.0, 3.0, 5.0, 4.0, 6.0])
        );
    }

    #[test]
    fn constant_input_is_not_exciting() {
        let u = DMatrix::from_element(1, 10, 3.0);
        assert!(!is_persistently_exciting(&u, 2).unwrap());
        assert!(is_persistently_exciting(&u, 1).unwrap());
    }

    #[test]
    fn too_short_input_is_an_error() {
        let u = DMatrix::from_element(2, 4, 1.0);
        assert!(matches!(
            is_persistently_exciting(&u, 2),
            Err(Error::InsufficientData {
                required: 5,
                available: 4,
                ..
            })
        ));
    }

    #[test]
    fn scalar_predictor_by_hand() {
        // y(t+1) = 0.5 y(t) + u(t)
        let u = [1.0, -2.0, 0.5];
        let mut y = vec![1.0];
        for k in 0..3 {
            y.push(0.5 * y[k] + u[k]);
        }
        let tr = Trajectory::new(
            DMatrix::from_row_slice(1, 3, &u),
            DMatrix::from_row_slice(1, 4, &y),
        )
        .unwrap();
        let g = one_step_predictor(&stack_data(&TrajectoryData::single(tr)).unwrap()).unwrap();
        assert!((g[(0, 0)] - 0.5).abs() < 1e-12 && (g[(0, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn predictor_reports_rank_failure() {
        let tr = Trajectory::new(
            DMatrix::from_element(1, 3, 1.0),
            DMatrix::from_element(1, 4, 0.0),
        )
        .unwrap();
        let dm = stack_data(&TrajectoryData::single(tr)).unwrap();
        assert!(matches!(
            one_step_predictor(&dm),
            Err(Error::RankDeficient { .. })
        ));
    }
}
