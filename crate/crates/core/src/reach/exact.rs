use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::reduce_order;
use crate::datadriven::{ModelSet, NoiseSpec};
use crate::setalg::{IntervalVector, Zonotope};
use crate::{Error, Result};

/// `M_Σ (r × u) ⊕ Z_w ⊕ Z_v ⊕ (−1) Z_Av`.
///
/// Columns: the product columns in the order of
/// [`crate::setalg::MatrixZonotope::times_zonotope`], then `G_w`, `G_v`, `−G_Av`.
pub fn reach_step(
    r: &Zonotope,
    u: &Zonotope,
    model: &ModelSet,
    noise: &NoiseSpec,
) -> Result<Zonotope> {
    if r.dim() != model.state_dim() || u.dim() != model.input_dim() {
        return Err(Error::dim(
            "reach_step",
            model.state_dim() + model.input_dim(),
            r.dim() + u.dim(),
        ));
    }
    if noise.dim() != model.state_dim() {
        return Err(Error::dim(
            "reach_step (noise)",
            model.state_dim(),
            noise.dim(),
        ));
    }
    let prod = model.times_zonotope(&r.cartesian_product(u))?;
    prod.minkowski_sum(&noise.additive())
}

/// `R̂₀ = ⟨y₀, ∅⟩` followed by one set per input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReachSequence {
    pub sets: Vec<Zonotope>,
}

impl ReachSequence {
    pub fn horizon(&self) -> usize {
        self.sets.len().saturating_sub(1)
    }

    pub fn hulls(&self) -> Vec<IntervalVector> {
        self.sets.iter().map(Zonotope::interval_hull).collect()
    }
}

pub fn reach_horizon(
    y0: &DVector<f64>,
    inputs: &[Zonotope],
    model: &ModelSet,
    noise: &NoiseSpec,
) -> Result<ReachSequence> {
    reach_horizon_with(y0, inputs, model, noise, None)
}

/// As [`reach_horizon`], reducing every set to at most `max_generators`
/// generators after each step when a limit is given.
pub fn reach_horizon_with(
    y0: &DVector<f64>,
    inputs: &[Zonotope],
    model: &ModelSet,
    noise: &NoiseSpec,
    max_generators: Option<usize>,
) -> Result<ReachSequence> {
    if inputs.is_empty() {
        return Err(Error::InvalidArgument(
            "reach_horizon needs at least one input".into(),
        ));
    }
    let mut sets = vec![Zonotope::singleton(y0.clone())];
    for u in inputs {
        let last = sets.last().expect("nonempty");
        let mut next = reach_step(last, u, model, noise)?;
        if let Some(max) = max_generators {
            next = reduce_order(&next, max)?;
        }
        sets.push(next);
    }
    Ok(ReachSequence { sets })
}

/// Writes `step, dim, lower, upper`, one row per step and output dimension
/// (dimensions are 1-based).
pub fn write_hulls_csv(path: &Path, hulls: &[IntervalVector]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["step", "dim", "lower", "upper"])?;
    for (k, h) in hulls.iter().enumerate() {
        for d in 0..h.dim() {
            w.write_record(&[
                k.to_string(),
                (d + 1).to_string(),
                h.lower()[d].to_string(),
                h.upper()[d].to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
