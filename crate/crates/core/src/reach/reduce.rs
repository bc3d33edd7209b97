use nalgebra::DMatrix;

use crate::setalg::Zonotope;
use crate::{Error, Result};

/// Encloses `z` in a zonotope with at most `max_generators` generators.
///
/// Keeps the `max_generators − n` generators with the largest
/// `‖g‖₁ − ‖g‖∞` and replaces the rest by their axis-aligned box. Returns
/// `z` unchanged when it already complies.
pub fn reduce_order(z: &Zonotope, max_generators: usize) -> Result<Zonotope> {
    let n = z.dim();
    if max_generators < n {
        return Err(Error::InvalidArgument(format!(
            "reduce_order needs max_generators ≥ {n}, got {max_generators}"
        )));
    }
    let g = z.generators();
    if g.ncols() <= max_generators {
        return Ok(z.clone());
    }
    let keep = max_generators - n;
    let mut order: Vec<(usize, f64)> = g
        .column_iter()
        .enumerate()
        .map(|(j, c)| (j, c.lp_norm(1) - c.amax()))
        .collect();
    // stable on ties, so the result is deterministic
    order.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut kept: Vec<usize> = order[..keep].iter().map(|(j, _)| *j).collect();
    kept.sort_unstable();
    let mut boxed = vec![0.0; n];
    for (j, _) in &order[keep..] {
        for (i, b) in boxed.iter_mut().enumerate() {
            *b += g[(i, *j)].abs();
        }
    }
    let mut out = DMatrix::zeros(n, max_generators);
    for (c, &j) in kept.iter().enumerate() {
        out.column_mut(c).copy_from(&g.column(j));
    }
    for (i, b) in boxed.iter().enumerate() {
        out[(i, keep + i)] = *b;
    }
    Zonotope::new(z.center().clone(), out)
}
