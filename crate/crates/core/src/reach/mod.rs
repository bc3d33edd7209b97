//! Data-driven reachable sets.
//!
//! Three views of the same recursion
//! `R̂ₖ₊₁ = M_Σ (R̂ₖ × ⟨uₖ, ∅⟩) ⊕ Z_w ⊕ Z_v ⊕ (−1) Z_Av`, starting from `⟨y, ∅⟩`:
//!
//! - [`reach_step`] / [`reach_horizon`]: concrete zonotopes with the full
//!   generator list. The count grows by a factor `1 + γ_M` per step, so this
//!   is only practical for small model sets or with [`reduce_order`].
//! - [`reach_parametric`]: the same generator list, each column affine in
//!   the stacked input vector.
//! - [`FactoredReach`]: an equal set stored as blocks with scalar scales,
//!   using `{Σ βᵢ Gᵢ z} = ‖P z‖₁ · ⟨0, D⟩`. Its size is independent of
//!   `γ_M`; the controllers use it.

mod exact;
mod factored;
mod parametric;
mod reduce;

pub use exact::{reach_horizon, reach_horizon_with, reach_step, write_hulls_csv, ReachSequence};
pub use factored::{Block, CoefficientBound, FactoredReach, FactoredStep};
pub use parametric::{reach_parametric, AffineVector, ParametricZonotope};
pub use reduce::reduce_order;
