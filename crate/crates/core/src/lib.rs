//! Numerical laboratory for the prescribed-mean-curvature energy
//! `A^c(Ω) = H²(∂Ω) − c·H³(Ω)` over single and stacked graphs in the unit
//! cylinder `B₁ × (−1, 1)`.
//!
//! The crate evaluates discrete `A^c` energies on radial graphs, minimizes
//! them under ordering/obstacle constraints (the two-membrane model problem),
//! extracts free-boundary and regularity diagnostics of the contact set, and
//! evaluates the explicit feasibility constants of the companion min-max
//! setup on the 3-sphere, including the maximal prescribing bound near 0.5478
//! (0.547 truncated to three digits).

pub mod analysis;
pub mod constants;
pub mod geometry;
pub mod solver;
