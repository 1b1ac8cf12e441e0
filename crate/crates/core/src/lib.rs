//! Simulation and numerical-verification toolkit for causal duration models
//! with a treatment time `W` and an outcome time `Y`.
//!
//! The outcome hazard is `h0` before treatment and `h1` after. The toolkit
//! implements the correct inverse-integrated-hazard construction of `(W, Y)`
//! ("DGP2") next to a mis-signed variant ("DGP1"), and verifies by Monte
//! Carlo and quadrature that the sub-densities of the identified minimum
//! `(min(W, Y), which-came-first)` depend only on `h_W` and `h0`, for
//! general pre/post-treatment hazards.

pub mod cli;
pub mod competing_risks;
pub mod hazards;
pub mod model;
pub mod quad;
pub mod sampling;
pub mod stats;

pub use competing_risks::{Cause, IdentifiedMinimum};
pub use hazards::HazardSpec;
pub use model::TreatmentModel;
pub use sampling::{DurationPair, Mode};
