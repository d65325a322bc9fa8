//! Certified inner approximations of the Pontryagin difference
//! `A ⊖ B = {x : x + z ∈ A for all z ∈ B}` of semi-algebraic sets.
//!
//! For each constraint `a_i(x) >= 0` of `A` an SOS program yields a
//! polynomial `c_i` with `c_i(x) <= a_i(x + z)` for every `z` in `B`, so that
//! `C = {x : min_i c_i(x) >= 0}` lies inside `A ⊖ B`.

pub mod grid;
pub mod objective;
pub mod pdiff;
pub mod polyring;
pub mod sampling;
pub mod sdpsolve;
pub mod semialg;
pub mod sosprog;
pub mod verify;

pub use grid::Grid;
pub use objective::ObjectiveFunctional;
pub use pdiff::{compute_pdiff, Outcome, PdiffResult};
pub use polyring::{Monomial, Polynomial, VariableSplit};
pub use sdpsolve::{SdpProblem, SdpSolution, SdpStatus};
pub use semialg::{BoxRegion, ObjectiveMode, ProblemSpec, SemiAlgebraicSet, ShrinkMode, ToleranceSet};
pub use sosprog::{Certificate, GramBasis, GramBlock, SosProgram};
pub use verify::{verify_result, VerificationReport};
