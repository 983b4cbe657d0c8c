//! Optimal spectra and minimizing families for frame operator distance
//! problems: minimize `N(S - S_G)` over families `G` with prescribed squared
//! norms, for a unitarily invariant norm `N`.

pub mod descent;
pub mod frames;
pub mod linalg;
pub mod solver;
pub mod uinorms;
pub mod vecmaj;

pub use linalg::{CVector, HermitianMatrix, C64};
pub use solver::{delta, DeltaSolution, GfodInstance};
pub use uinorms::UINormSpec;
