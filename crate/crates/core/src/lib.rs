//! Sharp Sobolev embedding constants on planar domains.
//!
//! For a bounded domain `D` and exponent `p >= 1`, the quantity computed here is
//!
//! ```text
//! C_p(D) = inf { ∫_D |∇u|² dA / (∫_D u^p dA)^{2/p} : u ∈ W^{1,2}_0(D), u ≥ 0, u ≢ 0 }
//! ```
//!
//! together with the extremal function realizing the infimum. Special cases:
//! `C_2` is the first Dirichlet eigenvalue of the Laplacian and `C_1 = 4/P`
//! where `P` is the torsional rigidity.
//!
//! The crate provides
//! * [`geometry`]: conformal maps, domain specifications, and triangular meshes,
//! * [`fem`]: P1 finite element assembly, quadrature, and a conjugate gradient solver,
//! * [`solver`]: minimization of the Rayleigh-type quotient defining `C_p`,
//! * [`analysis`]: Schwarz-lemma monotonicity sweeps over conformal images,
//!   reverse Hölder (Payne–Rayner) reports, and level-set diagnostics,
//! * [`cli`]: the `sobolev` command-line front end.
//!
//! Everything is deterministic: repeated runs produce byte-identical output at
//! a fixed thread count.

pub mod analysis;
pub mod cli;
pub mod fem;
pub mod geometry;
pub mod output;
pub mod solver;

pub use geometry::{ConformalMap, DomainSpec, GeometryError, Point, TriMesh};
pub use solver::{minimize_quotient, SolveResult, SolverConfig, SolverError};
