//! Finite element discretization and solution of bilinear optimal control
//! problems for semilinear elliptic equations with Neumann data.
//!
//! Controls are piecewise constant, states and adjoint states continuous
//! piecewise linear. The crate covers meshing, assembly, the nonlinear state
//! solve, first and second derivatives of the reduced cost, a semismooth
//! Newton solver for the box-constrained problem, and convergence studies
//! across nested meshes.

pub mod error;
pub mod fem;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod optimizer;
pub mod pde;
pub mod presets;
pub mod study;
pub mod verify;

pub use error::{Error, Result};
pub use fem::{FeSpace, P0Field, P1Field, QuadratureRule};
pub use linalg::SparseSymOperator;
pub use mesh::{build_unit_square_mesh, refine, Mesh, MeshHierarchy, ProlongationMap};
pub use optimizer::{solve_ocp, Bounds, OcpOptions, OcpSolution};
pub use pde::{DataTreatment, Linearization, Model, NewtonOptions, ProblemSpec, SolveReport};
pub use study::{run_study, StudyRecord};
