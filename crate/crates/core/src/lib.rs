//! Finite elements for tangential tensor fields on closed hypersurfaces.
//!
//! The library solves `-Δu + u = f` for tangential vector and rank-2 tensor
//! fields `u` on closed surfaces given as level sets (ellipse, ellipsoid,
//! sphere), where `Δ` is the connection (Bochner) Laplacian. Tangency is not
//! built into the discrete space; it is enforced weakly through a penalty
//! term, and the surface itself is approximated by curved simplicial meshes
//! of selectable geometry order. The crate ships a convergence-study driver
//! (`cli`) that measures errors against manufactured solutions and fits
//! experimental orders of convergence.
//!
//! Ambient dimension is a compile-time parameter: `D = 2` for curves in the
//! plane, `D = 3` for surfaces in space. Reference simplices have dimension
//! `RD = D - 1`; both parameters appear explicitly in generic signatures.

pub mod assembly;
pub mod cli;
pub mod curved;
pub mod dual;
pub mod errors;
pub mod fespace;
pub mod levelset;
pub mod manufactured;
pub mod mesh;
pub mod solver;
pub mod tensor;

mod linalg;
pub mod simplex;
