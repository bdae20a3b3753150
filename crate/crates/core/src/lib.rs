//! Spinor representation of surfaces in three-dimensional Lie groups.
//!
//! A conformally immersed surface `f: M -> G` is encoded by a complex pair
//! `psi = (psi1, psi2)` solving a Dirac equation
//!
//! ```text
//! d psi2 + U psi1 = 0,     -dbar psi1 + V psi2 = 0
//! ```
//!
//! whose potentials `U`, `V` depend on the group. The crate evaluates those
//! potentials, reconstructs the immersion from `psi`, checks the holomorphic
//! quadratic differentials attached to constant mean curvature, integrates
//! CMC spheres of revolution in Nil, solves the sinh-Gordon reductions, and
//! computes the spinor energy and Willmore functionals.
//!
//! Fields live on a rectangular conformal grid `z = u + iv`; see
//! [`spinfield::Grid2D`].

pub mod error;
pub mod functionals;
pub mod hopf;
pub mod liegeo;
pub mod linsolve;
pub mod minimalpde;
pub mod nilrot;
pub mod recon;
pub mod report;
pub mod samples;
pub mod shg;
pub mod spinfield;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/algebras.md")]
    pub struct Algebras;
    #[doc = include_str!("../../../book/src/spinors.md")]
    pub struct Spinors;
    #[doc = include_str!("../../../book/src/reconstruction.md")]
    pub struct Reconstruction;
    #[doc = include_str!("../../../book/src/hopf.md")]
    pub struct Hopf;
    #[doc = include_str!("../../../book/src/nil_spheres.md")]
    pub struct NilSpheres;
    #[doc = include_str!("../../../book/src/sinh_gordon.md")]
    pub struct SinhGordon;
    #[doc = include_str!("../../../book/src/energy.md")]
    pub struct Energy;
}
