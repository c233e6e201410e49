//! Finite-element spaces and assembly of the coupled local/nonlocal system.
//!
//! The local unknown `u` is continuous piecewise linear on each local
//! subdomain and vanishes on the outer boundary. The nonlocal unknown `v` is
//! piecewise linear or piecewise constant and unconstrained. All matrices are
//! indexed by free dofs.

mod forms;
mod space;
mod system;

pub use forms::{
    assemble_coupling, assemble_load, assemble_local_stiffness, assemble_nonlocal_form,
    assemble_pair_integral, assemble_weighted_mass, Source,
};
pub use space::{BasisFunction, Degree, Dof, FeSpace, Shape, SpaceElement};
pub use system::{assemble_system, assemble_with_spaces, AssembledSystem, AssemblyOptions};
