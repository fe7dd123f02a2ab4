//! Dark states of Fock-state lattices generated by multimode Jaynes-Cummings
//! models.
//!
//! A two-level atom couples to `N` bosonic modes. Within a fixed excitation
//! number `n` the rotating-frame Hamiltonian is an arrowhead matrix
//! `[[U, C], [C^T, L]]` whose coupling block `C` has a null space spanning the
//! dark states. The crate builds these lattices, solves for the dark subspace
//! numerically and through closed-form families, connects it to the
//! bright/dark mode transform, and propagates adiabatic transfer through the
//! two-mode dark state.

pub mod basis;
pub mod cli;
pub mod darkmodes;
pub mod darkstates;
pub mod dynamics;
pub mod error;
pub mod export;
pub mod hamiltonian;
pub mod linalg;

pub use basis::{Atom, FockState, Sector, SubspaceBasis, SubspaceSpec};
pub use error::{Error, Result};
pub use hamiltonian::{BlockHamiltonian, Frame, ModelParams};
pub use linalg::{TolerancePolicy, VectorSet};
