//! Phase-space analysis of the Dicke-model quantum phase transition.
//!
//! The crate provides two independent "channels" that compute the same
//! phase-space quantities and cross-validate each other:
//!
//! * a **numeric channel**: exact diagonalization of the parity-even block of
//!   the Dicke Hamiltonian, Husimi distributions of the ground state evaluated
//!   on quadrature grids, and the derived moments, Rényi–Wehrl and Wehrl
//!   entropies, and marginal distributions;
//! * a **variational channel**: the parity-projected (symmetry-adapted)
//!   product coherent state, whose Husimi distribution, moments, marginals,
//!   wavefunctions and zero lines all have closed forms.
//!
//! A Gaussian-smearing channel connects the marginal Husimi distributions to
//! smoothed position/momentum densities of the same state and serves as a
//! third, independent consistency check.

pub mod coherent;
pub mod eig;
pub mod error;
pub mod ground;
pub mod measures;
pub mod model;
pub mod params;
pub mod quad;
pub mod smearing;
pub mod special;
pub mod sweep;
pub mod variational;

pub use error::Error;
pub use params::DickeParams;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
