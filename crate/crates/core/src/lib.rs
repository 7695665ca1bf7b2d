//! Two trapped-ion qubits coupled to the axial phonon bath of a linear
//! Coulomb chain.
//!
//! The crate is organised bottom-up:
//!
//! - [`chain`]: mode spectrum and spin-phonon couplings of the chain, both
//!   from the closed-form dispersion and from the exact trap + Coulomb Hessian.
//! - [`kernels`]: the decoherence exponents Γ, Γ± and phases φ±, as Ohmic
//!   continuum integrals or as exact sums over a finite mode spectrum.
//! - [`dephasing`]: the exact Δ = 0 reduced dynamics of a two-qubit state.
//! - [`dfs`]: the second-order effective Hamiltonian inside the
//!   decoherence-free subspace {|10⟩, |01⟩} and entangled-state generation.
//! - [`exact`]: brute-force evolution of the full spin-boson Hamiltonian with
//!   truncated Fock spaces, used as an oracle for the analytic laws.
//! - [`qinfo`]: concurrence, fidelities and teleportation relays.
//!
//! Natural units throughout: ħ = k_B = 1, frequencies in units of the axial
//! trap frequency and lengths in units of the ion spacing unless a caller
//! chooses otherwise.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod chain;
pub mod dephasing;
pub mod dfs;
pub mod error;
pub mod exact;
pub mod kernels;
pub mod qinfo;
pub mod quadrature;
pub mod state;

pub use error::{Error, Result};

pub use num_complex::Complex64 as C64;
