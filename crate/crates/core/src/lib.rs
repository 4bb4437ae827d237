//! Exact simulation of a qubit system coupled to a qubit environment through
//! two-body interactions, with the information diagnostics used to study how
//! redundant classical records of the system form in the environment.
//!
//! Modules, bottom up:
//!
//! * [`model`]: Hamiltonian specifications, sampled instances, the four
//!   reference models and the pointer-basis classifier.
//! * [`dynamics`]: branching, diagonal and dense (spectral) evolution engines.
//! * [`information`]: reduced states, entropies, mutual information, Holevo
//!   quantity, discord and decoherence factors.
//! * [`analytics`]: closed-form averages and asymptotic predictions.
//! * [`experiments`]: seeded Monte Carlo sweeps and figure pipelines.

pub mod analytics;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod information;
pub mod model;
pub mod rng;

pub use error::{Error, Result};
pub use faer::c64 as Complex64;
