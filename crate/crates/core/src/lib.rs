//! Computational toolkit for a modified mixed Tsirelson-type weak Hilbert space.
//!
//! The crate is organised bottom-up:
//!
//! * [`schreier`]: membership, maximality and enumeration for the Schreier
//!   hierarchy `S_n`, its modified version and convolutions.
//! * [`averages`]: repeated averages `a_n^L` and (basic) special convex
//!   combinations.
//! * [`params`]: the weight sequences `(m_j)`, `(n_j)` and the coding
//!   registry `σ` with special sequences.
//! * [`functionals`]: tree-structured elements of the norming set, their
//!   validation, evaluation and tree annotations.
//! * [`norm`]: certified lower and upper bounds for the norm of finitely
//!   supported vectors.
//! * [`constructions`]: rapidly increasing sequences, exact vectors,
//!   dependent sequences and the gap demonstration.
//! * [`estimates`]: instance checkers for the basic estimates and the exact
//!   counting identity.
//! * [`acceptance`]: the property suite behind `wh verify-all`.

pub mod acceptance;
pub mod averages;
pub mod caps;
pub mod cli;
pub mod constructions;
pub mod error;
pub mod estimates;
pub mod functionals;
pub mod gen;
pub mod norm;
pub mod params;
pub mod rational;
pub mod schreier;
pub mod vector;

pub use caps::Caps;
pub use error::{Error, Result};
pub use functionals::Functional;
pub use norm::NormBounds;
pub use params::{ParameterSystem, SigmaRegistry, SpecialSequence};
pub use rational::Q;
pub use schreier::FiniteSet;
pub use vector::{RealVector, Vector};
