//! Solvers for infinite-horizon MDPs whose geometric discount factor varies
//! with time.
//!
//! Every time step is treated as a separate player discounting the future at
//! its own constant rate `g(t)`. The crate builds exact and ε-subgame-perfect
//! equilibria of that game as eventually-constant dynamic policies, certifies
//! them by one-shot-deviation checks, computes the set of degenerate discount
//! factors with exact rational-function arithmetic, and realizes the
//! value-iteration reduction used for the hardness result.
//!
//! The crate is `no_std` and only needs `alloc`. All model data is stored as
//! exact rationals; solvers are generic over [`Scalar`] so that the same code
//! runs in `f64` or in exact `BigRational` arithmetic.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod discount;
pub mod error;
pub mod gamma;
pub mod instances;
pub mod linalg;
pub mod magnitude;
pub mod mdp;
pub mod poly;
pub mod reduction;
pub mod scalar;
pub mod settings;
pub mod spe;
pub mod verifier;

pub use discount::{ConvergenceCertificate, DiscountFunction};
pub use error::{Error, Result};
pub use gamma::{GammaPoint, GammaSet, SeparationBound};
pub use magnitude::Magnitude;
pub use mdp::{Action, Mdp, OptimalActionSets, QTable, StaticPolicy, ValueTable};
pub use poly::{Polynomial, RationalFunction};
pub use scalar::Scalar;
pub use settings::Settings;
pub use spe::DynamicPolicy;
pub use verifier::EquilibriumReport;

pub use num_bigint::{BigInt, BigUint};
pub use num_rational::BigRational;
