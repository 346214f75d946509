//! Partial optimality for discrete energy minimization.
//!
//! The library computes maximum persistent partial assignments for
//! higher-order multilabel energies: it builds local LP relaxations (BLP or
//! the full local polytope), lifts subset-to-one improving maps through a
//! product linearization, and solves one linear program whose unique integral
//! optimum is the largest relaxed-improving map of its class. Brute-force
//! oracles and classical baselines (dead-end elimination, iterative pruning,
//! roof duality) are included for verification and comparison.

pub mod baselines;
pub mod energy;
pub mod error;
pub mod lp;
pub mod mapping;
pub mod oracle;
pub mod persistency;
pub mod relaxation;

pub use energy::{generate, reparametrize, EnergyModel, GeneratorKind, InstanceSpec, Labeling, Shape};
pub use error::{Error, Result};
pub use relaxation::{ConstraintMatrix, IndexSet, RelaxKind, RelaxationSpec, RelaxedLabeling};
