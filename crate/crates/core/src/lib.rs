//! Numerical laboratory for the genus-zero five-vertex model.
//!
//! The model is a Boltzmann measure on monotone nonintersecting lattice path
//! (MNLP) configurations with staggered vertex weights `r_v = α_x β_y`,
//! periodic with periods `m₁ × m₂` and uniformly sub- or super-critical
//! (`r_v < 1` everywhere or `r_v > 1` everywhere). The crate provides
//!
//! * closed-form thermodynamics: surface tension σ(s,t), free energy F(X,Y),
//!   the coexistence boundary and the phase diagram in the magnetic-field
//!   plane ([`thermo`], [`phase`]);
//! * the conformal parameterization of slopes and fields by a point `u` in
//!   the upper half-plane, together with its numerical inverse ([`conformal`]);
//! * Darboux-parameterized limit shapes driven by harmonic boundary data
//!   ([`limit_shape`]);
//! * independent discrete oracles at desk scale: exhaustive enumeration,
//!   commuting transfer matrices, finite-size free energies and a Metropolis
//!   sampler for height functions ([`lattice`]).
//!
//! Everything is deterministic given a domain and (for sampling) a seed.

pub mod conformal;
pub mod error;
pub mod lattice;
pub mod limit_shape;
pub mod model;
pub mod phase;
pub mod special;
pub mod thermo;

pub use conformal::ConformalState;
pub use error::{FvError, FvResult};
pub use limit_shape::{EnvelopePoint, HarmonicBoundaryData};
pub use model::{FieldPoint, FundamentalDomain, MnlpConfig, Regime, SlopePoint, Topology};

/// Complex numbers everywhere are `f64` pairs; `u`, `w`, `z` all live here.
pub type Complex = num_complex::Complex64;
