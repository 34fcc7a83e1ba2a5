//! Independent discrete oracles: exhaustive enumeration, commuting transfer
//! matrices, the symmetric-polynomial identity, finite-size free energies
//! and Metropolis sampling of bounded-region height functions.

pub mod apoly;
pub mod enumerate;
pub mod mcmc;
pub mod row;
pub mod transfer;

pub use apoly::{apoly_check, ApolyReport};
pub use enumerate::{enumerate_torus, TorusEnumeration};
pub use mcmc::{
    empirical_height_profile, heights_to_config, mcmc_sample, sample_profile, BoundedEnsemble,
    Extremal, HeightProfile, Region, SamplerConfig,
};
pub use transfer::{
    build_transfer_matrix, check_commutation, finite_size_free_energy, sector_basis,
    torus_log_partition_momentum, torus_partition_dense, torus_partition_dense_columns,
    TransferMatrix,
};
