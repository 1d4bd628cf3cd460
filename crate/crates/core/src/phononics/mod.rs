//! Reduced-order 1D elastic model of the patterned beam: unit-cell band
//! structure, finite-structure eigenmodes, zero-point strain, and thermal
//! spectrum synthesis.

pub mod bands;
pub mod eigen;
pub mod modes;
pub mod psd;

pub use bands::{phononic_bands, phononic_bands_with, BandScan, BandStructure, ElasticSegment};
pub use modes::{
    defect_modes, full_structure, localized_modes, localized_modes_with_bands, mirror_bands,
    mirror_cell, MechanicalMode,
};
pub use psd::{psd_grid, thermal_mech_psd, PsdNoise};
