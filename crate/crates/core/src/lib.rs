//! Generalized phase-space mechanics: exact bracket algebra, sawtooth spectral
//! measures, a phase-space hydrogen model and its numerical experiments.

pub mod algebra;
pub mod dynamics;
pub mod field;
pub mod quad;
pub mod scattering;
pub mod spectral;
pub mod states;
pub mod verify;
