//! Numerical laboratory for phaseless far-field scattering from spheres.
//!
//! The crate provides exact series solutions for plane-wave and point-source
//! scattering by a sphere (sound-soft, sound-hard, impedance, or constant
//! refractive index), synthesises the interference-based phaseless datasets
//! measured in intensity-only experiments, and turns the structural
//! identities of the forward map (mixed reciprocity, reciprocity, unitarity,
//! translation behaviour) into batch pass/fail checks. A derivative-free
//! least-squares loop recovers sphere parameters from the phaseless data and
//! exposes the translation ambiguity that plane-wave moduli cannot resolve.

pub mod cli;
pub mod error;
pub mod forward;
pub mod identities;
pub mod inversion;
pub mod measurement;
pub mod phase;
pub mod special;

pub use error::{Error, Result};
pub use forward::{Direction, ScattererConfig, ScattererKind, TruncationPolicy, Vec3, WaveNumber};
pub use measurement::{DirectionGrid, PhaselessDataset, SourceGeometry};
