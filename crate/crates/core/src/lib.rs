//! Detection of concentration-shift-keyed symbols by promiscuous ligand
//! receptors under molecular interference.

pub mod crn;
pub mod detectors;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod kinetics;
pub mod rng;
pub mod sampler;
pub mod stats;

pub use error::{Error, Result};
