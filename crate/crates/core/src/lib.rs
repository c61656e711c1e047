//! Thermal quantum correlations of a spin-1/2 Heisenberg dimer.
//!
//! The crate models an isolated Cu(II) dimer with H = −J S₁·S₂, fits (J, g) to
//! magnetic-susceptibility data and expresses concurrence, entanglement of
//! formation, entropic discord and 1-norm geometric discord as functions of the
//! normalized moment x = 2k_B Tχ/(N(gμ_B)²). The [`oracle`] module recomputes
//! each closed form from dense 4×4 density matrices, and [`verify`] runs the
//! comparison on random samples.

pub mod curve;
pub mod dimer;
pub mod error;
pub mod fit;
pub mod measures;
pub mod oracle;
pub mod profile;
pub mod thresholds;
pub mod units;
pub mod verify;

pub use curve::SusceptibilityCurve;
pub use dimer::{BellDiagonalState, DimerParams, DimerSpectrum};
pub use error::{Error, Result};
pub use fit::{FitResult, FitSpace};
pub use measures::{CorrelationPoint, Measure};
pub use profile::{CorrelationProfile, TemperatureGrid};
pub use thresholds::ThresholdReport;
pub use units::UnitSystem;
