//! Physical constants and susceptibility unit conversions.
//!
//! Everything inside the crate works in SI: molar susceptibility in m³/mol,
//! per mole of dimers. Conversions happen only at ingestion and on output.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// CODATA (exact SI 2019) constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Boltzmann constant, J/K.
    pub k_b: f64,
    /// Bohr magneton, J/T.
    pub mu_b: f64,
    /// Avogadro constant, 1/mol.
    pub n_a: f64,
}

pub const CONSTANTS: PhysicalConstants =
    PhysicalConstants { k_b: 1.380649e-23, mu_b: 9.2740100783e-24, n_a: 6.02214076e23 };

/// Vacuum permeability used to carry Gaussian molar susceptibilities into SI.
///
/// Fixed at 4π×10⁻⁷ so that the emu/mol → m³/mol factor is exactly 4π×10⁻⁶.
pub const MU_0: f64 = 4.0 * PI * 1e-7;

/// 1 J/T expressed in emu (erg/G).
const EMU_PER_J_PER_T: f64 = 1e3;

/// emu/mol → m³/mol.
pub const CGS_TO_SI: f64 = 4.0 * PI * 1e-6;

/// μ_B/(FU·Oe) → emu/mol, with one formula unit = one Cu₂ dimer.
pub const MUB_FU_OE_TO_CGS: f64 = CONSTANTS.n_a * CONSTANTS.mu_b * EMU_PER_J_PER_T;

/// Susceptibility unit system, always per mole (or per formula unit) of dimers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnitSystem {
    /// m³/mol.
    Si,
    /// emu/mol.
    Cgs,
    /// μ_B/(FU·Oe).
    MubFuOe,
}

impl UnitSystem {
    pub const ALL: [UnitSystem; 3] = [UnitSystem::Si, UnitSystem::Cgs, UnitSystem::MubFuOe];

    /// Multiplier taking a value in `self` to SI.
    fn to_si_factor(self) -> f64 {
        match self {
            UnitSystem::Si => 1.0,
            UnitSystem::Cgs => CGS_TO_SI,
            UnitSystem::MubFuOe => MUB_FU_OE_TO_CGS * CGS_TO_SI,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            UnitSystem::Si => "si",
            UnitSystem::Cgs => "cgs",
            UnitSystem::MubFuOe => "mub-fu-oe",
        }
    }
}

impl fmt::Display for UnitSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for UnitSystem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "si" => Ok(UnitSystem::Si),
            "cgs" | "emu" => Ok(UnitSystem::Cgs),
            "mub-fu-oe" | "mub" => Ok(UnitSystem::MubFuOe),
            other => Err(Error::UnknownUnit(other.to_string())),
        }
    }
}

/// Converts a susceptibility (or susceptibility × temperature) between unit systems.
///
/// Negative values pass through unchanged in sign, for diamagnetically
/// corrected data.
pub fn convert_susceptibility(value: f64, from: UnitSystem, to: UnitSystem) -> f64 {
    if from == to {
        return value;
    }
    value * from.to_si_factor() / to.to_si_factor()
}

/// Curie constant C = n·N_A g² μ_B² S(S+1) / (3 k_B) for S = 1/2, per mole of dimers.
///
/// `n_spins = 2` is the dimer value and equals the high-temperature limit of χT.
pub fn curie_constant(g: f64, n_spins: u32, units: UnitSystem) -> Result<f64> {
    if !(1..=2).contains(&n_spins) {
        return Err(invalid(format!("unsupported spin count {n_spins} (expected 1 or 2)")));
    }
    if !g.is_finite() || g < 0.0 {
        return Err(invalid(format!("Landé factor must be finite and non-negative, got {g}")));
    }
    let c = &CONSTANTS;
    let s_s1 = 0.75;
    let si = n_spins as f64 * MU_0 * c.n_a * (g * c.mu_b).powi(2) * s_s1 / (3.0 * c.k_b);
    Ok(convert_susceptibility(si, UnitSystem::Si, units))
}
