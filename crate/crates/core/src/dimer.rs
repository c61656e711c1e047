//! Zero-field spin-1/2 Heisenberg dimer, H = −J S₁·S₂.
//!
//! Energies are in kelvin (divided by k_B). With this sign convention J < 0 is
//! antiferromagnetic and the singlet is the ground state.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::units::{CONSTANTS, MU_0};

/// Upper end of the physical normalized-moment range.
pub const X_MAX: f64 = 4.0 / 3.0;

/// Exchange coupling and Landé factor of one dimer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimerParams {
    /// Exchange coupling in K; negative is antiferromagnetic.
    #[serde(rename = "J")]
    pub j: f64,
    pub g: f64,
}

impl DimerParams {
    /// Fitted parameters of the Cu₂ formate-piperazine compound.
    pub const REFERENCE: DimerParams = DimerParams { j: -748.5, g: 2.07 };

    pub fn new(j: f64, g: f64) -> Result<Self> {
        let p = DimerParams { j, g };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.j.is_finite() {
            return Err(invalid(format!("exchange coupling must be finite, got {}", self.j)));
        }
        if !(self.g.is_finite() && self.g > 0.0) {
            return Err(invalid(format!("Landé factor must be positive, got {}", self.g)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimerSpectrum {
    /// Singlet energy, K (non-degenerate).
    pub singlet: f64,
    /// Triplet energy, K (threefold degenerate).
    pub triplet: f64,
}

impl DimerSpectrum {
    /// Gap between the first excited level and the ground level.
    pub fn gap(&self) -> f64 {
        (self.triplet - self.singlet).abs()
    }
}

/// Werner-type thermal state: diagonal in the Bell basis with equal
/// correlation coefficients c = ⟨σᵢ⊗σᵢ⟩ = 4⟨S₁ⁱS₂ⁱ⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellDiagonalState {
    pub p_singlet: f64,
    pub p_triplet_each: f64,
    pub c: f64,
}

impl BellDiagonalState {
    /// Builds the state from its correlation coefficient, c ∈ [−1, 1/3].
    pub fn from_correlation(c: f64) -> Result<Self> {
        if !(-1.0..=1.0 / 3.0).contains(&c) {
            return Err(invalid(format!("correlation coefficient {c} outside [-1, 1/3]")));
        }
        Ok(BellDiagonalState { p_singlet: (1.0 - 3.0 * c) / 4.0, p_triplet_each: (1.0 + c) / 4.0, c })
    }

    /// Normalized moment x = 1 + c = 4·p_triplet_each.
    pub fn moment(&self) -> f64 {
        4.0 * self.p_triplet_each
    }
}

pub fn spectrum(params: &DimerParams) -> DimerSpectrum {
    // S₁·S₂ = 1/2[S(S+1) − 3/2]: −3/4 on the singlet, +1/4 on the triplet.
    DimerSpectrum { singlet: 0.75 * params.j, triplet: -0.25 * params.j }
}

fn check_temperature(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("temperature must be positive and finite, got {t}")))
    }
}

/// Populations (singlet, each triplet) for reduced coupling r = J/T.
///
/// Both branches stay finite for any |r|, so T → 0 saturates cleanly.
fn populations(r: f64) -> (f64, f64) {
    if r <= 0.0 {
        // Boltzmann ratio triplet/singlet = e^{r} ≤ 1.
        let w = r.exp();
        let z = 1.0 + 3.0 * w;
        (1.0 / z, w / z)
    } else {
        let v = (-r).exp();
        let z = v + 3.0;
        (v / z, 1.0 / z)
    }
}

/// Normalized moment x = 4/(3 + e^{−J/T}) of the dimer model.
///
/// This is the only temperature dependence any correlation measure has, and it
/// depends on (J, T) only through J/T.
pub fn model_moment(params: &DimerParams, t: f64) -> Result<f64> {
    check_temperature(t)?;
    Ok(moment_at_ratio(params.j / t))
}

pub(crate) fn moment_at_ratio(r: f64) -> f64 {
    4.0 * populations(r).1
}

pub fn thermal_state(params: &DimerParams, t: f64) -> Result<BellDiagonalState> {
    check_temperature(t)?;
    let (p_singlet, p_triplet_each) = populations(params.j / t);
    Ok(BellDiagonalState { p_singlet, p_triplet_each, c: 4.0 * p_triplet_each - 1.0 })
}

/// N_A μ₀ μ_B² / k_B in m³·K/mol.
fn molar_scale() -> f64 {
    let c = &CONSTANTS;
    MU_0 * c.n_a * c.mu_b * c.mu_b / c.k_b
}

/// Molar susceptibility (m³/mol of dimers) at zero field:
/// χ = 2N(gμ_B)²/(k_B T) · 1/(3 + e^{−J/T}).
pub fn susceptibility(params: &DimerParams, t: f64) -> Result<f64> {
    let x = model_moment(params, t)?;
    Ok(chi_from_moment(params.g, x, t))
}

/// Inverse of [`normalized_moment`]: χ = x·N(gμ_B)²/(2k_B T).
pub fn chi_from_moment(g: f64, x: f64, t: f64) -> f64 {
    x * g * g * molar_scale() / (2.0 * t)
}

/// χT of the dimer model in m³·K/mol.
pub fn chi_t(params: &DimerParams, t: f64) -> Result<f64> {
    Ok(susceptibility(params, t)? * t)
}

/// x = 2k_B Tχ / (N(gμ_B)²), the combination in which every correlation
/// measure is expressed. Errors if x falls outside [0, 4/3].
pub fn normalized_moment(params: &DimerParams, chi: f64, t: f64) -> Result<f64> {
    let x = normalized_moment_unchecked(params, chi, t)?;
    if !(0.0..=X_MAX).contains(&x) {
        return Err(Error::Unphysical { x });
    }
    Ok(x)
}

/// Same as [`normalized_moment`] without the physical-range check.
pub fn normalized_moment_unchecked(params: &DimerParams, chi: f64, t: f64) -> Result<f64> {
    check_temperature(t)?;
    params.validate()?;
    Ok(2.0 * t * chi / (params.g * params.g * molar_scale()))
}

/// c = x − 1.
pub fn correlation_function(x: f64) -> f64 {
    x - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{curie_constant, UnitSystem};
    use approx::assert_relative_eq;

    const P: DimerParams = DimerParams::REFERENCE;

    #[test]
    fn reference_spectrum() {
        let s = spectrum(&P);
        assert_relative_eq!(s.singlet, -561.375, epsilon = 1e-12);
        assert_relative_eq!(s.triplet, 187.125, epsilon = 1e-12);
        assert_relative_eq!(s.gap(), 748.5, epsilon = 1e-12);
    }

    #[test]
    fn free_and_ferromagnetic_spectra() {
        let s = spectrum(&DimerParams { j: 0.0, g: 2.0 });
        assert_eq!((s.singlet, s.triplet), (0.0, 0.0));
        let s = spectrum(&DimerParams { j: 100.0, g: 2.0 });
        assert!(s.triplet < s.singlet);
        assert_relative_eq!(s.gap(), 100.0);
    }

    #[test]
    fn sign_symmetry() {
        for j in [-2000.0, -748.5, -1.0, 3.5, 800.0] {
            let a = spectrum(&DimerParams { j, g: 2.0 });
            let b = spectrum(&DimerParams { j: -j, g: 2.0 });
            assert_relative_eq!(a.gap(), b.gap());
            assert_eq!(a.singlet < a.triplet, b.triplet < b.singlet);
        }
    }

    #[test]
    fn thermal_state_limits() {
        let s = thermal_state(&P, 1.0).unwrap();
        assert!((s.p_singlet - 1.0).abs() < 1e-12);
        assert_eq!(s.c, -1.0);

        for j in [-748.5, -3.0, 0.0, 42.0] {
            let p = DimerParams { j, g: 2.0 };
            let t = 1e9 * j.abs().max(1.0);
            let s = thermal_state(&p, t).unwrap();
            assert!((s.p_singlet - 0.25).abs() < 1e-9);
            assert!((s.p_triplet_each - 0.25).abs() < 1e-9);
            assert!(s.c.abs() < 1e-9);
        }
    }

    #[test]
    fn thermal_state_at_300k() {
        let s = thermal_state(&P, 300.0).unwrap();
        assert_relative_eq!(s.c, -0.735480062845789, epsilon = 1e-12);
        assert_relative_eq!(s.p_singlet, 0.801610047134342, epsilon = 1e-12);
        assert_relative_eq!(s.p_singlet + 3.0 * s.p_triplet_each, 1.0, epsilon = 1e-12);
        assert_relative_eq!(s.p_singlet, (1.0 - 3.0 * s.c) / 4.0, epsilon = 1e-12);
        assert_relative_eq!(s.p_triplet_each, (1.0 + s.c) / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn extreme_ratios_do_not_overflow() {
        for j in [-1e6, 1e6] {
            let s = thermal_state(&DimerParams { j, g: 2.0 }, 1e-3).unwrap();
            assert!(s.p_singlet.is_finite() && s.p_triplet_each.is_finite());
            assert_relative_eq!(s.p_singlet + 3.0 * s.p_triplet_each, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn non_positive_temperature_rejected() {
        assert!(thermal_state(&P, 0.0).is_err());
        assert!(susceptibility(&P, -5.0).is_err());
        assert!(model_moment(&P, f64::NAN).is_err());
    }

    #[test]
    fn curie_limit() {
        let t = 1e6 * 748.5;
        let c = curie_constant(P.g, 2, UnitSystem::Si).unwrap();
        assert_relative_eq!(chi_t(&P, t).unwrap(), c, max_relative = 1e-6);

        let free = DimerParams { j: 0.0, g: 2.07 };
        for t in [0.1, 1.0, 300.0, 1e5] {
            assert_relative_eq!(chi_t(&free, t).unwrap(), c, max_relative = 1e-14);
        }
    }

    #[test]
    fn moment_at_300k() {
        let chi = susceptibility(&P, 300.0).unwrap();
        let x = normalized_moment(&P, chi, 300.0).unwrap();
        assert!((x - 0.26450).abs() < 1e-4);
        assert_relative_eq!(x, 0.264519937154211, epsilon = 1e-12);
    }

    #[test]
    fn moment_at_9540k() {
        let x = model_moment(&P, 9540.0).unwrap();
        let oracle = 4.0 / (3.0 + (748.5f64 / 9540.0).exp());
        assert!((x - 0.98).abs() < 1e-3);
        assert_relative_eq!(x, oracle, epsilon = 1e-14);
    }

    #[test]
    fn zero_chi_is_singlet() {
        let x = normalized_moment(&P, 0.0, 10.0).unwrap();
        assert_eq!(x, 0.0);
        assert_eq!(correlation_function(x), -1.0);
    }

    #[test]
    fn unphysical_moment_flagged() {
        let chi = chi_from_moment(P.g, 1.5, 300.0);
        assert!(matches!(normalized_moment(&P, chi, 300.0), Err(Error::Unphysical { .. })));
        let x = normalized_moment_unchecked(&P, chi, 300.0).unwrap();
        assert_relative_eq!(x, 1.5, epsilon = 1e-12);
    }

    #[test]
    fn correlation_function_values() {
        assert_eq!(correlation_function(1.0), 0.0);
        assert_eq!(correlation_function(0.0), -1.0);
        assert_relative_eq!(correlation_function(0.26450), -0.73550, epsilon = 1e-15);
    }

    #[test]
    fn antiferromagnetic_moment_in_unit_interval() {
        for t in [0.5, 3.0, 50.0, 300.0, 1e4, 1e7] {
            let x = model_moment(&P, t).unwrap();
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn correlation_strictly_increasing() {
        let mut prev = f64::NEG_INFINITY;
        for i in 0..2000 {
            let t = 50.0 * (2000.0f64).powf(i as f64 / 1999.0);
            let c = thermal_state(&P, t).unwrap().c;
            assert!(c > prev, "c not increasing at T = {t}");
            assert!((-1.0..0.0).contains(&c));
            prev = c;
        }
    }

    #[test]
    fn consistency_triangle() {
        for i in 0..500 {
            let t = 10f64.powf(5.0 * i as f64 / 499.0);
            let chi = susceptibility(&P, t).unwrap();
            let c = correlation_function(normalized_moment(&P, chi, t).unwrap());
            assert!((c - thermal_state(&P, t).unwrap().c).abs() < 1e-10);
        }
    }
}
