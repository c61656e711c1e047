//! Oracle-equivalence suite: closed forms against the dense 4×4 numerics on a
//! seeded random sample of (J, g, T).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dimer::{normalized_moment, susceptibility, thermal_state, DimerParams};
use crate::error::Result;
use crate::measures;
use crate::oracle::{self, TwoQubitDensityMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    pub samples: usize,
    pub seed: u64,
    pub j_range: (f64, f64),
    pub g_range: (f64, f64),
    /// Temperatures are drawn log-uniformly from this range.
    pub t_range: (f64, f64),
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { samples: 200, seed: 2017, j_range: (-2000.0, -50.0), g_range: (1.9, 2.3), t_range: (1.0, 1e4) }
    }
}

/// The closed forms under test. Swappable so the failure path can be exercised.
#[derive(Clone, Copy)]
pub struct ClosedForms {
    pub susceptibility: fn(&DimerParams, f64) -> Result<f64>,
    pub concurrence: fn(f64) -> f64,
    pub entropic_discord: fn(f64) -> f64,
    pub classical_correlation: fn(f64) -> f64,
    pub mutual_information: fn(f64) -> f64,
    pub geometric_discord: fn(f64) -> f64,
}

impl Default for ClosedForms {
    fn default() -> Self {
        ClosedForms {
            susceptibility,
            concurrence: measures::concurrence,
            entropic_discord: measures::entropic_discord,
            classical_correlation: measures::classical_correlation,
            mutual_information: measures::mutual_information,
            geometric_discord: measures::geometric_discord,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    #[serde(rename = "J")]
    pub j: f64,
    pub g: f64,
    #[serde(rename = "T")]
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub tolerance: f64,
    pub max_deviation: f64,
    /// Sample with the largest deviation.
    pub worst: Option<Sample>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifySummary {
    pub samples: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl VerifySummary {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Tracker {
    name: &'static str,
    tolerance: f64,
    max: f64,
    worst: Option<Sample>,
}

impl Tracker {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Tracker { name, tolerance, max: 0.0, worst: None }
    }

    fn record(&mut self, deviation: f64, sample: Sample) {
        // NaN counts as an infinite deviation.
        let d = if deviation.is_nan() { f64::INFINITY } else { deviation };
        if d > self.max || self.worst.is_none() {
            self.max = self.max.max(d);
            self.worst = Some(sample);
        }
    }

    fn finish(self) -> Check {
        Check {
            name: self.name,
            tolerance: self.tolerance,
            max_deviation: self.max,
            worst: self.worst,
            passed: self.max <= self.tolerance,
        }
    }
}

/// Relative deviation |a − b| / max(|a|, |b|).
///
/// Two values that both sit below the normal floating-point range count as
/// equal: subnormals carry too few significant bits to compare relatively.
pub fn relative_deviation(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < f64::MIN_POSITIVE {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Runs every cross-check. Sampling and reduction order are fixed, so the
/// summary is identical for a given configuration.
pub fn run(config: &VerifyConfig, forms: &ClosedForms) -> Result<VerifySummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut chi = Tracker::new("susceptibility", 1e-10);
    let mut pops = Tracker::new("bell_populations", 1e-12);
    let mut conc = Tracker::new("concurrence", 1e-10);
    let mut mi = Tracker::new("mutual_information", 1e-10);
    let mut cc = Tracker::new("classical_correlation", 2e-6);
    let mut qe = Tracker::new("entropic_discord", 2e-6);
    let mut qg = Tracker::new("geometric_discord", 1e-12);
    let mut ident = Tracker::new("discord_identity", 1e-12);

    let (t_lo, t_hi) = (config.t_range.0.ln(), config.t_range.1.ln());
    for _ in 0..config.samples {
        let j = rng.gen_range(config.j_range.0..=config.j_range.1);
        let g = rng.gen_range(config.g_range.0..=config.g_range.1);
        let t = rng.gen_range(t_lo..=t_hi).exp();
        let params = DimerParams::new(j, g)?;
        let sample = Sample { j, g, t };

        // Closed-form chain: χ(T) → x → measures.
        let chi_closed = (forms.susceptibility)(&params, t)?;
        let x = normalized_moment(&params, chi_closed, t)?;
        let c = x - 1.0;

        let rho = oracle::gibbs_state(&params, t)?;
        chi.record(relative_deviation(chi_closed, oracle::fluctuation_susceptibility(&params, t)?), sample);

        let state = thermal_state(&params, t)?;
        let bell = rho.bell_populations();
        let pop_dev = (bell[0] - state.p_singlet)
            .abs()
            .max(bell[1..].iter().map(|p| (p - state.p_triplet_each).abs()).fold(0.0, f64::max));
        pops.record(pop_dev, sample);

        conc.record(((forms.concurrence)(x) - oracle::wootters_concurrence(&rho)).abs(), sample);

        let search = oracle::numerical_discord(&rho);
        mi.record(((forms.mutual_information)(c) - search.mutual_information).abs(), sample);
        cc.record(((forms.classical_correlation)(c) - search.classical_correlation).abs(), sample);
        qe.record(((forms.entropic_discord)(x) - search.discord).abs(), sample);

        let [c1, c2, c3] = pauli_correlations(&rho);
        let reference = oracle::bell_diagonal_geometric_discord_reference(c1, c2, c3)?;
        qg.record(((forms.geometric_discord)(c) - reference).abs(), sample);

        let identity = (forms.entropic_discord)(x) - ((forms.mutual_information)(c) - (forms.classical_correlation)(c));
        ident.record(identity.abs(), sample);
    }

    let checks: Vec<Check> = [chi, pops, conc, mi, cc, qe, qg, ident].into_iter().map(Tracker::finish).collect();
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifySummary { samples: config.samples, seed: config.seed, checks, passed })
}

/// ⟨σᵢ⊗σᵢ⟩ for i = x, y, z.
fn pauli_correlations(rho: &TwoQubitDensityMatrix) -> [f64; 3] {
    oracle::pauli().map(|s| (rho.matrix() * oracle::kron(&s, &s)).trace().re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> VerifyConfig {
        VerifyConfig { samples: 12, ..VerifyConfig::default() }
    }

    #[test]
    fn default_forms_pass() {
        let s = run(&small(), &ClosedForms::default()).unwrap();
        assert!(s.passed, "{s:#?}");
        assert_eq!(s.checks.len(), 8);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let a = run(&small(), &ClosedForms::default()).unwrap();
        let b = run(&small(), &ClosedForms::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn corrupted_concurrence_fails() {
        fn bad(x: f64) -> f64 {
            measures::concurrence(x) + 1e-6
        }
        let forms = ClosedForms { concurrence: bad, ..ClosedForms::default() };
        let s = run(&small(), &forms).unwrap();
        assert!(!s.passed);
        assert!(!s.check("concurrence").unwrap().passed);
        assert!(s.check("entropic_discord").unwrap().passed);
    }

    #[test]
    fn printed_concurrence_fails_the_oracle() {
        let forms = ClosedForms { concurrence: measures::printed_concurrence, ..ClosedForms::default() };
        let s = run(&small(), &forms).unwrap();
        assert!(!s.check("concurrence").unwrap().passed);
    }

    #[test]
    fn relative_deviation_below_normal_range() {
        assert_eq!(relative_deviation(2.0, 1.0), 0.5);
        assert_eq!(relative_deviation(0.0, 0.0), 0.0);
        assert_eq!(relative_deviation(9e-318, 0.0), 0.0);
        assert_eq!(relative_deviation(f64::MIN_POSITIVE, 0.0), 1.0);
    }
}
