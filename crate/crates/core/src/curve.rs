//! Susceptibility curves: ingestion, unit handling and synthetic generation.

use std::io::Read;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dimer::{susceptibility, DimerParams};
use crate::error::{invalid, Error, Result};
use crate::units::{convert_susceptibility, UnitSystem};

/// Temperature/susceptibility samples in a declared unit system.
///
/// Samples are sorted by temperature with strictly increasing, positive T.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SusceptibilityCurve {
    samples: Vec<(f64, f64)>,
    units: UnitSystem,
    pub label: String,
}

impl SusceptibilityCurve {
    /// Sorts, validates and merges duplicate temperatures by averaging.
    pub fn new(mut samples: Vec<(f64, f64)>, units: UnitSystem, label: impl Into<String>) -> Result<Self> {
        for &(t, chi) in &samples {
            if !(t.is_finite() && t > 0.0) {
                return Err(invalid(format!("temperature must be positive, got {t}")));
            }
            if !chi.is_finite() {
                return Err(invalid(format!("non-finite susceptibility at T = {t}")));
            }
        }
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64, usize)> = Vec::with_capacity(samples.len());
        for (t, chi) in samples {
            match merged.last_mut() {
                Some(last) if last.0 == t => {
                    last.1 += chi;
                    last.2 += 1;
                }
                _ => merged.push((t, chi, 1)),
            }
        }
        let samples = merged
            .into_iter()
            .map(|(t, sum, n)| {
                if n > 1 {
                    log::warn!("{n} samples at T = {t} K averaged");
                }
                (t, sum / n as f64)
            })
            .collect();
        Ok(SusceptibilityCurve { samples, units, label: label.into() })
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn units(&self) -> UnitSystem {
        self.units
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn temperatures(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.0)
    }

    /// The same physical curve expressed in `units`.
    pub fn converted(&self, units: UnitSystem) -> Self {
        SusceptibilityCurve {
            samples: self.samples.iter().map(|&(t, chi)| (t, convert_susceptibility(chi, self.units, units))).collect(),
            units,
            label: self.label.clone(),
        }
    }

    /// Writes the curve as two-column CSV with a header line.
    /// Subtracts a constant background given in m³/mol from every sample.
    pub fn without_background(&self, chi0_si: f64) -> Self {
        let shift = convert_susceptibility(chi0_si, UnitSystem::Si, self.units);
        SusceptibilityCurve {
            samples: self.samples.iter().map(|&(t, chi)| (t, chi - shift)).collect(),
            units: self.units,
            label: self.label.clone(),
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "T_K,chi_{}", self.units.tag().replace('-', "_"))?;
        for (t, chi) in &self.samples {
            writeln!(out, "{t},{chi}")?;
        }
        Ok(())
    }
}

/// Parses comma-separated `T,chi` rows.
///
/// A single leading header line is skipped if it does not parse as numbers;
/// `#` lines are comments.
pub fn load_curve<R: Read>(source: R, units: UnitSystem) -> Result<SusceptibilityCurve> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(source);

    let mut samples = Vec::new();
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::Parse { line, message: e.to_string() }
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed = (record.len() == 2).then(|| (record[0].parse::<f64>(), record[1].parse::<f64>()));
        match parsed {
            Some((Ok(t), Ok(chi))) => {
                if t.is_nan() || t <= 0.0 {
                    return Err(invalid(format!("line {line}: non-positive temperature {t}")));
                }
                samples.push((t, chi));
            }
            _ if first && record.iter().any(|f| f.parse::<f64>().is_err()) => {}
            _ => {
                return Err(Error::Parse {
                    line,
                    message: format!(
                        "expected two numeric columns `T,chi`, got {:?}",
                        record.iter().collect::<Vec<_>>()
                    ),
                })
            }
        }
        first = false;
    }
    if samples.is_empty() {
        return Err(Error::Parse { line: 0, message: "no data rows".into() });
    }
    SusceptibilityCurve::new(samples, units, "")
}

/// Model curve χ(T)·(1 + ε) in SI, with ε uniform on [−noise, noise] from a
/// seeded ChaCha8 stream.
pub fn synthesize_curve(
    params: &DimerParams,
    grid: &[f64],
    noise_fraction: f64,
    seed: u64,
) -> Result<SusceptibilityCurve> {
    if !(noise_fraction >= 0.0 && noise_fraction.is_finite()) {
        return Err(invalid(format!("noise fraction must be non-negative, got {noise_fraction}")));
    }
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = grid
        .iter()
        .map(|&t| {
            let eps = if noise_fraction > 0.0 { rng.gen_range(-noise_fraction..=noise_fraction) } else { 0.0 };
            Ok((t, susceptibility(params, t)? * (1.0 + eps)))
        })
        .collect::<Result<Vec<_>>>()?;
    SusceptibilityCurve::new(
        samples,
        UnitSystem::Si,
        format!("synthetic J={} g={} noise={noise_fraction} seed={seed}", params.j, params.g),
    )
}

/// `count` points evenly spaced on [lo, hi].
pub fn linear_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimer::chi_t;
    use crate::units::curie_constant;

    #[test]
    fn two_rows() {
        let c = load_curve("300,1.0e-4\n310,0.98e-4".as_bytes(), UnitSystem::Cgs).unwrap();
        assert_eq!(c.samples(), &[(300.0, 1.0e-4), (310.0, 0.98e-4)]);
        assert_eq!(c.units(), UnitSystem::Cgs);
    }

    #[test]
    fn empty_stream_is_parse_error() {
        assert!(matches!(load_curve("".as_bytes(), UnitSystem::Si), Err(Error::Parse { .. })));
        assert!(matches!(load_curve("# only a comment\n".as_bytes(), UnitSystem::Si), Err(Error::Parse { .. })));
    }

    #[test]
    fn header_and_comments() {
        let mut text = String::from("# magnetometer run 7\nT_K,chi_emu_mol\n");
        let rows: Vec<(f64, f64)> = (1..=50).map(|i| (6.0 * i as f64, 1e-4 / i as f64)).collect();
        for (t, chi) in &rows {
            text.push_str(&format!("{t},{chi}\n"));
        }
        let c = load_curve(text.as_bytes(), UnitSystem::Cgs).unwrap();
        assert_eq!(c.len(), 50);
        for (got, want) in c.samples().iter().zip(&rows) {
            assert_eq!(got, want);
        }
    }

    #[test]
    fn malformed_row_reports_line() {
        let err = load_curve("T,chi\n300,1e-4\n310,abc\n".as_bytes(), UnitSystem::Si).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
        let err = load_curve("300,1e-4\n310\n".as_bytes(), UnitSystem::Si).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn non_positive_temperature_rejected() {
        let err = load_curve("0,1e-4\n".as_bytes(), UnitSystem::Si).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
        assert!(load_curve("-3,1e-4\n".as_bytes(), UnitSystem::Si).is_err());
    }

    #[test]
    fn sorted_and_deduplicated() {
        let c = load_curve("310,2\n300,1\n310,4\n".as_bytes(), UnitSystem::Si).unwrap();
        assert_eq!(c.samples(), &[(300.0, 1.0), (310.0, 3.0)]);
    }

    #[test]
    fn noiseless_synthesis_is_exact() {
        let p = DimerParams::REFERENCE;
        let grid = linear_grid(2.0, 300.0, 60);
        let c = synthesize_curve(&p, &grid, 0.0, 1).unwrap();
        for &(t, chi) in c.samples() {
            assert_eq!(chi, susceptibility(&p, t).unwrap());
        }
    }

    #[test]
    fn synthesis_is_deterministic() {
        let p = DimerParams::REFERENCE;
        let grid = linear_grid(2.0, 300.0, 60);
        let a = synthesize_curve(&p, &grid, 0.01, 42).unwrap();
        let b = synthesize_curve(&p, &grid, 0.01, 42).unwrap();
        assert_eq!(a, b);
        let c = synthesize_curve(&p, &grid, 0.01, 43).unwrap();
        assert_ne!(a.samples(), c.samples());
    }

    #[test]
    fn noisy_reference_curve_stays_below_curie_constant() {
        let p = DimerParams::REFERENCE;
        let c = synthesize_curve(&p, &linear_grid(2.0, 300.0, 60), 0.01, 42).unwrap();
        let curie = curie_constant(p.g, 2, UnitSystem::Si).unwrap();
        for &(t, chi) in c.samples() {
            assert!(chi * t < curie, "T = {t}");
            assert!((chi * t / chi_t(&p, t).unwrap() - 1.0).abs() <= 0.01 + 1e-12);
        }
    }

    #[test]
    fn conversion_preserves_temperatures() {
        let c = load_curve("300,1\n310,2\n".as_bytes(), UnitSystem::Cgs).unwrap();
        let si = c.converted(UnitSystem::Si);
        assert_eq!(si.temperatures().collect::<Vec<_>>(), vec![300.0, 310.0]);
        let back = si.converted(UnitSystem::Cgs);
        for (a, b) in back.samples().iter().zip(c.samples()) {
            assert!((a.1 - b.1).abs() < 1e-15 * b.1);
        }
    }
}
