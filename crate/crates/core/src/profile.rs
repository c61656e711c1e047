//! Correlation profiles over a temperature grid, plus their CSV/JSON forms.

use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::curve::SusceptibilityCurve;
use crate::dimer::{model_moment, normalized_moment_unchecked, DimerParams};
use crate::error::{invalid, Error, Result};
use crate::measures::CorrelationPoint;
use crate::units::UnitSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridScale {
    Linear,
    #[default]
    Log,
}

impl FromStr for GridScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" | "lin" => Ok(GridScale::Linear),
            "log" => Ok(GridScale::Log),
            other => Err(invalid(format!("unknown grid scale `{other}` (linear or log)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub scale: GridScale,
}

impl Default for TemperatureGrid {
    fn default() -> Self {
        TemperatureGrid { min: 2.0, max: 1e4, count: 400, scale: GridScale::Log }
    }
}

impl TemperatureGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.min > 0.0 && self.min.is_finite() && self.max.is_finite()) {
            return Err(invalid(format!("grid bounds must be positive and finite ({}, {})", self.min, self.max)));
        }
        if self.min >= self.max {
            return Err(invalid(format!("grid min {} must be below max {}", self.min, self.max)));
        }
        if self.count < 2 {
            return Err(invalid(format!("grid needs at least 2 points, got {}", self.count)));
        }
        Ok(())
    }

    /// Grid temperatures, strictly increasing, ending exactly at `max`.
    pub fn points(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let n = self.count - 1;
        Ok((0..=n)
            .map(|i| {
                if i == n {
                    return self.max;
                }
                let f = i as f64 / n as f64;
                match self.scale {
                    GridScale::Linear => self.min + f * (self.max - self.min),
                    GridScale::Log => self.min * (self.max / self.min).powf(f),
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationProfile {
    pub parameters: DimerParams,
    pub rows: Vec<CorrelationPoint>,
}

/// Model profile: every measure at every grid temperature.
pub fn correlation_profile(params: &DimerParams, grid: &TemperatureGrid) -> Result<CorrelationProfile> {
    params.validate()?;
    let rows = grid
        .points()?
        .into_iter()
        .map(|t| CorrelationPoint::new(t, model_moment(params, t)?, 0.0))
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelationProfile { parameters: *params, rows })
}

/// Profile of measured data: x is taken from each χ sample using the fitted g.
pub fn experimental_profile(
    params: &DimerParams,
    curve: &SusceptibilityCurve,
    slack: f64,
) -> Result<CorrelationProfile> {
    let si = curve.converted(UnitSystem::Si);
    let rows = si
        .samples()
        .iter()
        .map(|&(t, chi)| CorrelationPoint::new(t, normalized_moment_unchecked(params, chi, t)?, slack))
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelationProfile { parameters: *params, rows })
}

impl CorrelationProfile {
    /// CSV with a header row; numbers use the shortest round-trip form.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CorrelationPoint::COLUMNS).map_err(csv_io)?;
        for row in &self.rows {
            w.write_record(row.values().iter().map(|v| v.to_string())).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads rows written by [`write_csv`](Self::write_csv).
    pub fn read_csv<R: Read>(source: R, parameters: DimerParams) -> Result<Self> {
        let mut r = csv::Reader::from_reader(source);
        let mut rows = Vec::new();
        for record in r.records() {
            let record = record
                .map_err(|e| Error::Parse { line: e.position().map_or(0, |p| p.line()), message: e.to_string() })?;
            let line = record.position().map_or(0, |p| p.line());
            let v: Vec<f64> = record
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse { line, message: e.to_string() })?;
            if v.len() != 9 {
                return Err(Error::Parse { line, message: format!("expected 9 columns, got {}", v.len()) });
            }
            rows.push(CorrelationPoint {
                t: v[0],
                x: v[1],
                c: v[2],
                concurrence: v[3],
                eof: v[4],
                entropic_discord: v[5],
                geometric_discord: v[6],
                mutual_information: v[7],
                classical_correlation: v[8],
            });
        }
        Ok(CorrelationProfile { parameters, rows })
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
